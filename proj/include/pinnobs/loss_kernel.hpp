#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <vector>

#include "pinnobs/loss.hpp"

namespace pinnobs {

/// Allocates on a 64-byte boundary. Vectorised reductions peel according to
/// address alignment, so buffers fed to them must not move between runs.
template <typename T>
struct AlignedAllocator {
	using value_type = T;
	static constexpr std::align_val_t alignment{64};

	AlignedAllocator() = default;
	template <typename U>
	AlignedAllocator(const AlignedAllocator<U> &) noexcept
	{
	}
	T *allocate(std::size_t n) { return static_cast<T *>(::operator new(n * sizeof(T), alignment)); }
	void deallocate(T *p, std::size_t) noexcept { ::operator delete(p, alignment); }
	friend bool operator==(const AlignedAllocator &, const AlignedAllocator &) { return true; }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

/**
 * Batched loss and gradient for training.
 *
 * Evaluation points are split into fixed-size chunks. Each chunk runs the
 * network forward on [values | time-derivatives] as one matrix, forms the
 * per-point loss seeds, and back-propagates through both channels
 * (forward-over-reverse written out by hand). Chunks are processed by an
 * OpenMP loop; per-chunk partial sums are reduced in chunk order, so results
 * do not depend on the thread count.
 */
class LossKernel {
public:
	static constexpr std::size_t default_chunk = 128;

	LossKernel(LayerSpec spec, const SystemModel &sys, LossProblem problem,
	           LossWeights weights, std::size_t chunk = default_chunk);
	~LossKernel();
	LossKernel(LossKernel &&) noexcept;
	LossKernel &operator=(LossKernel &&) noexcept;

	/// 0 means the OpenMP default.
	void set_threads(int threads) { m_threads = threads; }

	const LossProblem &problem() const { return m_problem; }
	const LossWeights &weights() const { return m_weights; }

	/**
	 * Loss at `params`. If `grad` is non-empty it must have params.size()
	 * entries and receives d(total)/d(params). Throws NumericalError if the
	 * loss or gradient is non-finite.
	 */
	LossBreakdown evaluate(std::span<const double> params, std::span<double> grad);

private:
	struct Workspace;

	void run_chunk(std::size_t chunk, std::span<const double> params, bool want_grad,
	               Workspace &ws);

	LayerSpec m_spec;
	const SystemModel *m_sys;
	LossProblem m_problem;
	LossWeights m_weights;
	std::size_t m_chunk;
	std::size_t m_chunks;
	int m_threads = 0;
	std::vector<double> m_forcing;  ///< B u(t) per point
	std::vector<std::size_t> m_offsets;
	AlignedVector m_params;             ///< copy of the evaluated parameters
	AlignedVector m_chunk_grad;         ///< m_chunks x parameter_count
	std::vector<double> m_chunk_terms;  ///< m_chunks x 3
	std::vector<Workspace> m_work;
};

}  // namespace pinnobs
