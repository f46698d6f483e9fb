#include "pinnobs/loss_kernel.hpp"

#include <Eigen/Dense>
#include <omp.h>

#include <array>
#include <cmath>

#if defined(PINNOBS_HAVE_LIBMVEC) && defined(__AVX2__)
#include <immintrin.h>
#define PINNOBS_VECTOR_MATH 1
extern "C" __m256d _ZGVdN4v_exp(__m256d);
#endif

namespace pinnobs {

namespace {

using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::size_t max_states = 8;

/// sigma(z), sigma'(z), sigma''(z).
inline void activate(Activation act, double z, double &a, double &d1, double &d2)
{
	switch (act) {
	case Activation::tanh:
		a = std::tanh(z);
		d1 = 1.0 - a * a;
		d2 = -2.0 * a * d1;
		return;
	case Activation::sine:
		a = std::sin(z);
		d1 = std::cos(z);
		d2 = -a;
		return;
	case Activation::sigmoid:
		a = 1.0 / (1.0 + std::exp(-z));
		d1 = a * (1.0 - a);
		d2 = d1 * (1.0 - 2.0 * a);
		return;
	case Activation::relu:
		a = z > 0.0 ? z : 0.0;
		d1 = z > 0.0 ? 1.0 : 0.0;
		d2 = 0.0;
		return;
	}
}

enum class Elementary { tanh, exp };

#ifdef PINNOBS_VECTOR_MATH
inline __m256d vector_tanh(__m256d z)
{
	const __m256d sign = _mm256_set1_pd(-0.0), one = _mm256_set1_pd(1.0);
	const __m256d e = _ZGVdN4v_exp(_mm256_mul_pd(_mm256_set1_pd(-2.0), _mm256_andnot_pd(sign, z)));
	const __m256d t = _mm256_div_pd(_mm256_sub_pd(one, e), _mm256_add_pd(one, e));
	return _mm256_or_pd(t, _mm256_and_pd(sign, z));
}
#endif

/// out[i] = fn(z[i]); every element goes through the same code path, so a
/// value's image does not depend on where it sits in the block.
void apply(Elementary fn, const double *z, double *out, std::size_t n)
{
#ifdef PINNOBS_VECTOR_MATH
	auto call = [fn](__m256d v) {
		return fn == Elementary::tanh ? vector_tanh(v) : _ZGVdN4v_exp(v);
	};
	std::size_t i = 0;
	for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, call(_mm256_loadu_pd(z + i)));
	if (i < n) {
		alignas(32) double buf[4] = {0.0, 0.0, 0.0, 0.0};
		for (std::size_t k = i; k < n; ++k) buf[k - i] = z[k];
		_mm256_store_pd(buf, call(_mm256_load_pd(buf)));
		for (std::size_t k = i; k < n; ++k) out[k] = buf[k - i];
	}
#else
	for (std::size_t i = 0; i < n; ++i)
		out[i] = fn == Elementary::tanh ? std::tanh(z[i]) : std::exp(z[i]);
#endif
}

/// Block form of activate() over n contiguous pre-activations.
void activate_block(Activation act, const double *z, std::size_t n, double *a, double *d1,
                    double *d2)
{
	switch (act) {
	case Activation::tanh:
		apply(Elementary::tanh, z, a, n);
		for (std::size_t i = 0; i < n; ++i) {
			d1[i] = 1.0 - a[i] * a[i];
			d2[i] = -2.0 * a[i] * d1[i];
		}
		return;
	case Activation::sine:
		for (std::size_t i = 0; i < n; ++i) activate(act, z[i], a[i], d1[i], d2[i]);
		return;
	case Activation::sigmoid:
		for (std::size_t i = 0; i < n; ++i) d2[i] = -z[i];
		apply(Elementary::exp, d2, a, n);
		for (std::size_t i = 0; i < n; ++i) {
			a[i] = 1.0 / (1.0 + a[i]);
			d1[i] = a[i] * (1.0 - a[i]);
			d2[i] = d1[i] * (1.0 - 2.0 * a[i]);
		}
		return;
	case Activation::relu:
		for (std::size_t i = 0; i < n; ++i) activate(act, z[i], a[i], d1[i], d2[i]);
		return;
	}
}

}  // namespace

struct LossKernel::Workspace {
	// Per layer j: input X[j] = [A | Ad] (n_in x 2B), pre-activation
	// H[j] = [Z | Zd] (n_out x 2B), activation slopes D1[j], D2[j] (n_out x B).
	std::vector<Mat> X, H, D1, D2;
	Mat seed, back;
	std::vector<double> grad;
};

LossKernel::LossKernel(LayerSpec spec, const SystemModel &sys, LossProblem problem,
                       LossWeights weights, std::size_t chunk)
    : m_spec(std::move(spec)), m_sys(&sys), m_problem(std::move(problem)),
      m_weights(weights), m_chunk(chunk)
{
	m_spec.validate();
	check_heads(m_spec, sys.n_x, sys.m);
	m_weights.validate();
	if (sys.n_x > max_states || m_chunk == 0) {
		throw ContractError("loss kernel: unsupported dimensions");
	}
	if (m_problem.n_x != sys.n_x || m_problem.m != sys.m) {
		throw ContractError("loss kernel: problem does not match system");
	}
	const std::size_t n = m_problem.size();
	m_chunks = (n + m_chunk - 1) / m_chunk;

	m_forcing.resize(n * sys.n_x);
	for (std::size_t p = 0; p < n; ++p) {
		forcing(sys, m_problem.times[p],
		        std::span<double>(m_forcing.data() + p * sys.n_x, sys.n_x));
	}

	std::size_t off = 0;
	for (std::size_t j = 0; j < m_spec.layer_count(); ++j) {
		m_offsets.push_back(off);
		off += m_spec.widths[j + 1] * (m_spec.widths[j] + 1);
	}
	m_chunk_grad.assign(m_chunks * off, 0.0);
	m_chunk_terms.assign(m_chunks * 3, 0.0);

	const int nthreads = std::max(1, omp_get_max_threads());
	m_work.resize(static_cast<std::size_t>(nthreads));
	for (auto &ws : m_work) {
		const std::size_t L = m_spec.layer_count();
		ws.X.resize(L);
		ws.H.resize(L);
		ws.D1.resize(L);
		ws.D2.resize(L);
		for (std::size_t j = 0; j < L; ++j) {
			ws.X[j].resize(static_cast<Eigen::Index>(m_spec.widths[j]),
			               static_cast<Eigen::Index>(2 * m_chunk));
			ws.H[j].resize(static_cast<Eigen::Index>(m_spec.widths[j + 1]),
			               static_cast<Eigen::Index>(2 * m_chunk));
			ws.D1[j].resize(static_cast<Eigen::Index>(m_spec.widths[j + 1]),
			                static_cast<Eigen::Index>(m_chunk));
			ws.D2[j].resize(static_cast<Eigen::Index>(m_spec.widths[j + 1]),
			                static_cast<Eigen::Index>(m_chunk));
		}
	}
}

LossKernel::~LossKernel() = default;
LossKernel::LossKernel(LossKernel &&) noexcept = default;
LossKernel &LossKernel::operator=(LossKernel &&) noexcept = default;

void LossKernel::run_chunk(std::size_t c, std::span<const double> params, bool want_grad,
                           Workspace &ws)
{
	const SystemModel &sys = *m_sys;
	const std::size_t nx = sys.n_x, m = sys.m;
	const std::size_t begin = c * m_chunk;
	const std::size_t end = std::min(begin + m_chunk, m_problem.size());
	const auto B = static_cast<Eigen::Index>(end - begin);
	const std::size_t L = m_spec.layer_count();
	const Activation act = m_spec.activation;

	// Input layer: value t, derivative 1.
	{
		Mat &X0 = ws.X[0];
		for (Eigen::Index k = 0; k < B; ++k) {
			X0(0, k) = m_problem.times[begin + static_cast<std::size_t>(k)];
			X0(0, B + k) = 1.0;
		}
	}

	for (std::size_t j = 0; j < L; ++j) {
		const auto n_in = static_cast<Eigen::Index>(m_spec.widths[j]);
		const auto n_out = static_cast<Eigen::Index>(m_spec.widths[j + 1]);
		Eigen::Map<const RowMat> W(params.data() + m_offsets[j], n_out, n_in);
		Eigen::Map<const Eigen::VectorXd> b(params.data() + m_offsets[j] + n_out * n_in, n_out);

		auto H = ws.H[j].leftCols(2 * B);
		H.noalias() = W * ws.X[j].leftCols(2 * B);
		H.leftCols(B).colwise() += b;
		if (j + 1 == L) break;

		Mat &Xn = ws.X[j + 1];
		Mat &D1 = ws.D1[j];
		Mat &D2 = ws.D2[j];
		const auto n = static_cast<std::size_t>(n_out * B);
		activate_block(act, H.data(), n, Xn.data(), D1.data(), D2.data());
		const double *hd = H.data() + n;
		double *xd = Xn.data() + n;
		for (std::size_t i = 0; i < n; ++i) xd[i] = D1.data()[i] * hd[i];
	}

	// Per-point loss and output seeds.
	const Mat &Out = ws.H[L - 1];
	const auto n_outk = static_cast<Eigen::Index>(m_spec.output_width());
	if (want_grad) {
		ws.seed.setZero(n_outk, 2 * B);
	}
	const double w0 = m_weights.w0, wode = m_weights.w_ode, wy = m_weights.w_y;
	double sum0 = 0.0, sumg = 0.0, sumy = 0.0;
	std::array<double, max_states> xhat{}, f{}, g{}, e{}, gx{};
	std::array<double, max_states * max_states> jac{};

	for (Eigen::Index k = 0; k < B; ++k) {
		const std::size_t p = begin + static_cast<std::size_t>(k);
		const double t = m_problem.times[p];
		const double dw = m_problem.data_weight[p];
		const double rw = m_problem.residual_weight[p];
		const bool is_anchor = p == m_problem.anchor;

		for (std::size_t i = 0; i < nx; ++i) xhat[i] = Out(static_cast<Eigen::Index>(i), k);
		for (std::size_t j = 0; j < m; ++j) {
			double cx = 0.0;
			for (std::size_t i = 0; i < nx; ++i) cx += sys.C[j * nx + i] * xhat[i];
			e[j] = cx - m_problem.y[p * m + j];
		}
		std::fill(gx.begin(), gx.end(), 0.0);

		if (dw != 0.0) {
			double s = 0.0;
			for (std::size_t j = 0; j < m; ++j) s += e[j] * e[j];
			sumy += dw * s;
			if (want_grad) {
				// d/dxhat of w_y * dw * |Cx - y|^2
				for (std::size_t i = 0; i < nx; ++i) {
					double acc = 0.0;
					for (std::size_t j = 0; j < m; ++j) acc += sys.C[j * nx + i] * e[j];
					gx[i] += 2.0 * wy * dw * acc;
				}
			}
		}

		if (rw != 0.0) {
			sys.drift(std::span<const double>(xhat.data(), nx), t,
			          std::span<double>(f.data(), nx));
			double s = 0.0;
			for (std::size_t i = 0; i < nx; ++i) {
				double gi = Out(static_cast<Eigen::Index>(i), B + k) - f[i] -
				            m_forcing[p * nx + i];
				for (std::size_t j = 0; j < m; ++j) {
					gi += Out(static_cast<Eigen::Index>(nx + i * m + j), k) * e[j];
				}
				g[i] = gi;
				s += gi * gi;
			}
			sumg += rw * s;
			if (want_grad) {
				const double cg = 2.0 * wode * rw;
				sys.jacobian(std::span<const double>(xhat.data(), nx), t,
				             std::span<double>(jac.data(), nx * nx));
				for (std::size_t i = 0; i < nx; ++i) {
					// d/d(dxhat_i/dt)
					ws.seed(static_cast<Eigen::Index>(i), B + k) += cg * g[i];
					// d/dL_ij
					for (std::size_t j = 0; j < m; ++j) {
						ws.seed(static_cast<Eigen::Index>(nx + i * m + j), k) +=
						    cg * g[i] * e[j];
					}
				}
				// d/dxhat: -J^T g + C^T L^T g
				for (std::size_t q = 0; q < nx; ++q) {
					double acc = 0.0;
					for (std::size_t i = 0; i < nx; ++i) acc -= jac[i * nx + q] * g[i];
					gx[q] += cg * acc;
				}
				for (std::size_t j = 0; j < m; ++j) {
					double ltg = 0.0;
					for (std::size_t i = 0; i < nx; ++i) {
						ltg += Out(static_cast<Eigen::Index>(nx + i * m + j), k) * g[i];
					}
					for (std::size_t q = 0; q < nx; ++q) {
						gx[q] += cg * sys.C[j * nx + q] * ltg;
					}
				}
			}
		}

		if (is_anchor) {
			double d2 = 0.0;
			for (std::size_t i = 0; i < nx; ++i) {
				const double d = xhat[i] - m_problem.xhat0[i];
				d2 += d * d;
			}
			if (m_problem.mse0_mode == Mse0Mode::squared) {
				sum0 += d2;
				if (want_grad) {
					for (std::size_t i = 0; i < nx; ++i) {
						gx[i] += 2.0 * w0 * (xhat[i] - m_problem.xhat0[i]);
					}
				}
			} else {
				const double nrm = std::sqrt(d2);
				sum0 += nrm;
				if (want_grad && nrm > 0.0) {
					for (std::size_t i = 0; i < nx; ++i) {
						gx[i] += w0 * (xhat[i] - m_problem.xhat0[i]) / nrm;
					}
				}
			}
		}

		if (want_grad) {
			for (std::size_t i = 0; i < nx; ++i) {
				ws.seed(static_cast<Eigen::Index>(i), k) += gx[i];
			}
		}
	}

	m_chunk_terms[3 * c + 0] = sum0;
	m_chunk_terms[3 * c + 1] = sumg;
	m_chunk_terms[3 * c + 2] = sumy;
	if (!want_grad) return;

	// Backward through the layers, both channels at once.
	const std::size_t P = m_spec.parameter_count();
	double *grad = m_chunk_grad.data() + c * P;
	Mat *D = &ws.seed;
	for (std::size_t jj = L; jj-- > 0;) {
		const auto n_in = static_cast<Eigen::Index>(m_spec.widths[jj]);
		const auto n_out = static_cast<Eigen::Index>(m_spec.widths[jj + 1]);
		Eigen::Map<RowMat> gW(grad + m_offsets[jj], n_out, n_in);
		Eigen::Map<Eigen::VectorXd> gb(grad + m_offsets[jj] + n_out * n_in, n_out);
		const auto Dc = D->leftCols(2 * B);
		gW.noalias() = Dc * ws.X[jj].leftCols(2 * B).transpose();
		gb = Dc.leftCols(B).rowwise().sum();
		if (jj == 0) break;

		Eigen::Map<const RowMat> W(params.data() + m_offsets[jj], n_out, n_in);
		ws.back.resize(n_in, 2 * B);
		ws.back.noalias() = W.transpose() * Dc;
		// Adjoint of [A | Ad] of layer jj-1 -> adjoint of [Z | Zd].
		const Mat &Hp = ws.H[jj - 1];
		const Mat &D1 = ws.D1[jj - 1];
		const Mat &D2 = ws.D2[jj - 1];
		for (Eigen::Index k = 0; k < B; ++k) {
			for (Eigen::Index r = 0; r < n_in; ++r) {
				const double abar = ws.back(r, k);
				const double dbar = ws.back(r, B + k);
				ws.back(r, B + k) = D1(r, k) * dbar;
				ws.back(r, k) = D1(r, k) * abar + D2(r, k) * Hp(r, B + k) * dbar;
			}
		}
		std::swap(ws.seed, ws.back);
		D = &ws.seed;
	}
}

LossBreakdown LossKernel::evaluate(std::span<const double> params, std::span<double> grad)
{
	const std::size_t P = m_spec.parameter_count();
	if (params.size() != P) {
		throw ContractError("loss kernel: parameter vector has wrong length");
	}
	const bool want_grad = !grad.empty();
	if (want_grad && grad.size() != P) {
		throw ContractError("loss kernel: gradient buffer has wrong length");
	}

	m_params.assign(params.begin(), params.end());
	const std::span<const double> aligned(m_params);

	const int threads = m_threads > 0 ? std::min(m_threads, static_cast<int>(m_work.size()))
	                                  : static_cast<int>(m_work.size());
	const auto nchunks = static_cast<long>(m_chunks);
#pragma omp parallel for schedule(static) num_threads(threads)
	for (long c = 0; c < nchunks; ++c) {
		Workspace &ws = m_work[static_cast<std::size_t>(omp_get_thread_num()) % m_work.size()];
		run_chunk(static_cast<std::size_t>(c), aligned, want_grad, ws);
	}

	double s0 = 0.0, sg = 0.0, sy = 0.0;
	for (std::size_t c = 0; c < m_chunks; ++c) {
		s0 += m_chunk_terms[3 * c];
		sg += m_chunk_terms[3 * c + 1];
		sy += m_chunk_terms[3 * c + 2];
	}
	const LossBreakdown out = LossBreakdown::combine(s0, sg, sy, m_weights);
	if (!std::isfinite(out.total)) {
		throw NumericalError("non-finite loss");
	}

	if (want_grad) {
		std::fill(grad.begin(), grad.end(), 0.0);
		for (std::size_t c = 0; c < m_chunks; ++c) {
			const double *g = m_chunk_grad.data() + c * P;
			for (std::size_t i = 0; i < P; ++i) grad[i] += g[i];
		}
		for (double v : grad) {
			if (!std::isfinite(v)) {
				throw NumericalError("non-finite gradient");
			}
		}
	}
	return out;
}

}  // namespace pinnobs
