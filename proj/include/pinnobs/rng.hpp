#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace pinnobs {

/// SplitMix64. Bit-reproducible across standard libraries, unlike the
/// <random> distributions.
class SplitMix {
public:
	explicit SplitMix(std::uint64_t seed) : m_state(seed) {}

	std::uint64_t next()
	{
		std::uint64_t z = (m_state += 0x9e3779b97f4a7c15ULL);
		z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
		z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
		return z ^ (z >> 31);
	}

	/// Uniform in [0, 1).
	double canonical() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

	double uniform(double lo, double hi) { return lo + (hi - lo) * canonical(); }

	/// Uniform integer in [0, n), n > 0.
	std::uint64_t below(std::uint64_t n)
	{
		const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
		std::uint64_t r;
		do {
			r = next();
		} while (r >= limit);
		return r % n;
	}

	template <typename T>
	void shuffle(std::vector<T> &v)
	{
		for (std::size_t i = v.size(); i > 1; --i) {
			std::swap(v[i - 1], v[below(i)]);
		}
	}

private:
	std::uint64_t m_state;
};

}  // namespace pinnobs
