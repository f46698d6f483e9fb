#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace pinnobs {

/// Raised when a computation produces (or would produce) a non-finite value.
class NumericalError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// Misuse of an API contract: shape mismatches, consumed tapes, bad specs.
class ContractError : public std::invalid_argument {
public:
	using std::invalid_argument::invalid_argument;
};

/// Invalid experiment configuration; `field()` names the offending key.
class ConfigError : public std::runtime_error {
public:
	ConfigError(std::string field, const std::string &what)
	    : std::runtime_error(field + ": " + what), m_field(std::move(field))
	{
	}
	const std::string &field() const noexcept { return m_field; }

private:
	std::string m_field;
};

/// Training loss became non-finite.
class TrainingDiverged : public std::runtime_error {
public:
	TrainingDiverged(std::size_t iteration, const std::string &what)
	    : std::runtime_error("diverged at iteration " +
	                         std::to_string(iteration) + ": " + what),
	      m_iteration(iteration)
	{
	}
	std::size_t iteration() const noexcept { return m_iteration; }

private:
	std::size_t m_iteration;
};

/// Smallest divisor magnitude accepted by the autodiff types.
inline constexpr double min_divisor = 1e-12;

inline void check_divisor(double d)
{
	if (!(std::abs(d) >= min_divisor)) {
		throw NumericalError("division by near-zero value " + std::to_string(d));
	}
}

class IoError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

}  // namespace pinnobs
