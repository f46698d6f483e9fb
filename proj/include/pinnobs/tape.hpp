#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pinnobs {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
public:
	Var() = default;

	double value() const;
	Tape *tape() const { return m_tape; }
	std::size_t index() const { return m_index; }

private:
	friend class Tape;
	Var(Tape *tape, std::size_t index) : m_tape(tape), m_index(index) {}

	Tape *m_tape = nullptr;
	std::size_t m_index = 0;
};

/**
 * Reverse-mode gradient tape (Wengert list). Every recorded value stores at
 * most two parents and the local partial derivatives with respect to them.
 * A tape is owned by one computation and supports exactly one backward pass.
 */
class Tape {
public:
	static constexpr std::size_t no_parent = SIZE_MAX;

	Tape() = default;
	Tape(const Tape &) = delete;
	Tape &operator=(const Tape &) = delete;

	/// Independent input (leaf).
	Var variable(double value);

	Var unary(double value, const Var &a, double da);
	Var binary(double value, const Var &a, double da, const Var &b, double db);

	double value(std::size_t index) const { return m_values[index]; }
	std::size_t size() const { return m_values.size(); }
	bool consumed() const { return m_consumed; }

	/**
	 * Back-propagates adjoints from `output` and returns d(output)/d(x) for
	 * every x in `wrt`. Consumes the tape. Throws ContractError on reuse and
	 * NumericalError on a non-finite adjoint.
	 */
	std::vector<double> gradient(const Var &output, std::span<const Var> wrt);

private:
	struct Node {
		std::array<std::size_t, 2> parent{no_parent, no_parent};
		std::array<double, 2> partial{0.0, 0.0};
	};

	void check_live() const;

	std::vector<Node> m_nodes;
	std::vector<double> m_values;
	bool m_consumed = false;
};

/// grad(loss) with respect to `params`; see Tape::gradient.
std::vector<double> grad(const Var &loss, std::span<const Var> params);

Var operator+(const Var &a, const Var &b);
Var operator-(const Var &a, const Var &b);
Var operator*(const Var &a, const Var &b);
Var operator/(const Var &a, const Var &b);
Var operator-(const Var &a);

Var operator+(const Var &a, double c);
Var operator+(double c, const Var &a);
Var operator-(const Var &a, double c);
Var operator-(double c, const Var &a);
Var operator*(const Var &a, double c);
Var operator*(double c, const Var &a);
Var operator/(const Var &a, double c);
Var operator/(double c, const Var &a);

Var &operator+=(Var &a, const Var &b);
Var &operator-=(Var &a, const Var &b);

Var tanh(const Var &a);
Var sin(const Var &a);
Var cos(const Var &a);
Var exp(const Var &a);
Var sqrt(const Var &a);
Var pow(const Var &a, int n);

inline bool operator>(const Var &a, double c) { return a.value() > c; }
inline bool operator<(const Var &a, double c) { return a.value() < c; }

}  // namespace pinnobs
