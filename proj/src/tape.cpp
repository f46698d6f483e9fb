#include "pinnobs/tape.hpp"

#include <cmath>
#include <string>

#include "pinnobs/errors.hpp"

namespace pinnobs {

namespace {

Tape &owner(const Var &a, const Var &b)
{
	if (a.tape() == nullptr || a.tape() != b.tape()) {
		throw ContractError("operands recorded on different tapes");
	}
	return *a.tape();
}

Tape &owner(const Var &a)
{
	if (a.tape() == nullptr) {
		throw ContractError("operand is not recorded on a tape");
	}
	return *a.tape();
}

}  // namespace

double Var::value() const { return m_tape->value(m_index); }

void Tape::check_live() const
{
	if (m_consumed) {
		throw ContractError("tape already consumed by a backward pass");
	}
}

Var Tape::variable(double value)
{
	check_live();
	m_nodes.emplace_back();
	m_values.push_back(value);
	return Var(this, m_values.size() - 1);
}

Var Tape::unary(double value, const Var &a, double da)
{
	check_live();
	Node n;
	n.parent[0] = a.index();
	n.partial[0] = da;
	m_nodes.push_back(n);
	m_values.push_back(value);
	return Var(this, m_values.size() - 1);
}

Var Tape::binary(double value, const Var &a, double da, const Var &b, double db)
{
	check_live();
	Node n;
	n.parent = {a.index(), b.index()};
	n.partial = {da, db};
	m_nodes.push_back(n);
	m_values.push_back(value);
	return Var(this, m_values.size() - 1);
}

std::vector<double> Tape::gradient(const Var &output, std::span<const Var> wrt)
{
	check_live();
	if (output.tape() != this) {
		throw ContractError("output not recorded on this tape");
	}
	m_consumed = true;

	std::vector<double> adjoint(m_nodes.size(), 0.0);
	adjoint[output.index()] = 1.0;
	for (std::size_t i = output.index() + 1; i-- > 0;) {
		const double a = adjoint[i];
		if (a == 0.0) {
			continue;
		}
		if (!std::isfinite(a)) {
			throw NumericalError("non-finite adjoint at tape entry " +
			                     std::to_string(i));
		}
		const Node &n = m_nodes[i];
		for (int k = 0; k < 2; ++k) {
			if (n.parent[k] != no_parent) {
				adjoint[n.parent[k]] += n.partial[k] * a;
			}
		}
	}

	std::vector<double> out;
	out.reserve(wrt.size());
	for (const Var &v : wrt) {
		if (v.tape() != this) {
			throw ContractError("gradient requested for a foreign variable");
		}
		out.push_back(adjoint[v.index()]);
	}
	return out;
}

std::vector<double> grad(const Var &loss, std::span<const Var> params)
{
	return owner(loss).gradient(loss, params);
}

Var operator+(const Var &a, const Var &b)
{
	return owner(a, b).binary(a.value() + b.value(), a, 1.0, b, 1.0);
}

Var operator-(const Var &a, const Var &b)
{
	return owner(a, b).binary(a.value() - b.value(), a, 1.0, b, -1.0);
}

Var operator*(const Var &a, const Var &b)
{
	const double av = a.value(), bv = b.value();
	return owner(a, b).binary(av * bv, a, bv, b, av);
}

Var operator/(const Var &a, const Var &b)
{
	const double bv = b.value();
	check_divisor(bv);
	const double q = a.value() / bv;
	return owner(a, b).binary(q, a, 1.0 / bv, b, -q / bv);
}

Var operator-(const Var &a) { return owner(a).unary(-a.value(), a, -1.0); }

Var operator+(const Var &a, double c)
{
	return owner(a).unary(a.value() + c, a, 1.0);
}
Var operator+(double c, const Var &a)
{
	return owner(a).unary(c + a.value(), a, 1.0);
}
Var operator-(const Var &a, double c)
{
	return owner(a).unary(a.value() - c, a, 1.0);
}
Var operator-(double c, const Var &a)
{
	return owner(a).unary(c - a.value(), a, -1.0);
}
Var operator*(const Var &a, double c)
{
	return owner(a).unary(a.value() * c, a, c);
}
Var operator*(double c, const Var &a)
{
	return owner(a).unary(c * a.value(), a, c);
}
Var operator/(const Var &a, double c)
{
	check_divisor(c);
	return owner(a).unary(a.value() / c, a, 1.0 / c);
}
Var operator/(double c, const Var &a)
{
	const double av = a.value();
	check_divisor(av);
	return owner(a).unary(c / av, a, -c / (av * av));
}

Var &operator+=(Var &a, const Var &b) { return a = a + b; }
Var &operator-=(Var &a, const Var &b) { return a = a - b; }

Var tanh(const Var &a)
{
	const double s = std::tanh(a.value());
	return owner(a).unary(s, a, 1.0 - s * s);
}

Var sin(const Var &a)
{
	return owner(a).unary(std::sin(a.value()), a, std::cos(a.value()));
}

Var cos(const Var &a)
{
	return owner(a).unary(std::cos(a.value()), a, -std::sin(a.value()));
}

Var exp(const Var &a)
{
	const double e = std::exp(a.value());
	return owner(a).unary(e, a, e);
}

Var sqrt(const Var &a)
{
	const double r = std::sqrt(a.value());
	check_divisor(r);
	return owner(a).unary(r, a, 0.5 / r);
}

Var pow(const Var &a, int n)
{
	if (n < 0) {
		throw ContractError("pow: negative exponent");
	}
	const double v = a.value();
	if (n == 0) {
		return owner(a).unary(1.0, a, 0.0);
	}
	const double pm1 = std::pow(v, n - 1);
	return owner(a).unary(pm1 * v, a, n * pm1);
}

}  // namespace pinnobs
