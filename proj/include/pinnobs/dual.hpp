#pragma once

#include <cmath>
#include <type_traits>
#include <utility>

#include "pinnobs/errors.hpp"

namespace pinnobs {

/**
 * Forward-mode dual number carrying a value and its derivative with respect
 * to one seed variable (the network's time input).
 *
 * T is either `double` or a reverse-mode `Var`; the latter records both
 * components on a gradient tape so that parameter gradients can flow through
 * the time derivative (forward-over-reverse).
 */
template <typename T>
struct Dual {
	T value{};
	T deriv{};

	Dual() = default;
	Dual(T v, T d) : value(std::move(v)), deriv(std::move(d)) {}

	/// Constant: zero derivative.
	static Dual constant(T v) { return Dual(v, v * 0.0); }
	/// Seed variable: unit derivative.
	static Dual seed(T v) { return Dual(v, v * 0.0 + 1.0); }
};

template <typename T>
Dual<T> operator+(const Dual<T> &a, const Dual<T> &b)
{
	return {a.value + b.value, a.deriv + b.deriv};
}

template <typename T>
Dual<T> operator-(const Dual<T> &a, const Dual<T> &b)
{
	return {a.value - b.value, a.deriv - b.deriv};
}

template <typename T>
Dual<T> operator-(const Dual<T> &a)
{
	return {-a.value, -a.deriv};
}

template <typename T>
Dual<T> operator*(const Dual<T> &a, const Dual<T> &b)
{
	return {a.value * b.value, a.value * b.deriv + a.deriv * b.value};
}

template <typename T>
Dual<T> operator/(const Dual<T> &a, const Dual<T> &b)
{
	if constexpr (std::is_same_v<T, double>) check_divisor(b.value);
	const T q = a.value / b.value;
	return {q, (a.deriv - q * b.deriv) / b.value};
}

// Mixed with a constant: either the underlying scalar or a plain double.
template <typename T, typename S>
concept DualConstant = std::is_same_v<S, T> || std::is_same_v<S, double>;

template <typename T, typename S>
    requires DualConstant<T, S>
Dual<T> operator+(const Dual<T> &a, const S &c)
{
	return {a.value + c, a.deriv};
}
template <typename T, typename S>
    requires DualConstant<T, S>
Dual<T> operator+(const S &c, const Dual<T> &a)
{
	return {c + a.value, a.deriv};
}
template <typename T, typename S>
    requires DualConstant<T, S>
Dual<T> operator-(const Dual<T> &a, const S &c)
{
	return {a.value - c, a.deriv};
}
template <typename T, typename S>
    requires DualConstant<T, S>
Dual<T> operator-(const S &c, const Dual<T> &a)
{
	return {c - a.value, -a.deriv};
}
template <typename T, typename S>
    requires DualConstant<T, S>
Dual<T> operator*(const Dual<T> &a, const S &c)
{
	return {a.value * c, a.deriv * c};
}
template <typename T, typename S>
    requires DualConstant<T, S>
Dual<T> operator*(const S &c, const Dual<T> &a)
{
	return {c * a.value, c * a.deriv};
}
template <typename T, typename S>
    requires DualConstant<T, S>
Dual<T> operator/(const Dual<T> &a, const S &c)
{
	if constexpr (std::is_same_v<S, double>) check_divisor(c);
	return {a.value / c, a.deriv / c};
}
template <typename T, typename S>
    requires DualConstant<T, S>
Dual<T> operator/(const S &c, const Dual<T> &a)
{
	if constexpr (std::is_same_v<T, double>) check_divisor(a.value);
	const T q = c / a.value;
	return {q, -(q * a.deriv) / a.value};
}

template <typename T>
Dual<T> tanh(const Dual<T> &a)
{
	using std::tanh;
	const T s = tanh(a.value);
	return {s, (1.0 - s * s) * a.deriv};
}

template <typename T>
Dual<T> sin(const Dual<T> &a)
{
	using std::cos;
	using std::sin;
	return {sin(a.value), cos(a.value) * a.deriv};
}

template <typename T>
Dual<T> cos(const Dual<T> &a)
{
	using std::cos;
	using std::sin;
	return {cos(a.value), -(sin(a.value) * a.deriv)};
}

template <typename T>
Dual<T> exp(const Dual<T> &a)
{
	using std::exp;
	const T e = exp(a.value);
	return {e, e * a.deriv};
}

template <typename T>
Dual<T> sqrt(const Dual<T> &a)
{
	using std::sqrt;
	const T r = sqrt(a.value);
	return {r, a.deriv / (2.0 * r)};
}

/// Integer power, n >= 0.
template <typename T>
Dual<T> pow(const Dual<T> &a, int n)
{
	using std::pow;
	if (n == 0) {
		return Dual<T>::constant(a.value * 0.0 + 1.0);
	}
	const T pm1 = pow(a.value, n - 1);
	return {pm1 * a.value, (static_cast<double>(n) * pm1) * a.deriv};
}

template <typename T>
Dual<T> sigmoid(const Dual<T> &a)
{
	using std::exp;
	const T s = 1.0 / (1.0 + exp(-a.value));
	return {s, (s * (1.0 - s)) * a.deriv};
}

template <typename T>
Dual<T> relu(const Dual<T> &a)
{
	if (a.value > 0.0) {
		return a;
	}
	return {a.value * 0.0, a.deriv * 0.0};
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace pinnobs
