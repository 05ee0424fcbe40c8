#ifndef MFL_TORUS_HPP
#define MFL_TORUS_HPP

#include <array>
#include <cmath>
#include <cstddef>

namespace mfl {

// Points and vectors in R^D. Torus points are stored by their representative
// in the cell [-1/2, 1/2)^D.
template <int D>
using vec = std::array<double, D>;

template <int D>
constexpr vec<D> zero_vec() {
	return vec<D>{};
}

// Arithmetic on std::array<double, N>; templated on std::size_t so that
// deduction works for vec<D> arguments.
template <std::size_t N>
constexpr std::array<double, N> operator+(std::array<double, N> a, std::array<double, N> const & b) {
	for(std::size_t k = 0; k < N; k++) a[k] += b[k];
	return a;
}

template <std::size_t N>
constexpr std::array<double, N> operator-(std::array<double, N> a, std::array<double, N> const & b) {
	for(std::size_t k = 0; k < N; k++) a[k] -= b[k];
	return a;
}

template <std::size_t N>
constexpr std::array<double, N> operator-(std::array<double, N> a) {
	for(std::size_t k = 0; k < N; k++) a[k] = -a[k];
	return a;
}

template <std::size_t N>
constexpr std::array<double, N> operator*(double s, std::array<double, N> a) {
	for(std::size_t k = 0; k < N; k++) a[k] *= s;
	return a;
}

template <std::size_t N>
constexpr std::array<double, N> & operator+=(std::array<double, N> & a, std::array<double, N> const & b) {
	for(std::size_t k = 0; k < N; k++) a[k] += b[k];
	return a;
}

template <std::size_t N>
constexpr std::array<double, N> & operator-=(std::array<double, N> & a, std::array<double, N> const & b) {
	for(std::size_t k = 0; k < N; k++) a[k] -= b[k];
	return a;
}

template <std::size_t N>
constexpr double dot(std::array<double, N> const & a, std::array<double, N> const & b) {
	double s = 0.0;
	for(std::size_t k = 0; k < N; k++) s += a[k]*b[k];
	return s;
}

template <std::size_t N>
double norm(std::array<double, N> const & a) {
	return std::sqrt(dot(a, a));
}

// v^perp = (-v2, v1)
constexpr vec<2> perp(vec<2> const & v) {
	return {-v[1], v[0]};
}

// Reduce a coordinate to [-1/2, 1/2). A value landing exactly on +1/2 maps to -1/2.
inline double reduce_coordinate(double x) {
	double r = x - std::floor(x + 0.5);
	if(r >= 0.5) r -= 1.0;
	if(r < -0.5) r += 1.0;
	return r;
}

template <int D>
vec<D> reduce(vec<D> x) {
	for(int k = 0; k < D; k++) x[k] = reduce_coordinate(x[k]);
	return x;
}

// Representative of x - y in the cell.
template <int D>
vec<D> torus_difference(vec<D> const & x, vec<D> const & y) {
	return reduce<D>(x - y);
}

template <int D>
double torus_distance(vec<D> const & x, vec<D> const & y) {
	return norm(torus_difference<D>(x, y));
}

}

#endif
