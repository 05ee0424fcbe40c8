#ifndef MFL_KERNEL_DIAGNOSTICS_HPP
#define MFL_KERNEL_DIAGNOSTICS_HPP

// Self-checks of a green_kernel: zero mean, agreement with the Fourier
// oracle, symmetry, gradient consistency and smoothness of the near-field
// remainder.

#include <mfl/fourier_oracle.hpp>
#include <mfl/green_kernel.hpp>
#include <mfl/rng.hpp>
#include <mfl/torus.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <type_traits>
#include <vector>

namespace mfl {

// Mean of g over the M^D grid of cell centres. The grid is shifted by
// half a cell, and for this rule the residual is exactly g(1/2, …, 1/2)/M².
template <int D>
double grid_mean(green_kernel<D> const & kernel, int M) {
	long total = 1;
	for(int j = 0; j < D; j++) total *= M;
	double sum = 0.0;
	for(long idx = 0; idx < total; idx++){
		long rest = idx;
		vec<D> x;
		for(int j = 0; j < D; j++){
			x[j] = (double(rest % M) + 0.5)/M;
			rest /= M;
		}
		sum += kernel.g(x);
	}
	return sum/double(total);
}

struct zero_mean_result {
	int grid = 0;
	// Midpoint-rule mean on the grid.
	double raw = 0.0;
	// Richardson combination (4 Q_M - Q_{M/2})/3, which removes the O(M^-2) term.
	double extrapolated = 0.0;
};

template <int D>
zero_mean_result zero_mean_residual(green_kernel<D> const & kernel, int M = 256) {
	zero_mean_result r;
	r.grid = M;
	r.raw = grid_mean(kernel, M);
	double coarse = grid_mean(kernel, M/2);
	r.extrapolated = (4.0*r.raw - coarse)/3.0;
	return r;
}

// Deterministic torus points in [-1/2, 1/2)^D.
template <int D>
std::vector<vec<D>> sample_points(long count, std::uint64_t seed) {
	std::vector<vec<D>> out(count);
	for(long i = 0; i < count; i++){
		auto rng = make_stream(seed, rng_stream::position, std::uint64_t(i));
		for(int j = 0; j < D; j++) out[i][j] = rng.uniform() - 0.5;
	}
	return out;
}

struct oracle_comparison {
	long points = 0;
	double max_error_g = 0.0;
	double max_error_grad = 0.0;
	double even_residual = 0.0;
	double odd_residual = 0.0;
	// max |∇g - central difference of g| with step 1e-4, over points with
	// |x| >= 0.05 where the difference quotient is accurate.
	double finite_difference_residual = 0.0;
};

template <int D>
oracle_comparison compare_with_oracle(green_kernel<D> const & kernel, long points = 1000, std::uint64_t seed = 2024) {
	oracle_comparison c;
	c.points = points;
	for(auto const & x : sample_points<D>(points, seed)){
		double ref;
		vec<D> ref_grad;
		fourier_oracle<D>::evaluate(x, ref, ref_grad);
		double v;
		vec<D> gr;
		kernel.g_and_grad(x, v, gr);
		c.max_error_g = std::max(c.max_error_g, std::fabs(v - ref));
		vec<D> mx = -x;
		c.even_residual = std::max(c.even_residual, std::fabs(v - kernel.g(mx)));
		vec<D> gm = kernel.grad_g(mx);
		double const h = 1e-4;
		for(int j = 0; j < D; j++){
			c.max_error_grad = std::max(c.max_error_grad, std::fabs(gr[j] - ref_grad[j]));
			c.odd_residual = std::max(c.odd_residual, std::fabs(gr[j] + gm[j]));
			if(norm(x) < 0.05) continue;
			vec<D> xp = x, xm = x;
			xp[j] += h;
			xm[j] -= h;
			double fd = (kernel.g(xp) - kernel.g(xm))/(2.0*h);
			c.finite_difference_residual = std::max(c.finite_difference_residual, std::fabs(fd - gr[j]));
		}
	}
	return c;
}

struct near_field_result {
	long points = 0;
	// max over points of |D_coarse - D_fine| / |D_fine| for the central
	// difference gradients of the remainder at the two scales.
	double max_relative_disagreement = 0.0;
	// Bounds of the remainder and its difference gradient on the sampled ball.
	double max_abs_remainder = 0.0;
	double max_gradient = 0.0;
	double coarse_step = 1e-2;
	double fine_step = 1e-3;
};

// h(x) = g(x) - S(|x|) on 0 < |x| < 1/4, S the singular part.
template <int D>
double near_field_remainder(green_kernel<D> const & kernel, std::type_identity_t<vec<D>> const & x) {
	return kernel.g(x) - green_kernel<D>::singular_part(norm(x));
}

template <int D>
near_field_result near_field_smoothness(green_kernel<D> const & kernel, long points = 200, std::uint64_t seed = 7,
																				double coarse = 1e-2, double fine = 1e-3) {
	near_field_result r;
	r.points = points;
	r.coarse_step = coarse;
	r.fine_step = fine;
	double const r_min = 2.0*coarse;
	double const r_max = 0.25 - 2.0*coarse;
	auto gradient = [&](vec<D> const & x, double h) {
		vec<D> d;
		for(int j = 0; j < D; j++){
			vec<D> xp = x, xm = x;
			xp[j] += h;
			xm[j] -= h;
			d[j] = (near_field_remainder(kernel, xp) - near_field_remainder(kernel, xm))/(2.0*h);
		}
		return d;
	};
	std::normal_distribution<double> normal;
	for(long i = 0; i < points; i++){
		auto rng = make_stream(seed, rng_stream::position, std::uint64_t(i));
		vec<D> dir;
		double len2 = 0.0;
		do {
			for(int j = 0; j < D; j++) dir[j] = normal(rng);
			len2 = dot(dir, dir);
		} while(len2 == 0.0);
		double radius = r_min + (r_max - r_min)*rng.uniform();
		vec<D> x = (radius/std::sqrt(len2))*dir;
		auto dc = gradient(x, coarse);
		auto df = gradient(x, fine);
		double diff = norm(dc - df);
		double scale = norm(df);
		r.max_relative_disagreement = std::max(r.max_relative_disagreement, diff/scale);
		r.max_abs_remainder = std::max(r.max_abs_remainder, std::fabs(near_field_remainder(kernel, x)));
		r.max_gradient = std::max(r.max_gradient, scale);
	}
	return r;
}

struct kernel_check_report {
	int dimension = 0;
	double tolerance = 0.0;
	double ewald_split = 0.0;
	double real_cutoff = 0.0;
	int fourier_cutoff = 0;
	int table_resolution = 0;
	double certified_error = 0.0;
	zero_mean_result zero_mean;
	oracle_comparison oracle;
	near_field_result near_field;
	double seconds = 0.0;
};

template <int D>
kernel_check_report kernel_check(green_kernel<D> const & kernel, long points = 1000) {
	auto start = std::chrono::steady_clock::now();
	kernel_check_report r;
	r.dimension = D;
	r.tolerance = kernel.tolerance();
	r.ewald_split = kernel.ewald_split();
	r.real_cutoff = kernel.real_cutoff();
	r.fourier_cutoff = kernel.fourier_cutoff();
	r.table_resolution = kernel.table_resolution();
	r.certified_error = kernel.certified_error();
	r.zero_mean = zero_mean_residual(kernel, 256);
	r.oracle = compare_with_oracle(kernel, points);
	r.near_field = near_field_smoothness(kernel);
	r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
	return r;
}

}

#endif
