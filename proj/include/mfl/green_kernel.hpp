#ifndef MFL_GREEN_KERNEL_HPP
#define MFL_GREEN_KERNEL_HPP

// Green function of the negative Laplacian on the unit torus T^D,
//
//   -Δg = δ_0 - 1,   ∫ g = 0,
//
// evaluated by Ewald splitting. With the Gaussian screening ρ_α of width 1/α,
//
//   g(x) = Σ_n φ_α(x + n) + Σ_{k≠0} exp(-π²|k|²/α²)/(4π²|k|²) cos(2πk·x) - 1/(4α²),
//
// where φ_α solves -Δφ_α = δ_0 - ρ_α in free space:
//   D = 2:  φ_α(r) = E1(α²r²)/(4π)
//   D = 3:  φ_α(r) = erfc(αr)/(4πr)
// and -1/(4α²) = -∫φ_α restores the zero mean.
//
// Near the origin g = S(|x|) + g0(x) with S(r) = -log(r)/(2π) (D = 2) or
// 1/(4πr) (D = 3) and g0 smooth. The fast path tabulates g0 and ∇g0 on the
// octant [0, 1/2]^D and interpolates with a 6-point Lagrange stencil per axis;
// the table is checked against the direct Ewald sum at construction time.
//
// All evaluations go through the octant: g is even in every coordinate, so
// ∂_j g(x) = sign(x_j) ∂_j g(|x|). Components with x_j = 0 or |x_j| = 1/2 are
// set to exactly zero, which makes ∇g exactly odd under the [-1/2, 1/2)
// reduction.

#include <mfl/errors.hpp>
#include <mfl/torus.hpp>

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace mfl {

namespace detail {

// E1(z) for z > 0.
inline double expint_e1(double z) {
	return -std::expint(-z);
}

// Ein(z) = Σ_{k≥1} (-1)^{k+1} z^k / (k k!) = E1(z) + log(z) + γ, entire.
inline double expint_ein(double z) {
	if(z > 1.0) return expint_e1(z) + std::log(z) + std::numbers::egamma;
	double term = 1.0;
	double sum = 0.0;
	for(int k = 1; k < 40; k++){
		term *= -z/k;
		double contrib = -term/k;
		sum += contrib;
		if(std::fabs(contrib) < 1e-18*std::fabs(sum)) break;
	}
	return sum;
}

// (erf(s) - 2s exp(-s²)/√π) / s³, regular at s = 0.
inline double erf_defect_over_cube(double s) {
	if(s > 0.1) return (std::erf(s) - 2.0*s*std::exp(-s*s)/std::sqrt(std::numbers::pi))/(s*s*s);
	double s2 = s*s;
	double term = 1.0;   // (-1)^{n+1} s^{2n-2} / n!
	double sum = 0.0;
	for(int n = 1; n < 20; n++){
		if(n > 1) term *= -s2/n;
		sum += term*(2.0*n/(2.0*n + 1.0));
	}
	return 2.0/std::sqrt(std::numbers::pi)*sum;
}

// Six-point Lagrange weights at nodes -2..3 for a parameter t in [0, 1).
inline void lagrange6(double t, double * w) {
	constexpr double nodes[6] = {-2.0, -1.0, 0.0, 1.0, 2.0, 3.0};
	constexpr double denom[6] = {-120.0, 24.0, -12.0, 12.0, -24.0, 120.0};
	double diff[6];
	for(int i = 0; i < 6; i++) diff[i] = t - nodes[i];
	double prefix[7];
	double suffix[7];
	prefix[0] = 1.0;
	suffix[6] = 1.0;
	for(int i = 0; i < 6; i++) prefix[i + 1] = prefix[i]*diff[i];
	for(int i = 5; i >= 0; i--) suffix[i] = suffix[i + 1]*diff[i];
	for(int i = 0; i < 6; i++) w[i] = prefix[i]*suffix[i + 1]/denom[i];
}

}

struct kernel_options {
	double tolerance = 1e-9;
	// Zero selects the split from tolerance and real_cutoff.
	double ewald_split = 0.0;
	double real_cutoff = 1.0;
	// Zero selects the Fourier cutoff from tolerance and ewald_split.
	int fourier_cutoff = 0;
	bool tabulate = true;
	// Cells per unit length; zero selects a per-dimension default.
	int table_resolution = 0;
};

template <int D>
class green_kernel {
	static_assert(D == 2 || D == 3, "the torus kernel is implemented for D = 2 and D = 3");

public:
	static constexpr int dimension = D;
	static constexpr int stencil = 6;

	explicit green_kernel(kernel_options opts = {})
		: opts_(opts) {
		if(!(opts_.tolerance > 0.0)) throw config_error("kernel tolerance must be positive");
		if(!(opts_.real_cutoff > 0.0)) throw config_error("kernel real_cutoff must be positive");
		if(opts_.ewald_split < 0.0 || opts_.fourier_cutoff < 0 || opts_.table_resolution < 0) {
			throw config_error("kernel parameters must be non-negative");
		}

		double screening = std::sqrt(-std::log(opts_.tolerance*1e-4));
		if(opts_.ewald_split == 0.0) opts_.ewald_split = screening/opts_.real_cutoff;
		if(opts_.fourier_cutoff == 0) {
			opts_.fourier_cutoff = int(std::ceil(screening*opts_.ewald_split/std::numbers::pi));
		}
		setup_fourier();

		if(opts_.tabulate) {
			int resolution = opts_.table_resolution;
			bool fixed = resolution != 0;
			if(!fixed) resolution = (D == 2) ? 256 : 128;
			for(;;){
				build_table(resolution);
				certified_ = measure_table_error();
				if(fixed || certified_ <= 0.5*opts_.tolerance || resolution >= 1024) break;
				resolution *= 2;
			}
		}
	}

	kernel_options const & options() const { return opts_; }
	double tolerance() const { return opts_.tolerance; }
	double ewald_split() const { return opts_.ewald_split; }
	double real_cutoff() const { return opts_.real_cutoff; }
	int fourier_cutoff() const { return opts_.fourier_cutoff; }
	bool tabulated() const { return !table_.empty(); }
	int table_resolution() const { return resolution_; }

	// Largest deviation between table and direct Ewald sum seen on the
	// certification sample (value and gradient components); zero without a table.
	double certified_error() const { return certified_; }

	// |S_{D-1}|, the area of the unit sphere.
	static constexpr double sphere_area() {
		return D == 2 ? 2.0*std::numbers::pi : 4.0*std::numbers::pi;
	}

	// Explicit singular part S(r) of g near the origin.
	static double singular_part(double r) {
		if constexpr(D == 2) return -std::log(r)/sphere_area();
		else return 1.0/(sphere_area()*r);
	}

	// S'(r)/r, so that ∇S(x) = (S'(r)/r) x.
	static double singular_radial_factor(double r) {
		if constexpr(D == 2) return -1.0/(sphere_area()*r*r);
		else return -1.0/(sphere_area()*r*r*r);
	}

	double g(vec<D> const & x) const {
		double value;
		vec<D> grad;
		evaluate<true, false>(x, value, grad);
		return value;
	}

	vec<D> grad_g(vec<D> const & x) const {
		double value;
		vec<D> grad;
		evaluate<false, true>(x, value, grad);
		return grad;
	}

	void g_and_grad(vec<D> const & x, double & value, vec<D> & grad) const {
		evaluate<true, true>(x, value, grad);
	}

	// Runtime-sized point; the length must match the kernel dimension.
	double g(std::span<double const> x) const {
		return g(checked_point(x));
	}

	vec<D> grad_g(std::span<double const> x) const {
		return grad_g(checked_point(x));
	}

	// Direct Ewald evaluation, bypassing the table.
	double g_direct(vec<D> const & x) const {
		auto [a, sign] = fold(x);
		double r = norm(a);
		double g0;
		vec<D> grad0;
		ewald_remainder<true, false>(a, g0, grad0);
		return singular_part(r) + g0;
	}

	vec<D> grad_g_direct(vec<D> const & x) const {
		auto [a, sign] = fold(x);
		double r = norm(a);
		double g0;
		vec<D> grad0;
		ewald_remainder<false, true>(a, g0, grad0);
		double radial = singular_radial_factor(r);
		vec<D> grad;
		for(int j = 0; j < D; j++) grad[j] = sign[j]*(radial*a[j] + grad0[j]);
		return grad;
	}

	// Smooth remainder g0 = g - S(|x|) at a cell representative, from the
	// direct Ewald sum. Finite at x = 0.
	double remainder(vec<D> const & x) const {
		vec<D> a = reduce<D>(x);
		for(auto & c : a) c = std::fabs(c);
		double g0;
		vec<D> grad0;
		ewald_remainder<true, false>(a, g0, grad0);
		return g0;
	}

	// Persisted table layout, little-endian:
	//   int32 dimension, int32 resolution, float64 ewald_split,
	//   then (D + 1) row-major blocks over the node grid: g0, ∂_1 g0, ..., ∂_D g0.
	// Nodes sit at a_m = m/resolution for m = -2 .. resolution/2 + 3 on each axis.
	void save_table(std::string const & path) const {
		if(table_.empty()) throw config_error("kernel has no table to save");
		std::ofstream out(path, std::ios::binary);
		if(!out) throw config_error("cannot open table file for writing: " + path);
		write_le<std::int32_t>(out, D);
		write_le<std::int32_t>(out, resolution_);
		write_le<double>(out, opts_.ewald_split);
		long nodes = long(table_.size())/(D + 1);
		for(int field = 0; field <= D; field++){
			for(long n = 0; n < nodes; n++) write_le<double>(out, table_[n*(D + 1) + field]);
		}
	}

	// Replaces the table with one read from disk. The header must match this
	// kernel's dimension and Ewald split.
	void load_table(std::string const & path) {
		std::ifstream in(path, std::ios::binary);
		if(!in) throw config_error("cannot open table file: " + path);
		auto dim = read_le<std::int32_t>(in);
		auto resolution = read_le<std::int32_t>(in);
		auto split = read_le<double>(in);
		if(!in || dim != D) throw config_error("table file dimension does not match the kernel");
		if(split != opts_.ewald_split) throw config_error("table file ewald_split does not match the kernel");
		if(resolution < 8 || resolution % 2 != 0) throw config_error("table file resolution is invalid");
		set_grid(resolution);
		std::vector<double> table(table_.size());
		long nodes = long(table.size())/(D + 1);
		for(int field = 0; field <= D; field++){
			for(long n = 0; n < nodes; n++) table[n*(D + 1) + field] = read_le<double>(in);
		}
		if(!in) throw config_error("table file is truncated: " + path);
		table_ = std::move(table);
		certified_ = measure_table_error();
	}

private:
	kernel_options opts_;
	std::vector<double> fourier_coef_;   // indexed by |k|² for k in [0, K]^D
	int resolution_ = 0;
	double spacing_ = 0.0;
	int nodes_per_axis_ = 0;
	std::vector<double> table_;
	double certified_ = 0.0;

	static constexpr int node_offset = 2;

	vec<D> checked_point(std::span<double const> x) const {
		if(long(x.size()) != D) {
			throw config_error("point of dimension " + std::to_string(x.size()) + " passed to a "
												 + std::to_string(D) + "-dimensional kernel");
		}
		vec<D> p;
		std::copy(x.begin(), x.end(), p.begin());
		return p;
	}

	struct folded {
		vec<D> abs;
		vec<D> sign;
	};

	static folded fold(vec<D> const & x) {
		folded f;
		bool zero = true;
		for(int j = 0; j < D; j++){
			double c = reduce_coordinate(x[j]);
			double a = std::fabs(c);
			f.abs[j] = a;
			f.sign[j] = (a == 0.0 || a == 0.5) ? 0.0 : (c > 0.0 ? 1.0 : -1.0);
			if(a != 0.0) zero = false;
		}
		if(zero) throw singular_point_error("Green function evaluated at the singular point x = 0");
		return f;
	}

	template <bool Value, bool Grad>
	void evaluate(vec<D> const & x, double & value, vec<D> & grad) const {
		auto [a, sign] = fold(x);
		double r = norm(a);
		double g0 = 0.0;
		vec<D> grad0{};
		if(table_.empty()) ewald_remainder<Value, Grad>(a, g0, grad0);
		else interpolate<Value, Grad>(a, g0, grad0);
		if constexpr(Value) value = singular_part(r) + g0;
		if constexpr(Grad) {
			double radial = singular_radial_factor(r);
			for(int j = 0; j < D; j++) grad[j] = sign[j]*(radial*a[j] + grad0[j]);
		}
	}

	void setup_fourier() {
		int K = opts_.fourier_cutoff;
		double alpha2 = opts_.ewald_split*opts_.ewald_split;
		fourier_coef_.assign(D*K*K + 1, 0.0);
		for(int k2 = 1; k2 <= D*K*K; k2++){
			fourier_coef_[k2] = std::exp(-std::numbers::pi*std::numbers::pi*k2/alpha2)
				/(4.0*std::numbers::pi*std::numbers::pi*k2);
		}
	}

	// g0 and ∇g0 at a point a of the (slightly enlarged) octant.
	template <bool Value, bool Grad>
	void ewald_remainder(vec<D> const & a, double & g0, vec<D> & grad0) const {
		real_space_part<Value, Grad>(a, g0, grad0);
		reciprocal_part<Value, Grad>(a, g0, grad0);
	}

	// Screened images plus the mean correction -1/(4α²); the n = 0 image has
	// the singular part S removed. Overwrites value and grad.
	template <bool Value, bool Grad>
	void real_space_part(vec<D> const & a, double & out_value, vec<D> & out_grad) const {
		constexpr double pi = std::numbers::pi;
		double const alpha = opts_.ewald_split;
		double const cutoff = opts_.real_cutoff;
		double value = -1.0/(4.0*alpha*alpha);
		vec<D> grad{};

		// real-space images
		int lo = -int(std::ceil(cutoff + 1.0));
		int hi = int(std::ceil(cutoff));
		std::array<int, D> n;
		n.fill(lo);
		for(;;){
			vec<D> y;
			bool origin = true;
			for(int j = 0; j < D; j++){
				y[j] = a[j] + n[j];
				if(n[j] != 0) origin = false;
			}
			double r2 = dot(y, y);
			if(origin) {
				double r = std::sqrt(r2);
				if constexpr(D == 2) {
					double z = alpha*alpha*r2;
					if constexpr(Value) value += (detail::expint_ein(z) - std::numbers::egamma - 2.0*std::log(alpha))/(4.0*pi);
					if constexpr(Grad) {
						double ratio = (z == 0.0) ? 1.0 : -std::expm1(-z)/z;
						grad += (alpha*alpha*ratio/(2.0*pi))*y;
					}
				} else {
					double s = alpha*r;
					if constexpr(Value) {
						double erf_over = (s < 1e-8) ? 2.0/std::sqrt(pi) : std::erf(s)/s;
						value += -alpha*erf_over/(4.0*pi);
					}
					if constexpr(Grad) grad += (alpha*alpha*alpha*detail::erf_defect_over_cube(s)/(4.0*pi))*y;
				}
			} else if(r2 < cutoff*cutoff) {
				double r = std::sqrt(r2);
				if constexpr(D == 2) {
					double z = alpha*alpha*r2;
					if constexpr(Value) value += detail::expint_e1(z)/(4.0*pi);
					if constexpr(Grad) grad += (-std::exp(-z)/(2.0*pi*r2))*y;
				} else {
					double s = alpha*r;
					if constexpr(Value) value += std::erfc(s)/(4.0*pi*r);
					if constexpr(Grad) {
						double dphi = -(std::erfc(s)/r2 + 2.0*alpha/std::sqrt(pi)*std::exp(-s*s)/r)/(4.0*pi);
						grad += (dphi/r)*y;
					}
				}
			}
			int j = 0;
			while(j < D && ++n[j] > hi){
				n[j] = lo;
				j++;
			}
			if(j == D) break;
		}

		out_value = value;
		out_grad = grad;
	}

	// Adds Σ_{k≠0} exp(-π²|k|²/α²)/(4π²|k|²) cos(2πk·a) and its gradient,
	// summed over k in [0, K]^D with multiplicity 2^{#nonzero}.
	template <bool Value, bool Grad>
	void reciprocal_part(vec<D> const & a, double & value, vec<D> & grad) const {
		constexpr double pi = std::numbers::pi;
		int const K = opts_.fourier_cutoff;
		std::vector<double> cosines(D*(K + 1));
		std::vector<double> sines(D*(K + 1));
		for(int j = 0; j < D; j++){
			for(int k = 0; k <= K; k++){
				double phase = 2.0*pi*k*a[j];
				cosines[j*(K + 1) + k] = (k == 0) ? 1.0 : 2.0*std::cos(phase);
				sines[j*(K + 1) + k] = (k == 0) ? 0.0 : -2.0*2.0*pi*k*std::sin(phase);
			}
		}
		std::array<int, D> k;
		k.fill(0);
		for(;;){
			int k2 = 0;
			for(int j = 0; j < D; j++) k2 += k[j]*k[j];
			if(k2 != 0) {
				double c = fourier_coef_[k2];
				if constexpr(Value) {
					double prod = c;
					for(int j = 0; j < D; j++) prod *= cosines[j*(K + 1) + k[j]];
					value += prod;
				}
				if constexpr(Grad) {
					for(int j = 0; j < D; j++){
						if(k[j] == 0) continue;
						double prod = c*sines[j*(K + 1) + k[j]];
						for(int i = 0; i < D; i++) if(i != j) prod *= cosines[i*(K + 1) + k[i]];
						grad[j] += prod;
					}
				}
			}
			int j = 0;
			while(j < D && ++k[j] > K){
				k[j] = 0;
				j++;
			}
			if(j == D) break;
		}

	}


	void set_grid(int resolution) {
		resolution_ = resolution;
		spacing_ = 1.0/resolution;
		nodes_per_axis_ = resolution/2 + 6;
		long total = 1;
		for(int j = 0; j < D; j++) total *= nodes_per_axis_;
		table_.assign(total*(D + 1), 0.0);
	}

	void build_table(int resolution) {
		if(resolution < 8 || resolution % 2 != 0) throw config_error("table resolution must be even and at least 8");
		set_grid(resolution);
		long total = long(table_.size())/(D + 1);
		for(long idx = 0; idx < total; idx++){
			long rest = idx;
			vec<D> a;
			vec<D> sign;
			for(int j = D - 1; j >= 0; j--){
				int m = int(rest % nodes_per_axis_) - node_offset;
				rest /= nodes_per_axis_;
				a[j] = std::fabs(m*spacing_);
				sign[j] = (m < 0) ? -1.0 : 1.0;
			}
			double g0;
			vec<D> grad0;
			real_space_part<true, true>(a, g0, grad0);
			double * node = &table_[idx*(D + 1)];
			node[0] = g0;
			for(int j = 0; j < D; j++) node[1 + j] = sign[j]*grad0[j];
		}
		add_reciprocal_on_grid();
	}

	// Reciprocal-space part on the whole node grid. The sum is separable, so it
	// is done as D successive contractions of the coefficient tensor with
	// per-axis cosine (or derivative) matrices.
	void add_reciprocal_on_grid() {
		constexpr double pi = std::numbers::pi;
		int const K1 = opts_.fourier_cutoff + 1;
		int const n = nodes_per_axis_;
		std::vector<double> cos_mat(K1*n);
		std::vector<double> der_mat(K1*n);
		for(int k = 0; k < K1; k++){
			for(int m = 0; m < n; m++){
				double a = (m - node_offset)*spacing_;
				double phase = 2.0*pi*k*a;
				cos_mat[k*n + m] = (k == 0) ? 1.0 : 2.0*std::cos(phase);
				der_mat[k*n + m] = (k == 0) ? 0.0 : -2.0*2.0*pi*k*std::sin(phase);
			}
		}

		long coef_size = 1;
		for(int j = 0; j < D; j++) coef_size *= K1;
		std::vector<double> coef(coef_size);
		for(long idx = 0; idx < coef_size; idx++){
			long rest = idx;
			int k2 = 0;
			for(int j = 0; j < D; j++){
				int k = int(rest % K1);
				rest /= K1;
				k2 += k*k;
			}
			coef[idx] = fourier_coef_[k2];
		}

		for(int field = 0; field <= D; field++){
			// tensor with layout [axis 0 .. axis D-1], last axis fastest; contract
			// the last remaining k axis first
			std::vector<double> current = coef;
			std::array<int, D> extent;
			extent.fill(K1);
			for(int axis = D - 1; axis >= 0; axis--){
				auto const & mat = (field == axis + 1) ? der_mat : cos_mat;
				long outer = 1;
				for(int j = 0; j < axis; j++) outer *= extent[j];
				long inner = 1;
				for(int j = axis + 1; j < D; j++) inner *= extent[j];
				std::vector<double> next(outer*n*inner, 0.0);
				for(long o = 0; o < outer; o++){
					for(int k = 0; k < K1; k++){
						double const * src = &current[(o*K1 + k)*inner];
						for(int m = 0; m < n; m++){
							double w = mat[k*n + m];
							if(w == 0.0) continue;
							double * dst = &next[(o*n + m)*inner];
							for(long i = 0; i < inner; i++) dst[i] += w*src[i];
						}
					}
				}
				current = std::move(next);
				extent[axis] = n;
			}
			long total = long(current.size());
			for(long idx = 0; idx < total; idx++) table_[idx*(D + 1) + field] += current[idx];
		}
	}

	template <bool Value, bool Grad>
	void interpolate(vec<D> const & a, double & g0, vec<D> & grad0) const {
		double weights[D][stencil];
		int base[D];
		for(int j = 0; j < D; j++){
			double u = a[j]*resolution_;
			int m = std::min(int(u), resolution_/2);
			detail::lagrange6(u - m, weights[j]);
			base[j] = m - 2 + node_offset;
		}
		constexpr int fields = D + 1;
		double acc[fields] = {};
		if constexpr(D == 2) {
			for(int p = 0; p < stencil; p++){
				double const * row = &table_[((base[0] + p)*nodes_per_axis_ + base[1])*fields];
				double partial[fields] = {};
				for(int q = 0; q < stencil; q++){
					double w = weights[1][q];
					if constexpr(Value) partial[0] += w*row[q*fields];
					if constexpr(Grad) {
						partial[1] += w*row[q*fields + 1];
						partial[2] += w*row[q*fields + 2];
					}
				}
				for(int f = 0; f < fields; f++) acc[f] += weights[0][p]*partial[f];
			}
		} else {
			for(int p = 0; p < stencil; p++){
				double plane[fields] = {};
				for(int q = 0; q < stencil; q++){
					double const * row = &table_[(((base[0] + p)*nodes_per_axis_ + base[1] + q)*nodes_per_axis_ + base[2])*fields];
					double partial[fields] = {};
					for(int s = 0; s < stencil; s++){
						double w = weights[2][s];
						if constexpr(Value) partial[0] += w*row[s*fields];
						if constexpr(Grad) {
							partial[1] += w*row[s*fields + 1];
							partial[2] += w*row[s*fields + 2];
							partial[3] += w*row[s*fields + 3];
						}
					}
					for(int f = 0; f < fields; f++) plane[f] += weights[1][q]*partial[f];
				}
				for(int f = 0; f < fields; f++) acc[f] += weights[0][p]*plane[f];
			}
		}
		g0 = acc[0];
		for(int j = 0; j < D; j++) grad0[j] = acc[1 + j];
	}

	// Deterministic sample of the octant (a scrambled Weyl sequence plus the
	// faces a_j = 1/2 and a_j = 0).
	double measure_table_error() const {
		double worst = 0.0;
		constexpr int samples = 400;
		for(int s = 0; s < samples; s++){
			vec<D> a;
			for(int j = 0; j < D; j++){
				double golden = 0.6180339887498949*(j + 1) + 0.7548776662466927*(j + 2);
				a[j] = 0.5*(s*golden - std::floor(s*golden));
				if(s % 7 == 0 && j == s % D) a[j] = 0.5;
				if(s % 11 == 0 && j == (s + 1) % D) a[j] = 0.0;
			}
			double t0;
			vec<D> tg;
			interpolate<true, true>(a, t0, tg);
			double e0;
			vec<D> eg;
			ewald_remainder<true, true>(a, e0, eg);
			worst = std::max(worst, std::fabs(t0 - e0));
			for(int j = 0; j < D; j++) worst = std::max(worst, std::fabs(tg[j] - eg[j]));
		}
		return worst;
	}

	template <typename T>
	static void write_le(std::ostream & out, T value) {
		static_assert(std::endian::native == std::endian::little, "table I/O assumes a little-endian host");
		out.write(reinterpret_cast<char const *>(&value), sizeof(T));
	}

	template <typename T>
	static T read_le(std::istream & in) {
		T value{};
		in.read(reinterpret_cast<char *>(&value), sizeof(T));
		return value;
	}
};

}

#endif
