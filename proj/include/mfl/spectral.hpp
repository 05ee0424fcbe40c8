#ifndef MFL_SPECTRAL_HPP
#define MFL_SPECTRAL_HPP

// Uniform-grid sampling and FFT-based operators on the unit torus (FFTW).
// Grids have M points per axis at x_j = j/M, stored row-major with the last
// axis fastest.

#include <mfl/errors.hpp>
#include <mfl/torus.hpp>

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <vector>

namespace mfl::spectral {

inline std::mutex & planner_mutex() {
	static std::mutex m;
	return m;
}

template <int D>
long grid_size(int M) {
	long n = 1;
	for(int j = 0; j < D; j++) n *= M;
	return n;
}

template <int D>
vec<D> grid_point(long index, int M) {
	vec<D> x;
	for(int j = D - 1; j >= 0; j--){
		x[j] = double(index % M)/M;
		index /= M;
	}
	return x;
}

// Signed wavenumber of FFT index j.
inline int wavenumber(int j, int M) {
	return (j <= M/2) ? j : j - M;
}

template <int D, typename F>
std::vector<double> sample(int M, F && f) {
	long n = grid_size<D>(M);
	std::vector<double> out(n);
	for(long i = 0; i < n; i++) out[i] = f(grid_point<D>(i, M));
	return out;
}

// Trapezoidal mean over the grid; exact for trigonometric polynomials of
// degree below M.
inline double mean(std::vector<double> const & samples) {
	double s = 0.0;
	for(double v : samples) s += v;
	return s/double(samples.size());
}

// Normalized Fourier coefficients f̂_k = M^{-D} Σ f(x_j) e^{-2πik·x_j}.
template <int D>
std::vector<std::complex<double>> forward(std::vector<double> const & samples, int M) {
	long n = grid_size<D>(M);
	if(long(samples.size()) != n) throw config_error("sample count does not match the grid");
	std::vector<std::complex<double>> data(samples.begin(), samples.end());
	int dims[D];
	for(int j = 0; j < D; j++) dims[j] = M;
	fftw_plan plan;
	{
		std::lock_guard lock(planner_mutex());
		plan = fftw_plan_dft(D, dims, reinterpret_cast<fftw_complex *>(data.data()),
												 reinterpret_cast<fftw_complex *>(data.data()), FFTW_FORWARD, FFTW_ESTIMATE);
	}
	fftw_execute(plan);
	{
		std::lock_guard lock(planner_mutex());
		fftw_destroy_plan(plan);
	}
	for(auto & c : data) c /= double(n);
	return data;
}

template <int D>
std::vector<double> backward_real(std::vector<std::complex<double>> coefficients, int M) {
	long n = grid_size<D>(M);
	int dims[D];
	for(int j = 0; j < D; j++) dims[j] = M;
	fftw_plan plan;
	{
		std::lock_guard lock(planner_mutex());
		plan = fftw_plan_dft(D, dims, reinterpret_cast<fftw_complex *>(coefficients.data()),
												 reinterpret_cast<fftw_complex *>(coefficients.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
	}
	fftw_execute(plan);
	{
		std::lock_guard lock(planner_mutex());
		fftw_destroy_plan(plan);
	}
	std::vector<double> out(n);
	for(long i = 0; i < n; i++) out[i] = coefficients[i].real();
	return out;
}

template <int D>
std::array<int, D> wavevector(long index, int M) {
	std::array<int, D> k;
	for(int j = D - 1; j >= 0; j--){
		k[j] = wavenumber(int(index % M), M);
		index /= M;
	}
	return k;
}

// Δf sampled on the grid.
template <int D>
std::vector<double> laplacian(std::vector<double> const & samples, int M) {
	auto coef = forward<D>(samples, M);
	for(long i = 0; i < long(coef.size()); i++){
		auto k = wavevector<D>(i, M);
		double k2 = 0.0;
		for(int j = 0; j < D; j++) k2 += double(k[j])*k[j];
		coef[i] *= -4.0*std::numbers::pi*std::numbers::pi*k2;
	}
	return backward_real<D>(std::move(coef), M);
}

// ∂f/∂x_axis sampled on the grid; the Nyquist mode is dropped.
template <int D>
std::vector<double> derivative(std::vector<double> const & samples, int M, int axis) {
	auto coef = forward<D>(samples, M);
	for(long i = 0; i < long(coef.size()); i++){
		auto k = wavevector<D>(i, M);
		int ka = k[axis];
		if(2*std::abs(ka) == M) ka = 0;
		coef[i] *= std::complex<double>(0.0, 2.0*std::numbers::pi*ka);
	}
	return backward_real<D>(std::move(coef), M);
}

// Σ_{k≠0} |f̂_k|² / (4π²|k|²) = ∬ g(x - y) f(x) f(y) dx dy for the zero-mean
// torus Green function g.
template <int D>
double coulomb_energy(std::vector<double> const & samples, int M) {
	auto coef = forward<D>(samples, M);
	double sum = 0.0;
	for(long i = 1; i < long(coef.size()); i++){
		auto k = wavevector<D>(i, M);
		double k2 = 0.0;
		for(int j = 0; j < D; j++) k2 += double(k[j])*k[j];
		sum += std::norm(coef[i])/(4.0*std::numbers::pi*std::numbers::pi*k2);
	}
	return sum;
}

}

#endif
