#ifndef MFL_FOURIER_ORACLE_HPP
#define MFL_FOURIER_ORACLE_HPP

// Reference values of the torus Green function straight from its Fourier
// series Σ_{k≠0} e^{2πik·x}/(4π²|k|²), independent of the Ewald evaluator.
//
// The sum over one axis is done in closed form,
//   Σ_n e^{2πint}/(n² + a²) = (π/a)(e^{-2πat} + e^{-2πa(1-t)})/(1 - e^{-2πa}),  0 ≤ t ≤ 1,
//   Σ_{n≠0} e^{2πint}/n²    = 2π²(t² - t + 1/6),
// leaving a sum over the remaining axes whose terms decay like
// e^{-2πa min(t, 1-t)}. The closed-form axis is the one with the largest
// |x_j|, and the remaining sum is truncated once the tail is below 1e-16.

#include <mfl/errors.hpp>
#include <mfl/torus.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mfl {

template <int D>
class fourier_oracle {
public:
	static_assert(D == 2 || D == 3, "the oracle is implemented for D = 2 and D = 3");

	// Plain truncation Σ_{0<|k|∞≤K}; converges slowly near the coordinate
	// planes and is kept for cross-checks only.
	static double g_truncated(vec<D> const & x, int K) {
		constexpr double pi = std::numbers::pi;
		double sum = 0.0;
		std::array<int, D> k;
		k.fill(-K);
		for(;;){
			long k2 = 0;
			double phase = 0.0;
			for(int j = 0; j < D; j++){
				k2 += long(k[j])*k[j];
				phase += k[j]*x[j];
			}
			if(k2 != 0) sum += std::cos(2.0*pi*phase)/(4.0*pi*pi*double(k2));
			int j = 0;
			while(j < D && ++k[j] > K){
				k[j] = -K;
				j++;
			}
			if(j == D) break;
		}
		return sum;
	}

	static double g(vec<D> const & x) {
		double value;
		vec<D> grad;
		evaluate(x, value, grad);
		return value;
	}

	static vec<D> grad_g(vec<D> const & x) {
		double value;
		vec<D> grad;
		evaluate(x, value, grad);
		return grad;
	}

	static void evaluate(vec<D> const & x, double & value, vec<D> & grad) {
		constexpr double pi = std::numbers::pi;
		vec<D> r = reduce<D>(x);
		int axis = 0;
		for(int j = 1; j < D; j++) if(std::fabs(r[j]) > std::fabs(r[axis])) axis = j;
		double const far = std::fabs(r[axis]);
		if(far == 0.0) throw singular_point_error("Green function evaluated at the singular point x = 0");
		// t in [0, 1)
		double t = r[axis] - std::floor(r[axis]);
		double const m_tail = std::max(1.0, 37.0/(2.0*pi*std::min(t, 1.0 - t)));
		int const M = int(std::ceil(m_tail));

		int others[D - 1];
		for(int j = 0, o = 0; j < D; j++) if(j != axis) others[o++] = j;

		double v = 0.0;
		double dt = 0.0;
		double dother[D - 1] = {};

		// row with all other wavenumbers zero
		v += (t*t - t + 1.0/6.0)/2.0;
		dt += (2.0*t - 1.0)/2.0;

		std::array<int, D - 1> m;
		m.fill(-M);
		for(;;){
			long a2 = 0;
			for(int o = 0; o < D - 1; o++) a2 += long(m[o])*m[o];
			if(a2 != 0) {
				double a = std::sqrt(double(a2));
				double e1 = std::exp(-2.0*pi*a*t);
				double e2 = std::exp(-2.0*pi*a*(1.0 - t));
				double denom = -std::expm1(-2.0*pi*a);
				double f = (e1 + e2)/(denom*4.0*pi*a);
				double df = -(e1 - e2)/(2.0*denom);
				double phase = 0.0;
				for(int o = 0; o < D - 1; o++) phase += m[o]*r[others[o]];
				double c = std::cos(2.0*pi*phase);
				double s = std::sin(2.0*pi*phase);
				v += c*f;
				dt += c*df;
				for(int o = 0; o < D - 1; o++) dother[o] += -2.0*pi*m[o]*s*f;
			}
			int o = 0;
			while(o < D - 1 && ++m[o] > M){
				m[o] = -M;
				o++;
			}
			if(o == D - 1) break;
		}
		value = v;
		grad[axis] = dt;
		for(int o = 0; o < D - 1; o++) grad[others[o]] = dother[o];
	}
};

}

#endif
