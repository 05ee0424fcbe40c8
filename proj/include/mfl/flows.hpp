#ifndef MFL_FLOWS_HPP
#define MFL_FLOWS_HPP

// Steady trigonometric solutions of the incompressible Euler equations on the
// unit torus, with closed forms for u, ∇u, the zero-mean pressure p and the
// corrector source 𝔘 = Σ_ij ∂_i u_j ∂_j u_i = -Δp. Phases use X = 2πx.
//
//   taylor_green_2d(A):      ψ = A/(2π) sin X sin Y,     ω = Δψ
//   perturbed_uniform_2d(a): ψ = -a/(8π²) cos X cos Y,   ω = 1 + Δψ = 1 + a cos X cos Y
//   beltrami_abc_3d(A,B,C):  u = (A sin Z + C cos Y, B sin X + A cos Z, C sin Y + B cos X)
//
// 2D velocities are u = ∇^⊥ψ = (-∂_y ψ, ∂_x ψ). The perturbed-uniform family
// carries vorticity of unit mass (Δψ = ω - 1), which makes it usable as the
// spatial density of the gyrokinetic limit; Taylor-Green keeps ω = Δψ.

#include <mfl/errors.hpp>
#include <mfl/torus.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace mfl {

class dimension_error : public config_error {
public:
	using config_error::config_error;
};

enum class flow_family {
	taylor_green_2d,
	perturbed_uniform_vorticity_2d,
	beltrami_abc_3d,
};

inline std::string to_string(flow_family f) {
	switch(f){
	case flow_family::taylor_green_2d: return "taylor_green_2d";
	case flow_family::perturbed_uniform_vorticity_2d: return "perturbed_uniform_vorticity_2d";
	case flow_family::beltrami_abc_3d: return "beltrami_abc_3d";
	}
	return "unknown";
}

inline flow_family parse_flow_family(std::string const & name) {
	if(name == "taylor_green_2d") return flow_family::taylor_green_2d;
	if(name == "perturbed_uniform_vorticity_2d") return flow_family::perturbed_uniform_vorticity_2d;
	if(name == "beltrami_abc_3d") return flow_family::beltrami_abc_3d;
	throw config_error("unknown flow family '" + name + "'");
}

inline int flow_dimension(flow_family f) {
	return f == flow_family::beltrami_abc_3d ? 3 : 2;
}

template <int D>
using mat = std::array<vec<D>, D>;

struct vorticity_stream {
	double omega;
	double psi;
};

template <int D>
class flow_field {
public:
	static constexpr int dimension = D;

	// Parameters: taylor_green_2d {A}, perturbed_uniform_vorticity_2d {a},
	// beltrami_abc_3d {A, B, C}.
	flow_field(flow_family family, std::vector<double> params)
		: family_(family), params_(std::move(params)) {
		if(flow_dimension(family_) != D) {
			throw dimension_error(to_string(family_) + " is not a " + std::to_string(D) + "-dimensional flow");
		}
		std::size_t expected = (family_ == flow_family::beltrami_abc_3d) ? 3 : 1;
		if(params_.size() != expected) {
			throw config_error(to_string(family_) + " takes " + std::to_string(expected) + " parameter(s)");
		}
		for(double p : params_) if(!std::isfinite(p)) throw config_error("flow parameters must be finite");
	}

	static flow_field taylor_green(double amplitude) {
		return flow_field(flow_family::taylor_green_2d, {amplitude});
	}

	static flow_field perturbed_uniform(double a) {
		return flow_field(flow_family::perturbed_uniform_vorticity_2d, {a});
	}

	static flow_field beltrami_abc(double A, double B, double C) {
		return flow_field(flow_family::beltrami_abc_3d, {A, B, C});
	}

	flow_family family() const { return family_; }
	std::vector<double> const & params() const { return params_; }
	std::string name() const { return to_string(family_); }

	// ∫ω over the torus: 1 for perturbed_uniform_vorticity_2d, 0 otherwise.
	double vorticity_mass() const {
		return family_ == flow_family::perturbed_uniform_vorticity_2d ? 1.0 : 0.0;
	}

	// Highest Fourier mode (per axis) appearing in p, 𝔘 and ω, which bounds
	// the grid size needed for exact trapezoidal quadrature of products.
	static constexpr int max_mode() { return 2; }

	vec<D> u(vec<D> const & x) const {
		auto [c, s] = phases(x);
		vec<D> v{};
		if constexpr(D == 2) {
			if(family_ == flow_family::taylor_green_2d) {
				double A = params_[0];
				v = {-A*s[0]*c[1], A*c[0]*s[1]};
			} else {
				double B = params_[0]/(4.0*pi);
				v = {-B*c[0]*s[1], B*s[0]*c[1]};
			}
		} else {
			double A = params_[0], B = params_[1], C = params_[2];
			v = {A*s[2] + C*c[1], B*s[0] + A*c[2], C*s[1] + B*c[0]};
		}
		return v;
	}

	// Jacobian J[i][j] = ∂_j u_i.
	mat<D> grad_u(vec<D> const & x) const {
		auto [c, s] = phases(x);
		mat<D> J{};
		if constexpr(D == 2) {
			if(family_ == flow_family::taylor_green_2d) {
				double k = 2.0*pi*params_[0];
				J[0] = {-k*c[0]*c[1], k*s[0]*s[1]};
				J[1] = {-k*s[0]*s[1], k*c[0]*c[1]};
			} else {
				double k = 2.0*pi*params_[0]/(4.0*pi);
				J[0] = {k*s[0]*s[1], -k*c[0]*c[1]};
				J[1] = {k*c[0]*c[1], -k*s[0]*s[1]};
			}
		} else {
			double A = 2.0*pi*params_[0], B = 2.0*pi*params_[1], C = 2.0*pi*params_[2];
			J[0] = {0.0, -C*s[1], A*c[2]};
			J[1] = {B*c[0], 0.0, -A*s[2]};
			J[2] = {-B*s[0], C*c[1], 0.0};
		}
		return J;
	}

	// Zero-mean pressure, -Δp = 𝔘.
	double pressure(vec<D> const & x) const {
		if constexpr(D == 2) {
			double c2x = std::cos(4.0*pi*x[0]);
			double c2y = std::cos(4.0*pi*x[1]);
			return pressure_scale()*(c2x + c2y);
		} else {
			auto [c, s] = phases(x);
			double A = params_[0], B = params_[1], C = params_[2];
			return -(A*C*s[2]*c[1] + A*B*s[0]*c[2] + B*C*s[1]*c[0]);
		}
	}

	vec<D> grad_pressure(vec<D> const & x) const {
		if constexpr(D == 2) {
			double k = -4.0*pi*pressure_scale();
			return {k*std::sin(4.0*pi*x[0]), k*std::sin(4.0*pi*x[1])};
		} else {
			auto [c, s] = phases(x);
			double A = params_[0], B = params_[1], C = params_[2];
			double k = 2.0*pi;
			return {
				-k*(A*B*c[0]*c[2] - B*C*s[1]*s[0]),
				-k*(-A*C*s[2]*s[1] + B*C*c[1]*c[0]),
				-k*(A*C*c[2]*c[1] - A*B*s[0]*s[2])
			};
		}
	}

	// 𝔘 = div div(u ⊗ u), closed form.
	double corrector(vec<D> const & x) const {
		if constexpr(D == 2) {
			double c2x = std::cos(4.0*pi*x[0]);
			double c2y = std::cos(4.0*pi*x[1]);
			return 16.0*pi*pi*pressure_scale()*(c2x + c2y);
		} else {
			auto [c, s] = phases(x);
			double A = params_[0], B = params_[1], C = params_[2];
			return -8.0*pi*pi*(B*C*s[1]*c[0] + A*B*c[2]*s[0] + A*C*s[2]*c[1]);
		}
	}

	// 𝔘 via the double contraction Σ_ij J_ij J_ji of the Jacobian.
	double corrector_from_jacobian(vec<D> const & x) const {
		auto J = grad_u(x);
		double sum = 0.0;
		for(int i = 0; i < D; i++) for(int j = 0; j < D; j++) sum += J[i][j]*J[j][i];
		return sum;
	}

	vorticity_stream vorticity_and_stream(vec<D> const & x) const {
		if constexpr(D != 2) {
			throw dimension_error("vorticity and stream function are only defined for 2D flows");
		} else {
			auto [c, s] = phases(x);
			if(family_ == flow_family::taylor_green_2d) {
				double A = params_[0];
				double psi = A/(2.0*pi)*s[0]*s[1];
				return {-8.0*pi*pi*psi, psi};
			}
			double a = params_[0];
			return {1.0 + a*c[0]*c[1], -a/(8.0*pi*pi)*c[0]*c[1]};
		}
	}

	// Gradient of ω (2D only).
	vec<D> grad_vorticity(vec<D> const & x) const {
		if constexpr(D != 2) {
			throw dimension_error("vorticity is only defined for 2D flows");
		} else {
			auto [c, s] = phases(x);
			if(family_ == flow_family::taylor_green_2d) {
				double k = -8.0*pi*pi*params_[0];
				return {k*c[0]*s[1], k*s[0]*c[1]};
			}
			double k = -2.0*pi*params_[0];
			return {k*s[0]*c[1], k*c[0]*s[1]};
		}
	}

	// Smallest value of ω over the torus (2D only).
	double vorticity_min() const {
		if constexpr(D != 2) {
			throw dimension_error("vorticity is only defined for 2D flows");
		} else {
			if(family_ == flow_family::taylor_green_2d) return -4.0*pi*std::fabs(params_[0]);
			return 1.0 - std::fabs(params_[0]);
		}
	}

	double vorticity_max() const {
		if constexpr(D != 2) {
			throw dimension_error("vorticity is only defined for 2D flows");
		} else {
			if(family_ == flow_family::taylor_green_2d) return 4.0*pi*std::fabs(params_[0]);
			return 1.0 + std::fabs(params_[0]);
		}
	}

	// (g * ω)(x), the potential generated by the vorticity. With ψ = -g*ω
	// (zero-mean normalization) this is -ψ.
	double vorticity_potential(vec<D> const & x) const {
		return -vorticity_and_stream(x).psi;
	}

private:
	static constexpr double pi = std::numbers::pi;

	flow_family family_;
	std::vector<double> params_;

	double pressure_scale() const {
		if(family_ == flow_family::taylor_green_2d) return params_[0]*params_[0]/4.0;
		double B = params_[0]/(4.0*pi);
		return -B*B/4.0;
	}

	static std::pair<vec<D>, vec<D>> phases(vec<D> const & x) {
		vec<D> c, s;
		for(int j = 0; j < D; j++){
			c[j] = std::cos(2.0*pi*x[j]);
			s[j] = std::sin(2.0*pi*x[j]);
		}
		return {c, s};
	}
};

}

#endif
