#ifndef MFL_MODULATED_ENERGY_HPP
#define MFL_MODULATED_ENERGY_HPP

// Modulated energy of a particle state against a steady Euler flow.
//
// With μ_N = (1/N) Σ δ_{x_i} and a reference measure ν of unit mass,
//
//   h1 = (1/2N) Σ |u(x_i) - w_i|²,    w_i = v_i (quasineutral) or v_i/ε (gyrokinetic)
//   h2 = (1/(2ε²)) ∬_{x≠y} g(x - y) d(μ_N - ν)(x) d(μ_N - ν)(y)
//
// where ν = 1 + ε²𝔘 (quasineutral) or ν = ω + ε²𝔘 (gyrokinetic). Since g has
// zero mean, g * 1 = 0, g * 𝔘 = p and g * ω = -ψ, so
//
//   h2 = (1/(2ε²N²)) Σ_{i≠j} g(x_i - x_j) - (1/(ε²N)) Σ_i (g*ω)(x_i)
//        - (1/N) Σ_i p(x_i) + (1/(2ε²)) ∬ g ν ν
//
// with the g*ω term absent in the quasineutral case. The last term is the
// Coulomb energy Σ_{k≠0} |ν̂_k|²/(4π²|k|²) of the analytic flow, evaluated
// once per flow on a grid that integrates the trigonometric data exactly.

#include <mfl/errors.hpp>
#include <mfl/flows.hpp>
#include <mfl/green_kernel.hpp>
#include <mfl/interactions.hpp>
#include <mfl/nbody.hpp>
#include <mfl/spectral.hpp>
#include <mfl/torus.hpp>

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace mfl {

struct weakstar_gap {
	std::string id;
	double gap;
};

struct modulated_energy_report {
	double t = 0.0;
	double h1 = 0.0;
	double h2 = 0.0;
	double total = 0.0;
	// Conserved energy and minimum pair distance at the same time.
	double energy_total = 0.0;
	double min_distance = 0.0;
	std::vector<weakstar_gap> gaps;
};

// Test function φ(x, w) on phase space; w is the (rescaled) velocity.
template <int D>
struct test_function {
	std::string id;
	std::function<double(vec<D> const &, vec<D> const &)> phi;
};

// Low trigonometric modes in x tensored with {1, w_j, |w|², 1/(1 + |w|²)}.
template <int D>
std::vector<test_function<D>> default_test_functions() {
	constexpr double two_pi = 2.0*std::numbers::pi;
	std::vector<std::pair<std::string, std::function<double(vec<D> const &)>>> spatial;
	spatial.emplace_back("1", [](vec<D> const &) { return 1.0; });
	for(int j = 0; j < D; j++){
		std::string axis = std::to_string(j + 1);
		spatial.emplace_back("cos" + axis, [j](vec<D> const & x) { return std::cos(two_pi*x[j]); });
		spatial.emplace_back("sin" + axis, [j](vec<D> const & x) { return std::sin(two_pi*x[j]); });
	}
	std::vector<std::pair<std::string, std::function<double(vec<D> const &)>>> velocity;
	velocity.emplace_back("1", [](vec<D> const &) { return 1.0; });
	for(int j = 0; j < D; j++){
		velocity.emplace_back("v" + std::to_string(j + 1), [j](vec<D> const & w) { return w[j]; });
	}
	velocity.emplace_back("v2", [](vec<D> const & w) { return dot(w, w); });
	velocity.emplace_back("cutoff", [](vec<D> const & w) { return 1.0/(1.0 + dot(w, w)); });

	std::vector<test_function<D>> out;
	for(auto const & [sid, a] : spatial){
		for(auto const & [vid, b] : velocity){
			out.push_back({sid + "*" + vid, [a, b](vec<D> const & x, vec<D> const & w) { return a(x)*b(w); }});
		}
	}
	return out;
}

// Continuum quantities of one flow, computed once and shared by all reports.
template <int D>
class modulated_energy_model {
public:
	// quadrature_grid: points per axis for the weak-⋆ reference integrals.
	explicit modulated_energy_model(flow_field<D> flow, std::vector<test_function<D>> tests = default_test_functions<D>(),
																	int quadrature_grid = (D == 2 ? 64 : 32))
		: flow_(std::move(flow)), tests_(std::move(tests)), quadrature_grid_(quadrature_grid) {
		if(quadrature_grid_ < 8) throw config_error("quadrature grid too coarse");
		auto U = spectral::sample<D>(spectral_grid, [this](vec<D> const & x) { return flow_.corrector(x); });
		auto p = spectral::sample<D>(spectral_grid, [this](vec<D> const & x) { return flow_.pressure(x); });
		std::vector<double> pU(p.size());
		for(std::size_t i = 0; i < p.size(); i++) pU[i] = p[i]*U[i];
		p_U_ = spectral::mean(pU);
		if constexpr(D == 2) {
			has_vorticity_ = true;
			auto w = spectral::sample<D>(spectral_grid, [this](vec<D> const & x) { return flow_.vorticity_and_stream(x).omega; });
			auto what = spectral::forward<D>(w, spectral_grid);
			auto Uhat = spectral::forward<D>(U, spectral_grid);
			for(long i = 1; i < long(what.size()); i++){
				auto k = spectral::wavevector<D>(i, spectral_grid);
				double k2 = 0.0;
				for(int j = 0; j < D; j++) k2 += double(k[j])*k[j];
				double w4 = 4.0*std::numbers::pi*std::numbers::pi*k2;
				omega_omega_ += std::norm(what[i])/w4;
				omega_U_ += (what[i]*std::conj(Uhat[i])).real()/w4;
			}
			omega_mass_ = spectral::mean(w);
		}
		reference_quasineutral_ = reference_integrals(false);
		if(has_vorticity_) reference_gyrokinetic_ = reference_integrals(true);
	}

	flow_field<D> const & flow() const { return flow_; }
	std::vector<test_function<D>> const & test_functions() const { return tests_; }

	// ∫ p 𝔘 dx = ∬ g 𝔘 𝔘.
	double pressure_corrector_integral() const { return p_U_; }

	// ∬ g(x - y) ν(x) ν(y) for ν = 1 + ε²𝔘.
	double continuum_energy_quasineutral(double epsilon) const {
		double e2 = epsilon*epsilon;
		return e2*e2*p_U_;
	}

	// ∬ g(x - y) ν(x) ν(y) for ν = ω + ε²𝔘.
	double continuum_energy_gyrokinetic(double epsilon) const {
		require_vorticity();
		double e2 = epsilon*epsilon;
		return omega_omega_ + 2.0*e2*omega_U_ + e2*e2*p_U_;
	}

	// h2 from a precomputed ordered pair sum Σ_{i≠j} g(x_i - x_j).
	double h2(particle_state<D> const & state, double pair_potential) const {
		double const n = double(state.size());
		double const eps = state.regime.epsilon;
		double const e2 = eps*eps;
		double p_sum = 0.0;
		double h_sum = 0.0;
		bool const gyro = state.regime.kind == regime_kind::gyrokinetic;
		if(gyro) require_vorticity();
		for(auto const & x : state.positions){
			p_sum += flow_.pressure(x);
			if constexpr(D == 2) {
				if(gyro) h_sum += flow_.vorticity_potential(x);
			}
		}
		double value = pair_potential/(2.0*e2*n*n) - p_sum/n;
		if(gyro) value += -h_sum/(e2*n) + continuum_energy_gyrokinetic(eps)/(2.0*e2);
		else value += continuum_energy_quasineutral(eps)/(2.0*e2);
		return value;
	}

	double h1(particle_state<D> const & state) const {
		double const scale = state.regime.kind == regime_kind::gyrokinetic ? 1.0/state.regime.epsilon : 1.0;
		double sum = 0.0;
		for(long i = 0; i < state.size(); i++){
			vec<D> d = flow_.u(state.positions[i]) - scale*state.velocities[i];
			sum += dot(d, d);
		}
		return sum/(2.0*double(state.size()));
	}

	// |(1/N) Σ φ(x_i, w_i) - ∫ φ(x, u(x)) dμ_ref| per test function, with
	// μ_ref = dx (quasineutral) or ω dx (gyrokinetic).
	std::vector<weakstar_gap> gaps(particle_state<D> const & state) const {
		bool const gyro = state.regime.kind == regime_kind::gyrokinetic;
		if(gyro) require_vorticity();
		double const scale = gyro ? 1.0/state.regime.epsilon : 1.0;
		auto const & reference = gyro ? reference_gyrokinetic_ : reference_quasineutral_;
		std::vector<weakstar_gap> out;
		out.reserve(tests_.size());
		for(std::size_t t = 0; t < tests_.size(); t++){
			double sum = 0.0;
			for(long i = 0; i < state.size(); i++) sum += tests_[t].phi(state.positions[i], scale*state.velocities[i]);
			out.push_back({tests_[t].id, std::fabs(sum/double(state.size()) - reference[t])});
		}
		return out;
	}

	// Full report from a precomputed pair sum (used by observers).
	modulated_energy_report report(particle_state<D> const & state, double pair_potential, double min_distance) const {
		check_regime(state);
		modulated_energy_report r;
		r.t = state.time;
		r.h1 = h1(state);
		r.h2 = h2(state, pair_potential);
		r.total = r.h1 + r.h2;
		auto e = energy_from_pair_sums(state, pair_potential, min_distance);
		r.energy_total = e.total;
		r.min_distance = min_distance;
		r.gaps = gaps(state);
		if(!std::isfinite(r.h1) || !std::isfinite(r.h2) || !std::isfinite(r.energy_total)) {
			throw numerical_error("non-finite modulated energy at t = " + std::to_string(state.time));
		}
		return r;
	}

	modulated_energy_report report(particle_state<D> const & state, green_kernel<D> const & kernel) const {
		validate(state);
		if(state.size() == 0) throw config_error("empty particle state");
		auto sums = compute_pair_sums<D>(kernel, state.positions, true, false);
		return report(state, sums.potential, sums.min_distance);
	}

private:
	static constexpr int spectral_grid = 32;

	flow_field<D> flow_;
	std::vector<test_function<D>> tests_;
	int quadrature_grid_;
	double p_U_ = 0.0;
	bool has_vorticity_ = false;
	double omega_omega_ = 0.0;
	double omega_U_ = 0.0;
	double omega_mass_ = 0.0;
	std::vector<double> reference_quasineutral_;
	std::vector<double> reference_gyrokinetic_;

	void require_vorticity() const {
		if(!has_vorticity_) throw dimension_error("the gyrokinetic modulated energy needs a 2D flow with vorticity");
		if(std::fabs(omega_mass_ - 1.0) > 1e-12) {
			throw config_error(flow_.name() + " has vorticity of mass " + std::to_string(omega_mass_)
												 + "; the gyrokinetic reference measure needs unit mass");
		}
	}

	void check_regime(particle_state<D> const & state) const {
		if(state.regime.kind == regime_kind::gyrokinetic) require_vorticity();
	}

	std::vector<double> reference_integrals(bool weighted) const {
		long const n = spectral::grid_size<D>(quadrature_grid_);
		std::vector<double> sums(tests_.size(), 0.0);
		for(long i = 0; i < n; i++){
			vec<D> x = spectral::grid_point<D>(i, quadrature_grid_);
			vec<D> u = flow_.u(x);
			double weight = 1.0;
			if constexpr(D == 2) {
				if(weighted) weight = flow_.vorticity_and_stream(x).omega;
			}
			for(std::size_t t = 0; t < tests_.size(); t++) sums[t] += weight*tests_[t].phi(x, u);
		}
		for(auto & s : sums) s /= double(n);
		return sums;
	}
};

template <int D>
modulated_energy_report modulated_energy_quasineutral(particle_state<D> const & state, green_kernel<D> const & kernel,
																											flow_field<D> const & flow) {
	if(state.regime.kind != regime_kind::quasineutral) throw config_error("state is not in the quasineutral regime");
	return modulated_energy_model<D>(flow).report(state, kernel);
}

template <int D>
modulated_energy_report modulated_energy_gyrokinetic(particle_state<D> const & state, green_kernel<D> const & kernel,
																										 flow_field<D> const & flow) {
	if(state.regime.kind != regime_kind::gyrokinetic) throw config_error("state is not in the gyrokinetic regime");
	if constexpr(D != 2) {
		throw dimension_error("the gyrokinetic modulated energy is two-dimensional");
	} else {
		return modulated_energy_model<D>(flow).report(state, kernel);
	}
}

template <int D>
std::vector<weakstar_gap> weakstar_gaps(particle_state<D> const & state, flow_field<D> const & flow,
																				std::vector<test_function<D>> const & tests) {
	return modulated_energy_model<D>(flow, tests).gaps(state);
}

}

#endif
