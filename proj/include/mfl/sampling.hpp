#ifndef MFL_SAMPLING_HPP
#define MFL_SAMPLING_HPP

// Initial data for the particle systems and the Monte-Carlo estimate of the
// initial Coulomb discrepancy.

#include <mfl/errors.hpp>
#include <mfl/fit.hpp>
#include <mfl/flows.hpp>
#include <mfl/green_kernel.hpp>
#include <mfl/interactions.hpp>
#include <mfl/nbody.hpp>
#include <mfl/rng.hpp>
#include <mfl/torus.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace mfl {

enum class density_kind { uniform, vorticity };
enum class velocity_mode { monokinetic_exact, monokinetic_perturbed };
enum class placement_kind { iid, lattice, stratified };

inline std::string to_string(density_kind d) { return d == density_kind::uniform ? "uniform" : "vorticity"; }

inline std::string to_string(velocity_mode v) {
	return v == velocity_mode::monokinetic_exact ? "monokinetic_exact" : "monokinetic_perturbed";
}

inline std::string to_string(placement_kind p) {
	switch(p){
	case placement_kind::iid: return "iid";
	case placement_kind::lattice: return "lattice";
	case placement_kind::stratified: return "stratified";
	}
	return "unknown";
}

inline density_kind parse_density(std::string const & s) {
	if(s == "uniform") return density_kind::uniform;
	if(s == "vorticity") return density_kind::vorticity;
	throw config_error("unknown density '" + s + "'");
}

inline velocity_mode parse_velocity_mode(std::string const & s) {
	if(s == "monokinetic_exact") return velocity_mode::monokinetic_exact;
	if(s == "monokinetic_perturbed") return velocity_mode::monokinetic_perturbed;
	throw config_error("unknown velocity mode '" + s + "'");
}

inline placement_kind parse_placement(std::string const & s) {
	if(s == "iid") return placement_kind::iid;
	if(s == "lattice") return placement_kind::lattice;
	if(s == "stratified") return placement_kind::stratified;
	throw config_error("unknown placement '" + s + "'");
}

struct sampling_config {
	density_kind density = density_kind::uniform;
	velocity_mode velocity = velocity_mode::monokinetic_exact;
	// Radius of the velocity perturbation ball (monokinetic_perturbed only).
	double eta = 0.0;
	std::uint64_t seed = 0;
	placement_kind placement = placement_kind::iid;
};

namespace detail {

// Side m with m^D = n, or 0 when n is not a perfect power.
template <int D>
long lattice_side(long n) {
	long m = std::lround(std::pow(double(n), 1.0/D));
	for(long c = std::max(1L, m - 1); c <= m + 1; c++){
		long p = 1;
		for(int j = 0; j < D; j++) p *= c;
		if(p == n) return c;
	}
	return 0;
}

// Cell index of particle i in a lattice of side m, last axis fastest.
template <int D>
std::array<long, D> lattice_cell(long i, long m) {
	std::array<long, D> c;
	for(int j = D - 1; j >= 0; j--){
		c[j] = i % m;
		i /= m;
	}
	return c;
}

// Uniform point in the ball of radius r.
template <int D>
vec<D> ball_point(counter_stream & rng, double r) {
	std::normal_distribution<double> normal;
	vec<D> dir;
	double len2 = 0.0;
	do {
		for(int j = 0; j < D; j++) dir[j] = normal(rng);
		len2 = dot(dir, dir);
	} while(len2 == 0.0);
	double radius = r*std::pow(rng.uniform(), 1.0/D);
	return (radius/std::sqrt(len2))*dir;
}

}

// Positions by the configured placement, velocities u(x_i) (plus a uniform
// perturbation of radius η); gyrokinetic velocities are scaled by ε so that
// v_i/ε is the monokinetic profile.
template <int D>
particle_state<D> sample_initial(sampling_config const & config, flow_field<D> const & flow, long n, regime r) {
	if(n < 1) throw config_error("particle count must be positive");
	if(!(config.eta >= 0.0) || !std::isfinite(config.eta)) throw config_error("eta must be non-negative and finite");
	if(config.velocity == velocity_mode::monokinetic_exact && config.eta != 0.0) {
		throw config_error("eta must be zero for monokinetic_exact velocities");
	}
	if(!(r.epsilon > 0.0)) throw config_error("epsilon must be positive");
	if(r.kind == regime_kind::gyrokinetic && D != 2) throw config_error("the gyrokinetic system is two-dimensional");

	double omega_max = 0.0;
	if(config.density == density_kind::vorticity) {
		if constexpr(D != 2) {
			throw dimension_error("vorticity density needs a 2D flow");
		} else {
			if(flow.vorticity_min() < 0.0) {
				throw config_error(flow.name() + " has negative vorticity; it is not a probability density");
			}
			if(std::fabs(flow.vorticity_mass() - 1.0) > 1e-12) {
				throw config_error(flow.name() + " vorticity does not have unit mass");
			}
			omega_max = flow.vorticity_max();
		}
		if(config.placement != placement_kind::iid) {
			throw config_error("vorticity density supports iid placement only");
		}
	}

	long m = 0;
	if(config.placement != placement_kind::iid) {
		m = detail::lattice_side<D>(n);
		if(m == 0) throw config_error(to_string(config.placement) + " placement needs N = m^" + std::to_string(D));
	}

	particle_state<D> state;
	state.regime = r;
	state.positions.resize(n);
	state.velocities.resize(n);
	for(long i = 0; i < n; i++){
		auto rng = make_stream(config.seed, rng_stream::position, std::uint64_t(i));
		vec<D> x;
		switch(config.placement){
		case placement_kind::iid:
			for(;;){
				for(int j = 0; j < D; j++) x[j] = rng.uniform() - 0.5;
				if(config.density == density_kind::uniform) break;
				if constexpr(D == 2) {
					if(rng.uniform()*omega_max < flow.vorticity_and_stream(x).omega) break;
				}
			}
			break;
		case placement_kind::lattice: {
			auto c = detail::lattice_cell<D>(i, m);
			for(int j = 0; j < D; j++) x[j] = (double(c[j]) + 0.5)/double(m) - 0.5;
			break;
		}
		case placement_kind::stratified: {
			auto c = detail::lattice_cell<D>(i, m);
			for(int j = 0; j < D; j++) x[j] = (double(c[j]) + rng.uniform())/double(m) - 0.5;
			break;
		}
		}
		x = reduce<D>(x);
		vec<D> v = flow.u(x);
		if(config.velocity == velocity_mode::monokinetic_perturbed && config.eta > 0.0) {
			auto vrng = make_stream(config.seed, rng_stream::velocity, std::uint64_t(i));
			v += detail::ball_point<D>(vrng, config.eta);
		}
		if(r.kind == regime_kind::gyrokinetic) v = r.epsilon*v;
		state.positions[i] = x;
		state.velocities[i] = v;
	}
	return state;
}

// ε_N = c N^{-γ}.
struct epsilon_rule {
	double c = 1.0;
	double gamma = 0.0;

	double operator()(long n) const { return c*std::pow(double(n), -gamma); }
};

struct h2_scaling_row {
	long n = 0;
	double epsilon = 0.0;
	int trials = 0;
	// Statistic s = (1/N²) Σ_{i≠j} g(x_i - x_j) = ε² · 2h2 for μ ≡ 1.
	double mean_abs = 0.0;
	double stderr_abs = 0.0;
	double mean_signed = 0.0;
	double stderr_signed = 0.0;
};

struct h2_scaling {
	int dimension = 0;
	placement_kind placement = placement_kind::iid;
	std::vector<h2_scaling_row> rows;
	power_law_fit fit;
	// Set for d = 2, where the rate carries logarithmic corrections.
	bool log_correction_warning = false;
};

// Trial seeds are derived from `seed` by trial index, so the same seed gives
// the same draws for every N.
inline std::uint64_t trial_seed(std::uint64_t seed, long trial) {
	return make_stream(seed, rng_stream::trial, std::uint64_t(trial))();
}

// Monte-Carlo mean of the ε-free Coulomb discrepancy s of N uniform points per
// N, and the log-log slope of mean |s| against N. Deterministic placements
// (lattice) give the same s for every trial.
template <int D>
h2_scaling estimate_initial_h2_scaling(green_kernel<D> const & kernel, epsilon_rule rule, std::vector<long> const & n_list,
																			 int trials, std::uint64_t seed, placement_kind placement = placement_kind::iid) {
	std::set<long> distinct(n_list.begin(), n_list.end());
	if(distinct.size() < 3) throw fit_error("the scaling fit needs at least 3 distinct N");
	if(trials < 2) throw config_error("at least 2 trials are needed for a standard error");
	auto flow = [] {
		if constexpr(D == 2) return flow_field<2>::taylor_green(0.0);
		else return flow_field<3>::beltrami_abc(0.0, 0.0, 0.0);
	}();
	h2_scaling out;
	out.dimension = D;
	out.placement = placement;
	out.log_correction_warning = (D == 2);
	std::vector<double> ns, ys;
	for(long n : n_list){
		h2_scaling_row row;
		row.n = n;
		row.epsilon = rule(n);
		row.trials = trials;
		double sa = 0.0, sa2 = 0.0, ss = 0.0, ss2 = 0.0;
		for(int t = 0; t < trials; t++){
			sampling_config cfg;
			cfg.seed = trial_seed(seed, t);
			cfg.placement = placement;
			auto state = sample_initial<D>(cfg, flow, n, regime::quasineutral(row.epsilon));
			double s = pairwise_potential_sum<D>(kernel, state.positions)/(double(n)*double(n));
			sa += std::fabs(s);
			sa2 += s*s;
			ss += s;
			ss2 += s*s;
		}
		double const k = double(trials);
		row.mean_abs = sa/k;
		row.mean_signed = ss/k;
		row.stderr_abs = std::sqrt(std::max(0.0, sa2/k - row.mean_abs*row.mean_abs)/(k - 1.0));
		row.stderr_signed = std::sqrt(std::max(0.0, ss2/k - row.mean_signed*row.mean_signed)/(k - 1.0));
		out.rows.push_back(row);
		ns.push_back(double(n));
		ys.push_back(row.mean_abs);
	}
	out.fit = fit_power_law(ns, ys);
	return out;
}

}

#endif
