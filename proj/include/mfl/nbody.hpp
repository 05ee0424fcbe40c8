#ifndef MFL_NBODY_HPP
#define MFL_NBODY_HPP

// Time integration of the two scaled Coulomb N-body systems on T^D:
//
//   quasineutral:  dx_i/dt = v_i,      dv_i/dt = -(1/(ε²N)) Σ_{j≠i} ∇g(x_i - x_j)
//   gyrokinetic:   ε dx_i/dt = v_i,    ε dv_i/dt = -(1/N) Σ_{j≠i} ∇g(x_i - x_j) + v_i^⊥/ε   (D = 2)
//
// The quasineutral system uses velocity Verlet. The gyrokinetic system uses a
// Boris-type splitting: half electric kick, the exact magnetic flow over dt
// (velocity rotation by dt/ε² together with the exact gyration arc for the
// position), half electric kick. Both schemes are symmetric and second order;
// with zero electric field the gyrokinetic step is exact.

#include <mfl/errors.hpp>
#include <mfl/green_kernel.hpp>
#include <mfl/interactions.hpp>
#include <mfl/torus.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace mfl {

enum class regime_kind { quasineutral, gyrokinetic };

inline std::string to_string(regime_kind r) {
	return r == regime_kind::quasineutral ? "quasineutral" : "gyrokinetic";
}

struct regime {
	regime_kind kind = regime_kind::quasineutral;
	double epsilon = 1.0;

	static regime quasineutral(double epsilon) { return {regime_kind::quasineutral, epsilon}; }
	static regime gyrokinetic(double epsilon) { return {regime_kind::gyrokinetic, epsilon}; }
};

inline constexpr double default_collision_floor = 1e-12;

// Default time steps: ε/100 resolves the plasma period 2πε of the
// quasineutral system; 2πε²/64 resolves the gyration period 2πε².
inline double default_time_step(regime r) {
	if(r.kind == regime_kind::quasineutral) return r.epsilon/100.0;
	return 2.0*std::numbers::pi*r.epsilon*r.epsilon/64.0;
}

template <int D>
struct particle_state {
	double time = 0.0;
	std::vector<vec<D>> positions;
	std::vector<vec<D>> velocities;
	mfl::regime regime;

	long size() const { return long(positions.size()); }
};

// Raised when a NaN or Inf shows up; carries the last finite state.
template <int D>
class numerical_failure : public numerical_error {
public:
	numerical_failure(std::string const & what, particle_state<D> snapshot)
		: numerical_error(what), snapshot_(std::move(snapshot)) {}

	particle_state<D> const & snapshot() const { return snapshot_; }

private:
	particle_state<D> snapshot_;
};

template <int D>
void validate(particle_state<D> const & state) {
	if(state.positions.size() != state.velocities.size()) {
		throw config_error("positions and velocities have different lengths");
	}
	if(!(state.regime.epsilon > 0.0) || !std::isfinite(state.regime.epsilon)) {
		throw config_error("epsilon must be positive and finite");
	}
	if(state.regime.kind == regime_kind::gyrokinetic && D != 2) {
		throw config_error("the gyrokinetic system is two-dimensional");
	}
}

// Coulomb field entering the velocity equation. For the quasineutral system
// it is the acceleration -(1/(ε²N)) Σ ∇g; for the gyrokinetic system it is
// the electric term -(1/N) Σ ∇g that appears next to v^⊥/ε.
template <int D>
class coulomb_field {
public:
	coulomb_field(green_kernel<D> const & kernel, mfl::regime r, double collision_floor = default_collision_floor)
		: kernel_(&kernel), regime_(r), floor_(collision_floor) {}

	// Writes the field into `field`; returns the pair sums (potential only when requested).
	pair_sums<D> operator()(std::vector<vec<D>> const & positions, std::vector<vec<D>> & field, bool want_potential) const {
		auto sums = compute_pair_sums<D>(*kernel_, positions, want_potential, true, floor_);
		double n = double(positions.size());
		double scale = (regime_.kind == regime_kind::quasineutral)
			? -1.0/(regime_.epsilon*regime_.epsilon*n)
			: -1.0/n;
		field.resize(positions.size());
		for(std::size_t i = 0; i < positions.size(); i++) field[i] = scale*sums.grad[i];
		return sums;
	}

	green_kernel<D> const & kernel() const { return *kernel_; }

private:
	green_kernel<D> const * kernel_;
	mfl::regime regime_;
	double floor_;
};

// Any callable with the signature of coulomb_field::operator(); used to plug
// in external fields in tests.
template <int D>
using field_model = std::function<pair_sums<D>(std::vector<vec<D>> const &, std::vector<vec<D>> &, bool)>;

// Stepper that keeps the field at the current positions between steps, so a
// step costs one field evaluation.
template <int D>
class stepper {
public:
	stepper(field_model<D> field, particle_state<D> state)
		: field_(std::move(field)), state_(std::move(state)) {
		validate(state_);
		for(auto & x : state_.positions) x = reduce<D>(x);
		last_ = field_(state_.positions, current_, false);
	}

	particle_state<D> const & state() const { return state_; }

	// Pair sums from the most recent field evaluation (at the current positions).
	pair_sums<D> const & last_pair_sums() const { return last_; }

	// Advances by dt (negative dt runs backwards). When want_potential is set
	// the pair potential at the new positions is computed in the same pass.
	void step(double dt, bool want_potential = false) {
		if(dt == 0.0 || !std::isfinite(dt)) throw config_error("time step must be finite and non-zero");
		if(state_.regime.kind == regime_kind::quasineutral) step_verlet(dt, want_potential);
		else step_gyro(dt, want_potential);
		state_.time += dt;
	}

	// Recomputes the pair sums at the current positions with the potential.
	pair_sums<D> const & refresh(bool want_potential = true) {
		last_ = field_(state_.positions, current_, want_potential);
		return last_;
	}

private:
	field_model<D> field_;
	particle_state<D> state_;
	std::vector<vec<D>> current_;
	pair_sums<D> last_;

	void step_verlet(double dt, bool want_potential) {
		auto & x = state_.positions;
		auto & v = state_.velocities;
		for(std::size_t i = 0; i < x.size(); i++){
			v[i] += (0.5*dt)*current_[i];
			x[i] = reduce<D>(x[i] + dt*v[i]);
		}
		last_ = field_(x, current_, want_potential);
		for(std::size_t i = 0; i < x.size(); i++) v[i] += (0.5*dt)*current_[i];
	}

	void step_gyro(double dt, bool want_potential) {
		if constexpr(D == 2) {
			double const eps = state_.regime.epsilon;
			double const kick = 0.5*dt/eps;
			double const theta = dt/(eps*eps);
			double const c = std::cos(theta);
			double const s = std::sin(theta);
			double const one_minus_c = 2.0*std::sin(0.5*theta)*std::sin(0.5*theta);
			auto & x = state_.positions;
			auto & v = state_.velocities;
			for(std::size_t i = 0; i < x.size(); i++){
				vec<2> w = v[i] + kick*current_[i];
				// ∫_0^dt R(τ/ε²) w dτ / ε = ε [[s, -(1-c)], [1-c, s]] w
				vec<2> arc = {s*w[0] - one_minus_c*w[1], one_minus_c*w[0] + s*w[1]};
				x[i] = reduce<2>(x[i] + eps*arc);
				v[i] = {c*w[0] - s*w[1], s*w[0] + c*w[1]};
			}
			last_ = field_(x, current_, want_potential);
			for(std::size_t i = 0; i < x.size(); i++) v[i] += kick*current_[i];
		}
	}
};

template <int D>
field_model<D> make_coulomb_model(green_kernel<D> const & kernel, regime r, double floor = default_collision_floor) {
	coulomb_field<D> field(kernel, r, floor);
	return [field](std::vector<vec<D>> const & x, std::vector<vec<D>> & out, bool pot) { return field(x, out, pot); };
}

// One velocity-Verlet step of the quasineutral system.
template <int D>
particle_state<D> step_quasineutral(particle_state<D> const & state, green_kernel<D> const & kernel, double dt) {
	if(state.regime.kind != regime_kind::quasineutral) throw config_error("state is not in the quasineutral regime");
	if(!(dt > 0.0)) throw config_error("time step must be positive");
	stepper<D> s(make_coulomb_model(kernel, state.regime), state);
	s.step(dt);
	return s.state();
}

// One Boris-type step of the gyrokinetic system.
template <int D>
particle_state<D> step_gyrokinetic(particle_state<D> const & state, green_kernel<D> const & kernel, double dt) {
	if(state.regime.kind != regime_kind::gyrokinetic) throw config_error("state is not in the gyrokinetic regime");
	if(!(dt > 0.0)) throw config_error("time step must be positive");
	stepper<D> s(make_coulomb_model(kernel, state.regime), state);
	s.step(dt);
	return s.state();
}

struct energy_diagnostics {
	double kinetic = 0.0;
	double potential = 0.0;
	double total = 0.0;
	double min_pair_distance = 0.0;
};

// Energies from a precomputed ordered pair sum Σ_{i≠j} g.
template <int D>
energy_diagnostics energy_from_pair_sums(particle_state<D> const & state, double pair_potential, double min_distance) {
	double const n = double(state.size());
	double const eps = state.regime.epsilon;
	double v2 = 0.0;
	for(auto const & v : state.velocities) v2 += dot(v, v);
	energy_diagnostics e;
	e.kinetic = (state.regime.kind == regime_kind::quasineutral) ? v2/(2.0*n) : v2/(2.0*n*eps*eps);
	e.potential = pair_potential/(2.0*eps*eps*n*n);
	e.total = e.kinetic + e.potential;
	e.min_pair_distance = min_distance;
	return e;
}

template <int D>
energy_diagnostics compute_energy(particle_state<D> const & state, green_kernel<D> const & kernel) {
	validate(state);
	if(state.size() == 0) throw config_error("empty particle state");
	auto sums = compute_pair_sums<D>(kernel, state.positions, true, false);
	return energy_from_pair_sums(state, sums.potential, sums.min_distance);
}

// Passed to observers at each observation time.
template <int D>
struct observation {
	particle_state<D> const & state;
	long step;
	double pair_potential;   // Σ_{i≠j} g(x_i - x_j)
	double min_distance;
};

template <int D>
using observer = std::function<void(observation<D> const &)>;

struct integration_plan {
	double dt = 0.0;
	long steps = 0;
	long observe_every = 0;
};

// Checks that dt divides both the horizon and the observation interval.
inline integration_plan plan_integration(double t_start, double t_end, double dt, double observation_interval) {
	if(!(dt > 0.0)) throw config_error("time step must be positive");
	if(!(t_end >= t_start)) throw config_error("t_end must not precede the current time");
	if(!(observation_interval > 0.0)) throw config_error("observation interval must be positive");
	auto whole = [](double ratio, char const * what) {
		double r = std::round(ratio);
		if(std::fabs(ratio - r) > 1e-9*std::max(1.0, r)) {
			throw config_error(std::string("time step does not divide the ") + what);
		}
		return long(r);
	};
	integration_plan p;
	p.dt = dt;
	p.steps = whole((t_end - t_start)/dt, "integration horizon");
	p.observe_every = std::max(1L, whole(observation_interval/dt, "observation interval"));
	return p;
}

// Integrates to t_end, calling the observers at the start and every
// observation interval (and at t_end). Aborts with numerical_failure on
// non-finite values.
template <int D>
particle_state<D> integrate(particle_state<D> const & initial, field_model<D> field, double dt, double t_end,
														double observation_interval, std::vector<observer<D>> const & observers) {
	auto plan = plan_integration(initial.time, t_end, dt, observation_interval);
	stepper<D> s(std::move(field), initial);
	double const t0 = initial.time;

	auto notify = [&](long step) {
		auto const & sums = s.last_pair_sums();
		observation<D> obs{s.state(), step, sums.potential, sums.min_distance};
		for(auto const & o : observers) o(obs);
	};

	if(!observers.empty()) {
		s.refresh(true);
		notify(0);
	}
	for(long k = 1; k <= plan.steps; k++){
		bool observe = !observers.empty() && (k % plan.observe_every == 0 || k == plan.steps);
		particle_state<D> previous;
		previous = s.state();
		s.step(dt, observe);
		auto const & st = s.state();
		for(long i = 0; i < st.size(); i++){
			bool finite = true;
			for(int j = 0; j < D; j++) finite = finite && std::isfinite(st.positions[i][j]) && std::isfinite(st.velocities[i][j]);
			if(!finite) {
				std::ostringstream msg;
				msg << "non-finite state at step " << k << " (t = " << previous.time << " -> " << st.time
						<< "), particle " << i;
				throw numerical_failure<D>(msg.str(), std::move(previous));
			}
		}
		// exact time bookkeeping
		const_cast<particle_state<D> &>(s.state()).time = t0 + double(k)*dt;
		if(observe) notify(k);
	}
	return s.state();
}

template <int D>
particle_state<D> integrate(particle_state<D> const & initial, green_kernel<D> const & kernel, double dt, double t_end,
														double observation_interval, std::vector<observer<D>> const & observers) {
	return integrate<D>(initial, make_coulomb_model(kernel, initial.regime), dt, t_end, observation_interval, observers);
}

}

#endif
