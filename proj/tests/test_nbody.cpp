#include "common.hpp"

#include <mfl/nbody.hpp>
#include <mfl/sampling.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numbers>

using namespace mfl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using mfl::testing::kernel2;
using mfl::testing::kernel3;

namespace {

template <int D>
particle_state<D> jittered_state(long n, regime r, double amplitude, std::uint64_t seed) {
	sampling_config cfg;
	cfg.seed = seed;
	cfg.placement = placement_kind::stratified;
	if constexpr(D == 2) return sample_initial<2>(cfg, flow_field<2>::taylor_green(amplitude), n, r);
	else return sample_initial<3>(cfg, flow_field<3>::beltrami_abc(amplitude, amplitude, amplitude), n, r);
}

template <int D>
double max_energy_drift(particle_state<D> const & s0, green_kernel<D> const & kernel, double dt, double t_end) {
	double e0 = compute_energy(s0, kernel).total;
	double drift = 0.0;
	observer<D> obs = [&](observation<D> const & o) {
		double e = energy_from_pair_sums(o.state, o.pair_potential, o.min_distance).total;
		drift = std::max(drift, std::fabs(e - e0)/std::fabs(e0));
	};
	integrate<D>(s0, kernel, dt, t_end, dt, {obs});
	return drift;
}

// Constant external field, for drift tests.
field_model<2> constant_field(vec<2> f) {
	return [f](std::vector<vec<2>> const & x, std::vector<vec<2>> & out, bool) {
		out.assign(x.size(), f);
		pair_sums<2> s;
		s.grad.assign(x.size(), vec<2>{});
		s.min_distance = std::numeric_limits<double>::infinity();
		return s;
	};
}

}

TEST_CASE("quasineutral Verlet conserves momentum and energy to second order", "[nbody_dynamics]") {
	auto s0 = jittered_state<2>(64, regime::quasineutral(0.5), 0.2, 4);
	auto s = s0;
	for(int k = 0; k < 20; k++) s = step_quasineutral(s, kernel2(), 0.005);
	vec<2> p0{}, p1{};
	for(long i = 0; i < s0.size(); i++){
		p0 += s0.velocities[i];
		p1 += s.velocities[i];
	}
	for(int j = 0; j < 2; j++) CHECK_THAT(p1[j], WithinAbs(p0[j], 1e-12));

	double d1 = max_energy_drift(s0, kernel2(), 0.01, 0.2);
	double d2 = max_energy_drift(s0, kernel2(), 0.005, 0.2);
	CHECK(d1 < 1e-4);
	CHECK(d1/d2 > 3.5);
	CHECK(d1/d2 < 4.5);
}

TEST_CASE("3D quasineutral dynamics conserve energy", "[nbody_dynamics]") {
	auto s0 = jittered_state<3>(27, regime::quasineutral(0.5), 0.1, 9);
	CHECK(max_energy_drift(s0, kernel3(), 0.005, 0.1) < 1e-4);
}

TEST_CASE("both integrators are time reversible", "[nbody_dynamics]") {
	for(auto r : {regime::quasineutral(0.4), regime::gyrokinetic(0.3)}){
		auto s0 = jittered_state<2>(16, r, 0.5, 21);
		stepper<2> fwd(make_coulomb_model(kernel2(), r), s0);
		double const dt = 0.004;
		for(int k = 0; k < 50; k++) fwd.step(dt);
		stepper<2> back(make_coulomb_model(kernel2(), r), fwd.state());
		for(int k = 0; k < 50; k++) back.step(-dt);
		for(long i = 0; i < s0.size(); i++){
			auto d = torus_difference<2>(back.state().positions[i], s0.positions[i]);
			CHECK(norm(d) < 1e-11);
			CHECK(norm(back.state().velocities[i] - s0.velocities[i]) < 1e-11);
		}
	}
}

TEST_CASE("stepping commutes with relabeling particles", "[nbody_dynamics]") {
	auto s0 = jittered_state<2>(25, regime::quasineutral(0.5), 1.0, 2);
	auto p0 = s0;
	std::vector<long> perm(s0.size());
	for(long i = 0; i < s0.size(); i++) perm[i] = (7*i + 3) % s0.size();
	for(long i = 0; i < s0.size(); i++){
		p0.positions[i] = s0.positions[perm[i]];
		p0.velocities[i] = s0.velocities[perm[i]];
	}
	auto a = s0, b = p0;
	for(int k = 0; k < 10; k++){
		a = step_quasineutral(a, kernel2(), 0.005);
		b = step_quasineutral(b, kernel2(), 0.005);
	}
	for(long i = 0; i < s0.size(); i++){
		CHECK(norm(torus_difference<2>(b.positions[i], a.positions[perm[i]])) < 1e-13);
		CHECK(norm(b.velocities[i] - a.velocities[perm[i]]) < 1e-12);
	}
}

TEST_CASE("a free particle gyrates with radius ε|u| and period 2πε²", "[nbody_dynamics]") {
	double const eps = 0.1;
	particle_state<2> s;
	s.regime = regime::gyrokinetic(eps);
	s.positions = {vec<2>{0.1, 0.2}};
	s.velocities = {vec<2>{0.2, 0.0}};
	double const period = 2.0*std::numbers::pi*eps*eps;
	stepper<2> st(make_coulomb_model(kernel2(), s.regime), s);
	vec<2> centre{};
	std::vector<vec<2>> orbit;
	for(int k = 0; k < 64; k++){
		st.step(period/64.0);
		orbit.push_back(st.state().positions[0]);
	}
	for(auto const & x : orbit) centre += (1.0/64.0)*torus_difference<2>(x, s.positions[0]);
	for(auto const & x : orbit){
		CHECK_THAT(norm(torus_difference<2>(x, s.positions[0]) - centre), WithinRel(0.02, 1e-12));
	}
	CHECK(norm(torus_difference<2>(orbit.back(), s.positions[0])) < 1e-14);
	CHECK(norm(st.state().velocities[0] - s.velocities[0]) < 1e-14);
}

TEST_CASE("guiding centres drift at F^⊥ in a constant field", "[nbody_dynamics]") {
	double const eps = 0.05;
	vec<2> const F{0.3, -0.1};
	vec<2> const drift{-F[1], F[0]};
	double const period = 2.0*std::numbers::pi*eps*eps;
	// Mean velocity over a window of gyration periods, started at rest or on the drift.
	auto mean_velocity = [&](int steps_per_period, double periods, vec<2> v0) {
		particle_state<2> s;
		s.regime = regime::gyrokinetic(eps);
		s.positions = {vec<2>{0.0, 0.0}};
		s.velocities = {v0};
		double const dt = period/steps_per_period;
		double const t = periods*period;
		auto end = integrate<2>(s, constant_field(F), dt, t, t, {});
		return (1.0/t)*torus_difference<2>(end.positions[0], s.positions[0]);
	};
	vec<2> const on_drift = eps*drift;
	// Whole periods average the residual gyration out exactly.
	CHECK(norm(mean_velocity(64, 50.0, on_drift) - drift) < 1e-12);
	CHECK(norm(mean_velocity(64, 50.0, vec<2>{}) - drift) < 1e-12);
	// Half a period leaves a residual that is second order in θ = dt/ε².
	double e64 = norm(mean_velocity(64, 50.5, on_drift) - drift);
	double e128 = norm(mean_velocity(128, 50.5, on_drift) - drift);
	CHECK(e64 < 1e-5*norm(F));
	CHECK(e64/e128 > 3.5);
	CHECK(e64/e128 < 4.5);
}

TEST_CASE("integration schedules observations and validates time steps", "[nbody_dynamics]") {
	auto s0 = jittered_state<2>(16, regime::quasineutral(0.5), 1.0, 1);
	std::vector<double> times;
	observer<2> obs = [&](observation<2> const & o) { times.push_back(o.state.time); };
	auto end = integrate<2>(s0, kernel2(), 0.01, 0.1, 0.05, {obs});
	REQUIRE(times.size() == 3);
	CHECK(times[0] == 0.0);
	CHECK(times[1] == 0.05);
	CHECK(times[2] == 0.1);
	CHECK(end.time == 0.1);
	CHECK_THROWS_AS(integrate<2>(s0, kernel2(), 0.03, 0.1, 0.05, {}), config_error);
	CHECK_THROWS_AS(integrate<2>(s0, kernel2(), -0.01, 0.1, 0.05, {}), config_error);
	CHECK_THROWS_AS(step_gyrokinetic(s0, kernel2(), 0.01), config_error);
}

TEST_CASE("coincident particles abort with a singular configuration error", "[nbody_dynamics]") {
	particle_state<2> s;
	s.regime = regime::quasineutral(0.5);
	s.positions = {vec<2>{0.1, 0.1}, vec<2>{0.3, 0.3}, vec<2>{0.1, 0.1}};
	s.velocities.assign(3, vec<2>{});
	try {
		step_quasineutral(s, kernel2(), 0.01);
		FAIL("expected a collision");
	} catch(singular_configuration_error const & e) {
		CHECK(std::min(e.first(), e.second()) == 0);
		CHECK(std::max(e.first(), e.second()) == 2);
	}
}

TEST_CASE("non-finite states abort with the last finite snapshot", "[nbody_dynamics]") {
	particle_state<2> s;
	s.regime = regime::quasineutral(0.5);
	s.positions = {vec<2>{0.1, 0.1}};
	s.velocities = {vec<2>{}};
	int calls = 0;
	field_model<2> poisoned = [&](std::vector<vec<2>> const & x, std::vector<vec<2>> & out, bool) {
		double v = (++calls > 3) ? std::numeric_limits<double>::quiet_NaN() : 0.0;
		out.assign(x.size(), vec<2>{v, 0.0});
		pair_sums<2> p;
		p.grad.assign(x.size(), vec<2>{});
		return p;
	};
	try {
		integrate<2>(s, poisoned, 0.1, 1.0, 0.1, {});
		FAIL("expected a numerical failure");
	} catch(numerical_failure<2> const & e) {
		CHECK(std::isfinite(e.snapshot().velocities[0][0]));
		CHECK(e.snapshot().time > 0.0);
	}
}
