// Acceptance checks. Each criterion prints one line
//   <n> PASS|FAIL <name>: <measurements>
// Run with criterion numbers as arguments, or none for all of them.
// The exit status is non-zero when any selected criterion fails.

#include <mfl/flow_diagnostics.hpp>
#include <mfl/kernel_diagnostics.hpp>
#include <mfl/sweep.hpp>

#include <oracles/double_integral.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace mfl;

struct outcome {
	bool pass = false;
	std::string detail;
};

class stopwatch {
public:
	double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
	std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(char const * format, auto... args) {
	char buffer[512];
	std::snprintf(buffer, sizeof buffer, format, args...);
	return buffer;
}

sweep_config load_config(std::string const & name) {
	return parse_sweep_config(load_json_file(std::string(MFL_CONFIG_DIR) + "/" + name));
}

// 1: Ewald kernel against the Fourier oracle on 1000 random points, and the
// zero mean of g.
outcome kernel_correctness() {
	stopwatch clock;
	outcome o{true, ""};
	auto run = [&](auto const & kernel, int d) {
		auto oracle = compare_with_oracle(kernel, 1000);
		auto zero = zero_mean_residual(kernel, 256);
		bool ok = oracle.max_error_g <= 1e-8 && std::fabs(zero.extrapolated) <= 1e-7;
		o.pass = o.pass && ok;
		o.detail += fmt("d=%d oracle max|dg|=%.2e max|dgrad|=%.2e zero-mean=%.2e (midpoint %.2e); ", d,
			oracle.max_error_g, oracle.max_error_grad, zero.extrapolated, zero.raw);
	};
	run(green_kernel<2>(), 2);
	run(green_kernel<3>(), 3);
	double t = clock.seconds();
	o.pass = o.pass && t < 60.0;
	o.detail += fmt("runtime %.1f s", t);
	return o;
}

// 2: g minus its singular part is smooth near the origin.
outcome near_field() {
	auto r2 = near_field_smoothness(green_kernel<2>(), 200);
	auto r3 = near_field_smoothness(green_kernel<3>(), 200);
	outcome o;
	o.pass = r2.max_relative_disagreement <= 0.05 && r3.max_relative_disagreement <= 0.05;
	o.detail = fmt("max relative gap between difference gradients at h=1e-2 and 1e-3: d=2 %.2e, d=3 %.2e; "
		"sup|remainder| %.3f / %.3f", r2.max_relative_disagreement, r3.max_relative_disagreement,
		r2.max_abs_remainder, r3.max_abs_remainder);
	return o;
}

// 3: closed-form flows on a 64^d grid.
outcome flow_exactness() {
	stopwatch clock;
	outcome o{true, ""};
	auto run = [&](auto const & flow) {
		auto r = flow_check(flow, 64);
		double worst = std::max({r.steady_euler, r.divergence, r.divergence_spectral, r.poisson});
		o.pass = o.pass && worst <= 1e-10;
		o.detail += fmt("%s euler %.1e div %.1e poisson %.1e; ", r.name.c_str(), r.steady_euler,
			std::max(r.divergence, r.divergence_spectral), r.poisson);
	};
	run(flow_field<2>::taylor_green(1.0));
	run(flow_field<2>::perturbed_uniform(0.5));
	run(flow_field<3>::beltrami_abc(1.0, 1.0, 1.0));
	o.detail += fmt("runtime %.1f s", clock.seconds());
	return o;
}

// 4: energy conservation of the quasineutral dynamics.
// Lattice positions, velocities of a Taylor-Green flow of amplitude 0.1.
outcome energy_conservation() {
	stopwatch clock;
	green_kernel<2> kernel;
	double const eps = 0.5;
	sampling_config cfg;
	cfg.placement = placement_kind::lattice;
	auto s0 = sample_initial<2>(cfg, flow_field<2>::taylor_green(0.1), 256, regime::quasineutral(eps));
	auto drift = [&](double dt) {
		double e0 = 0.0, worst = 0.0, final = 0.0;
		observer<2> obs = [&](observation<2> const & ob) {
			double e = energy_from_pair_sums(ob.state, ob.pair_potential, ob.min_distance).total;
			if(ob.step == 0) e0 = e;
			final = std::fabs(e - e0)/std::fabs(e0);
			worst = std::max(worst, final);
		};
		integrate<2>(s0, kernel, dt, 1.0, dt, {obs});
		return std::pair{worst, final};
	};
	auto [d1, f1] = drift(eps/100.0);
	auto [d2, f2] = drift(eps/200.0);
	double ratio = d1/d2;
	double t = clock.seconds();
	outcome o;
	o.pass = d1 <= 1e-6 && ratio >= 3.5 && ratio <= 4.5 && t < 120.0;
	o.detail = fmt("max relative drift %.3e at dt=eps/100 (gate 1e-6; %.3e at t=1), %.3e at dt/2, ratio %.2f; "
		"runtime %.1f s", d1, f1, d2, ratio, t);
	return o;
}

// 5: free gyration of one particle.
outcome gyration() {
	green_kernel<2> kernel;
	double const eps = 0.1;
	double const period = 2.0*std::numbers::pi*eps*eps;
	double const dt = period/64.0;
	particle_state<2> s;
	s.regime = regime::gyrokinetic(eps);
	s.positions = {vec<2>{0.0, 0.0}};
	// |u| = 2, so v = ε u has |v| = 0.2 and the gyroradius is ε²|u| = 0.02.
	s.velocities = {vec<2>{0.2, 0.0}};
	stepper<2> st(make_coulomb_model(kernel, s.regime), s);
	std::vector<vec<2>> orbit;
	double angle = 0.0;
	double speed_error = 0.0;
	double const speed0 = norm(s.velocities[0]);
	vec<2> previous = s.velocities[0];
	double period_estimate = 0.0;
	for(int k = 1; k <= 10000; k++){
		st.step(dt);
		auto const & v = st.state().velocities[0];
		speed_error = std::max(speed_error, std::fabs(norm(v) - speed0)/speed0);
		angle += std::atan2(previous[0]*v[1] - previous[1]*v[0], dot(previous, v));
		previous = v;
		if(k <= 64) orbit.push_back(torus_difference<2>(st.state().positions[0], s.positions[0]));
		if(k == 64) period_estimate = 2.0*std::numbers::pi*(k*dt)/angle;
	}
	vec<2> centre{};
	for(auto const & x : orbit) centre += (1.0/double(orbit.size()))*x;
	double radius_error = 0.0;
	for(auto const & x : orbit) radius_error = std::max(radius_error, std::fabs(norm(x - centre) - 0.02)/0.02);
	double period_error = std::fabs(period_estimate - period)/period;
	outcome o;
	o.pass = radius_error <= 1e-6 && period_error <= 1e-6 && speed_error <= 1e-12;
	o.detail = fmt("gyroradius rel err %.2e, period rel err %.2e, max | |v|-|v0| |/|v0| over 1e4 steps %.2e", radius_error,
		period_error, speed_error);
	return o;
}

// 6: expanded modulated energy against direct quadrature of the double integral.
outcome modulated_energy_oracle() {
	stopwatch clock;
	green_kernel<2> kernel;
	double const eps = 0.5;
	double worst = 0.0;
	std::string detail;
	for(auto kind : {regime_kind::quasineutral, regime_kind::gyrokinetic}){
		bool gyro = kind == regime_kind::gyrokinetic;
		auto flow = gyro ? flow_field<2>::perturbed_uniform(0.5) : flow_field<2>::taylor_green(1.0);
		modulated_energy_model<2> model(flow);
		std::function<double(vec<2> const &)> nu = [&](vec<2> const & x) {
			double base = gyro ? flow.vorticity_and_stream(x).omega : 1.0;
			return base + eps*eps*flow.corrector(x);
		};
		for(long n : {4L, 8L, 16L}){
			sampling_config cfg;
			cfg.seed = std::uint64_t(100 + n);
			cfg.density = gyro ? density_kind::vorticity : density_kind::uniform;
			cfg.velocity = velocity_mode::monokinetic_perturbed;
			cfg.eta = 0.3;
			auto s = sample_initial<2>(cfg, flow, n, regime{kind, eps});
			auto report = model.report(s, kernel);
			double direct = oracle::h2_direct<2>(kernel, s.positions, eps, nu, 256, 16);
			worst = std::max(worst, std::fabs(report.h2 - direct));
			detail += fmt("%s N=%ld h2 %.6f vs %.6f; ", to_string(kind).c_str(), n, report.h2, direct);
		}
	}
	double t = clock.seconds();
	outcome o;
	o.pass = worst <= 1e-6 && t < 300.0;
	o.detail = fmt("max |h2 - direct| %.2e; ", worst) + detail
		+ fmt("runtime %.1f s", t);
	return o;
}

std::string rate_detail(rate_fit const & r) {
	std::string s;
	for(auto const & p : r.points) s += fmt("N=%ld sup %.4g±%.2g (%d seeds); ", p.n, p.mean_sup, p.stderr_sup, p.seeds);
	return s + fmt("slope %.4f±%.4f", r.fit.slope, r.fit.slope_stderr);
}

struct sweep_summary {
	sweep_result result;
	int invalid = 0;
	int failed = 0;
	double seconds = 0.0;
};

sweep_summary run_config(sweep_config const & c) {
	stopwatch clock;
	sweep_summary s;
	s.result = run_sweep(c, 1);
	for(auto const & cell : s.result.cells){
		if(cell.failed()) s.failed++;
		else if(!cell.valid) s.invalid++;
	}
	s.seconds = clock.seconds();
	return s;
}

outcome trend(std::string const & config, double budget, double min_abs_slope) {
	auto c = load_config(config);
	auto s = run_config(c);
	outcome o;
	try {
		auto r = fit_rate(all_records(s.result), "total");
		bool all_n = r.points.size() == c.n_list.size();
		o.pass = all_n && r.strictly_decreasing && r.fit.slope < 0.0 && std::fabs(r.fit.slope) >= min_abs_slope
			&& s.seconds <= budget;
		o.detail = rate_detail(r);
	} catch(fit_error const & e) {
		o.pass = false;
		o.detail = e.what();
	}
	o.detail += fmt("; %d invalid and %d failed of %zu cells; runtime %.0f s", s.invalid, s.failed, s.result.cells.size(),
		s.seconds);
	return o;
}

// 7 and 8: seed-averaged sup_t of the modulated energy decreases along N.
outcome theorem1_trend() {
	return trend("theorem1.json", 1800.0, 0.05);
}

outcome theorem2_trend() {
	return trend("theorem2.json", 2700.0, 0.0);
}

// 9: initial discrepancy of iid points in 3D.
outcome initialization_rate() {
	stopwatch clock;
	green_kernel<3> kernel;
	std::vector<long> ns{64, 128, 256, 512, 1024};
	auto iid = estimate_initial_h2_scaling<3>(kernel, {1.0, 0.0}, ns, 64, 2024, placement_kind::iid);
	double t = clock.seconds();
	std::vector<long> cubes{64, 512, 1000};
	auto lattice = estimate_initial_h2_scaling<3>(kernel, {1.0, 0.0}, cubes, 2, 1, placement_kind::lattice);
	outcome o;
	o.pass = iid.fit.slope <= -0.10 && t <= 1200.0;
	o.detail = fmt("slope of mean |s| %.4f±%.4f (gate -0.10); ", iid.fit.slope, iid.fit.slope_stderr);
	for(auto const & r : iid.rows) o.detail += fmt("N=%ld %.3e; ", r.n, r.mean_abs);
	o.detail += "lattice signed s:";
	for(std::size_t i = 0; i < cubes.size(); i++){
		o.detail += fmt(" N=%ld %.2e", lattice.rows[i].n, lattice.rows[i].mean_signed);
	}
	o.detail += fmt(" vs iid signed at N=64 %.2e±%.1e; runtime %.0f s", iid.rows[0].mean_signed, iid.rows[0].stderr_signed, t);
	return o;
}

// 10: Grönwall constants fitted at N = 128 bound every N = 512 cell.
outcome gronwall_transfer() {
	auto c = load_config("theorem1.json");
	std::vector<double> dt;
	std::vector<long> ns;
	for(std::size_t i = 0; i < c.n_list.size(); i++){
		if(c.n_list[i] == 128 || c.n_list[i] == 512) {
			ns.push_back(c.n_list[i]);
			if(!c.dt.empty()) dt.push_back(c.dt.size() == 1 ? c.dt.front() : c.dt[i]);
		}
	}
	c.n_list = ns;
	c.dt = dt;
	auto s = run_config(c);
	auto records = all_records(s.result);
	std::vector<sweep_record> calibration, target;
	for(auto const & r : records) (r.n == 128 ? calibration : target).push_back(r);
	outcome o;
	try {
		auto cal = calibrate_gronwall(calibration);
		int cells = 0, violations = 0;
		for(auto const & [key, series] : total_series(target)){
			auto e = gronwall_envelope_check(series, cal.constants);
			cells++;
			violations += e.violations;
		}
		o.pass = cells > 0 && violations == 0;
		o.detail = fmt("C=%.4f B=%.4f from %d cells at N=128 (margin %.1f); %d violations over %d cells at N=512",
			cal.constants.C, cal.constants.B, cal.cells, cal.margin, violations, cells);
	} catch(fit_error const & e) {
		o.pass = false;
		o.detail = e.what();
	}
	o.detail += fmt("; runtime %.0f s", s.seconds);
	return o;
}

// 11: bit-identical JSONL on re-runs and across worker counts.
outcome determinism() {
	auto c = load_config("determinism.json");
	auto lines = [&](int workers) {
		std::string out;
		run_sweep(c, workers, [&](cell_result const & cell) {
			for(auto const & l : jsonl_lines(c, cell)) out += l + "\n";
		});
		return out;
	};
	auto a = lines(1);
	auto b = lines(1);
	auto w = lines(2);
	outcome o;
	o.pass = !a.empty() && a == b && a == w;
	o.detail = fmt("%zu bytes; re-run %s, 2 workers %s", a.size(), a == b ? "identical" : "different",
		a == w ? "identical" : "different");
	return o;
}

struct criterion {
	char const * name;
	outcome (*run)();
};

std::map<int, criterion> const criteria = {
	{1, {"kernel correctness", kernel_correctness}},
	{2, {"near-field decomposition", near_field}},
	{3, {"flow exactness", flow_exactness}},
	{4, {"energy conservation", energy_conservation}},
	{5, {"gyration analytics", gyration}},
	{6, {"modulated energy oracle", modulated_energy_oracle}},
	{7, {"quasineutral trend", theorem1_trend}},
	{8, {"gyrokinetic trend", theorem2_trend}},
	{9, {"initialization rate", initialization_rate}},
	{10, {"Gronwall envelope transfer", gronwall_transfer}},
	{11, {"determinism", determinism}},
};

}

int main(int argc, char ** argv) {
	std::vector<int> selected;
	for(int i = 1; i < argc; i++) selected.push_back(std::atoi(argv[i]));
	if(selected.empty()) for(auto const & [n, c] : criteria) selected.push_back(n);
	bool all = true;
	for(int n : selected){
		auto it = criteria.find(n);
		if(it == criteria.end()) {
			std::fprintf(stderr, "unknown criterion %d\n", n);
			return 2;
		}
		outcome o;
		try {
			o = it->second.run();
		} catch(std::exception const & e) {
			o = {false, std::string("exception: ") + e.what()};
		}
		std::printf("%d %s %s: %s\n", n, o.pass ? "PASS" : "FAIL", it->second.name, o.detail.c_str());
		std::fflush(stdout);
		all = all && o.pass;
	}
	return all ? 0 : 1;
}
