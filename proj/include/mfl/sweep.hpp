#ifndef MFL_SWEEP_HPP
#define MFL_SWEEP_HPP

// Convergence sweeps over (N, ε_N, seed) cells: configuration, execution on
// a worker pool with in-order emission, rate fits and Grönwall envelopes.

#include <mfl/errors.hpp>
#include <mfl/fit.hpp>
#include <mfl/flows.hpp>
#include <mfl/green_kernel.hpp>
#include <mfl/modulated_energy.hpp>
#include <mfl/nbody.hpp>
#include <mfl/sampling.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace mfl {

using json = nlohmann::ordered_json;

struct gronwall_constants {
	double C = 0.0;
	double B = 0.0;
};

struct sweep_config {
	regime_kind regime = regime_kind::quasineutral;
	int dimension = 2;
	flow_family flow = flow_family::taylor_green_2d;
	std::vector<double> flow_params;
	std::vector<long> n_list;
	epsilon_rule epsilon;
	double t_end = 0.5;
	double observation_interval = 0.05;
	std::vector<std::uint64_t> seeds;
	sampling_config sampling;
	std::string output;
	// Optional time step override: one value, or one per N_list entry.
	std::vector<double> dt;
	std::optional<gronwall_constants> gronwall;
};

namespace detail {

inline void check_keys(json const & obj, std::string const & where, std::set<std::string> const & required,
											 std::set<std::string> const & optional = {}) {
	if(!obj.is_object()) throw config_error(where + " must be an object");
	for(auto const & [key, value] : obj.items()){
		if(!required.count(key) && !optional.count(key)) throw config_error("unknown key '" + key + "' in " + where);
	}
	for(auto const & key : required){
		if(!obj.contains(key)) throw config_error("missing key '" + key + "' in " + where);
	}
}

template <typename T>
T get_as(json const & obj, std::string const & key, std::string const & where) {
	try {
		return obj.at(key).get<T>();
	} catch(nlohmann::json::exception const &) {
		throw config_error("key '" + key + "' in " + where + " has the wrong type");
	}
}

inline double get_number(json const & obj, std::string const & key, std::string const & where) {
	if(!obj.at(key).is_number()) throw config_error("key '" + key + "' in " + where + " must be a number");
	double v = obj.at(key).get<double>();
	if(!std::isfinite(v)) throw config_error("key '" + key + "' in " + where + " must be finite");
	return v;
}

inline std::uint64_t get_seed(json const & v, std::string const & where) {
	if(!v.is_number_integer()) throw config_error(where + ": seeds must be integers");
	if(v.is_number_unsigned()) return v.get<std::uint64_t>();
	auto s = v.get<std::int64_t>();
	if(s < 0) throw config_error(where + ": seeds must be non-negative");
	return std::uint64_t(s);
}

}

inline json load_json_file(std::string const & path) {
	std::ifstream in(path);
	if(!in) throw config_error("cannot open config file '" + path + "'");
	try {
		return json::parse(in);
	} catch(nlohmann::json::parse_error const & e) {
		throw config_error("config file '" + path + "' is not valid JSON: " + e.what());
	}
}

inline regime_kind parse_regime_kind(std::string const & s) {
	if(s == "quasineutral") return regime_kind::quasineutral;
	if(s == "gyrokinetic") return regime_kind::gyrokinetic;
	throw config_error("unknown regime '" + s + "'");
}

inline sampling_config parse_sampling(json const & j) {
	detail::check_keys(j, "sampling", {"density", "velocity_mode", "placement"}, {"eta"});
	sampling_config s;
	s.density = parse_density(detail::get_as<std::string>(j, "density", "sampling"));
	s.velocity = parse_velocity_mode(detail::get_as<std::string>(j, "velocity_mode", "sampling"));
	s.placement = parse_placement(detail::get_as<std::string>(j, "placement", "sampling"));
	if(j.contains("eta")) s.eta = detail::get_number(j, "eta", "sampling");
	if(s.eta < 0.0) throw config_error("sampling.eta must be non-negative");
	if(s.velocity == velocity_mode::monokinetic_perturbed && !(s.eta > 0.0)) {
		throw config_error("monokinetic_perturbed needs a positive sampling.eta");
	}
	if(s.velocity == velocity_mode::monokinetic_exact && s.eta != 0.0) {
		throw config_error("sampling.eta must be zero for monokinetic_exact");
	}
	return s;
}

inline sweep_config parse_sweep_config(json const & j) {
	detail::check_keys(j, "config",
										 {"regime", "flow", "N_list", "epsilon_rule", "t_end", "observation_interval", "seeds", "sampling"},
										 {"output", "dt", "gronwall"});
	sweep_config c;

	auto const & r = j.at("regime");
	detail::check_keys(r, "regime", {"kind", "dimension"});
	c.regime = parse_regime_kind(detail::get_as<std::string>(r, "kind", "regime"));
	if(!r.at("dimension").is_number_integer()) throw config_error("regime.dimension must be an integer");
	c.dimension = r.at("dimension").get<int>();
	if(c.dimension != 2 && c.dimension != 3) throw config_error("regime.dimension must be 2 or 3");
	if(c.regime == regime_kind::gyrokinetic && c.dimension != 2) throw config_error("the gyrokinetic regime is 2D only");

	auto const & f = j.at("flow");
	detail::check_keys(f, "flow", {"family", "params"});
	c.flow = parse_flow_family(detail::get_as<std::string>(f, "family", "flow"));
	if(!f.at("params").is_array()) throw config_error("flow.params must be an array");
	for(auto const & p : f.at("params")){
		if(!p.is_number()) throw config_error("flow.params must contain numbers");
		c.flow_params.push_back(p.get<double>());
	}
	if(flow_dimension(c.flow) != c.dimension) {
		throw dimension_error("flow " + to_string(c.flow) + " does not match regime.dimension " + std::to_string(c.dimension));
	}

	if(!j.at("N_list").is_array() || j.at("N_list").empty()) throw config_error("N_list must be a non-empty array");
	for(auto const & n : j.at("N_list")){
		if(!n.is_number_integer() || n.get<long>() < 1) throw config_error("N_list entries must be positive integers");
		long v = n.get<long>();
		if(!c.n_list.empty() && v <= c.n_list.back()) throw config_error("N_list must be strictly increasing");
		c.n_list.push_back(v);
	}

	auto const & e = j.at("epsilon_rule");
	detail::check_keys(e, "epsilon_rule", {"c", "gamma"});
	c.epsilon.c = detail::get_number(e, "c", "epsilon_rule");
	c.epsilon.gamma = detail::get_number(e, "gamma", "epsilon_rule");
	if(!(c.epsilon.c > 0.0)) throw config_error("epsilon_rule.c must be positive");
	if(!(c.epsilon.gamma >= 0.0)) throw config_error("epsilon_rule.gamma must be non-negative");

	c.t_end = detail::get_number(j, "t_end", "config");
	c.observation_interval = detail::get_number(j, "observation_interval", "config");
	if(!(c.t_end >= 0.0)) throw config_error("t_end must be non-negative");
	if(!(c.observation_interval > 0.0)) throw config_error("observation_interval must be positive");
	double ratio = c.t_end/c.observation_interval;
	if(std::fabs(ratio - std::round(ratio)) > 1e-9*std::max(1.0, ratio)) {
		throw config_error("observation_interval must divide t_end");
	}

	if(!j.at("seeds").is_array() || j.at("seeds").empty()) throw config_error("seeds must be a non-empty array");
	for(auto const & s : j.at("seeds")) c.seeds.push_back(detail::get_seed(s, "seeds"));

	c.sampling = parse_sampling(j.at("sampling"));
	if(c.sampling.density == density_kind::vorticity && c.dimension != 2) {
		throw config_error("vorticity density needs a 2D flow");
	}

	if(j.contains("output")) c.output = detail::get_as<std::string>(j, "output", "config");
	if(j.contains("dt")) {
		auto const & d = j.at("dt");
		if(d.is_number()) {
			c.dt.push_back(detail::get_number(j, "dt", "config"));
		} else if(d.is_array()) {
			for(auto const & v : d){
				if(!v.is_number()) throw config_error("dt entries must be numbers");
				c.dt.push_back(v.get<double>());
			}
			if(c.dt.size() != c.n_list.size()) throw config_error("a dt array needs one entry per N_list entry");
		} else {
			throw config_error("dt must be a number or an array of numbers");
		}
		for(double v : c.dt) if(!(v > 0.0) || !std::isfinite(v)) throw config_error("dt must be positive and finite");
	}
	if(j.contains("gronwall")) {
		auto const & g = j.at("gronwall");
		detail::check_keys(g, "gronwall", {"C", "B"});
		gronwall_constants k{detail::get_number(g, "C", "gronwall"), detail::get_number(g, "B", "gronwall")};
		if(k.C < 0.0 || k.B < 0.0) throw config_error("gronwall constants must be non-negative");
		c.gronwall = k;
	}
	// Constructing the flow validates the parameter count.
	if(c.dimension == 2) flow_field<2>(c.flow, c.flow_params);
	else flow_field<3>(c.flow, c.flow_params);
	return c;
}

// Critical exponent 1/(d(d+1)) of ε_N N^{1/(d(d+1))} → ∞.
inline double critical_gamma(int dimension) {
	return 1.0/double(dimension*(dimension + 1));
}

inline bool in_regime(sweep_config const & c) {
	return c.epsilon.gamma < critical_gamma(c.dimension);
}

// Configured or default time step for N, reduced so that it divides the
// observation interval.
inline double cell_time_step(sweep_config const & c, long n) {
	double const epsilon = c.epsilon(n);
	double dt = default_time_step(regime{c.regime, epsilon});
	if(c.dt.size() == 1) dt = c.dt.front();
	else if(!c.dt.empty()) {
		auto it = std::find(c.n_list.begin(), c.n_list.end(), n);
		if(it == c.n_list.end()) throw config_error("N = " + std::to_string(n) + " is not in N_list");
		dt = c.dt[it - c.n_list.begin()];
	}
	double steps = std::ceil(c.observation_interval/dt*(1.0 - 1e-12));
	return c.observation_interval/std::max(1.0, steps);
}

struct sweep_record {
	std::string regime;
	int d = 2;
	long n = 0;
	double epsilon = 0.0;
	double gamma = 0.0;
	std::uint64_t seed = 0;
	double t = 0.0;
	double h1 = 0.0;
	double h2 = 0.0;
	double total = 0.0;
	double energy_total = 0.0;
	double min_dist = 0.0;
	std::vector<weakstar_gap> gaps;
	bool in_regime = true;
	bool valid = true;
	double wall_time = 0.0;
};

// One (N, seed) cell.
struct cell_result {
	long index = 0;
	long n = 0;
	std::uint64_t seed = 0;
	double epsilon = 0.0;
	double dt = 0.0;
	std::vector<sweep_record> records;
	// Max relative deviation of the conserved energy from its initial value.
	double energy_drift = 0.0;
	bool valid = true;
	std::string error_kind;
	std::string error_message;
	double wall_time = 0.0;

	bool failed() const { return !error_kind.empty(); }
};

inline constexpr double energy_drift_gate = 1e-4;

// Record as a flat JSON object; wall time is left out so that streams are
// reproducible.
inline json to_json(sweep_record const & r) {
	json j;
	j["regime"] = r.regime;
	j["d"] = r.d;
	j["N"] = r.n;
	j["epsilon"] = r.epsilon;
	j["gamma"] = r.gamma;
	j["seed"] = r.seed;
	j["t"] = r.t;
	j["h1"] = r.h1;
	j["h2"] = r.h2;
	j["total"] = r.total;
	j["E_total"] = r.energy_total;
	j["min_dist"] = r.min_dist;
	for(auto const & g : r.gaps) j["gap:" + g.id] = g.gap;
	j["in_regime"] = r.in_regime;
	j["valid"] = r.valid;
	return j;
}

inline json error_json(sweep_config const & c, cell_result const & cell) {
	json j;
	j["regime"] = to_string(c.regime);
	j["d"] = c.dimension;
	j["N"] = cell.n;
	j["epsilon"] = cell.epsilon;
	j["gamma"] = c.epsilon.gamma;
	j["seed"] = cell.seed;
	j["error"] = cell.error_kind;
	j["message"] = cell.error_message;
	j["in_regime"] = in_regime(c);
	j["valid"] = false;
	return j;
}

// Lines emitted for one cell: its records, or one error record.
inline std::vector<std::string> jsonl_lines(sweep_config const & c, cell_result const & cell) {
	std::vector<std::string> out;
	if(cell.failed()) {
		out.push_back(error_json(c, cell).dump());
		return out;
	}
	for(auto const & r : cell.records) out.push_back(to_json(r).dump());
	return out;
}

template <int D>
cell_result run_cell(sweep_config const & c, green_kernel<D> const & kernel, modulated_energy_model<D> const & model,
										 long n, std::uint64_t seed, long index) {
	auto start = std::chrono::steady_clock::now();
	auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
	cell_result cell;
	cell.index = index;
	cell.n = n;
	cell.seed = seed;
	cell.epsilon = c.epsilon(n);
	try {
		regime r{c.regime, cell.epsilon};
		sampling_config s = c.sampling;
		s.seed = seed;
		auto state = sample_initial<D>(s, model.flow(), n, r);
		cell.dt = cell_time_step(c, n);
		double e0 = 0.0;
		observer<D> obs = [&](observation<D> const & o) {
			auto rep = model.report(o.state, o.pair_potential, o.min_distance);
			sweep_record rec;
			rec.regime = to_string(c.regime);
			rec.d = D;
			rec.n = n;
			rec.epsilon = cell.epsilon;
			rec.gamma = c.epsilon.gamma;
			rec.seed = seed;
			rec.t = o.state.time;
			rec.h1 = rep.h1;
			rec.h2 = rep.h2;
			rec.total = rep.total;
			rec.energy_total = rep.energy_total;
			rec.min_dist = rep.min_distance;
			rec.gaps = std::move(rep.gaps);
			rec.in_regime = in_regime(c);
			rec.wall_time = elapsed();
			if(o.step == 0) e0 = rec.energy_total;
			double scale = std::max(std::fabs(e0), std::numeric_limits<double>::min());
			cell.energy_drift = std::max(cell.energy_drift, std::fabs(rec.energy_total - e0)/scale);
			cell.records.push_back(std::move(rec));
		};
		integrate<D>(state, make_coulomb_model(kernel, r), cell.dt, c.t_end, c.observation_interval, {obs});
		cell.valid = cell.energy_drift <= energy_drift_gate;
		for(auto & rec : cell.records) rec.valid = cell.valid;
	} catch(collision_error const & e) {
		cell.error_kind = "collision";
		cell.error_message = e.what();
	} catch(singular_configuration_error const & e) {
		cell.error_kind = "singular_configuration";
		cell.error_message = e.what();
	} catch(numerical_error const & e) {
		cell.error_kind = "numerical";
		cell.error_message = e.what();
	} catch(config_error const & e) {
		cell.error_kind = "config";
		cell.error_message = e.what();
	} catch(std::exception const & e) {
		cell.error_kind = "internal";
		cell.error_message = e.what();
	}
	if(cell.failed()) {
		cell.valid = false;
		cell.records.clear();
	}
	cell.wall_time = elapsed();
	return cell;
}

struct sweep_result {
	std::vector<cell_result> cells;
	json kernel_info;
};

// Runs every (N, seed) cell with `workers` threads; `emit` is called once per
// cell, in cell order, from the calling thread.
template <int D>
sweep_result run_sweep_d(sweep_config const & c, int workers, std::function<void(cell_result const &)> const & emit) {
	if(workers < 1) throw config_error("workers must be at least 1");
	kernel_options opts;
	green_kernel<D> kernel(opts);
	flow_field<D> flow(c.flow, c.flow_params);
	modulated_energy_model<D> model(flow);

	struct task {
		long n;
		std::uint64_t seed;
	};
	std::vector<task> tasks;
	for(long n : c.n_list) for(auto s : c.seeds) tasks.push_back({n, s});

	std::vector<std::optional<cell_result>> done(tasks.size());
	std::mutex mutex;
	std::condition_variable ready;
	std::atomic<long> next{0};
	auto work = [&] {
		for(;;){
			long i = next.fetch_add(1);
			if(i >= long(tasks.size())) return;
			auto result = run_cell<D>(c, kernel, model, tasks[i].n, tasks[i].seed, i);
			{
				std::lock_guard lock(mutex);
				done[i] = std::move(result);
			}
			ready.notify_all();
		}
	};
	std::vector<std::thread> pool;
	for(int w = 0; w < std::min<long>(workers, long(tasks.size())); w++) pool.emplace_back(work);

	sweep_result out;
	for(std::size_t i = 0; i < tasks.size(); i++){
		std::unique_lock lock(mutex);
		ready.wait(lock, [&] { return done[i].has_value(); });
		cell_result cell = std::move(*done[i]);
		done[i].reset();
		lock.unlock();
		if(emit) emit(cell);
		out.cells.push_back(std::move(cell));
	}
	for(auto & t : pool) t.join();

	out.kernel_info = {
		{"dimension", D},
		{"tolerance", kernel.tolerance()},
		{"ewald_split", kernel.ewald_split()},
		{"real_cutoff", kernel.real_cutoff()},
		{"fourier_cutoff", kernel.fourier_cutoff()},
		{"table_resolution", kernel.table_resolution()},
		{"certified_error", kernel.certified_error()},
	};
	return out;
}

inline sweep_result run_sweep(sweep_config const & c, int workers, std::function<void(cell_result const &)> const & emit = {}) {
	if(c.dimension == 2) return run_sweep_d<2>(c, workers, emit);
	return run_sweep_d<3>(c, workers, emit);
}

// Named scalar of a record: h1, h2, total, E_total, min_dist or gap:<id>.
inline double record_quantity(sweep_record const & r, std::string const & quantity) {
	if(quantity == "h1") return r.h1;
	if(quantity == "h2") return r.h2;
	if(quantity == "total") return r.total;
	if(quantity == "E_total") return r.energy_total;
	if(quantity == "min_dist") return r.min_dist;
	if(quantity.rfind("gap:", 0) == 0) {
		for(auto const & g : r.gaps) if("gap:" + g.id == quantity) return g.gap;
	}
	throw config_error("unknown record quantity '" + quantity + "'");
}

struct rate_point {
	long n = 0;
	int seeds = 0;
	// Seed average of sup_t quantity, and its standard error.
	double mean_sup = 0.0;
	double stderr_sup = 0.0;
};

struct rate_fit {
	std::string quantity;
	std::vector<rate_point> points;
	power_law_fit fit;
	// Seed-averaged sup_t is strictly decreasing along N.
	bool strictly_decreasing = false;
};

// Seed-averaged sup_t of `quantity` per N over valid records.
inline std::vector<rate_point> seed_averaged_sup(std::vector<sweep_record> const & records, std::string const & quantity) {
	std::map<long, std::map<std::uint64_t, double>> sup;
	for(auto const & r : records){
		if(!r.valid) continue;
		double v = record_quantity(r, quantity);
		auto & cell = sup[r.n];
		auto it = cell.find(r.seed);
		if(it == cell.end()) cell.emplace(r.seed, v);
		else it->second = std::max(it->second, v);
	}
	std::vector<rate_point> out;
	for(auto const & [n, seeds] : sup){
		rate_point p;
		p.n = n;
		p.seeds = int(seeds.size());
		double s = 0.0, s2 = 0.0;
		for(auto const & [seed, v] : seeds){
			s += v;
			s2 += v*v;
		}
		p.mean_sup = s/p.seeds;
		p.stderr_sup = p.seeds > 1 ? std::sqrt(std::max(0.0, s2/p.seeds - p.mean_sup*p.mean_sup)/(p.seeds - 1)) : 0.0;
		out.push_back(p);
	}
	return out;
}

// Log-log slope of the seed-averaged sup_t quantity against N.
inline rate_fit fit_rate(std::vector<sweep_record> const & records, std::string const & quantity) {
	rate_fit r;
	r.quantity = quantity;
	r.points = seed_averaged_sup(records, quantity);
	if(r.points.size() < 3) {
		throw fit_error("rate fit needs valid cells at 3 distinct N, got " + std::to_string(r.points.size()));
	}
	std::vector<double> ns, ys;
	for(auto const & p : r.points){
		ns.push_back(double(p.n));
		ys.push_back(p.mean_sup);
	}
	r.fit = fit_power_law(ns, ys);
	r.strictly_decreasing = true;
	for(std::size_t i = 1; i < r.points.size(); i++){
		if(!(r.points[i].mean_sup < r.points[i - 1].mean_sup)) r.strictly_decreasing = false;
	}
	return r;
}

inline std::vector<sweep_record> all_records(sweep_result const & s) {
	std::vector<sweep_record> out;
	for(auto const & c : s.cells) out.insert(out.end(), c.records.begin(), c.records.end());
	return out;
}

struct envelope_result {
	bool pass = true;
	int violations = 0;
	// Largest total(t) - e^{Ct}(total(0) + tB) over the observations.
	double worst_excess = -std::numeric_limits<double>::infinity();
};

// total(t) ≤ e^{Ct}(total(0) + tB) at every observation of one cell.
// `series` holds (t, total) pairs with the initial time first.
inline envelope_result gronwall_envelope_check(std::vector<std::pair<double, double>> const & series, gronwall_constants k) {
	envelope_result r;
	if(series.empty()) return r;
	double const t0 = series.front().first;
	double const total0 = series.front().second;
	for(auto const & [t, total] : series){
		double s = t - t0;
		double bound = std::exp(k.C*s)*(total0 + s*k.B);
		double excess = total - bound;
		// Relative slack at the rounding level of the data.
		double slack = 1e-12*std::max({std::fabs(total), std::fabs(bound), 1e-300});
		r.worst_excess = std::max(r.worst_excess, excess);
		if(excess > slack) {
			r.pass = false;
			r.violations++;
		}
	}
	return r;
}

// (t, total) series per cell, keyed by (N, seed), valid cells only.
inline std::map<std::pair<long, std::uint64_t>, std::vector<std::pair<double, double>>>
total_series(std::vector<sweep_record> const & records) {
	std::map<std::pair<long, std::uint64_t>, std::vector<std::pair<double, double>>> out;
	for(auto const & r : records){
		if(r.valid) out[{r.n, r.seed}].emplace_back(r.t, r.total);
	}
	for(auto & [key, s] : out) std::sort(s.begin(), s.end());
	return out;
}

struct gronwall_calibration {
	gronwall_constants constants;
	// Safety factor applied to both fitted constants.
	double margin = 2.0;
	int cells = 0;
};

// Fits (C, B) on calibration cells: C is the largest exponential growth rate
// of total(t) + B-free part, B the smallest forcing that makes every
// calibration cell satisfy the envelope with that C. Both are then scaled by
// the margin.
inline gronwall_calibration calibrate_gronwall(std::vector<sweep_record> const & records, double margin = 2.0) {
	if(!(margin >= 1.0)) throw config_error("calibration margin must be at least 1");
	auto series = total_series(records);
	if(series.empty()) throw fit_error("no valid calibration cells");
	gronwall_calibration cal;
	cal.margin = margin;
	cal.cells = int(series.size());
	// Growth rate: least squares of log(total(t)/total(0)) on t, where both are positive.
	double C = 0.0;
	for(auto const & [key, s] : series){
		double total0 = s.front().second;
		if(!(total0 > 0.0)) continue;
		double stt = 0.0, sty = 0.0;
		for(auto const & [t, total] : s){
			double dt = t - s.front().first;
			if(dt <= 0.0 || !(total > 0.0)) continue;
			stt += dt*dt;
			sty += dt*std::log(total/total0);
		}
		if(stt > 0.0) C = std::max(C, sty/stt);
	}
	double B = 0.0;
	for(auto const & [key, s] : series){
		double t0 = s.front().first;
		double total0 = s.front().second;
		for(auto const & [t, total] : s){
			double dt = t - t0;
			if(dt <= 0.0) continue;
			B = std::max(B, (total*std::exp(-C*dt) - total0)/dt);
		}
	}
	cal.constants = {margin*C, margin*B};
	return cal;
}

// Writes metadata.json, records.jsonl (streamed) and summary.csv into the
// output directory; returns the result.
inline sweep_result run_sweep_to_directory(sweep_config const & c, int workers, json const & raw_config) {
	if(c.output.empty()) throw config_error("sweep needs an output directory");
	namespace fs = std::filesystem;
	fs::create_directories(c.output);
	std::ofstream jsonl(fs::path(c.output)/"records.jsonl", std::ios::binary | std::ios::trunc);
	if(!jsonl) throw config_error("cannot write to output directory '" + c.output + "'");
	auto result = run_sweep(c, workers, [&](cell_result const & cell) {
		for(auto const & line : jsonl_lines(c, cell)) jsonl << line << '\n';
		jsonl.flush();
	});

	std::vector<std::string> gap_ids;
	for(auto const & cell : result.cells){
		if(!cell.records.empty()) {
			for(auto const & g : cell.records.front().gaps) gap_ids.push_back(g.id);
			break;
		}
	}
	std::ofstream csv(fs::path(c.output)/"summary.csv", std::ios::binary | std::ios::trunc);
	csv << "regime,d,N,epsilon,gamma,seed,t,h1,h2,total,E_total,min_dist";
	for(auto const & id : gap_ids) csv << ",gap:" << id;
	csv << ",in_regime,valid,error,wall_time\n";
	csv.precision(17);
	for(auto const & cell : result.cells){
		if(cell.failed()) {
			csv << to_string(c.regime) << ',' << c.dimension << ',' << cell.n << ',' << cell.epsilon << ','
					<< c.epsilon.gamma << ',' << cell.seed << ",,,,,,";
			for(std::size_t g = 0; g < gap_ids.size(); g++) csv << ',';
			csv << ',' << (in_regime(c) ? 1 : 0) << ",0," << cell.error_kind << ',' << cell.wall_time << '\n';
			continue;
		}
		for(auto const & r : cell.records){
			csv << r.regime << ',' << r.d << ',' << r.n << ',' << r.epsilon << ',' << r.gamma << ',' << r.seed << ','
					<< r.t << ',' << r.h1 << ',' << r.h2 << ',' << r.total << ',' << r.energy_total << ',' << r.min_dist;
			for(auto const & g : r.gaps) csv << ',' << g.gap;
			csv << ',' << (r.in_regime ? 1 : 0) << ',' << (r.valid ? 1 : 0) << ",," << r.wall_time << '\n';
		}
	}

	json cells = json::array();
	for(auto const & cell : result.cells){
		cells.push_back({
			{"N", cell.n}, {"seed", cell.seed}, {"epsilon", cell.epsilon}, {"dt", cell.dt},
			{"energy_drift", cell.energy_drift}, {"valid", cell.valid},
			{"error", cell.error_kind}, {"wall_time", cell.wall_time},
		});
	}
	json meta = {
		{"config", raw_config},
		{"workers", workers},
		{"in_regime", in_regime(c)},
		{"critical_gamma", critical_gamma(c.dimension)},
		{"energy_drift_gate", energy_drift_gate},
		{"time_step_rule", !c.dt.empty() ? "configured dt, reduced to divide observation_interval"
														: (c.regime == regime_kind::quasineutral ? "eps/100, reduced to divide observation_interval"
																																		 : "2*pi*eps^2/64, reduced to divide observation_interval")},
		{"kernel", result.kernel_info},
		{"cells", cells},
	};
	std::ofstream(fs::path(c.output)/"metadata.json") << meta.dump(2) << '\n';
	return result;
}

}

#endif
