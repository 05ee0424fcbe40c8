#include <mfl/flow_diagnostics.hpp>
#include <mfl/kernel_diagnostics.hpp>
#include <mfl/sweep.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using mfl::json;

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_numerical = 2;

void print_json(json const & j) {
	std::cout << j.dump(2) << '\n';
}

json fit_json(mfl::power_law_fit const & f) {
	return {{"slope", f.slope}, {"slope_stderr", f.slope_stderr}, {"intercept", f.intercept},
		{"r_squared", f.r_squared}, {"points", f.points}};
}

json rate_json(mfl::rate_fit const & r) {
	json points = json::array();
	for(auto const & p : r.points){
		points.push_back({{"N", p.n}, {"seeds", p.seeds}, {"mean_sup", p.mean_sup}, {"stderr_sup", p.stderr_sup}});
	}
	return {{"quantity", r.quantity}, {"points", points}, {"fit", fit_json(r.fit)},
		{"strictly_decreasing", r.strictly_decreasing}};
}

// simulate: one (N, seed) cell of a sweep config, records streamed to stdout.
int cmd_simulate(std::string const & path) {
	json raw = mfl::load_json_file(path);
	auto c = mfl::parse_sweep_config(raw);
	if(c.n_list.size() != 1 || c.seeds.size() != 1) {
		throw mfl::config_error("simulate runs a single cell: N_list and seeds must have one entry each");
	}
	bool failed = false;
	auto emit = [&](mfl::cell_result const & cell) {
		for(auto const & line : mfl::jsonl_lines(c, cell)) std::cout << line << '\n';
		std::cout.flush();
		failed = failed || cell.failed();
	};
	if(c.output.empty()) {
		mfl::run_sweep(c, 1, emit);
	} else {
		auto result = mfl::run_sweep_to_directory(c, 1, raw);
		for(auto const & cell : result.cells) emit(cell);
	}
	if(failed) {
		std::cerr << "simulate: the run stopped on a numerical failure\n";
		return exit_numerical;
	}
	return exit_ok;
}

std::string default_output(std::string const & config_path) {
	return (std::filesystem::path("runs")/std::filesystem::path(config_path).stem()).string();
}

int cmd_sweep(std::string const & path, int workers) {
	json raw = mfl::load_json_file(path);
	auto c = mfl::parse_sweep_config(raw);
	if(c.output.empty()) c.output = default_output(path);
	auto result = mfl::run_sweep_to_directory(c, workers, raw);
	auto records = mfl::all_records(result);

	int code = exit_ok;
	json cells = json::array();
	int invalid = 0, errors = 0;
	for(auto const & cell : result.cells){
		if(cell.failed()) errors++;
		else if(!cell.valid) invalid++;
	}
	if(errors > 0) code = exit_numerical;

	json fits = {{"in_regime", mfl::in_regime(c)}, {"critical_gamma", mfl::critical_gamma(c.dimension)}};
	if(c.n_list.size() >= 3) {
		json rates = json::object();
		for(std::string q : {"total", "h1", "h2"}){
			try {
				rates[q] = rate_json(mfl::fit_rate(records, q));
			} catch(mfl::fit_error const & e) {
				rates[q] = {{"error", e.what()}};
				code = exit_numerical;
			}
		}
		fits["rates"] = rates;
	}

	auto series = mfl::total_series(records);
	auto check_all = [&](mfl::gronwall_constants k, long skip_n) {
		json out = json::array();
		for(auto const & [key, s] : series){
			if(key.first == skip_n) continue;
			auto r = mfl::gronwall_envelope_check(s, k);
			out.push_back({{"N", key.first}, {"seed", key.second}, {"pass", r.pass}, {"violations", r.violations},
				{"worst_excess", r.worst_excess}});
		}
		return out;
	};
	if(c.gronwall) {
		fits["gronwall"] = {{"C", c.gronwall->C}, {"B", c.gronwall->B}, {"cells", check_all(*c.gronwall, -1)}};
	}
	// Envelope transfer: calibrate on the smallest N, check the others.
	if(c.n_list.size() >= 2) {
		std::vector<mfl::sweep_record> calibration;
		for(auto const & r : records) if(r.n == c.n_list.front()) calibration.push_back(r);
		try {
			auto cal = mfl::calibrate_gronwall(calibration);
			fits["gronwall_transfer"] = {{"calibration_N", c.n_list.front()}, {"C", cal.constants.C},
				{"B", cal.constants.B}, {"margin", cal.margin}, {"calibration_cells", cal.cells},
				{"cells", check_all(cal.constants, c.n_list.front())}};
		} catch(mfl::fit_error const & e) {
			fits["gronwall_transfer"] = {{"error", e.what()}};
		}
	}
	std::ofstream(std::filesystem::path(c.output)/"fits.json") << fits.dump(2) << '\n';

	print_json({{"output", c.output}, {"cells", result.cells.size()}, {"invalid_cells", invalid},
		{"failed_cells", errors}, {"fits", fits}});
	return code;
}

struct init_stats_config {
	int dimension = 3;
	mfl::epsilon_rule epsilon;
	std::vector<long> n_list;
	int trials = 64;
	std::uint64_t seed = 0;
	mfl::placement_kind placement = mfl::placement_kind::iid;
	std::string output;
};

init_stats_config parse_init_stats(json const & j) {
	namespace d = mfl::detail;
	d::check_keys(j, "config", {"dimension", "epsilon_rule", "N_list", "trials", "seed"}, {"placement", "output"});
	init_stats_config c;
	if(!j.at("dimension").is_number_integer()) throw mfl::config_error("dimension must be an integer");
	c.dimension = j.at("dimension").get<int>();
	if(c.dimension != 2 && c.dimension != 3) throw mfl::config_error("dimension must be 2 or 3");
	auto const & e = j.at("epsilon_rule");
	d::check_keys(e, "epsilon_rule", {"c", "gamma"});
	c.epsilon.c = d::get_number(e, "c", "epsilon_rule");
	c.epsilon.gamma = d::get_number(e, "gamma", "epsilon_rule");
	if(!(c.epsilon.c > 0.0)) throw mfl::config_error("epsilon_rule.c must be positive");
	if(!j.at("N_list").is_array()) throw mfl::config_error("N_list must be an array");
	for(auto const & n : j.at("N_list")){
		if(!n.is_number_integer() || n.get<long>() < 2) throw mfl::config_error("N_list entries must be integers >= 2");
		c.n_list.push_back(n.get<long>());
	}
	if(!j.at("trials").is_number_integer()) throw mfl::config_error("trials must be an integer");
	c.trials = j.at("trials").get<int>();
	c.seed = d::get_seed(j.at("seed"), "seed");
	if(j.contains("placement")) c.placement = mfl::parse_placement(d::get_as<std::string>(j, "placement", "config"));
	if(j.contains("output")) c.output = d::get_as<std::string>(j, "output", "config");
	return c;
}

constexpr double init_rate_gate = -0.10;

int cmd_init_stats(std::string const & path) {
	auto c = parse_init_stats(mfl::load_json_file(path));
	mfl::h2_scaling s;
	if(c.dimension == 2) {
		mfl::green_kernel<2> kernel;
		s = mfl::estimate_initial_h2_scaling<2>(kernel, c.epsilon, c.n_list, c.trials, c.seed, c.placement);
	} else {
		mfl::green_kernel<3> kernel;
		s = mfl::estimate_initial_h2_scaling<3>(kernel, c.epsilon, c.n_list, c.trials, c.seed, c.placement);
	}
	json rows = json::array();
	for(auto const & r : s.rows){
		rows.push_back({{"N", r.n}, {"epsilon", r.epsilon}, {"trials", r.trials}, {"mean_stat", r.mean_abs},
			{"stderr", r.stderr_abs}, {"mean_signed", r.mean_signed}, {"stderr_signed", r.stderr_signed}});
	}
	json out = {{"dimension", s.dimension}, {"placement", mfl::to_string(s.placement)},
		{"statistic", "|(1/N^2) sum_{i!=j} g(x_i - x_j)|"}, {"rows", rows}, {"fit", fit_json(s.fit)}};
	if(s.log_correction_warning) {
		out["verdict"] = nullptr;
		out["warning"] = "d = 2: the rate carries logarithmic corrections; no pass/fail";
	} else {
		out["threshold"] = init_rate_gate;
		out["verdict"] = s.fit.slope <= init_rate_gate ? "pass" : "fail";
	}
	if(!c.output.empty()) {
		std::filesystem::create_directories(c.output);
		std::ofstream csv(std::filesystem::path(c.output)/"init_stats.csv");
		csv.precision(17);
		csv << "d,N,trials,mean_stat,stderr,slope\n";
		for(auto const & r : s.rows){
			csv << s.dimension << ',' << r.n << ',' << r.trials << ',' << r.mean_abs << ',' << r.stderr_abs << ','
					<< s.fit.slope << '\n';
		}
		std::ofstream(std::filesystem::path(c.output)/"init_stats.json") << out.dump(2) << '\n';
	}
	print_json(out);
	return exit_ok;
}

template <int D>
json kernel_check_json(std::optional<std::string> const & table) {
	mfl::green_kernel<D> kernel;
	if(table) kernel.save_table(*table);
	auto r = mfl::kernel_check(kernel);
	return {
		{"dimension", r.dimension},
		{"ewald_split", r.ewald_split},
		{"real_cutoff", r.real_cutoff},
		{"fourier_cutoff", r.fourier_cutoff},
		{"table_resolution", r.table_resolution},
		{"certified_error", r.certified_error},
		{"zero_mean", {{"grid", r.zero_mean.grid}, {"midpoint", r.zero_mean.raw},
			{"richardson", r.zero_mean.extrapolated}}},
		{"oracle", {{"points", r.oracle.points}, {"max_error_g", r.oracle.max_error_g},
			{"max_error_grad", r.oracle.max_error_grad}}},
		{"symmetry", {{"even_g", r.oracle.even_residual}, {"odd_grad", r.oracle.odd_residual},
			{"finite_difference_grad", r.oracle.finite_difference_residual}}},
		{"near_field", {{"points", r.near_field.points}, {"steps", {r.near_field.coarse_step, r.near_field.fine_step}},
			{"max_relative_disagreement", r.near_field.max_relative_disagreement},
			{"max_abs_remainder", r.near_field.max_abs_remainder}, {"max_gradient", r.near_field.max_gradient}}},
		{"seconds", r.seconds},
	};
}

int cmd_kernel_check(int d, std::optional<std::string> const & table) {
	print_json(d == 2 ? kernel_check_json<2>(table) : kernel_check_json<3>(table));
	return exit_ok;
}

std::vector<double> default_flow_params(mfl::flow_family f) {
	switch(f){
	case mfl::flow_family::taylor_green_2d: return {1.0};
	case mfl::flow_family::perturbed_uniform_vorticity_2d: return {0.5};
	case mfl::flow_family::beltrami_abc_3d: return {1.0, 1.0, 1.0};
	}
	return {};
}

template <int D>
json flow_check_json(mfl::flow_family f, std::vector<double> params, int grid) {
	mfl::flow_field<D> flow(f, std::move(params));
	auto r = mfl::flow_check(flow, grid);
	json j = {
		{"flow", r.name},
		{"params", flow.params()},
		{"dimension", r.dimension},
		{"grid", r.grid},
		{"steady_euler", r.steady_euler},
		{"divergence", r.divergence},
		{"divergence_spectral", r.divergence_spectral},
		{"poisson", r.poisson},
		{"corrector_identity", r.corrector_identity},
		{"pressure_gradient", r.pressure_gradient},
		{"velocity_gradient", r.velocity_gradient},
		{"pressure_mean", r.pressure_mean},
		{"velocity_mean", r.velocity_mean},
	};
	if(r.stream_function) {
		j["stream_function"] = *r.stream_function;
		j["vorticity_laplacian"] = *r.vorticity_laplacian;
		j["vorticity_transport"] = *r.vorticity_transport;
		j["vorticity_mass"] = *r.vorticity_mass;
	}
	j["max_residual"] = r.max_residual();
	j["seconds"] = r.seconds;
	return j;
}

int cmd_flow_check(std::string const & name, std::vector<double> params, int grid) {
	auto f = mfl::parse_flow_family(name);
	if(params.empty()) params = default_flow_params(f);
	if(grid < 8) throw mfl::config_error("grid must be at least 8");
	print_json(mfl::flow_dimension(f) == 2 ? flow_check_json<2>(f, params, grid) : flow_check_json<3>(f, params, grid));
	return exit_ok;
}

}

int main(int argc, char ** argv) {
	CLI::App app{"Mean-field particle simulations on the torus"};
	app.require_subcommand(1);

	std::string config;
	int workers = 1;
	int dimension = 2;
	std::optional<std::string> table;
	std::string flow_name;
	std::vector<double> flow_params;
	int grid = 64;

	auto * simulate = app.add_subcommand("simulate", "Integrate one cell and stream JSONL records to stdout");
	simulate->add_option("--config", config, "JSON config file")->required();

	auto * sweep = app.add_subcommand("sweep", "Run all (N, seed) cells of a config into an output directory");
	sweep->add_option("--config", config, "JSON config file")->required();
	sweep->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

	auto * init_stats = app.add_subcommand("init-stats", "Monte-Carlo scaling of the initial Coulomb discrepancy");
	init_stats->add_option("--config", config, "JSON config file")->required();

	auto * kernel_check = app.add_subcommand("kernel-check", "Self-check the torus Green function");
	kernel_check->add_option("-d,--dimension", dimension, "Dimension")->required()->check(CLI::IsMember({2, 3}));
	kernel_check->add_option("--save-table", table, "Write the interpolation table to this file");

	auto * flow_check = app.add_subcommand("flow-check", "Residuals of a reference flow on a grid");
	flow_check->add_option("--flow", flow_name, "Flow family")->required();
	flow_check->add_option("--params", flow_params, "Flow parameters")->delimiter(',');
	flow_check->add_option("--grid", grid, "Grid points per axis");

	try {
		app.parse(argc, argv);
	} catch(CLI::Success const & e) {
		return app.exit(e);
	} catch(CLI::ParseError const & e) {
		app.exit(e);
		return exit_config;
	}

	try {
		if(*simulate) return cmd_simulate(config);
		if(*sweep) return cmd_sweep(config, workers);
		if(*init_stats) return cmd_init_stats(config);
		if(*kernel_check) return cmd_kernel_check(dimension, table);
		if(*flow_check) return cmd_flow_check(flow_name, flow_params, grid);
	} catch(mfl::config_error const & e) {
		std::cerr << "config error: " << e.what() << '\n';
		return exit_config;
	} catch(mfl::numerical_error const & e) {
		std::cerr << "numerical failure: " << e.what() << '\n';
		return exit_numerical;
	} catch(std::domain_error const & e) {
		std::cerr << "numerical failure: " << e.what() << '\n';
		return exit_numerical;
	} catch(std::exception const & e) {
		std::cerr << "error: " << e.what() << '\n';
		return exit_numerical;
	}
	return exit_ok;
}
