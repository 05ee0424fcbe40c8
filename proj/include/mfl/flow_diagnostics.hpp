#ifndef MFL_FLOW_DIAGNOSTICS_HPP
#define MFL_FLOW_DIAGNOSTICS_HPP

#include <mfl/flows.hpp>
#include <mfl/spectral.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mfl {

// Max-norm residuals of a flow on an M^D grid. Derivatives of sampled fields
// are spectral, so they are exact up to roundoff for these trigonometric flows.
struct flow_check_report {
	std::string name;
	int dimension = 0;
	int grid = 0;
	// |u·∇u + ∇p|
	double steady_euler = 0.0;
	// |div u|, from the closed-form Jacobian and from spectral derivatives of u.
	double divergence = 0.0;
	double divergence_spectral = 0.0;
	// |-Δp - 𝔘| with Δ applied spectrally to sampled p.
	double poisson = 0.0;
	// |𝔘 - Σ J_ij J_ji|
	double corrector_identity = 0.0;
	// |closed-form ∇p - spectral ∇p| and |closed-form ∇u - spectral ∇u|.
	double pressure_gradient = 0.0;
	double velocity_gradient = 0.0;
	double pressure_mean = 0.0;
	double velocity_mean = 0.0;
	// 2D only: |∇^⊥ψ - u|, |Δψ - ω + ∫ω|, |u·∇ω|.
	std::optional<double> stream_function;
	std::optional<double> vorticity_laplacian;
	std::optional<double> vorticity_transport;
	std::optional<double> vorticity_mass;
	double seconds = 0.0;

	double max_residual() const {
		double r = std::max({steady_euler, divergence, divergence_spectral, poisson, corrector_identity,
			pressure_gradient, velocity_gradient, std::fabs(pressure_mean), velocity_mean});
		for(auto const & v : {stream_function, vorticity_laplacian, vorticity_transport}) if(v) r = std::max(r, *v);
		return r;
	}
};

template <int D>
flow_check_report flow_check(flow_field<D> const & flow, int M = 64) {
	auto start = std::chrono::steady_clock::now();
	flow_check_report r;
	r.name = flow.name();
	r.dimension = D;
	r.grid = M;
	long const n = spectral::grid_size<D>(M);

	auto p = spectral::sample<D>(M, [&](vec<D> const & x) { return flow.pressure(x); });
	auto lap_p = spectral::laplacian<D>(p, M);
	r.pressure_mean = spectral::mean(p);

	std::vector<std::vector<double>> u(D);
	for(int i = 0; i < D; i++){
		u[i] = spectral::sample<D>(M, [&](vec<D> const & x) { return flow.u(x)[i]; });
		r.velocity_mean = std::max(r.velocity_mean, std::fabs(spectral::mean(u[i])));
	}
	std::vector<std::vector<double>> dp(D);
	std::vector<std::vector<std::vector<double>>> du(D, std::vector<std::vector<double>>(D));
	for(int j = 0; j < D; j++){
		dp[j] = spectral::derivative<D>(p, M, j);
		for(int i = 0; i < D; i++) du[i][j] = spectral::derivative<D>(u[i], M, j);
	}

	for(long idx = 0; idx < n; idx++){
		auto x = spectral::grid_point<D>(idx, M);
		auto v = flow.u(x);
		auto J = flow.grad_u(x);
		auto gp = flow.grad_pressure(x);
		double U = flow.corrector(x);
		double div = 0.0, div_s = 0.0;
		for(int i = 0; i < D; i++){
			double adv = 0.0;
			for(int j = 0; j < D; j++){
				adv += v[j]*J[i][j];
				r.velocity_gradient = std::max(r.velocity_gradient, std::fabs(J[i][j] - du[i][j][idx]));
			}
			r.steady_euler = std::max(r.steady_euler, std::fabs(adv + gp[i]));
			r.pressure_gradient = std::max(r.pressure_gradient, std::fabs(gp[i] - dp[i][idx]));
			div += J[i][i];
			div_s += du[i][i][idx];
		}
		r.divergence = std::max(r.divergence, std::fabs(div));
		r.divergence_spectral = std::max(r.divergence_spectral, std::fabs(div_s));
		r.poisson = std::max(r.poisson, std::fabs(-lap_p[idx] - U));
		r.corrector_identity = std::max(r.corrector_identity, std::fabs(U - flow.corrector_from_jacobian(x)));
	}

	if constexpr(D == 2) {
		auto psi = spectral::sample<2>(M, [&](vec<2> const & x) { return flow.vorticity_and_stream(x).psi; });
		auto omega = spectral::sample<2>(M, [&](vec<2> const & x) { return flow.vorticity_and_stream(x).omega; });
		auto dpsi_x = spectral::derivative<2>(psi, M, 0);
		auto dpsi_y = spectral::derivative<2>(psi, M, 1);
		auto lap_psi = spectral::laplacian<2>(psi, M);
		double mass = spectral::mean(omega);
		double perp = 0.0, lap = 0.0, transport = 0.0;
		for(long idx = 0; idx < n; idx++){
			auto x = spectral::grid_point<2>(idx, M);
			auto v = flow.u(x);
			perp = std::max({perp, std::fabs(-dpsi_y[idx] - v[0]), std::fabs(dpsi_x[idx] - v[1])});
			lap = std::max(lap, std::fabs(lap_psi[idx] - (omega[idx] - mass)));
			transport = std::max(transport, std::fabs(dot(v, flow.grad_vorticity(x))));
		}
		r.stream_function = perp;
		r.vorticity_laplacian = lap;
		r.vorticity_transport = transport;
		r.vorticity_mass = mass;
	}
	r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
	return r;
}

}

#endif
