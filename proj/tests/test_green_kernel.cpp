#include "common.hpp"

#include <mfl/fourier_oracle.hpp>
#include <mfl/kernel_diagnostics.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace mfl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using mfl::testing::kernel2;
using mfl::testing::kernel3;

// Reference values from tests/oracles/compute_frozen.py (30-digit mpmath).
TEST_CASE("g matches frozen high-precision values in 2D", "[green_kernel]") {
	CHECK_THAT(kernel2().g(vec<2>{0.3, 0.4}), WithinAbs(-0.042226793020585912864, 1e-12));
	CHECK_THAT(kernel2().g(vec<2>{0.5, 0.0}), WithinAbs(-0.027579450019081449175, 1e-12));
	CHECK_THAT(kernel2().g(vec<2>{0.5, 0.5}), WithinAbs(-0.055158900038162898349, 1e-12));
	auto grad = kernel2().grad_g(vec<2>{0.3, 0.4});
	CHECK_THAT(grad[0], WithinAbs(-0.094701190807556839063, 1e-11));
	CHECK_THAT(grad[1], WithinAbs(-0.077611013402367432918, 1e-11));
}

TEST_CASE("g matches frozen high-precision values in 3D", "[green_kernel]") {
	CHECK_THAT(kernel3().g(vec<3>{0.01, 0.0, 0.0}), WithinRel(7.7319788642650377607, 1e-11));
	CHECK_THAT(kernel3().g(vec<3>{0.2, 0.3, 0.1}), WithinAbs(0.0089930419622483343167, 1e-11));
	CHECK_THAT(kernel3().remainder(vec<3>{0.01, 0.0, 0.0}), WithinAbs(-0.22576829032972902776, 1e-10));
}

TEST_CASE("Fourier oracle agrees with frozen values and the plain truncated series", "[green_kernel]") {
	CHECK_THAT(fourier_oracle<2>::g(vec<2>{0.3, 0.4}), WithinAbs(-0.042226793020585912864, 1e-14));
	CHECK_THAT(fourier_oracle<3>::g(vec<3>{0.2, 0.3, 0.1}), WithinAbs(0.0089930419622483343167, 1e-13));
	// The square truncation converges slowly; K = 256 is only good to about 5e-8 here.
	CHECK_THAT(fourier_oracle<2>::g_truncated(vec<2>{0.3, 0.4}, 256), WithinAbs(-0.042226793020585912864, 1e-7));
}

TEST_CASE("tabulated and direct Ewald evaluation agree", "[green_kernel]") {
	auto points2 = sample_points<2>(200, 11);
	for(auto const & x : points2){
		CHECK_THAT(kernel2().g(x), WithinAbs(kernel2().g_direct(x), 1e-10));
		auto a = kernel2().grad_g(x);
		auto b = kernel2().grad_g_direct(x);
		for(int j = 0; j < 2; j++) CHECK_THAT(a[j], WithinAbs(b[j], 1e-9));
	}
	for(auto const & x : sample_points<3>(100, 12)) CHECK_THAT(kernel3().g(x), WithinAbs(kernel3().g_direct(x), 1e-9));
	CHECK(kernel2().certified_error() <= 0.5*kernel2().tolerance());
	CHECK(kernel3().certified_error() <= 0.5*kernel3().tolerance());
}

TEST_CASE("g is periodic, even and invariant under axis permutations", "[green_kernel]") {
	vec<3> x{0.11, -0.27, 0.34};
	double const g = kernel3().g(x);
	CHECK_THAT(kernel3().g(vec<3>{x[0] + 1.0, x[1] - 2.0, x[2] + 3.0}), WithinAbs(g, 1e-13));
	CHECK_THAT(kernel3().g(-x), WithinAbs(g, 1e-15));
	CHECK_THAT(kernel3().g(vec<3>{x[2], x[0], x[1]}), WithinAbs(g, 1e-13));
	CHECK_THAT(kernel3().g(vec<3>{x[1], x[0], x[2]}), WithinAbs(g, 1e-13));
	auto grad = kernel3().grad_g(x);
	auto grad_minus = kernel3().grad_g(-x);
	for(int j = 0; j < 3; j++) CHECK_THAT(grad_minus[j], WithinAbs(-grad[j], 1e-15));
}

TEST_CASE("g solves -Δg = -1 away from the origin", "[green_kernel]") {
	double const h = 1e-3;
	for(auto const & x : {vec<2>{0.3, 0.2}, vec<2>{-0.45, 0.1}}){
		double lap = -4.0*kernel2().g(x);
		for(int j = 0; j < 2; j++){
			vec<2> p = x, m = x;
			p[j] += h;
			m[j] -= h;
			lap += kernel2().g(p) + kernel2().g(m);
		}
		CHECK_THAT(lap/(h*h), WithinAbs(1.0, 1e-4));
	}
}

TEST_CASE("zero-mean residual vanishes after Richardson extrapolation", "[green_kernel]") {
	auto r = zero_mean_residual(kernel2(), 128);
	// Midpoint rule error is g(1/2, 1/2)/M² exactly.
	CHECK_THAT(r.raw, WithinRel(kernel2().g(vec<2>{0.5, 0.5})/(128.0*128.0), 1e-6));
	CHECK(std::fabs(r.extrapolated) < 1e-12);
}

TEST_CASE("near-field remainder is smooth across difference scales", "[green_kernel]") {
	auto r2 = near_field_smoothness(kernel2(), 50);
	CHECK(r2.max_relative_disagreement < 0.05);
	auto r3 = near_field_smoothness(kernel3(), 30);
	CHECK(r3.max_relative_disagreement < 0.05);
}

TEST_CASE("the singular point and wrong-dimension points are rejected", "[green_kernel]") {
	CHECK_THROWS_AS(kernel2().g(vec<2>{0.0, 0.0}), singular_point_error);
	CHECK_THROWS_AS(kernel2().grad_g(vec<2>{1.0, -2.0}), singular_point_error);
	CHECK_THROWS_AS(kernel3().g(vec<3>{0.0, 0.0, 0.0}), singular_point_error);
	std::vector<double> p3{0.1, 0.2, 0.3};
	CHECK_THROWS_AS(kernel2().g(std::span<double const>(p3)), config_error);
	kernel_options bad;
	bad.tolerance = -1.0;
	CHECK_THROWS_AS(green_kernel<2>(bad), config_error);
}

TEST_CASE("kernel tables round-trip through the little-endian file format", "[green_kernel]") {
	namespace fs = std::filesystem;
	fs::create_directories(MFL_TEST_TMP);
	auto path = (fs::path(MFL_TEST_TMP)/"g2.table").string();
	kernel2().save_table(path);

	std::ifstream in(path, std::ios::binary);
	unsigned char header[16];
	in.read(reinterpret_cast<char *>(header), 16);
	REQUIRE(in);
	auto le32 = [&](int o) { return std::int32_t(header[o] | header[o + 1] << 8 | header[o + 2] << 16 | header[o + 3] << 24); };
	CHECK(le32(0) == 2);
	CHECK(le32(4) == kernel2().table_resolution());
	std::uint64_t bits = 0;
	for(int b = 7; b >= 0; b--) bits = bits << 8 | header[8 + b];
	double split;
	std::memcpy(&split, &bits, sizeof split);
	CHECK(split == kernel2().ewald_split());

	kernel_options opts;
	opts.table_resolution = 16;
	green_kernel<2> coarse(opts);
	coarse.load_table(path);
	CHECK(coarse.table_resolution() == kernel2().table_resolution());
	for(auto const & x : sample_points<2>(50, 3)) CHECK(coarse.g(x) == kernel2().g(x));

	green_kernel<3> other(kernel_options{.table_resolution = 16});
	CHECK_THROWS_AS(other.load_table(path), config_error);
}
