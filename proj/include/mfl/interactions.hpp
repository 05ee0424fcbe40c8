#ifndef MFL_INTERACTIONS_HPP
#define MFL_INTERACTIONS_HPP

// O(N²) pair sums over a particle configuration on the torus.
//
// The i < j triangle is cut into a fixed number of row blocks, each block
// accumulating into its own buffer; buffers are then reduced in block order.
// The floating-point result therefore does not depend on how many threads
// ran the blocks.

#include <mfl/errors.hpp>
#include <mfl/green_kernel.hpp>
#include <mfl/torus.hpp>

#include <algorithm>
#include <exception>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mfl {

// Pair distance below the collision floor during time stepping.
class collision_error : public singular_configuration_error {
public:
	using singular_configuration_error::singular_configuration_error;
};

template <int D>
struct pair_sums {
	// Σ_{i≠j} g(x_i - x_j) over ordered pairs.
	double potential = 0.0;
	// grad[i] = Σ_{j≠i} ∇g(x_i - x_j).
	std::vector<vec<D>> grad;
	// Smallest torus distance between two particles (+inf for N < 2).
	double min_distance = std::numeric_limits<double>::infinity();
};

namespace detail {

constexpr int pair_blocks = 16;

// Row boundaries splitting the triangle i < j < n into blocks of similar size.
inline std::vector<long> triangle_partition(long n, int blocks) {
	std::vector<long> bounds(blocks + 1, n);
	bounds[0] = 0;
	double total = 0.5*double(n)*double(n - 1);
	long row = 0;
	double acc = 0.0;
	for(int b = 1; b < blocks; b++){
		double target = total*b/blocks;
		while(row < n && acc < target){
			acc += double(n - 1 - row);
			row++;
		}
		bounds[b] = row;
	}
	return bounds;
}

}

// collision_floor = 0 only rejects exactly coincident points.
template <int D>
pair_sums<D> compute_pair_sums(green_kernel<D> const & kernel, std::span<vec<D> const> positions,
															 bool want_potential, bool want_grad, double collision_floor = 0.0) {
	long const n = long(positions.size());
	pair_sums<D> result;
	if(want_grad) result.grad.assign(n, zero_vec<D>());
	if(n < 2) return result;

	constexpr int blocks = detail::pair_blocks;
	auto bounds = detail::triangle_partition(n, blocks);
	std::vector<double> block_potential(blocks, 0.0);
	std::vector<double> block_min(blocks, std::numeric_limits<double>::infinity());
	std::vector<std::vector<vec<D>>> block_grad(want_grad ? blocks : 0);
	std::vector<std::exception_ptr> block_error(blocks);
	double const floor2 = collision_floor*collision_floor;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
	for(int b = 0; b < blocks; b++){
		try {
			std::vector<vec<D>> local;
			if(want_grad) local.assign(n, zero_vec<D>());
			double pot = 0.0;
			double rmin2 = std::numeric_limits<double>::infinity();
			for(long i = bounds[b]; i < bounds[b + 1]; i++){
				vec<D> const xi = positions[i];
				for(long j = i + 1; j < n; j++){
					vec<D> d = torus_difference<D>(xi, positions[j]);
					double r2 = dot(d, d);
					if(r2 == 0.0) {
						throw singular_configuration_error("particles " + std::to_string(i) + " and " + std::to_string(j)
																							 + " coincide", i, j);
					}
					if(r2 < floor2) {
						throw collision_error("particles " + std::to_string(i) + " and " + std::to_string(j)
																	+ " closer than the collision floor", i, j);
					}
					rmin2 = std::min(rmin2, r2);
					if(want_potential && want_grad) {
						double v;
						vec<D> gr;
						kernel.g_and_grad(d, v, gr);
						pot += v;
						local[i] += gr;
						local[j] -= gr;
					} else if(want_grad) {
						vec<D> gr = kernel.grad_g(d);
						local[i] += gr;
						local[j] -= gr;
					} else if(want_potential) {
						pot += kernel.g(d);
					}
				}
			}
			block_potential[b] = pot;
			block_min[b] = rmin2;
			if(want_grad) block_grad[b] = std::move(local);
		} catch(...) {
			block_error[b] = std::current_exception();
		}
	}

	for(int b = 0; b < blocks; b++) if(block_error[b]) std::rethrow_exception(block_error[b]);

	double pot = 0.0;
	double rmin2 = std::numeric_limits<double>::infinity();
	for(int b = 0; b < blocks; b++){
		pot += block_potential[b];
		rmin2 = std::min(rmin2, block_min[b]);
		if(want_grad) {
			for(long i = 0; i < n; i++) result.grad[i] += block_grad[b][i];
		}
	}
	result.potential = 2.0*pot;
	result.min_distance = std::sqrt(rmin2);
	return result;
}

// Σ_{i≠j} g(x_i - x_j) over ordered pairs.
template <int D>
double pairwise_potential_sum(green_kernel<D> const & kernel, std::span<vec<D> const> positions) {
	return compute_pair_sums<D>(kernel, positions, true, false).potential;
}

// -(1/(ε²N)) Σ_{j≠i} ∇g(x_i - x_j), the right-hand side of the quasineutral
// velocity equation for particle i.
template <int D>
vec<D> total_force(green_kernel<D> const & kernel, std::span<vec<D> const> positions, long i, double epsilon) {
	long const n = long(positions.size());
	if(i < 0 || i >= n) throw config_error("particle index out of range");
	if(!(epsilon > 0.0)) throw config_error("epsilon must be positive");
	vec<D> sum = zero_vec<D>();
	for(long j = 0; j < n; j++){
		if(j == i) continue;
		vec<D> d = torus_difference<D>(positions[i], positions[j]);
		if(dot(d, d) == 0.0) {
			throw singular_configuration_error("particles " + std::to_string(i) + " and " + std::to_string(j)
																				 + " coincide", i, j);
		}
		sum += kernel.grad_g(d);
	}
	return (-1.0/(epsilon*epsilon*double(n)))*sum;
}

// Smallest pairwise torus distance by exhaustive scan.
template <int D>
double min_pair_distance(std::span<vec<D> const> positions) {
	double rmin2 = std::numeric_limits<double>::infinity();
	for(std::size_t i = 0; i < positions.size(); i++){
		for(std::size_t j = i + 1; j < positions.size(); j++){
			vec<D> d = torus_difference<D>(positions[i], positions[j]);
			rmin2 = std::min(rmin2, dot(d, d));
		}
	}
	return std::sqrt(rmin2);
}

}

#endif
