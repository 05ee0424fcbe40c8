#ifndef MFL_TESTS_COMMON_HPP
#define MFL_TESTS_COMMON_HPP

#include <mfl/green_kernel.hpp>

namespace mfl::testing {

// Kernels are expensive to build; tests share one per dimension.
inline green_kernel<2> const & kernel2() {
	static green_kernel<2> const k;
	return k;
}

inline green_kernel<3> const & kernel3() {
	static green_kernel<3> const k;
	return k;
}

template <int D>
green_kernel<D> const & kernel() {
	if constexpr(D == 2) return kernel2();
	else return kernel3();
}

}

#endif
