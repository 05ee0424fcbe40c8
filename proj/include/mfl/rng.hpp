#ifndef MFL_RNG_HPP
#define MFL_RNG_HPP

// Counter-based random streams. A stream is identified by (seed, key) and
// draws are a pure function of (seed, key, counter), so particles can be
// sampled in any order or in parallel with identical results.

#include <cstdint>
#include <limits>

namespace mfl {

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
	z += 0x9e3779b97f4a7c15ULL;
	z = (z ^ (z >> 30))*0xbf58476d1ce4e5b9ULL;
	z = (z ^ (z >> 27))*0x94d049bb133111ebULL;
	return z ^ (z >> 31);
}

}

// Satisfies UniformRandomBitGenerator.
class counter_stream {
public:
	using result_type = std::uint64_t;

	counter_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
		: key_(detail::mix64(detail::mix64(detail::mix64(seed) ^ stream) ^ index)) {}

	static constexpr result_type min() { return 0; }
	static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

	result_type operator()() { return detail::mix64(key_ + 0x632be59bd9b4e019ULL*(++counter_)); }

	// Uniform on [0, 1) with 53 random bits.
	double uniform() { return double((*this)() >> 11)*0x1.0p-53; }

	std::uint64_t counter() const { return counter_; }

private:
	std::uint64_t key_;
	std::uint64_t counter_ = 0;
};

// Stream identifiers.
enum class rng_stream : std::uint64_t {
	position = 1,
	velocity = 2,
	trial = 3,
};

inline counter_stream make_stream(std::uint64_t seed, rng_stream stream, std::uint64_t index) {
	return counter_stream(seed, static_cast<std::uint64_t>(stream), index);
}

}

#endif
