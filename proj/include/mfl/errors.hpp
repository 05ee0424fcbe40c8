#ifndef MFL_ERRORS_HPP
#define MFL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mfl {

// Invalid parameters, unknown keys, dimension mismatches.
class config_error : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

// Evaluation of the Green function or its gradient at the singular point x = 0.
class singular_point_error : public std::domain_error {
public:
	using std::domain_error::domain_error;
};

// Two particles coincide, or came closer than the collision floor.
class singular_configuration_error : public std::runtime_error {
public:
	singular_configuration_error(std::string const & what, long first, long second)
		: std::runtime_error(what), first_(first), second_(second) {}

	long first() const { return first_; }
	long second() const { return second_; }

private:
	long first_;
	long second_;
};

// NaN or Inf appeared during time integration, or a fit is degenerate.
class numerical_error : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

}

#endif
