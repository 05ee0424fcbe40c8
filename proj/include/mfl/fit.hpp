#ifndef MFL_FIT_HPP
#define MFL_FIT_HPP

#include <mfl/errors.hpp>

#include <cmath>
#include <set>
#include <string>
#include <vector>

namespace mfl {

// Degenerate regression input.
class fit_error : public numerical_error {
public:
	using numerical_error::numerical_error;
};

struct power_law_fit {
	double slope = 0.0;
	double intercept = 0.0;   // log(y) at log(N) = 0
	double slope_stderr = 0.0;
	double r_squared = 1.0;
	int points = 0;
};

// Least squares of log y against log N. Needs at least three distinct N and
// positive y.
inline power_law_fit fit_power_law(std::vector<double> const & n, std::vector<double> const & y) {
	if(n.size() != y.size()) throw fit_error("fit input lengths differ");
	std::set<double> distinct(n.begin(), n.end());
	if(distinct.size() < 3) throw fit_error("a rate fit needs at least 3 distinct N, got " + std::to_string(distinct.size()));
	std::vector<double> lx, ly;
	for(std::size_t i = 0; i < n.size(); i++){
		if(!(n[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i])) {
			throw fit_error("a log-log fit needs positive finite values");
		}
		lx.push_back(std::log(n[i]));
		ly.push_back(std::log(y[i]));
	}
	double const m = double(lx.size());
	double mx = 0.0, my = 0.0;
	for(std::size_t i = 0; i < lx.size(); i++){
		mx += lx[i];
		my += ly[i];
	}
	mx /= m;
	my /= m;
	double sxx = 0.0, sxy = 0.0, syy = 0.0;
	for(std::size_t i = 0; i < lx.size(); i++){
		sxx += (lx[i] - mx)*(lx[i] - mx);
		sxy += (lx[i] - mx)*(ly[i] - my);
		syy += (ly[i] - my)*(ly[i] - my);
	}
	power_law_fit f;
	f.points = int(lx.size());
	f.slope = sxy/sxx;
	f.intercept = my - f.slope*mx;
	double rss = 0.0;
	for(std::size_t i = 0; i < lx.size(); i++){
		double r = ly[i] - f.intercept - f.slope*lx[i];
		rss += r*r;
	}
	f.slope_stderr = lx.size() > 2 ? std::sqrt(rss/(m - 2.0)/sxx) : 0.0;
	f.r_squared = syy > 0.0 ? 1.0 - rss/syy : 1.0;
	return f;
}

}

#endif
