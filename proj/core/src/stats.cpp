#include "gqn/stats.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "gqn/errors.hpp"

namespace gqn::stats {

double mean(std::span<const double> x) {
    if (x.empty()) throw InvalidArgument("mean of an empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

Interval t_interval(std::span<const double> x, double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("confidence must lie in (0, 1)");
    Interval out;
    out.n = static_cast<int>(x.size());
    out.mean = mean(x);
    if (x.size() < 2) return out;
    const boost::math::students_t dist(static_cast<double>(x.size() - 1));
    const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
    out.half_width = t * stddev(x) / std::sqrt(static_cast<double>(x.size()));
    return out;
}

} // namespace gqn::stats
