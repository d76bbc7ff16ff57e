#pragma once

#include <span>

namespace gqn::stats {

struct Interval {
    double mean = 0.0;
    double half_width = 0.0; // 0 when fewer than two samples
    int n = 0;

    [[nodiscard]] double lower() const { return mean - half_width; }
    [[nodiscard]] double upper() const { return mean + half_width; }
};

double mean(std::span<const double> x);
// Sample standard deviation (n - 1 denominator).
double stddev(std::span<const double> x);
// Two-sided Student-t confidence interval for the mean.
Interval t_interval(std::span<const double> x, double confidence = 0.95);

} // namespace gqn::stats
