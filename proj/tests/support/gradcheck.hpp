#pragma once

// Central finite-difference check of tape gradients against a scalar loss.
//
// When a ReLU kink falls inside [x - h, x + h] the central difference mixes
// two slopes. Such elements are recognised by disagreeing one-sided slopes and
// compared against the one-sided difference that does not cross the kink.

#include <algorithm>
#include <cmath>
#include <functional>

#include "gqn/autodiff.hpp"

namespace gqn::testing {

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t one_sided = 0; // elements compared against a one-sided difference
};

inline double rel_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// build(t) records a 1x1 loss on t using parameters from params.
inline GradCheck gradient_check(nn::ParameterSet& params, const std::function<nn::Var(nn::Tape&)>& build,
                                double h = 1e-5, double floor = 1e-6, double tol = 1e-4) {
    params.zero_grad();
    {
        nn::Tape t;
        auto loss = build(t);
        t.backward(loss);
    }
    const auto eval = [&] {
        nn::Tape t;
        return t.value(build(t))(0, 0);
    };
    const double f0 = eval();
    GradCheck out;
    for (auto& p : params) {
        for (Eigen::Index k = 0; k < p.value.size(); ++k) {
            double& x = p.value.data()[k];
            const double x0 = x;
            x = x0 + h;
            const double up = eval();
            x = x0 - h;
            const double down = eval();
            x = x0;
            const double analytic = p.grad.data()[k];
            double err = rel_error((up - down) / (2.0 * h), analytic, floor);
            if (err > tol) {
                const double fwd = (up - f0) / h, bwd = (f0 - down) / h;
                if (rel_error(fwd, bwd, floor) > 10.0 * tol) {
                    err = std::min(rel_error(fwd, analytic, floor), rel_error(bwd, analytic, floor));
                    ++out.one_sided;
                }
            }
            out.max_rel_error = std::max(out.max_rel_error, err);
            ++out.checked;
        }
    }
    return out;
}

} // namespace gqn::testing
