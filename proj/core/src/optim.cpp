#include "gqn/optim.hpp"

#include <cmath>

#include "gqn/errors.hpp"

namespace gqn::nn {

void Adam::step(ParameterSet& params) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (auto& p : params) {
        if (!p.grad.allFinite()) throw NumericalError("non-finite gradient for " + p.name);
        p.adam_m = config_.beta1 * p.adam_m + (1.0 - config_.beta1) * p.grad;
        p.adam_v = config_.beta2 * p.adam_v + (1.0 - config_.beta2) * p.grad.cwiseProduct(p.grad);
        const double lr = config_.lr;
        const double eps = config_.eps;
        p.value.array() -= lr * (p.adam_m.array() / c1) / ((p.adam_v.array() / c2).sqrt() + eps);
    }
}

} // namespace gqn::nn
