#pragma once

#include <cstdint>

#include "gqn/autodiff.hpp"

namespace gqn::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moments live in each Parameter; the step counter here.
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    void step(ParameterSet& params);
    [[nodiscard]] std::int64_t steps() const { return t_; }
    [[nodiscard]] const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    std::int64_t t_ = 0;
};

} // namespace gqn::nn
