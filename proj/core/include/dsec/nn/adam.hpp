#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dsec {

struct AdamConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment accumulators for one parameter block.
struct AdamState {
    AdamConfig config;
    std::size_t step_count = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::string block_name;
};

AdamState make_adam_state(const AdamConfig& config, std::size_t parameter_count, std::string block_name);

/// One bias-corrected Adam update of `params` in place.
/// Throws DomainError naming the block if any gradient is non-finite; in that
/// case neither the parameters nor the state are modified.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

} // namespace dsec
