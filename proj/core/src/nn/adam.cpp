#include "dsec/nn/adam.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec {

AdamState make_adam_state(const AdamConfig& config, std::size_t parameter_count, std::string block_name) {
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0)) {
        throw DomainError(fmt::format("adam: betas must lie in [0,1), got {} and {}", config.beta1, config.beta2));
    }
    if (!(config.learning_rate > 0.0) || !(config.epsilon > 0.0)) {
        throw DomainError("adam: learning rate and epsilon must be positive");
    }
    AdamState state;
    state.config = config;
    state.first_moment.assign(parameter_count, 0.0);
    state.second_moment.assign(parameter_count, 0.0);
    state.block_name = std::move(block_name);
    return state;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        throw ShapeError(fmt::format("adam_step[{}]: {} params, {} grads, state sized {}", state.block_name,
                                     params.size(), grads.size(), state.first_moment.size()));
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            throw DomainError(fmt::format("adam_step[{}]: non-finite gradient at index {}", state.block_name, i));
        }
    }

    const AdamConfig& c = state.config;
    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = c.beta1 * m + (1.0 - c.beta1) * grads[i];
        v = c.beta2 * v + (1.0 - c.beta2) * grads[i] * grads[i];
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
}

} // namespace dsec
