#include "neutsflow/numerics/adam.hpp"

#include <cmath>

namespace neutsflow::numerics {

AdamState AdamState::for_params(const ParameterSet& params) {
    return AdamState{params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(ParameterSet& params, const GradientRecord& grads, AdamState& state, const AdamConfig& cfg) {
    if (!params.congruent(grads)) throw UsageError("adam_step: gradient record is not congruent with parameters");
    if (!params.congruent(state.first_moment) || !params.congruent(state.second_moment))
        throw UsageError("adam_step: optimizer state is not congruent with parameters");
    if (!(cfg.lr > 0.0)) throw UsageError("adam_step: learning rate must be > 0");

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params.flat(i);
        auto g = grads.flat(i);
        auto m = state.first_moment.flat(i);
        auto v = state.second_moment.flat(i);
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            p[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

} // namespace neutsflow::numerics
