#pragma once

#include <cstdint>

#include "neutsflow/numerics/parameters.hpp"

namespace neutsflow::numerics {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment accumulators congruent with the parameters they track.
struct AdamState {
    ParameterSet first_moment;
    ParameterSet second_moment;
    std::uint64_t step = 0;

    static AdamState for_params(const ParameterSet& params);
};

/// One bias-corrected Adam update, in place. Complex entries update their real
/// and imaginary parts independently.
void adam_step(ParameterSet& params, const GradientRecord& grads, AdamState& state, const AdamConfig& cfg);

} // namespace neutsflow::numerics
