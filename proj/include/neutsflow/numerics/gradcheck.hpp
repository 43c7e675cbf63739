#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "neutsflow/numerics/parameters.hpp"

namespace neutsflow::numerics {

/// Loss evaluated at `params`; fills `grads` with the analytic gradient when non-null.
using LossFn = std::function<double(const ParameterSet& params, GradientRecord* grads)>;

struct GradCheckOptions {
    double epsilon = 1e-5;
    /// Scalars to compare; every scalar is checked when this exceeds the parameter count.
    std::size_t samples = 200;
    std::uint64_t seed = 0;
    /// Relative disagreement between central differences at epsilon and epsilon/2
    /// beyond which a coordinate is treated as non-differentiable and skipped.
    double smoothness_tolerance = 1e-2;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t flagged = 0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Compares analytic gradients against central differences on sampled scalars.
/// Error per scalar is |a - n| / max(|a|, |n|, f) with f = max(1e-8, 1e6 eps_machine |L| / epsilon),
/// the level below which central differences cannot resolve a gradient.
GradCheckResult grad_check(const LossFn& loss, const ParameterSet& params, const GradCheckOptions& options = {});

} // namespace neutsflow::numerics
