#include "neutsflow/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "neutsflow/numerics/random.hpp"

namespace neutsflow::numerics {

namespace {

struct Coordinate {
    std::size_t tensor;
    std::size_t offset;
};

double central_difference(const LossFn& loss, ParameterSet& work, Coordinate c, double eps) {
    double& x = work.flat(c.tensor)[c.offset];
    const double saved = x;
    x = saved + eps;
    const double plus = loss(work, nullptr);
    x = saved - eps;
    const double minus = loss(work, nullptr);
    x = saved;
    return (plus - minus) / (2.0 * eps);
}

} // namespace

GradCheckResult grad_check(const LossFn& loss, const ParameterSet& params, const GradCheckOptions& options) {
    if (!(options.epsilon > 0.0)) throw UsageError("grad_check: epsilon must be > 0");

    GradientRecord analytic = params.zeros_like();
    const double base = loss(params, &analytic);
    // Loss roundoff in a deep pipeline reaches tens of eps_machine |L|, so central differences
    // carry errors near 1e1 eps_machine |L| / epsilon. Gradients below 1e6 eps_machine |L| / epsilon
    // are compared in absolute terms, which keeps that noise near 1e-5 relative.
    const double floor = std::max(1e-8, 1e6 * std::numeric_limits<double>::epsilon() * std::abs(base) / options.epsilon);

    std::vector<Coordinate> all;
    for (std::size_t i = 0; i < params.size(); ++i)
        for (std::size_t j = 0; j < params.flat(i).size(); ++j) all.push_back({i, j});

    // Deterministic shuffle, then walk the order until enough smooth coordinates are checked.
    Rng rng(options.seed);
    for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[rng.below(i)]);

    ParameterSet work = params;
    GradCheckResult result;
    for (const Coordinate& c : all) {
        if (result.checked >= options.samples) break;
        const double numeric = central_difference(loss, work, c, options.epsilon);
        const double refined = central_difference(loss, work, c, options.epsilon / 2.0);
        const double spread = std::abs(numeric - refined);
        if (spread > options.smoothness_tolerance * std::max({std::abs(numeric), std::abs(refined), 1e-6})) {
            ++result.flagged;
            continue;
        }
        const double a = analytic.flat(c.tensor)[c.offset];
        const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
        ++result.checked;
        if (err >= result.max_relative_error) {
            result.max_relative_error = err;
            result.worst_parameter = params.name(c.tensor);
            result.worst_index = c.offset;
            result.worst_analytic = a;
            result.worst_numeric = numeric;
        }
    }
    return result;
}

} // namespace neutsflow::numerics
