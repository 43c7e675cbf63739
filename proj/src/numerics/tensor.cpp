#include "neutsflow/numerics/tensor.hpp"

#include <cmath>

namespace neutsflow::numerics {

double max_abs_diff(const RealTensor& a, const RealTensor& b) {
    require_same_shape(a.shape(), b.shape(), "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b) {
    require_same_shape(a.shape(), b.shape(), "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

bool all_finite(const RealTensor& x) {
    for (double v : x.values())
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace neutsflow::numerics
