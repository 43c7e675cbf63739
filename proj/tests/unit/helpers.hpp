#pragma once

#include "neutsflow/numerics/random.hpp"
#include "neutsflow/numerics/tensor.hpp"

namespace testing {

inline neutsflow::numerics::RealTensor random_real(neutsflow::numerics::Shape shape, std::uint64_t seed,
                                                   double lo = -1.0, double hi = 1.0) {
    neutsflow::numerics::Rng rng(seed);
    neutsflow::numerics::RealTensor t(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

inline neutsflow::numerics::ComplexTensor random_complex(neutsflow::numerics::Shape shape, std::uint64_t seed) {
    neutsflow::numerics::Rng rng(seed);
    neutsflow::numerics::ComplexTensor t(std::move(shape));
    for (auto& v : t.values()) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    return t;
}

} // namespace testing
