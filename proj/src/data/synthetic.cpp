#include "neutsflow/data/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "neutsflow/numerics/random.hpp"

namespace neutsflow::data {

SeriesTable make_sinusoid_table(const SyntheticSpec& spec) {
    if (spec.length == 0 || spec.channels == 0) throw UsageError("synthetic: length and channels must be >= 1");
    if (spec.noise_sigma < 0.0) throw UsageError("synthetic: noise_sigma must be >= 0");
    numerics::Rng rng(spec.seed);
    SeriesTable table;
    table.timestamps.resize(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t)
        table.timestamps[t] = spec.start + static_cast<Timestamp>(t) * spec.interval;
    for (std::size_t c = 0; c < spec.channels; ++c) table.channel_names.push_back("x" + std::to_string(c));
    table.values = RealTensor(Shape{spec.length, spec.channels});
    for (std::size_t t = 0; t < spec.length; ++t)
        for (std::size_t c = 0; c < spec.channels; ++c) {
            double v = spec.offset;
            for (const auto& s : spec.components)
                v += s.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / s.period + s.phase +
                                            spec.channel_phase_step * static_cast<double>(c));
            table.values.at(t, c) = v + spec.noise_sigma * rng.normal();
        }
    return table;
}

} // namespace neutsflow::data
