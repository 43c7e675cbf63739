#pragma once

#include <cstdint>
#include <vector>

#include "neutsflow/data/series.hpp"

namespace neutsflow::data {

struct Sinusoid {
    double period = 24.0;
    double amplitude = 1.0;
    double phase = 0.0;
};

/// Each channel is a sum of sinusoids plus i.i.d. Gaussian noise of std `noise_sigma`.
/// Channel c shifts every component phase by `channel_phase_step * c`.
struct SyntheticSpec {
    std::size_t length = 2000;
    std::size_t channels = 1;
    std::vector<Sinusoid> components{{24.0, 1.0, 0.0}, {12.0, 0.5, 0.7}, {48.0, 0.3, 1.3}};
    double noise_sigma = 0.1;
    double channel_phase_step = 0.9;
    double offset = 0.0;
    std::uint64_t seed = 0;
    Timestamp start = 1467331200;  // 2016-07-01 00:00:00
    Timestamp interval = 3600;
};

SeriesTable make_sinusoid_table(const SyntheticSpec& spec);

} // namespace neutsflow::data
