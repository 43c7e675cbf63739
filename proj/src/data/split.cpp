#include "neutsflow/data/split.hpp"

#include <cmath>
#include <string>

namespace neutsflow::data {

void SplitSpec::validate() const {
    for (double f : {train_fraction, val_fraction, test_fraction})
        if (!(f > 0.0 && f < 1.0)) throw UsageError("split fractions must lie in (0, 1)");
    if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9)
        throw UsageError("split fractions must sum to 1");
}

SplitSpec SplitSpec::for_dataset(std::string_view name) {
    if (name.substr(0, 3) == "ETT" || name.substr(0, 3) == "ett") return {0.6, 0.2, 0.2};
    return {0.7, 0.1, 0.2};
}

Splits chronological_split(const SeriesTable& table, const SplitSpec& spec, std::size_t min_length) {
    spec.validate();
    const std::size_t T = table.length();
    // Boundaries come from cumulative fractions, so ETT at 0.6/0.2/0.2 cuts at floor(0.6T), floor(0.8T).
    // The small slack keeps 0.7 + 0.1 from landing just below 0.8.
    const auto cut = [&](double f) { return static_cast<std::size_t>(std::floor(f * static_cast<double>(T) + 1e-9)); };
    const auto b1 = cut(spec.train_fraction);
    const auto b2 = cut(spec.train_fraction + spec.val_fraction);
    const std::size_t lengths[3] = {b1, b2 - b1, T - b2};
    const char* names[3] = {"train", "val", "test"};
    for (int i = 0; i < 3; ++i)
        if (lengths[i] < min_length)
            throw DataError(std::string(names[i]) + " segment has " + std::to_string(lengths[i]) +
                            " rows, fewer than the " + std::to_string(min_length) + " one window needs");
    return Splits{table.slice(0, b1), table.slice(b1, b2), table.slice(b2, T), b1, b2};
}

Scaler Scaler::fit(const SeriesTable& table) {
    const std::size_t T = table.length(), C = table.channels();
    if (T == 0) throw DataError("scaler: empty table");
    Scaler s;
    s.mean.assign(C, 0.0);
    s.std.assign(C, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < C; ++c) s.mean[c] += table.values[t * C + c];
    for (auto& m : s.mean) m /= static_cast<double>(T);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < C; ++c) {
            const double d = table.values[t * C + c] - s.mean[c];
            s.std[c] += d * d;
        }
    for (auto& v : s.std) {
        v = std::sqrt(v / static_cast<double>(T));
        if (v < 1e-12) v = 1.0;
    }
    return s;
}

SeriesTable Scaler::apply(const SeriesTable& table) const {
    if (table.channels() != mean.size()) throw DataError("scaler: channel count mismatch");
    SeriesTable out = table;
    const std::size_t C = mean.size();
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = (out.values[i] - mean[i % C]) / std[i % C];
    return out;
}

RealTensor Scaler::invert(const RealTensor& values) const {
    const std::size_t C = mean.size();
    if (values.rank() == 0 || values.shape().back() != C) throw UsageError("scaler: channel count mismatch");
    RealTensor out = values;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * std[i % C] + mean[i % C];
    return out;
}

} // namespace neutsflow::data
