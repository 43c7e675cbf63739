#pragma once

#include <string_view>
#include <vector>

#include "neutsflow/data/series.hpp"

namespace neutsflow::data {

struct SplitSpec {
    double train_fraction = 0.7;
    double val_fraction = 0.1;
    double test_fraction = 0.2;

    void validate() const;
    /// 0.6/0.2/0.2 for the ETT family, 0.7/0.1/0.2 otherwise.
    static SplitSpec for_dataset(std::string_view name);
};

struct Splits {
    SeriesTable train;
    SeriesTable val;
    SeriesTable test;
    /// Row index of the first validation and test sample in the source table.
    std::size_t val_begin = 0;
    std::size_t test_begin = 0;
};

/// Contiguous ordered segments: train = [0, floor(f_tr T)), val up to floor((f_tr + f_va) T), test the rest.
/// Every segment must hold at least `min_length` rows.
Splits chronological_split(const SeriesTable& table, const SplitSpec& spec, std::size_t min_length);

/// Per-channel z-score statistics.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> std;

    static Scaler fit(const SeriesTable& table);
    SeriesTable apply(const SeriesTable& table) const;
    /// values [..., C] in standardized units back to the raw scale.
    RealTensor invert(const RealTensor& values) const;
};

} // namespace neutsflow::data
