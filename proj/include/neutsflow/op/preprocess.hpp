#pragma once

// Data-side stages of the model: instance normalization and the TopK spectral
// split. Neither depends on parameters, so both run outside the tape.

#include <cstddef>
#include <utility>
#include <vector>

#include "neutsflow/numerics/tensor.hpp"

namespace neutsflow::op {

using numerics::RealTensor;
using numerics::Shape;

/// One (mu, sigma) pair per series row.
struct NormStats {
    std::vector<double> mu;
    std::vector<double> sigma;

    static NormStats identity(std::size_t rows);
};

/// Population mean and std of every row of a [rows, n] buffer; sigma floored at eps.
NormStats row_stats(const RealTensor& x, double eps);
RealTensor normalize_rows(const RealTensor& x, const NormStats& s);
RealTensor denormalize_rows(const RealTensor& x, const NormStats& s);

/// Time-major single window: H is [S, C]; statistics are per channel.
std::pair<RealTensor, NormStats> instance_normalize(const RealTensor& H, double eps_norm = 1e-5);
/// Y [L, C] -> Y * sigma + mu per channel.
RealTensor denormalize(const RealTensor& Y, const NormStats& stats);

/// Season keeps the K largest-amplitude one-sided bins of each row (ties go to the
/// lower index, DC included); trend is the remainder. Rows run along the last axis.
std::pair<RealTensor, RealTensor> decompose_rows(const RealTensor& x, std::size_t K);

/// Time-major single window [S, C] -> (trend, season).
std::pair<RealTensor, RealTensor> spectral_decompose(const RealTensor& H_norm, std::size_t K);

/// Indices of the K retained bins of one spectrum row, ascending.
std::vector<std::size_t> topk_bins(const std::vector<double>& amplitude, std::size_t K);

} // namespace neutsflow::op
