#include "neutsflow/op/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "neutsflow/numerics/kernels.hpp"

namespace neutsflow::op {

namespace kern = numerics::kernels;
using numerics::Complex;

NormStats NormStats::identity(std::size_t rows) { return {std::vector<double>(rows, 0.0), std::vector<double>(rows, 1.0)}; }

NormStats row_stats(const RealTensor& x, double eps) {
    if (x.rank() < 1 || x.shape().back() == 0) throw UsageError("row_stats: empty rows");
    const std::size_t n = x.shape().back();
    const std::size_t rows = x.size() / n;
    NormStats s;
    s.mu.resize(rows);
    s.sigma.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* p = x.data() + r * n;
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += p[i];
        m /= static_cast<double>(n);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += (p[i] - m) * (p[i] - m);
        s.mu[r] = m;
        s.sigma[r] = std::max(std::sqrt(v / static_cast<double>(n)), eps);
    }
    return s;
}

RealTensor normalize_rows(const RealTensor& x, const NormStats& s) {
    const std::size_t n = x.shape().back();
    if (x.size() / n != s.mu.size()) throw UsageError("normalize_rows: stats do not match row count");
    RealTensor out = x;
    for (std::size_t r = 0; r < s.mu.size(); ++r)
        for (std::size_t i = 0; i < n; ++i) out[r * n + i] = (x[r * n + i] - s.mu[r]) / s.sigma[r];
    return out;
}

RealTensor denormalize_rows(const RealTensor& x, const NormStats& s) {
    const std::size_t n = x.shape().back();
    if (x.size() / n != s.mu.size()) throw UsageError("denormalize_rows: stats do not match row count");
    RealTensor out = x;
    for (std::size_t r = 0; r < s.mu.size(); ++r)
        for (std::size_t i = 0; i < n; ++i) out[r * n + i] = x[r * n + i] * s.sigma[r] + s.mu[r];
    return out;
}

std::pair<RealTensor, NormStats> instance_normalize(const RealTensor& H, double eps_norm) {
    if (H.rank() != 2 || H.dim(0) < 2) throw UsageError("instance_normalize: H must be [S, C] with S >= 2");
    const RealTensor rows = numerics::transpose_last2(H);
    NormStats s = row_stats(rows, eps_norm);
    return {numerics::transpose_last2(normalize_rows(rows, s)), std::move(s)};
}

RealTensor denormalize(const RealTensor& Y, const NormStats& stats) {
    if (Y.rank() != 2 || Y.dim(1) != stats.mu.size())
        throw UsageError("denormalize: Y " + numerics::shape_string(Y.shape()) + " does not match " +
                         std::to_string(stats.mu.size()) + " channels");
    return numerics::transpose_last2(denormalize_rows(numerics::transpose_last2(Y), stats));
}

std::vector<std::size_t> topk_bins(const std::vector<double>& amplitude, std::size_t K) {
    std::vector<std::size_t> idx(amplitude.size());
    std::iota(idx.begin(), idx.end(), 0);
    const std::size_t keep = std::min(K, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (amplitude[a] != amplitude[b]) return amplitude[a] > amplitude[b];
                          return a < b;
                      });
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::pair<RealTensor, RealTensor> decompose_rows(const RealTensor& x, std::size_t K) {
    if (x.rank() < 1 || x.shape().back() == 0) throw UsageError("spectral_decompose: empty series");
    const std::size_t n = x.shape().back();
    const std::size_t bins = n / 2 + 1;
    if (K < 1 || K > bins)
        throw UsageError("spectral_decompose: K=" + std::to_string(K) + " outside [1, " + std::to_string(bins) + "]");
    const std::size_t rows = x.size() / n;
    std::vector<Complex> spec(rows * bins);
    kern::parallel::rfft_rows(x.data(), rows, n, spec.data());
    std::vector<double> amp(bins);
    for (std::size_t r = 0; r < rows; ++r) {
        Complex* row = spec.data() + r * bins;
        for (std::size_t m = 0; m < bins; ++m) amp[m] = std::abs(row[m]);
        const auto keep = topk_bins(amp, K);
        std::size_t next = 0;
        for (std::size_t m = 0; m < bins; ++m) {
            if (next < keep.size() && keep[next] == m)
                ++next;
            else
                row[m] = Complex{0.0, 0.0};
        }
    }
    RealTensor season(x.shape());
    kern::parallel::irfft_rows(spec.data(), rows, n, season.data());
    RealTensor trend(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) trend[i] = x[i] - season[i];
    return {std::move(trend), std::move(season)};
}

std::pair<RealTensor, RealTensor> spectral_decompose(const RealTensor& H_norm, std::size_t K) {
    if (H_norm.rank() != 2) throw UsageError("spectral_decompose: expected [S, C]");
    auto [trend, season] = decompose_rows(numerics::transpose_last2(H_norm), K);
    return {numerics::transpose_last2(trend), numerics::transpose_last2(season)};
}

} // namespace neutsflow::op
