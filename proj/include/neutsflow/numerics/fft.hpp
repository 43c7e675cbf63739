#pragma once

#include <cstddef>
#include <vector>

#include "neutsflow/numerics/tensor.hpp"

namespace neutsflow::numerics {

// DFT convention: forward is unnormalized, X[m] = sum_n x[n] exp(-2 pi i m n / L);
// the inverse divides by L.

/// Mixed-radix complex FFT of one fixed length. Immutable after construction.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);

    std::size_t size() const { return n_; }

    /// Unscaled transform; `inverse` flips the exponent sign. `in` and `out` must not alias.
    /// `scratch`, when given, must hold max_factor() values.
    void transform(const Complex* in, Complex* out, bool inverse, Complex* scratch = nullptr) const;

    std::size_t max_factor() const { return max_factor_; }

private:
    void work(Complex* out, const Complex* in, std::size_t fstride, const std::size_t* factors,
              const std::vector<Complex>& tw, bool inverse, Complex* scratch) const;

    std::size_t n_;
    std::size_t max_factor_ = 1;
    std::vector<std::size_t> factors_;  // (radix, remaining length) pairs
    std::vector<Complex> tw_forward_;
    std::vector<Complex> tw_inverse_;
};

/// Real-input transform of length n producing n/2+1 bins.
/// Even lengths run a half-length complex FFT and untangle the result.
class RealFftPlan {
public:
    explicit RealFftPlan(std::size_t n);

    std::size_t size() const { return n_; }
    std::size_t bins() const { return n_ / 2 + 1; }

    /// `work` must hold at least `work_size()` values.
    void forward(const double* in, Complex* out, Complex* work) const;
    /// Imaginary parts of the DC bin (and of the Nyquist bin for even n) are ignored.
    void inverse(const Complex* in, double* out, Complex* work) const;

    std::size_t work_size() const { return 3 * n_ + 2; }

private:
    std::size_t n_;
    FftPlan complex_;            // length n/2 when n is even, otherwise n
    std::vector<Complex> twist_;  // exp(-2 pi i k / n), k < n/2 + 1 (even n only)
};

/// Shared, lazily built plan for length n. Safe to call concurrently.
const RealFftPlan& real_fft_plan(std::size_t n);

/// One-sided spectrum along `axis`; output length floor(L/2)+1 there.
ComplexTensor rfft(const RealTensor& x, std::size_t axis);

/// Inverse of rfft for a signal of length n along `axis`.
RealTensor irfft(const ComplexTensor& spectrum, std::size_t n, std::size_t axis);

} // namespace neutsflow::numerics
