#include "neutsflow/numerics/fft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "neutsflow/numerics/kernels.hpp"

namespace neutsflow::numerics {

namespace {

Complex unit_root(std::size_t k, std::size_t n, double sign) {
    const double phase = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    return {std::cos(phase), std::sin(phase)};
}

} // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw UsageError("fft: length must be >= 1");
    std::size_t rest = n;
    std::size_t p = 4;
    const auto limit = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
    while (rest > 1) {
        while (rest % p != 0) {
            if (p == 4)
                p = 2;
            else if (p == 2)
                p = 3;
            else
                p += 2;
            if (p > limit) p = rest;
        }
        rest /= p;
        factors_.push_back(p);
        factors_.push_back(rest);
        max_factor_ = std::max(max_factor_, p);
    }
    if (factors_.empty()) {
        factors_ = {1, 1};
    }
    tw_forward_.resize(n);
    tw_inverse_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        tw_forward_[i] = unit_root(i, n, -1.0);
        tw_inverse_[i] = std::conj(tw_forward_[i]);
    }
}

void FftPlan::transform(const Complex* in, Complex* out, bool inverse, Complex* scratch) const {
    if (n_ == 1) {
        out[0] = in[0];
        return;
    }
    std::vector<Complex> local;
    if (scratch == nullptr) {
        local.resize(max_factor_);
        scratch = local.data();
    }
    work(out, in, 1, factors_.data(), inverse ? tw_inverse_ : tw_forward_, inverse, scratch);
}

void FftPlan::work(Complex* out, const Complex* in, std::size_t fstride, const std::size_t* factors,
                   const std::vector<Complex>& tw, bool inverse, Complex* scratch) const {
    const std::size_t p = factors[0];
    const std::size_t m = factors[1];
    Complex* const begin = out;
    if (m == 1) {
        for (std::size_t j = 0; j < p; ++j) {
            out[j] = *in;
            in += fstride;
        }
    } else {
        for (std::size_t j = 0; j < p; ++j) {
            work(out + j * m, in, fstride * p, factors + 2, tw, inverse, scratch);
            in += fstride;
        }
    }
    out = begin;

    if (p == 2) {
        for (std::size_t k = 0; k < m; ++k) {
            const Complex t = out[k + m] * tw[k * fstride];
            out[k + m] = out[k] - t;
            out[k] += t;
        }
        return;
    }
    if (p == 4) {
        const std::size_t m2 = 2 * m;
        const std::size_t m3 = 3 * m;
        for (std::size_t k = 0; k < m; ++k) {
            const Complex s0 = out[k + m] * tw[k * fstride];
            const Complex s1 = out[k + m2] * tw[2 * k * fstride];
            const Complex s2 = out[k + m3] * tw[3 * k * fstride];
            const Complex s5 = out[k] - s1;
            out[k] += s1;
            const Complex s3 = s0 + s2;
            const Complex s4 = s0 - s2;
            out[k + m2] = out[k] - s3;
            out[k] += s3;
            if (inverse) {
                out[k + m] = {s5.real() - s4.imag(), s5.imag() + s4.real()};
                out[k + m3] = {s5.real() + s4.imag(), s5.imag() - s4.real()};
            } else {
                out[k + m] = {s5.real() + s4.imag(), s5.imag() - s4.real()};
                out[k + m3] = {s5.real() - s4.imag(), s5.imag() + s4.real()};
            }
        }
        return;
    }
    // generic radix
    for (std::size_t u = 0; u < m; ++u) {
        std::size_t k = u;
        for (std::size_t q1 = 0; q1 < p; ++q1) {
            scratch[q1] = out[k];
            k += m;
        }
        k = u;
        for (std::size_t q1 = 0; q1 < p; ++q1) {
            std::size_t twidx = 0;
            Complex acc = scratch[0];
            for (std::size_t q = 1; q < p; ++q) {
                twidx += fstride * k;
                if (twidx >= n_) twidx -= n_;
                acc += scratch[q] * tw[twidx];
            }
            out[k] = acc;
            k += m;
        }
    }
}

RealFftPlan::RealFftPlan(std::size_t n) : n_(n), complex_(n % 2 == 0 && n >= 2 ? n / 2 : n) {
    if (n_ % 2 == 0) {
        twist_.resize(n_ / 2 + 1);
        for (std::size_t k = 0; k < twist_.size(); ++k) twist_[k] = unit_root(k, n_, -1.0);
    }
}

void RealFftPlan::forward(const double* in, Complex* out, Complex* work) const {
    if (n_ % 2 == 1) {
        Complex* buf = work;
        Complex* spec = work + n_;
        for (std::size_t i = 0; i < n_; ++i) buf[i] = {in[i], 0.0};
        complex_.transform(buf, spec, false, work + 2 * n_);
        for (std::size_t k = 0; k < bins(); ++k) out[k] = spec[k];
        out[0] = {out[0].real(), 0.0};
        return;
    }
    const std::size_t half = n_ / 2;
    Complex* packed = work;
    Complex* z = work + half;
    for (std::size_t j = 0; j < half; ++j) packed[j] = {in[2 * j], in[2 * j + 1]};
    complex_.transform(packed, z, false, work + 2 * n_);
    for (std::size_t k = 0; k <= half; ++k) {
        const Complex zk = z[k % half];
        const Complex zr = std::conj(z[(half - k) % half]);
        const Complex even = 0.5 * (zk + zr);
        const Complex diff = 0.5 * (zk - zr);
        const Complex odd{diff.imag(), -diff.real()};  // diff / i
        out[k] = even + twist_[k] * odd;
    }
    out[0] = {out[0].real(), 0.0};
    out[half] = {out[half].real(), 0.0};
}

void RealFftPlan::inverse(const Complex* in, double* out, Complex* work) const {
    const double scale = 1.0 / static_cast<double>(n_);
    if (n_ % 2 == 1) {
        Complex* full = work;
        Complex* sig = work + n_;
        full[0] = {in[0].real(), 0.0};
        for (std::size_t k = 1; k < bins(); ++k) {
            full[k] = in[k];
            full[n_ - k] = std::conj(in[k]);
        }
        complex_.transform(full, sig, true, work + 2 * n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = sig[i].real() * scale;
        return;
    }
    const std::size_t half = n_ / 2;
    Complex* packed = work;
    Complex* z = work + half;
    const auto bin = [&](std::size_t k) {
        if (k == 0 || k == half) return Complex{in[k].real(), 0.0};
        return in[k];
    };
    for (std::size_t k = 0; k < half; ++k) {
        const Complex xk = bin(k);
        const Complex xr = std::conj(bin(half - k));
        const Complex even = 0.5 * (xk + xr);
        const Complex odd = 0.5 * (xk - xr) * std::conj(twist_[k]);
        packed[k] = even + Complex{-odd.imag(), odd.real()};  // even + i*odd
    }
    complex_.transform(packed, z, true, work + 2 * n_);
    // Scale by 2/n = 1/half.
    const double s = 2.0 * scale;
    for (std::size_t j = 0; j < half; ++j) {
        out[2 * j] = z[j].real() * s;
        out[2 * j + 1] = z[j].imag() * s;
    }
}

const RealFftPlan& real_fft_plan(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<RealFftPlan>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<RealFftPlan>(n);
    return *slot;
}

ComplexTensor rfft(const RealTensor& x, std::size_t axis) {
    const AxisSplit s = split_axis(x.shape(), axis);
    if (s.length == 0) throw UsageError("rfft: length along axis must be >= 1");
    const std::size_t bins = s.length / 2 + 1;
    Shape out_shape = x.shape();
    out_shape[axis] = bins;
    ComplexTensor out(out_shape);

    // Gather lines contiguously, transform, scatter.
    const std::size_t lines = s.outer * s.inner;
    std::vector<double> gathered(lines * s.length);
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t n = 0; n < s.length; ++n)
            for (std::size_t i = 0; i < s.inner; ++i)
                gathered[(o * s.inner + i) * s.length + n] = x[(o * s.length + n) * s.inner + i];
    std::vector<Complex> spec(lines * bins);
    kernels::parallel::rfft_rows(gathered.data(), lines, s.length, spec.data());
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t m = 0; m < bins; ++m)
            for (std::size_t i = 0; i < s.inner; ++i)
                out[(o * bins + m) * s.inner + i] = spec[(o * s.inner + i) * bins + m];
    return out;
}

RealTensor irfft(const ComplexTensor& spectrum, std::size_t n, std::size_t axis) {
    const AxisSplit s = split_axis(spectrum.shape(), axis);
    if (n == 0) throw UsageError("irfft: n must be >= 1");
    if (s.length != n / 2 + 1)
        throw UsageError("irfft: spectrum length " + std::to_string(s.length) + " along axis does not equal n/2+1 = " +
                         std::to_string(n / 2 + 1));
    Shape out_shape = spectrum.shape();
    out_shape[axis] = n;
    RealTensor out(out_shape);
    const std::size_t lines = s.outer * s.inner;
    std::vector<Complex> gathered(lines * s.length);
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t m = 0; m < s.length; ++m)
            for (std::size_t i = 0; i < s.inner; ++i)
                gathered[(o * s.inner + i) * s.length + m] = spectrum[(o * s.length + m) * s.inner + i];
    std::vector<double> sig(lines * n);
    kernels::parallel::irfft_rows(gathered.data(), lines, n, sig.data());
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t i = 0; i < s.inner; ++i)
                out[(o * n + t) * s.inner + i] = sig[(o * s.inner + i) * n + t];
    return out;
}

} // namespace neutsflow::numerics
