#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "neutsflow/numerics/fft.hpp"
#include "oracles/naive.hpp"

using namespace neutsflow;
using namespace neutsflow::numerics;

namespace {

RealTensor series(std::vector<double> v) {
    const std::size_t n = v.size();
    return RealTensor(Shape{n}, std::move(v));
}

std::vector<double> to_vec(const RealTensor& t) { return {t.values().begin(), t.values().end()}; }

} // namespace

TEST_SUITE("numerics") {

TEST_CASE("rfft of a constant signal has only DC energy") {
    const ComplexTensor spec = rfft(series({3, 3, 3, 3}), 0);
    REQUIRE(spec.size() == 3);
    CHECK(spec[0] == Complex(12.0, 0.0));
    CHECK(std::abs(spec[1]) == doctest::Approx(0.0));
    CHECK(std::abs(spec[2]) == doctest::Approx(0.0));
}

TEST_CASE("rfft of a grid cosine puts L/2 in its bin") {
    std::vector<double> x(8);
    for (std::size_t n = 0; n < 8; ++n) x[n] = std::cos(2.0 * std::numbers::pi * n / 8.0);
    const ComplexTensor spec = rfft(series(x), 0);
    const auto naive = oracle::dft_one_sided(x);
    for (std::size_t m = 0; m < spec.size(); ++m) {
        const Complex expected = m == 1 ? Complex(4.0, 0.0) : Complex(0.0, 0.0);
        CHECK(std::abs(spec[m] - expected) < 1e-12);
        CHECK(std::abs(naive[m] - expected) < 1e-12);
    }
}

TEST_CASE("rfft matches the naive DFT for every length up to 40 and common window lengths") {
    std::vector<std::size_t> lengths;
    for (std::size_t n = 1; n <= 40; ++n) lengths.push_back(n);
    for (std::size_t n : {48, 49, 96, 97, 121, 192, 336, 720}) lengths.push_back(n);
    for (std::size_t n : lengths) {
        CAPTURE(n);
        const RealTensor x = testing::random_real({n}, 1000 + n);
        const ComplexTensor spec = rfft(x, 0);
        const auto naive = oracle::dft_one_sided(to_vec(x));
        REQUIRE(spec.size() == n / 2 + 1);
        double err = 0;
        for (std::size_t m = 0; m < naive.size(); ++m) err = std::max(err, std::abs(spec[m] - naive[m]));
        CHECK(err < 1e-11 * std::max<double>(1.0, static_cast<double>(n) / 32.0));
    }
}

TEST_CASE("irfft inverts rfft for even and odd lengths") {
    for (std::size_t n : {1, 2, 3, 5, 8, 24, 95, 96, 97, 720}) {
        CAPTURE(n);
        const RealTensor x = testing::random_real({n}, 7 * n);
        const RealTensor back = irfft(rfft(x, 0), n, 0);
        CHECK(max_abs_diff(x, back) < 1e-10);
    }
}

TEST_CASE("irfft matches the naive inverse on arbitrary spectra") {
    for (std::size_t n : {6, 7, 16, 33}) {
        CAPTURE(n);
        ComplexTensor spec = testing::random_complex({n / 2 + 1}, n);
        const RealTensor x = irfft(spec, n, 0);
        const auto naive = oracle::idft_one_sided({spec.values().begin(), spec.values().end()}, n);
        for (std::size_t t = 0; t < n; ++t) CHECK(std::abs(x[t] - naive[t]) < 1e-12);
    }
}

TEST_CASE("irfft special spectra") {
    SUBCASE("zero spectrum gives a zero signal") {
        const RealTensor x = irfft(ComplexTensor(Shape{49}), 96, 0);
        for (double v : x.values()) CHECK(v == 0.0);
    }
    SUBCASE("DC-only spectrum spreads c/L evenly") {
        ComplexTensor spec(Shape{49});
        spec[0] = Complex(9.6, 0.0);
        const RealTensor x = irfft(spec, 96, 0);
        for (double v : x.values()) CHECK(v == doctest::Approx(0.1).epsilon(1e-14));
    }
}

TEST_CASE("Parseval holds under the unnormalized forward convention") {
    for (std::size_t n : {17, 96}) {
        const RealTensor x = testing::random_real({n}, 3 + n);
        const ComplexTensor spec = rfft(x, 0);
        double energy = 0;
        for (double v : x.values()) energy += v * v;
        double spectral = 0;
        for (std::size_t m = 0; m < spec.size(); ++m) {
            const bool single = m == 0 || (n % 2 == 0 && m == n / 2);
            spectral += (single ? 1.0 : 2.0) * std::norm(spec[m]);
        }
        spectral /= static_cast<double>(n);
        CHECK(std::abs(energy - spectral) / energy < 1e-9);
    }
}

TEST_CASE("rfft is linear") {
    const RealTensor x = testing::random_real({96}, 11);
    const RealTensor y = testing::random_real({96}, 12);
    const double a = 1.7, b = -0.3;
    RealTensor combo(Shape{96});
    for (std::size_t i = 0; i < 96; ++i) combo[i] = a * x[i] + b * y[i];
    const ComplexTensor fx = rfft(x, 0), fy = rfft(y, 0), fc = rfft(combo, 0);
    for (std::size_t m = 0; m < fc.size(); ++m) CHECK(std::abs(fc[m] - (a * fx[m] + b * fy[m])) < 1e-10);
}

TEST_CASE("rfft along an inner axis transforms each line independently") {
    const RealTensor x = testing::random_real({3, 10, 4}, 5);
    const ComplexTensor spec = rfft(x, 1);
    CHECK(spec.shape() == Shape{3, 6, 4});
    std::vector<double> line(10);
    for (std::size_t i = 0; i < 10; ++i) line[i] = x.at(2, i, 1);
    const auto naive = oracle::dft_one_sided(line);
    for (std::size_t m = 0; m < 6; ++m) CHECK(std::abs(spec.at(2, m, 1) - naive[m]) < 1e-12);
    CHECK(max_abs_diff(irfft(spec, 10, 1), x) < 1e-12);
}

TEST_CASE("fft usage errors") {
    CHECK_THROWS_AS(rfft(RealTensor(Shape{4}), 1), UsageError);
    CHECK_THROWS_AS(irfft(ComplexTensor(Shape{5}), 10, 0), UsageError);
    CHECK_THROWS_AS(irfft(ComplexTensor(Shape{5}), 6, 0), UsageError);
}

}
