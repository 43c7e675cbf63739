#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "neutsflow/error.hpp"
#include "neutsflow/numerics/autodiff.hpp"
#include "neutsflow/numerics/parameters.hpp"

using namespace neutsflow;
using namespace neutsflow::numerics;

namespace {

// Leaves are created from `params` in order; `build` returns the scalar loss.
using Builder = std::function<Var(Tape&, const std::vector<std::size_t>& leaves)>;

double evaluate(const ParameterSet& params, const Builder& build, ParameterSet* grads) {
    Tape tape;
    std::vector<std::size_t> leaves;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params.is_complex(i))
            leaves.push_back(tape.variable(std::get<ComplexTensor>(params.value(i))).id);
        else
            leaves.push_back(tape.variable(std::get<RealTensor>(params.value(i))).id);
    }
    const Var loss = build(tape, leaves);
    if (grads) {
        tape.backward(loss);
        *grads = params.zeros_like();
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (params.is_complex(i))
                std::get<ComplexTensor>(grads->value(i)) = tape.grad(CVar{leaves[i]});
            else
                std::get<RealTensor>(grads->value(i)) = tape.grad(Var{leaves[i]});
        }
    }
    return tape.value(loss)[0];
}

// Central differences on every scalar; returns the worst mixed abs/rel error.
double fd_error(const ParameterSet& params, const Builder& build, double eps = 1e-6) {
    ParameterSet grads;
    evaluate(params, build, &grads);
    ParameterSet probe = params;
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        auto flat = probe.flat(i);
        const auto g = grads.flat(i);
        for (std::size_t j = 0; j < flat.size(); ++j) {
            const double keep = flat[j];
            flat[j] = keep + eps;
            const double up = evaluate(probe, build, nullptr);
            flat[j] = keep - eps;
            const double down = evaluate(probe, build, nullptr);
            flat[j] = keep;
            const double numeric = (up - down) / (2 * eps);
            worst = std::max(worst, std::abs(numeric - g[j]) / std::max(1.0, std::abs(numeric)));
        }
    }
    return worst;
}

// Reduces any real node to a scalar with fixed random weights.
Var weigh(Tape& tape, Var y, std::uint64_t seed) {
    const RealTensor w = testing::random_real(tape.value(y).shape(), seed);
    return ad::sum(tape, ad::mul(tape, y, tape.constant(w)));
}

} // namespace

TEST_SUITE("numerics") {

TEST_CASE("gradient of the sum of squares is twice the input") {
    Tape tape;
    const RealTensor p0 = testing::random_real({5}, 1);
    const Var p = tape.variable(p0);
    const Var loss = ad::sum(tape, ad::mul(tape, p, p));
    tape.backward(loss);
    const RealTensor g = tape.grad(p);
    for (std::size_t i = 0; i < 5; ++i) CHECK(g[i] == doctest::Approx(2 * p0[i]).epsilon(1e-14));
}

TEST_CASE("gradient of a least-squares loss is 2 A^T (Ap - y) / n") {
    const std::size_t n = 6, d = 4;
    const RealTensor a = testing::random_real({n, d}, 2);
    const RealTensor p0 = testing::random_real({1, d}, 3);
    const RealTensor y = testing::random_real({1, n}, 4);
    Tape tape;
    const Var p = tape.variable(p0);
    const Var pred = ad::linear(tape, p, tape.constant(a));
    tape.backward(ad::mse(tape, pred, y));
    const RealTensor g = tape.grad(p);
    for (std::size_t j = 0; j < d; ++j) {
        double expected = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = -y[i];
            for (std::size_t k = 0; k < d; ++k) r += a.at(i, k) * p0[k];
            expected += 2.0 * a.at(i, j) * r / n;
        }
        CHECK(g[j] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("backward rejects a non-scalar loss") {
    Tape tape;
    const Var p = tape.variable(RealTensor(Shape{3}));
    CHECK_THROWS_AS(tape.backward(p), UsageError);
}

TEST_CASE("constants receive no gradient and nodes used twice accumulate") {
    Tape tape;
    const Var c = tape.constant(testing::random_real({3}, 5));
    const Var p = tape.variable(testing::random_real({3}, 6));
    const Var loss = ad::sum(tape, ad::add(tape, ad::mul(tape, c, p), p));
    tape.backward(loss);
    const RealTensor g = tape.grad(p);
    for (std::size_t i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(tape.value(c)[i] + 1.0));
    const RealTensor gc = tape.grad(c);
    for (double v : gc.values()) CHECK(v == 0.0);
}

TEST_CASE("finite differences agree with every differentiable op") {
    const double tol = 1e-6;

    SUBCASE("elementwise arithmetic") {
        ParameterSet ps;
        ps.add("a", testing::random_real({2, 3}, 10));
        ps.add("b", testing::random_real({2, 3}, 11));
        const RealTensor c = testing::random_real({2, 3}, 12);
        CHECK(fd_error(ps, [&](Tape& t, const std::vector<std::size_t>& v) {
                  const Var a{v[0]}, b{v[1]};
                  const Var y = ad::sub(t, ad::mul(t, ad::add(t, a, b), a), ad::scale(t, b, 0.7));
                  return weigh(t, ad::add_constant(t, y, c), 13);
              }) < tol);
    }
    SUBCASE("mse") {
        ParameterSet ps;
        ps.add("a", testing::random_real({3, 4}, 14));
        const RealTensor target = testing::random_real({3, 4}, 15);
        CHECK(fd_error(ps, [&](Tape& t, const std::vector<std::size_t>& v) {
                  return ad::mse(t, Var{v[0]}, target);
              }) < tol);
    }
    SUBCASE("gelu") {
        ParameterSet ps;
        ps.add("a", testing::random_real({12}, 16, -3.0, 3.0));
        CHECK(fd_error(ps, [](Tape& t, const std::vector<std::size_t>& v) {
                  return weigh(t, ad::gelu(t, Var{v[0]}), 17);
              }) < tol);
    }
    SUBCASE("linear with and without bias") {
        ParameterSet ps;
        ps.add("x", testing::random_real({2, 3, 5}, 18));
        ps.add("w", testing::random_real({4, 5}, 19));
        ps.add("b", testing::random_real({4}, 20));
        CHECK(fd_error(ps, [](Tape& t, const std::vector<std::size_t>& v) {
                  const Var y1 = ad::linear(t, Var{v[0]}, Var{v[1]}, Var{v[2]});
                  const Var y2 = ad::linear(t, Var{v[0]}, Var{v[1]});
                  return ad::add(t, weigh(t, y1, 21), weigh(t, y2, 22));
              }) < tol);
    }
    SUBCASE("row normalization") {
        ParameterSet ps;
        ps.add("x", testing::random_real({2, 3, 7}, 23));
        const std::vector<double> shift{0.1, -0.2, 0.3, 0.0, 1.0, -1.0};
        const std::vector<double> sc{1.5, 0.5, 2.0, 1.0, 0.25, 3.0};
        CHECK(fd_error(ps, [&](Tape& t, const std::vector<std::size_t>& v) {
                  const Var n = ad::normalize_rows(t, Var{v[0]}, shift, sc);
                  return ad::add(t, weigh(t, n, 24), weigh(t, ad::denormalize_rows(t, Var{v[0]}, shift, sc), 25));
              }) < tol);
    }
    SUBCASE("concat along middle and last axes") {
        ParameterSet ps;
        ps.add("a", testing::random_real({2, 1, 4}, 26));
        ps.add("b", testing::random_real({2, 3, 4}, 27));
        CHECK(fd_error(ps, [](Tape& t, const std::vector<std::size_t>& v) {
                  const std::vector<Var> mid{Var{v[0]}, Var{v[1]}, Var{v[0]}};
                  const std::vector<Var> last{Var{v[1]}, Var{v[1]}};
                  return ad::add(t, weigh(t, ad::concat(t, mid, 1), 28), weigh(t, ad::concat(t, last, 2), 29));
              }) < tol);
    }
    SUBCASE("expand_outer and mix_features") {
        ParameterSet ps;
        ps.add("z", testing::random_real({2, 3, 6}, 30));
        ps.add("we", testing::random_real({1, 4}, 31));
        ps.add("p", testing::random_real({2, 12}, 32));
        ps.add("bias", testing::random_real({2}, 33));
        CHECK(fd_error(ps, [](Tape& t, const std::vector<std::size_t>& v) {
                  const Var z1 = ad::expand_outer(t, Var{v[0]}, Var{v[1]});
                  return weigh(t, ad::mix_features(t, z1, Var{v[2]}, Var{v[3]}), 34);
              }) < tol);
    }
    SUBCASE("spectral pipeline for even and odd lengths") {
        for (std::size_t n : {12, 13}) {
            CAPTURE(n);
            const std::size_t modes = 4;
            ParameterSet ps;
            ps.add("x", testing::random_real({2, 3, 2, n}, 35 + n));
            ps.add("w", testing::random_complex({2, 3, modes}, 36 + n));
            CHECK(fd_error(ps, [&](Tape& t, const std::vector<std::size_t>& v) {
                      const CVar spec = ad::slice_last(t, ad::rfft_last(t, Var{v[0]}), modes);
                      const CVar mixed = ad::complex_contract(t, spec, CVar{v[1]});
                      const Var y = ad::irfft_last(t, ad::pad_last(t, mixed, n / 2 + 1), n);
                      return weigh(t, y, 37);
                  }) < tol);
        }
    }
    SUBCASE("irfft of a free spectrum including the Nyquist bin") {
        ParameterSet ps;
        ps.add("s", testing::random_complex({2, 5}, 38));
        CHECK(fd_error(ps, [](Tape& t, const std::vector<std::size_t>& v) {
                  return weigh(t, ad::irfft_last(t, CVar{v[0]}, 8), 39);
              }) < tol);
    }
}

TEST_CASE("op shape errors are usage errors") {
    Tape tape;
    const Var a = tape.constant(RealTensor(Shape{2, 3}));
    const Var b = tape.constant(RealTensor(Shape{3, 2}));
    CHECK_THROWS_AS(ad::add(tape, a, b), UsageError);
    CHECK_THROWS_AS(ad::linear(tape, a, b), UsageError);
    CHECK_THROWS_AS(ad::expand_outer(tape, a, b), UsageError);
    const CVar s = tape.constant(ComplexTensor(Shape{2, 4}));
    CHECK_THROWS_AS(ad::irfft_last(tape, s, 8), UsageError);
    CHECK_THROWS_AS(ad::slice_last(tape, s, 5), UsageError);
    CHECK_THROWS_AS(ad::pad_last(tape, s, 3), UsageError);
}

}
