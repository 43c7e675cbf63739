#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "neutsflow/numerics/gradcheck.hpp"
#include "neutsflow/op/checkpoint.hpp"
#include "neutsflow/op/model.hpp"
#include "oracles/naive.hpp"

using namespace neutsflow;
using namespace neutsflow::op;
using numerics::max_abs_diff;

namespace {

ModelConfig small_config(Variant v = Variant::full) {
    ModelConfig c;
    c.dims = OperatorDims{16, 12, 2, 3, 2, 4, 5, 1e-5};
    c.variant = v;
    return c;
}

std::vector<double> vec(const RealTensor& t) { return {t.values().begin(), t.values().end()}; }

double norm2(const RealTensor& t) {
    double s = 0;
    for (double v : t.values()) s += v * v;
    return std::sqrt(s);
}

RealTensor sub(const RealTensor& a, const RealTensor& b) {
    RealTensor d = a;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= b[i];
    return d;
}

OperatorInput random_input(const ModelConfig& c, std::uint64_t seed) {
    return {testing::random_real({c.dims.S, c.dims.C}, seed, -2.0, 2.0),
            testing::random_real({c.dims.L, c.dims.C}, seed + 1, -2.0, 2.0), 0.37};
}

} // namespace

TEST_SUITE("operator") {

TEST_CASE("instance normalization") {
    SUBCASE("two-point example") {
        auto [hn, s] = instance_normalize(RealTensor({2, 1}, {1.0, 3.0}));
        CHECK(hn == RealTensor({2, 1}, {-1.0, 1.0}));
        CHECK(s.mu[0] == 2.0);
        CHECK(s.sigma[0] == 1.0);
    }
    SUBCASE("constant channel collapses to zero with sigma = eps") {
        auto [hn, s] = instance_normalize(RealTensor({4, 1}, 5.0), 1e-5);
        for (double v : hn.values()) CHECK(v == 0.0);
        CHECK(s.sigma[0] == 1e-5);
    }
    SUBCASE("moments and round trip on random windows") {
        const RealTensor H = testing::random_real({96, 3}, 4, -5.0, 9.0);
        auto [hn, s] = instance_normalize(H);
        for (std::size_t c = 0; c < 3; ++c) {
            double m = 0, v = 0;
            for (std::size_t t = 0; t < 96; ++t) m += hn.at(t, c);
            m /= 96;
            for (std::size_t t = 0; t < 96; ++t) v += (hn.at(t, c) - m) * (hn.at(t, c) - m);
            CHECK(std::abs(m) < 1e-10);
            CHECK(std::abs(std::sqrt(v / 96) - 1.0) < 1e-8);
        }
        CHECK(max_abs_diff(denormalize(hn, s), H) < 1e-10);
    }
    SUBCASE("denormalize edge cases") {
        const NormStats s{{1.5, -2.0}, {2.0, 3.0}};
        const RealTensor y = denormalize(RealTensor(Shape{5, 2}), s);
        for (std::size_t t = 0; t < 5; ++t) {
            CHECK(y.at(t, 0) == 1.5);
            CHECK(y.at(t, 1) == -2.0);
        }
        const RealTensor r = testing::random_real({5, 2}, 8);
        CHECK(denormalize(r, NormStats::identity(2)) == r);
        CHECK_THROWS_AS(denormalize(RealTensor(Shape{5, 3}), s), UsageError);
    }
    CHECK_THROWS_AS(instance_normalize(RealTensor(Shape{1, 2})), UsageError);
}

TEST_CASE("TopK spectral decomposition") {
    SUBCASE("a grid cosine is pure season") {
        RealTensor h(Shape{24, 1});
        for (std::size_t t = 0; t < 24; ++t) h[t] = std::cos(2.0 * std::numbers::pi * 3.0 * t / 24.0);
        auto [trend, season] = spectral_decompose(h, 1);
        CHECK(max_abs_diff(season, h) < 1e-9);
        CHECK(norm2(trend) < 1e-9);
    }
    SUBCASE("keeping every bin returns the input as season") {
        const RealTensor h = testing::random_real({17, 2}, 3);
        auto [trend, season] = spectral_decompose(h, 9);
        CHECK(max_abs_diff(season, h) < 1e-9);
        CHECK(norm2(trend) < 1e-9);
    }
    SUBCASE("linear ramp matches a single-bin naive reconstruction") {
        std::vector<double> ramp(20);
        for (std::size_t t = 0; t < 20; ++t) ramp[t] = static_cast<double>(t) / 19.0 - 0.5;
        const auto spec = oracle::dft_one_sided(ramp);
        std::size_t best = 0;
        for (std::size_t m = 1; m < spec.size(); ++m)
            if (std::abs(spec[m]) > std::abs(spec[best])) best = m;
        std::vector<oracle::cd> kept(spec.size());
        kept[best] = spec[best];
        const auto expected = oracle::idft_one_sided(kept, 20);
        auto [trend, season] = spectral_decompose(RealTensor({20, 1}, ramp), 1);
        for (std::size_t t = 0; t < 20; ++t) {
            CHECK(std::abs(season[t] - expected[t]) < 1e-12);
            CHECK(trend[t] + season[t] == doctest::Approx(ramp[t]).epsilon(1e-15));
        }
    }
    SUBCASE("trend + season reproduces the input to machine precision") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const RealTensor h = testing::random_real({96, 3}, seed, -4.0, 4.0);
            auto [trend, season] = spectral_decompose(h, 1 + seed % 7);
            for (std::size_t i = 0; i < h.size(); ++i)
                CHECK(std::abs(trend[i] + season[i] - h[i]) <= 4 * std::numeric_limits<double>::epsilon() * 4.0);
        }
    }
    SUBCASE("ties go to the lower index and DC competes") {
        CHECK(topk_bins({1.0, 5.0, 5.0, 2.0}, 1) == std::vector<std::size_t>{1});
        CHECK(topk_bins({9.0, 5.0, 5.0, 2.0}, 2) == std::vector<std::size_t>{0, 1});
        CHECK(topk_bins({3.0, 3.0, 3.0}, 2) == std::vector<std::size_t>{0, 1});
    }
    CHECK_THROWS_AS(spectral_decompose(RealTensor(Shape{8, 1}), 0), UsageError);
    CHECK_THROWS_AS(spectral_decompose(RealTensor(Shape{8, 1}), 6), UsageError);
}

TEST_CASE("history embedding") {
    const ModelConfig cfg = small_config();
    ParameterSet p = init_params(cfg, 1);
    SUBCASE("zero history through a zero-bias MLP is zero") {
        p.real("trend.mlp.b1").fill(0.0);
        p.real("trend.mlp.b2").fill(0.0);
        const RealTensor e = embed_history(RealTensor(Shape{16, 2}), p, "trend");
        CHECK(e.shape() == Shape{12, 2});
        for (double v : e.values()) CHECK(v == 0.0);
    }
    SUBCASE("identical channels stay identical") {
        RealTensor h(Shape{16, 2});
        for (std::size_t t = 0; t < 16; ++t) h.at(t, 0) = h.at(t, 1) = std::sin(0.3 * t);
        const RealTensor e = embed_history(h, p, "season");
        for (std::size_t t = 0; t < 12; ++t) CHECK(e.at(t, 0) == e.at(t, 1));
    }
    SUBCASE("matches a per-channel dense oracle") {
        const RealTensor h = testing::random_real({16, 2}, 7);
        const RealTensor e = embed_history(h, p, "trend");
        for (std::size_t c = 0; c < 2; ++c) {
            std::vector<double> x(16);
            for (std::size_t t = 0; t < 16; ++t) x[t] = h.at(t, c);
            const auto y = oracle::mlp(x, vec(p.real("trend.mlp.w1")), vec(p.real("trend.mlp.b1")),
                                       vec(p.real("trend.mlp.w2")), vec(p.real("trend.mlp.b2")));
            for (std::size_t t = 0; t < 12; ++t) CHECK(std::abs(e.at(t, c) - y[t]) < 1e-12);
        }
    }
    CHECK_THROWS_AS(embed_history(RealTensor(Shape{15, 2}), p, "trend"), UsageError);
}

TEST_CASE("input assembly and dimension expansion") {
    const RealTensor z0 = assemble_input(RealTensor({2, 1}, {1, 2}), RealTensor({2, 1}, {3, 4}), 0.5);
    CHECK(z0 == RealTensor({2, 3}, {1, 3, 0.5, 2, 4, 0.5}));
    const RealTensor g = testing::random_real({5, 2}, 1);
    for (double t : {0.0, 1.0}) {
        const RealTensor z = assemble_input(g, g, t);
        for (std::size_t l = 0; l < 5; ++l) CHECK(z.at(l, 4) == t);
    }
    CHECK_THROWS_AS(assemble_input(g, RealTensor(Shape{5, 3}), 0.1), UsageError);
    CHECK_THROWS_AS(assemble_input(g, g, 1.5), UsageError);

    const RealTensor one = dimension_expand(z0, RealTensor({1, 1}, {1.0}));
    CHECK(one.shape() == Shape{2, 3, 1});
    CHECK(one.storage() == z0.storage());
    const RealTensor two = dimension_expand(z0, RealTensor({1, 2}, {1.0, -1.0}));
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t f = 0; f < 3; ++f) {
            CHECK(two.at(l, f, 0) == z0.at(l, f));
            CHECK(two.at(l, f, 1) == -z0.at(l, f));
        }
    const RealTensor zr = testing::random_real({7, 4}, 2);
    const RealTensor we = testing::random_real({1, 3}, 3);
    const RealTensor ex = dimension_expand(zr, we);
    for (std::size_t l = 0; l < 7; ++l)
        for (std::size_t f = 0; f < 4; ++f)
            for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(ex.at(l, f, j) - zr.at(l, f) * we[j]) < 1e-12);
}

TEST_CASE("spectral layer") {
    const auto identity = [](std::size_t k, std::size_t M) {
        ComplexTensor w(Shape{k, k, M});
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t m = 0; m < M; ++m) w.at(i, i, m) = numerics::Complex(1.0, 0.0);
        return w;
    };
    const RealTensor z1 = testing::random_real({12, 3, 2}, 11);
    SUBCASE("identity kernel with every mode kept is a no-op") {
        CHECK(max_abs_diff(spectral_layer(z1, identity(2, 7)), z1) < 1e-9);
    }
    SUBCASE("identity kernel with one mode keeps the mean") {
        const RealTensor y = spectral_layer(z1, identity(2, 1));
        for (std::size_t f = 0; f < 3; ++f)
            for (std::size_t j = 0; j < 2; ++j) {
                double mean = 0;
                for (std::size_t l = 0; l < 12; ++l) mean += z1.at(l, f, j);
                mean /= 12;
                for (std::size_t l = 0; l < 12; ++l) CHECK(std::abs(y.at(l, f, j) - mean) < 1e-12);
            }
    }
    SUBCASE("matches a naive DFT and loop oracle") {
        const RealTensor z = testing::random_real({8, 3, 2}, 12);
        const ComplexTensor w = testing::random_complex({2, 2, 3}, 13);
        const RealTensor y = spectral_layer(z, w);
        const auto want = oracle::spectral_layer(vec(z), 8, 3, 2, {w.values().begin(), w.values().end()}, 3);
        for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(y[i] - want[i]) < 1e-9);
    }
    SUBCASE("truncation error decreases monotonically with more modes") {
        const RealTensor z = testing::random_real({32, 2, 2}, 14);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t M = 1; M <= 17; ++M) {
            const double err = norm2(sub(spectral_layer(z, identity(2, M)), z));
            CHECK(err <= prev + 1e-12);
            prev = err;
        }
        CHECK(prev < 1e-9);
    }
    SUBCASE("band-limited input gives the same function at two resolutions") {
        const ComplexTensor w = testing::random_complex({2, 2, 5}, 15);
        const auto sample = [](std::size_t L) {
            RealTensor z(Shape{L, 2, 2});
            for (std::size_t l = 0; l < L; ++l) {
                const double tau = static_cast<double>(l) / static_cast<double>(L);
                for (std::size_t f = 0; f < 2; ++f)
                    for (std::size_t j = 0; j < 2; ++j)
                        z.at(l, f, j) = 0.3 * f - 0.2 * j + std::cos(2 * std::numbers::pi * tau + f + j) +
                                        0.5 * std::sin(2 * std::numbers::pi * 3 * tau + 0.4 * j);
            }
            return z;
        };
        const RealTensor coarse = spectral_layer(sample(32), w);
        const RealTensor fine = spectral_layer(sample(64), w);
        RealTensor restricted(Shape{32, 2, 2});
        for (std::size_t l = 0; l < 32; ++l)
            for (std::size_t i = 0; i < 4; ++i) restricted[l * 4 + i] = fine[2 * l * 4 + i];
        CHECK(norm2(sub(restricted, coarse)) / norm2(coarse) < 0.05);
        CHECK(norm2(sub(restricted, coarse)) / norm2(coarse) < 1e-10);
    }
    CHECK_THROWS_AS(spectral_layer(z1, identity(3, 2)), UsageError);
    CHECK_THROWS_AS(spectral_layer(z1, identity(2, 8)), UsageError);
}

TEST_CASE("projection") {
    CHECK(norm2(project(RealTensor(Shape{4, 3, 2}), RealTensor(Shape{2, 6}), RealTensor(Shape{2}))) == 0.0);
    const RealTensor y = testing::random_real({4, 3, 1}, 1);
    const RealTensor s = project(y, RealTensor({1, 3}, 1.0), RealTensor(Shape{1}));
    for (std::size_t l = 0; l < 4; ++l) CHECK(s[l] == doctest::Approx(y.at(l, 0, 0) + y.at(l, 1, 0) + y.at(l, 2, 0)));
    const RealTensor Y = testing::random_real({5, 3, 2}, 2);
    const RealTensor W = testing::random_real({2, 6}, 3);
    const RealTensor b = testing::random_real({2}, 4);
    const RealTensor out = project(Y, W, b);
    for (std::size_t l = 0; l < 5; ++l)
        for (std::size_t c = 0; c < 2; ++c) {
            double acc = b[c];
            for (std::size_t f = 0; f < 6; ++f) acc += W.at(c, f) * Y[l * 6 + f];
            CHECK(std::abs(out.at(l, c) - acc) < 1e-12);
        }
}

TEST_CASE("forward pipeline") {
    const ModelConfig cfg = small_config();
    const ParameterSet p = init_params(cfg, 3);
    const OperatorInput in = random_input(cfg, 20);
    const RealTensor y = forward(in, cfg, p);
    CHECK(y.shape() == Shape{12, 2});

    SUBCASE("shift equivariance") {
        OperatorInput shifted = in;
        const double c[2] = {3.25, -7.5};
        for (std::size_t i = 0; i < shifted.H.size(); ++i) shifted.H[i] += c[i % 2];
        for (std::size_t i = 0; i < shifted.G.size(); ++i) shifted.G[i] += c[i % 2];
        const RealTensor ys = forward(shifted, cfg, p);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(ys[i] - (y[i] + c[i % 2])) < 1e-8);
    }
    SUBCASE("positive scale equivariance") {
        OperatorInput scaled = in;
        for (auto& v : scaled.H.values()) v *= 4.5;
        for (auto& v : scaled.G.values()) v *= 4.5;
        const RealTensor ys = forward(scaled, cfg, p);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(ys[i] - 4.5 * y[i]) < 1e-8);
    }
    SUBCASE("identity normalization breaks shift equivariance") {
        const ModelConfig raw = small_config(Variant::wo_normalization);
        const ParameterSet q = init_params(raw, 3);
        OperatorInput shifted = in;
        for (auto& v : shifted.H.values()) v += 5.0;
        for (auto& v : shifted.G.values()) v += 5.0;
        const RealTensor a = forward(in, raw, q), b = forward(shifted, raw, q);
        double worst = 0;
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(b[i] - a[i] - 5.0));
        CHECK(worst > 1e-3);
    }
    SUBCASE("batched evaluation equals per-window evaluation") {
        std::vector<RealTensor> hs, gs;
        for (std::uint64_t s = 0; s < 3; ++s) {
            hs.push_back(testing::random_real({16, 2}, 40 + s));
            gs.push_back(testing::random_real({12, 2}, 50 + s));
        }
        const Predictor pred(cfg, p, to_batch(hs));
        const std::vector<double> ts{0.0, 0.4, 1.0};
        const RealTensor batch = pred(to_batch(gs), ts);
        for (std::size_t b = 0; b < 3; ++b)
            CHECK(window_of(batch, b) == forward({hs[b], gs[b], ts[b]}, cfg, p));
    }
    CHECK_THROWS_AS(forward({in.H, in.G, 1.2}, cfg, p), UsageError);
    CHECK_THROWS_AS(forward({in.H, RealTensor(Shape{11, 2}), 0.1}, cfg, p), UsageError);
}

TEST_CASE("initialization") {
    const ModelConfig cfg = small_config();
    CHECK(init_params(cfg, 5) == init_params(cfg, 5));
    CHECK(!(init_params(cfg, 5) == init_params(cfg, 6)));
    CHECK(init_params(cfg, 5).complex("trend.spectral.kernel").shape() == Shape{3, 3, 4});

    ModelConfig big;
    big.dims.C = 7;
    const ParameterSet p = init_params(big, 0);
    const OperatorInput in{testing::random_real({96, 7}, 1), testing::random_real({96, 7}, 2), 0.5};
    const double rms = norm2(forward(in, big, p)) / std::sqrt(96.0 * 7.0);
    CHECK(rms >= 1e-3);
    CHECK(rms <= 10.0);
    CHECK(big.dims.modes() == 32);
    CHECK(parameter_summary(p).find("total scalars") != std::string::npos);
}

TEST_CASE("variants own the tensors they need") {
    const ModelConfig lin = small_config(Variant::wo_neural_operator);
    const ParameterSet pl = init_params(lin, 1);
    const ParameterSet pf = init_params(small_config(), 1);
    CHECK(pl.contains("trend.linear.weight"));
    CHECK(!pl.contains("expand.weight"));
    CHECK(pl.scalar_count() < pf.scalar_count());
    const ParameterSet ps = init_params(small_config(Variant::wo_spectral_decomposition), 1);
    CHECK(ps.contains("series.mlp.w1"));
    CHECK(!ps.contains("season.mlp.w1"));
    CHECK_THROWS_AS(check_params(small_config(), pl), UsageError);

    SUBCASE("the linear head ignores the path state and time") {
        const OperatorInput a = random_input(lin, 3);
        OperatorInput b = a;
        b.G = testing::random_real({12, 2}, 99);
        b.t = 0.9;
        CHECK(forward(a, lin, pl) == forward(b, lin, pl));
        CHECK(forward(a, lin, pl) == history_source(a.H, lin, pl));
    }
}

TEST_CASE("end-to-end gradient check of forward + MSE") {
    for (Variant v : all_variants()) {
        CAPTURE(to_string(v));
        const ModelConfig cfg = small_config(v);
        const ParameterSet params = init_params(cfg, 9);
        std::vector<RealTensor> hs, gs, fs;
        for (std::uint64_t s = 0; s < 3; ++s) {
            hs.push_back(testing::random_real({16, 2}, 60 + s, -2.0, 2.0));
            gs.push_back(testing::random_real({12, 2}, 70 + s, -2.0, 2.0));
            fs.push_back(testing::random_real({12, 2}, 80 + s, -2.0, 2.0));
        }
        const RealTensor H = to_batch(hs), G = to_batch(gs), F = to_batch(fs);
        const std::vector<double> ts{0.1, 0.5, 0.8};
        const numerics::LossFn loss = [&](const ParameterSet& ps, numerics::GradientRecord* g) {
            Tape tape;
            const BoundParams bound(tape, ps, g != nullptr);
            const Prepared prep = prepare(cfg, H);
            const auto emb = embed(tape, cfg, bound, prep);
            const Var y = predict(tape, cfg, bound, prep, emb, tape.constant(G), ts);
            const Var l = numerics::ad::mse(tape, y, F);
            if (g) {
                tape.backward(l);
                *g = bound.gradients(tape);
            }
            return tape.value(l)[0];
        };
        numerics::GradCheckOptions opt;
        opt.samples = 200;
        opt.seed = 1;
        const auto r = numerics::grad_check(loss, params, opt);
        CHECK(r.max_relative_error < 1e-4);
        CHECK(r.checked > 0);
    }
}

TEST_CASE("checkpoint round trip") {
    Checkpoint ck;
    ck.config = small_config();
    ck.seed = 77;
    ck.params = init_params(ck.config, 77);
    ck.buffers.add("scaler.mean", testing::random_real({2}, 1));
    ck.set_attribute("task", "CFT");
    const std::string bytes = serialize(ck);
    const Checkpoint back = deserialize(bytes);
    CHECK(serialize(back) == bytes);
    CHECK(back.params == ck.params);
    CHECK(back.buffers == ck.buffers);
    CHECK(back.seed == 77);
    CHECK(*back.attribute("task") == "CFT");
    CHECK(back.config.to_pairs() == ck.config.to_pairs());
    const OperatorInput in = random_input(ck.config, 5);
    CHECK(forward(in, back.config, back.params) == forward(in, ck.config, ck.params));

    const auto path = std::filesystem::temp_directory_path() / "neutsflow_ckpt_test.bin";
    save_checkpoint(ck, path);
    CHECK(serialize(load_checkpoint(path)) == bytes);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(deserialize("XXXX"), DataError);
    CHECK_THROWS_AS(deserialize(std::string_view(bytes).substr(0, bytes.size() - 3)), DataError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.bin"), DataError);
}

}
