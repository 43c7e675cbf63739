#include "neutsflow/op/model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "neutsflow/numerics/random.hpp"

namespace neutsflow::op {

namespace ad = numerics::ad;
using numerics::Complex;
using numerics::Rng;

namespace {

struct Spec {
    std::string name;
    Shape shape;
    bool complex;
    double scale;
};

std::vector<Spec> param_specs(const ModelConfig& cfg) {
    const OperatorDims& d = cfg.dims;
    std::vector<Spec> out;
    const auto fan = [](std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
    if (cfg.arch().linear_head) {
        for (const auto& b : cfg.branches()) {
            out.push_back({b + ".linear.weight", {d.L, d.S}, false, fan(d.S)});
            out.push_back({b + ".linear.bias", {d.L}, false, fan(d.S)});
        }
        return out;
    }
    const std::size_t F = d.lifted_channels() * d.k;
    out.push_back({"expand.weight", {1, d.k}, false, 1.0});
    for (const auto& b : cfg.branches()) {
        out.push_back({b + ".mlp.w1", {d.hidden, d.S}, false, fan(d.S)});
        out.push_back({b + ".mlp.b1", {d.hidden}, false, fan(d.S)});
        out.push_back({b + ".mlp.w2", {d.L, d.hidden}, false, fan(d.hidden)});
        out.push_back({b + ".mlp.b2", {d.L}, false, fan(d.hidden)});
        out.push_back({b + ".spectral.kernel", {d.k, d.k, d.modes()}, true, 1.0 / static_cast<double>(d.k)});
        out.push_back({b + ".proj.weight", {d.C, F}, false, fan(F)});
        out.push_back({b + ".proj.bias", {d.C}, false, fan(F)});
    }
    return out;
}

RealTensor constant_channel(std::size_t B, std::size_t L, std::span<const double> t) {
    RealTensor out(Shape{B, 1, L});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t l = 0; l < L; ++l) out[b * L + l] = t[b];
    return out;
}

Var add_all(Tape& tape, std::span<const Var> parts) {
    Var acc = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = ad::add(tape, acc, parts[i]);
    return acc;
}

Var spectral_branch(Tape& tape, const ModelConfig& cfg, const BoundParams& p, const std::string& b, Var g_norm,
                    Var emb, Var t_channel) {
    const OperatorDims& d = cfg.dims;
    const std::vector<Var> parts{g_norm, emb, t_channel};
    const Var z0 = ad::concat(tape, parts, 1);
    const Var z1 = ad::expand_outer(tape, z0, p.real("expand.weight"));
    CVar x = ad::slice_last(tape, ad::rfft_last(tape, z1), d.modes());
    x = ad::complex_contract(tape, x, p.complex(b + ".spectral.kernel"));
    const Var y = ad::irfft_last(tape, ad::pad_last(tape, x, d.L / 2 + 1), d.L);
    return ad::mix_features(tape, y, p.real(b + ".proj.weight"), p.real(b + ".proj.bias"));
}

void check_state(const ModelConfig& cfg, const Shape& s, std::size_t B, const char* what) {
    if (s != Shape{B, cfg.dims.C, cfg.dims.L})
        throw UsageError(std::string(what) + ": expected [" + std::to_string(B) + "," + std::to_string(cfg.dims.C) +
                         "," + std::to_string(cfg.dims.L) + "], got " + numerics::shape_string(s));
}

} // namespace

ParameterSet init_params(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ParameterSet ps;
    for (const Spec& s : param_specs(cfg)) {
        if (s.complex) {
            ComplexTensor t(s.shape);
            for (auto& v : t.values()) {
                const double re = rng.uniform(-1.0, 1.0), im = rng.uniform(-1.0, 1.0);
                v = Complex(re, im) * s.scale;
            }
            ps.add(s.name, std::move(t));
        } else {
            RealTensor t(s.shape);
            for (auto& v : t.values()) v = rng.uniform(-s.scale, s.scale);
            ps.add(s.name, std::move(t));
        }
    }
    return ps;
}

void check_params(const ModelConfig& cfg, const ParameterSet& params) {
    const auto specs = param_specs(cfg);
    if (specs.size() != params.size())
        throw UsageError("parameters: expected " + std::to_string(specs.size()) + " tensors for variant " +
                         to_string(cfg.variant) + ", got " + std::to_string(params.size()));
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (params.name(i) != specs[i].name || params.is_complex(i) != specs[i].complex ||
            params.shape(i) != specs[i].shape)
            throw UsageError("parameters: entry " + std::to_string(i) + " is " + params.name(i) + " " +
                             numerics::shape_string(params.shape(i)) + ", expected " + specs[i].name + " " +
                             numerics::shape_string(specs[i].shape));
}

std::string parameter_summary(const ParameterSet& params) {
    std::ostringstream os;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::size_t n = numerics::numel(params.shape(i));
        os << params.name(i) << ' ' << numerics::shape_string(params.shape(i)) << (params.is_complex(i) ? " complex " : " real ")
           << n << '\n';
    }
    os << "total scalars " << params.scalar_count() << '\n';
    return os.str();
}

BoundParams::BoundParams(Tape& tape, const ParameterSet& params, bool trainable) : params_(&params) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& v = params.value(i);
        if (const auto* r = std::get_if<RealTensor>(&v))
            ids_.push_back(trainable ? tape.variable(*r).id : tape.constant(*r).id);
        else {
            const auto& c = std::get<ComplexTensor>(v);
            ids_.push_back(trainable ? tape.variable(c).id : tape.constant(c).id);
        }
    }
}

Var BoundParams::real(std::string_view name) const { return Var{ids_[params_->index(name)]}; }
CVar BoundParams::complex(std::string_view name) const { return CVar{ids_[params_->index(name)]}; }

GradientRecord BoundParams::gradients(const Tape& tape) const {
    GradientRecord g = params_->zeros_like();
    for (std::size_t i = 0; i < params_->size(); ++i) {
        if (params_->is_complex(i))
            std::get<ComplexTensor>(g.value(i)) = tape.grad(CVar{ids_[i]});
        else
            std::get<RealTensor>(g.value(i)) = tape.grad(Var{ids_[i]});
    }
    return g;
}

Prepared prepare(const ModelConfig& cfg, const RealTensor& history) {
    const OperatorDims& d = cfg.dims;
    if (history.rank() != 3 || history.dim(1) != d.C || history.dim(2) != d.S)
        throw UsageError("history: expected [B," + std::to_string(d.C) + "," + std::to_string(d.S) + "], got " +
                         numerics::shape_string(history.shape()));
    Prepared p;
    p.batch = history.dim(0);
    const Architecture a = cfg.arch();
    p.stats = a.normalize ? row_stats(history, d.eps_norm) : NormStats::identity(p.batch * d.C);
    RealTensor hn = normalize_rows(history, p.stats);
    if (a.decompose) {
        auto [trend, season] = decompose_rows(hn, d.K);
        p.branch_inputs.push_back(std::move(trend));
        p.branch_inputs.push_back(std::move(season));
    } else {
        p.branch_inputs.push_back(std::move(hn));
    }
    return p;
}

std::vector<Var> embed(Tape& tape, const ModelConfig& cfg, const BoundParams& p, const Prepared& prep) {
    const auto branches = cfg.branches();
    std::vector<Var> out;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const std::string& b = branches[i];
        const Var x = tape.constant(prep.branch_inputs.at(i));
        if (cfg.arch().linear_head) {
            out.push_back(ad::linear(tape, x, p.real(b + ".linear.weight"), p.real(b + ".linear.bias")));
        } else {
            const Var h = ad::gelu(tape, ad::linear(tape, x, p.real(b + ".mlp.w1"), p.real(b + ".mlp.b1")));
            out.push_back(ad::linear(tape, h, p.real(b + ".mlp.w2"), p.real(b + ".mlp.b2")));
        }
    }
    return out;
}

Var path_source(Tape& tape, const Prepared& prep, std::span<const Var> embeddings) {
    return ad::denormalize_rows(tape, add_all(tape, embeddings), prep.stats.mu, prep.stats.sigma);
}

Var predict(Tape& tape, const ModelConfig& cfg, const BoundParams& p, const Prepared& prep,
            std::span<const Var> embeddings, Var state, std::span<const double> t) {
    const std::size_t B = prep.batch;
    if (cfg.arch().linear_head) return path_source(tape, prep, embeddings);
    check_state(cfg, tape.value(state).shape(), B, "path state");
    if (t.size() != B) throw UsageError("predict: need one flow time per batch entry");
    for (double ti : t)
        if (!(ti >= 0.0 && ti <= 1.0)) throw UsageError("predict: flow time outside [0, 1]");
    const Var g_norm = ad::normalize_rows(tape, state, prep.stats.mu, prep.stats.sigma);
    const Var t_channel = tape.constant(constant_channel(B, cfg.dims.L, t));
    const auto branches = cfg.branches();
    std::vector<Var> outs;
    for (std::size_t i = 0; i < branches.size(); ++i)
        outs.push_back(spectral_branch(tape, cfg, p, branches[i], g_norm, embeddings[i], t_channel));
    return ad::denormalize_rows(tape, add_all(tape, outs), prep.stats.mu, prep.stats.sigma);
}

Predictor::Predictor(const ModelConfig& cfg, const ParameterSet& params, const RealTensor& history)
    : cfg_(&cfg), params_(&params), prep_(prepare(cfg, history)) {
    check_params(cfg, params);
    Tape tape;
    const BoundParams p(tape, params, false);
    const auto emb = embed(tape, cfg, p, prep_);
    for (Var e : emb) embeddings_.push_back(tape.value(e));
    source_ = tape.value(path_source(tape, prep_, emb));
}

RealTensor Predictor::operator()(const RealTensor& state, std::span<const double> t) const {
    Tape tape;
    const BoundParams p(tape, *params_, false);
    std::vector<Var> emb;
    for (const auto& e : embeddings_) emb.push_back(tape.constant(e));
    return tape.value(predict(tape, *cfg_, p, prep_, emb, tape.constant(state), t));
}

RealTensor Predictor::operator()(const RealTensor& state, double t) const {
    const std::vector<double> ts(prep_.batch, t);
    return (*this)(state, ts);
}

RealTensor to_batch(std::span<const RealTensor> windows) {
    if (windows.empty()) throw UsageError("to_batch: no windows");
    const Shape& s0 = windows[0].shape();
    if (s0.size() != 2) throw UsageError("to_batch: windows must be [time, C]");
    const std::size_t T = s0[0], C = s0[1];
    RealTensor out(Shape{windows.size(), C, T});
    for (std::size_t b = 0; b < windows.size(); ++b) {
        numerics::require_same_shape(windows[b].shape(), s0, "to_batch");
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t c = 0; c < C; ++c) out[(b * C + c) * T + t] = windows[b][t * C + c];
    }
    return out;
}

RealTensor window_of(const RealTensor& batch, std::size_t b) {
    const std::size_t C = batch.dim(1), T = batch.dim(2);
    RealTensor out(Shape{T, C});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < T; ++t) out[t * C + c] = batch[(b * C + c) * T + t];
    return out;
}

namespace {

// [L, F, k] <-> [1, F, k, L]
RealTensor lift_time_last(const RealTensor& x) {
    if (x.rank() != 3) throw UsageError("expected an [L, F, k] tensor");
    const std::size_t L = x.dim(0), F = x.dim(1), k = x.dim(2);
    return numerics::transpose_last2(x.reshaped({L, F * k})).reshaped({1, F, k, L});
}

RealTensor lower_time_major(const RealTensor& x) {
    const std::size_t F = x.dim(1), k = x.dim(2), L = x.dim(3);
    return numerics::transpose_last2(x.reshaped({F * k, L})).reshaped({L, F, k});
}

RealTensor single(const RealTensor& w) { return to_batch(std::span<const RealTensor>(&w, 1)); }

} // namespace

RealTensor embed_history(const RealTensor& H_branch, const ParameterSet& params, std::string_view branch) {
    const std::string b(branch);
    const RealTensor& w1 = params.real(b + ".mlp.w1");
    if (H_branch.rank() != 2 || H_branch.dim(0) != w1.dim(1))
        throw UsageError("embed_history: H " + numerics::shape_string(H_branch.shape()) + " does not have " +
                         std::to_string(w1.dim(1)) + " time steps");
    Tape tape;
    const BoundParams p(tape, params, false);
    const Var x = tape.constant(single(H_branch));
    const Var h = ad::gelu(tape, ad::linear(tape, x, p.real(b + ".mlp.w1"), p.real(b + ".mlp.b1")));
    return window_of(tape.value(ad::linear(tape, h, p.real(b + ".mlp.w2"), p.real(b + ".mlp.b2"))), 0);
}

RealTensor assemble_input(const RealTensor& G, const RealTensor& H_emb, double t) {
    numerics::require_same_shape(G.shape(), H_emb.shape(), "assemble_input");
    if (G.rank() != 2) throw UsageError("assemble_input: expected [L, C]");
    if (!(t >= 0.0 && t <= 1.0)) throw UsageError("assemble_input: t outside [0, 1]");
    const std::size_t L = G.dim(0), C = G.dim(1);
    RealTensor z(Shape{L, 2 * C + 1});
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t c = 0; c < C; ++c) {
            z.at(l, c) = G.at(l, c);
            z.at(l, C + c) = H_emb.at(l, c);
        }
        z.at(l, 2 * C) = t;
    }
    return z;
}

RealTensor dimension_expand(const RealTensor& z0, const RealTensor& W_e) {
    if (z0.rank() != 2) throw UsageError("dimension_expand: expected [L, F]");
    Tape tape;
    const Var z = tape.constant(numerics::transpose_last2(z0).reshaped({1, z0.dim(1), z0.dim(0)}));
    const RealTensor y = tape.value(ad::expand_outer(tape, z, tape.constant(W_e)));
    return lower_time_major(y);
}

RealTensor spectral_layer(const RealTensor& z1, const ComplexTensor& W) {
    if (z1.rank() != 3 || W.rank() != 3 || W.dim(0) != z1.dim(2) || W.dim(1) != z1.dim(2))
        throw UsageError("spectral_layer: z1 " + numerics::shape_string(z1.shape()) + " incompatible with W " +
                         numerics::shape_string(W.shape()));
    const std::size_t L = z1.dim(0);
    if (W.dim(2) > L / 2 + 1) throw UsageError("spectral_layer: more modes than the spectrum holds");
    Tape tape;
    CVar x = ad::slice_last(tape, ad::rfft_last(tape, tape.constant(lift_time_last(z1))), W.dim(2));
    x = ad::complex_contract(tape, x, tape.constant(W));
    return lower_time_major(tape.value(ad::irfft_last(tape, ad::pad_last(tape, x, L / 2 + 1), L)));
}

RealTensor project(const RealTensor& Y, const RealTensor& weight, const RealTensor& bias) {
    if (Y.rank() != 3) throw UsageError("project: expected [L, F, k]");
    Tape tape;
    const Var y = ad::mix_features(tape, tape.constant(lift_time_last(Y)), tape.constant(weight), tape.constant(bias));
    return window_of(tape.value(y), 0);
}

RealTensor forward(const OperatorInput& input, const ModelConfig& cfg, const ParameterSet& params) {
    const Predictor pred(cfg, params, single(input.H));
    return window_of(pred(single(input.G), input.t), 0);
}

RealTensor history_source(const RealTensor& H, const ModelConfig& cfg, const ParameterSet& params) {
    return window_of(Predictor(cfg, params, single(H)).source(), 0);
}

} // namespace neutsflow::op
