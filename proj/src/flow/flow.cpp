#include "neutsflow/flow/flow.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

namespace neutsflow::flow {

namespace ad = numerics::ad;
using numerics::Tape;
using numerics::Var;

void FlowConfig::validate() const {
    if (!(sigma_path >= 0.0)) throw UsageError("flow: sigma_path must be >= 0");
    if (n_steps < 1) throw UsageError("flow: n_steps must be >= 1");
}

Integrator parse_integrator(std::string_view text) {
    if (text == "euler") return Integrator::euler;
    if (text == "midpoint") return Integrator::midpoint;
    throw UsageError("unknown integrator '" + std::string(text) + "' (expected euler or midpoint)");
}

VelocityMode parse_velocity(std::string_view text) {
    if (text == "source") return VelocityMode::source;
    if (text == "state") return VelocityMode::state;
    throw UsageError("unknown velocity mode '" + std::string(text) + "' (expected source or state)");
}

std::string to_string(Integrator v) { return v == Integrator::euler ? "euler" : "midpoint"; }
std::string to_string(VelocityMode v) { return v == VelocityMode::source ? "source" : "state"; }

void TrainConfig::validate() const {
    if (!(adam.lr > 0.0)) throw UsageError("train: lr must be > 0");
    if (batch_size < 1) throw UsageError("train: batch_size must be >= 1");
    if (patience < 1) throw UsageError("train: patience must be >= 1");
    if (max_epochs < 1) throw UsageError("train: max_epochs must be >= 1");
}

PathPoint sample_path_point(const RealTensor& h_emb, const RealTensor& f, double t, double sigma_path, Rng& rng) {
    numerics::require_same_shape(h_emb.shape(), f.shape(), "sample_path_point");
    if (!(t >= 0.0 && t <= 1.0)) throw UsageError("sample_path_point: t outside [0, 1]");
    const double s = sigma_path * t * (1.0 - t);
    PathPoint p{t, RealTensor(f.shape())};
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double xi = sigma_path > 0.0 ? rng.normal() : 0.0;
        p.g[i] = t * f[i] + (1.0 - t) * h_emb[i] + s * xi;
    }
    return p;
}

RealTensor conditional_velocity(const RealTensor& f, const RealTensor& h_emb) {
    numerics::require_same_shape(f.shape(), h_emb.shape(), "conditional_velocity");
    RealTensor v = f;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= h_emb[i];
    return v;
}

Var path_state(Tape& tape, Var h, const RealTensor& f, std::span<const double> t, const RealTensor& noise,
               double sigma_path) {
    const RealTensor& hv = tape.value(h);
    numerics::require_same_shape(hv.shape(), f.shape(), "path_state");
    const std::size_t B = f.dim(0);
    const std::size_t per = f.size() / B;
    if (t.size() != B) throw UsageError("path_state: need one flow time per batch entry");
    const bool noisy = sigma_path > 0.0;
    if (noisy) numerics::require_same_shape(noise.shape(), f.shape(), "path_state noise");
    RealTensor g(f.shape());
    for (std::size_t b = 0; b < B; ++b) {
        const double tb = t[b];
        const double s = sigma_path * tb * (1.0 - tb);
        for (std::size_t i = b * per; i < (b + 1) * per; ++i)
            g[i] = tb * f[i] + (1.0 - tb) * hv[i] + s * (noisy ? noise[i] : 0.0);
    }
    std::vector<double> weights(t.begin(), t.end());
    return Var{tape.push(std::move(g), tape.requires_grad(h), [h, weights, per](Tape& tp, std::size_t self) {
        const RealTensor& up = tp.upstream(self);
        RealTensor& gh = tp.grad_buffer(h);
        for (std::size_t b = 0; b < weights.size(); ++b)
            for (std::size_t i = b * per; i < (b + 1) * per; ++i) gh[i] += (1.0 - weights[b]) * up[i];
    })};
}

namespace {

RealTensor stack(std::span<const WindowPair* const> batch, bool history) {
    std::vector<RealTensor> ws;
    ws.reserve(batch.size());
    for (const WindowPair* p : batch) ws.push_back(history ? p->history : p->future);
    return op::to_batch(ws);
}

std::string describe_failure(std::span<const WindowPair* const> batch, std::span<const double> t,
                             const op::Prepared& prep) {
    std::ostringstream os;
    os << "windows starting at";
    for (const WindowPair* p : batch) os << ' ' << p->start_index;
    os << "; t =";
    for (double v : t) os << ' ' << v;
    double lo = INFINITY, hi = -INFINITY;
    for (double s : prep.stats.sigma) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    os << "; sigma range [" << lo << ", " << hi << "]";
    return os.str();
}

struct LossGraph {
    Var loss;
    std::vector<double> sample_losses;
};

LossGraph build_loss(Tape& tape, const op::BoundParams& p, std::span<const WindowPair* const> batch,
                     const ModelConfig& cfg, const FlowConfig& flow, std::span<const double> t, Rng& noise_rng,
                     const op::Prepared& prep) {
    const std::size_t B = batch.size();
    const RealTensor F = stack(batch, false);
    const auto emb = op::embed(tape, cfg, p, prep);
    const Var h = op::path_source(tape, prep, emb);
    Var state;
    std::vector<double> times(t.begin(), t.end());
    if (flow.direct) {
        state = h;
        times.assign(B, 0.0);
    } else {
        RealTensor noise;
        if (flow.sigma_path > 0.0) {
            noise = RealTensor(F.shape());
            for (auto& v : noise.values()) v = noise_rng.normal();
        }
        state = path_state(tape, h, F, times, noise, flow.sigma_path);
    }
    const Var y = op::predict(tape, cfg, p, prep, emb, state, times);
    RealTensor target = F;
    if (!flow.reparameterized && !flow.direct) target = conditional_velocity(F, tape.value(h));
    LossGraph out{ad::mse(tape, y, target), {}};
    const RealTensor& yv = tape.value(y);
    const std::size_t per = F.size() / B;
    for (std::size_t b = 0; b < B; ++b) {
        double s = 0.0;
        for (std::size_t i = b * per; i < (b + 1) * per; ++i) s += (yv[i] - target[i]) * (yv[i] - target[i]);
        out.sample_losses.push_back(s / static_cast<double>(per));
    }
    return out;
}

} // namespace

StepResult training_step(std::span<const WindowPair* const> batch, const ModelConfig& cfg, const ParameterSet& params,
                         const FlowConfig& flow, std::span<const double> t, Rng& noise_rng) {
    if (batch.empty()) throw UsageError("training_step: empty batch");
    if (t.size() != batch.size()) throw UsageError("training_step: need one flow time per pair");
    Tape tape;
    const op::BoundParams p(tape, params, true);
    const op::Prepared prep = op::prepare(cfg, stack(batch, true));
    const LossGraph g = build_loss(tape, p, batch, cfg, flow, t, noise_rng, prep);
    StepResult r;
    r.loss = tape.value(g.loss)[0];
    if (!std::isfinite(r.loss))
        throw NumericalError("training_step: non-finite loss (" + describe_failure(batch, t, prep) + ")");
    tape.backward(g.loss);
    r.grads = p.gradients(tape);
    r.sample_losses = g.sample_losses;
    return r;
}

StepResult training_step(std::span<const WindowPair* const> batch, const ModelConfig& cfg, const ParameterSet& params,
                         const FlowConfig& flow, Rng& rng) {
    std::vector<double> t(batch.size());
    for (auto& v : t) v = rng.uniform();
    return training_step(batch, cfg, params, flow, t, rng);
}

LossEstimate estimate_loss(std::span<const WindowPair> pairs, const ModelConfig& cfg, const ParameterSet& params,
                           const FlowConfig& flow, std::size_t draws_per_pair, Rng& rng) {
    if (pairs.empty() || draws_per_pair == 0) throw UsageError("estimate_loss: nothing to estimate");
    std::vector<const WindowPair*> batch;
    for (const auto& p : pairs) batch.push_back(&p);
    const op::Prepared prep = op::prepare(cfg, stack(batch, true));
    std::vector<double> samples;
    for (std::size_t d = 0; d < draws_per_pair; ++d) {
        std::vector<double> t(batch.size());
        for (auto& v : t) v = rng.uniform();
        Tape tape;
        const op::BoundParams p(tape, params, false);
        const LossGraph g = build_loss(tape, p, batch, cfg, flow, t, rng, prep);
        samples.insert(samples.end(), g.sample_losses.begin(), g.sample_losses.end());
    }
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= std::max(1.0, n - 1.0);
    return {mean, std::sqrt(var / n), samples.size()};
}

Trajectory integrate(const ModelConfig& cfg, const ParameterSet& params, const RealTensor& history,
                     const FlowConfig& flow) {
    flow.validate();
    const op::Predictor pred(cfg, params, history);
    const RealTensor& g0 = pred.source();
    Trajectory tr;
    tr.states.push_back(g0);
    const auto check = [&](const RealTensor& g, std::size_t step) {
        if (!numerics::all_finite(g)) throw NumericalError("integrate: non-finite state at step " + std::to_string(step));
    };
    if (flow.direct) {
        tr.states.push_back(pred(g0, 0.0));
        check(tr.final(), 0);
        return tr;
    }
    const std::size_t n = flow.n_steps;
    const double h = 1.0 / static_cast<double>(n);

    if (flow.reparameterized && flow.velocity == VelocityMode::source && flow.integrator == Integrator::euler) {
        // Euler with v_j = f_j - g_0 telescopes to g_j = (1 - j/n) g_0 + (1/n) sum_{i<j} f_i;
        // the closed form keeps g_1 = f_0 exact when n = 1.
        RealTensor sum(g0.shape());
        for (std::size_t j = 0; j < n; ++j) {
            const RealTensor f = pred(tr.states.back(), static_cast<double>(j) / static_cast<double>(n));
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += f[i];
            const double w0 = 1.0 - static_cast<double>(j + 1) / static_cast<double>(n);
            RealTensor g(g0.shape());
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = w0 * g0[i] + sum[i] * h;
            check(g, j);
            tr.states.push_back(std::move(g));
        }
        return tr;
    }

    const auto velocity = [&](const RealTensor& g, double t) {
        RealTensor v = pred(g, t);
        if (!flow.reparameterized) return v;
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = flow.velocity == VelocityMode::source ? v[i] - g0[i] : (v[i] - g[i]) / (1.0 - t);
        return v;
    };
    for (std::size_t j = 0; j < n; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(n);
        const RealTensor& g = tr.states.back();
        RealTensor v = velocity(g, t);
        if (flow.integrator == Integrator::midpoint) {
            RealTensor mid = g;
            for (std::size_t i = 0; i < mid.size(); ++i) mid[i] += 0.5 * h * v[i];
            v = velocity(mid, t + 0.5 * h);
        }
        RealTensor next = g;
        for (std::size_t i = 0; i < next.size(); ++i) next[i] += h * v[i];
        check(next, j);
        tr.states.push_back(std::move(next));
    }
    return tr;
}

RealTensor integrate_window(const RealTensor& H, const ModelConfig& cfg, const ParameterSet& params,
                            const FlowConfig& flow) {
    return op::window_of(integrate(cfg, params, op::to_batch(std::span<const RealTensor>(&H, 1)), flow).final(), 0);
}

std::vector<RealTensor> predict_pairs(std::span<const WindowPair> pairs, const ModelConfig& cfg,
                                      const ParameterSet& params, const FlowConfig& flow, std::size_t batch_size) {
    std::vector<RealTensor> out;
    out.reserve(pairs.size());
    for (std::size_t b0 = 0; b0 < pairs.size(); b0 += batch_size) {
        const std::size_t b1 = std::min(pairs.size(), b0 + batch_size);
        std::vector<RealTensor> hs;
        for (std::size_t i = b0; i < b1; ++i) hs.push_back(pairs[i].history);
        const RealTensor y = integrate(cfg, params, op::to_batch(hs), flow).final();
        for (std::size_t i = 0; i < b1 - b0; ++i) out.push_back(op::window_of(y, i));
    }
    return out;
}

double evaluate_mse(std::span<const WindowPair> pairs, const ModelConfig& cfg, const ParameterSet& params,
                    const FlowConfig& flow, std::size_t batch_size) {
    if (pairs.empty()) throw UsageError("evaluate_mse: no pairs");
    const auto preds = predict_pairs(pairs, cfg, params, flow, batch_size);
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const RealTensor& f = pairs[i].future;
        for (std::size_t j = 0; j < f.size(); ++j) s += (preds[i][j] - f[j]) * (preds[i][j] - f[j]);
        n += f.size();
    }
    return s / static_cast<double>(n);
}

TrainResult train_loop(std::span<const WindowPair> train, std::span<const WindowPair> val, const ModelConfig& cfg,
                       ParameterSet init, const TrainConfig& tc, const FlowConfig& flow, std::ostream* log) {
    tc.validate();
    flow.validate();
    if (train.empty() || val.empty()) throw UsageError("train_loop: empty train or validation split");
    op::check_params(cfg, init);

    std::vector<WindowPair> val_subset;
    std::span<const WindowPair> val_used = val;
    if (tc.max_val_windows > 0 && val.size() > tc.max_val_windows) {
        for (std::size_t i = 0; i < tc.max_val_windows; ++i) val_subset.push_back(val[i * val.size() / tc.max_val_windows]);
        val_used = val_subset;
    }

    Rng rng(tc.seed);
    ParameterSet params = std::move(init);
    numerics::AdamState adam = numerics::AdamState::for_params(params);
    TrainResult result;
    result.params = params;
    result.best_val_mse = INFINITY;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t bad_epochs = 0;
    if (log) *log << "epoch,train_loss,val_mse,wall_seconds\n";

    for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        double loss_sum = 0.0;
        std::size_t seen = 0, batches = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += tc.batch_size) {
            if (tc.max_batches_per_epoch && batches == tc.max_batches_per_epoch) break;
            std::vector<const WindowPair*> batch;
            for (std::size_t i = b0; i < std::min(order.size(), b0 + tc.batch_size); ++i) batch.push_back(&train[order[i]]);
            const StepResult step = training_step(batch, cfg, params, flow, rng);
            if (step.loss > tc.divergence_threshold)
                throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batches) + ": loss " + std::to_string(step.loss));
            numerics::adam_step(params, step.grads, adam, tc.adam);
            loss_sum += step.loss * static_cast<double>(batch.size());
            seen += batch.size();
            ++batches;
        }
        const double val_mse = evaluate_mse(val_used, cfg, params, flow);
        if (!std::isfinite(val_mse))
            throw NumericalError("validation MSE is not finite after epoch " + std::to_string(epoch));
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const EpochRecord rec{epoch, loss_sum / static_cast<double>(seen), val_mse, wall};
        result.history.push_back(rec);
        if (log) {
            char line[160];
            std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.3f\n", rec.epoch, rec.train_loss, rec.val_mse,
                          rec.wall_seconds);
            *log << line << std::flush;
        }
        if (val_mse < result.best_val_mse) {
            result.best_val_mse = val_mse;
            result.best_epoch = epoch;
            result.params = params;
            bad_epochs = 0;
        } else if (++bad_epochs >= tc.patience) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

} // namespace neutsflow::flow
