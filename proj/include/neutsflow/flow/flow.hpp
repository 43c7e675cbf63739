#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "neutsflow/data/windows.hpp"
#include "neutsflow/numerics/adam.hpp"
#include "neutsflow/numerics/random.hpp"
#include "neutsflow/op/model.hpp"

namespace neutsflow::flow {

using data::WindowPair;
using numerics::GradientRecord;
using numerics::ParameterSet;
using numerics::RealTensor;
using numerics::Rng;
using op::ModelConfig;

enum class Integrator { euler, midpoint };
/// Inference velocity: `source` uses f_hat - g_0, `state` uses (f_hat - g_t) / (1 - t).
enum class VelocityMode { source, state };

struct FlowConfig {
    double sigma_path = 0.0;
    std::size_t n_steps = 4;
    /// The model predicts the endpoint f; otherwise it predicts the velocity f - h.
    bool reparameterized = true;
    Integrator integrator = Integrator::euler;
    VelocityMode velocity = VelocityMode::source;
    /// Train and predict as a direct map H -> F (state = h_emb, t = 0), no path sampling.
    bool direct = false;

    void validate() const;
};

Integrator parse_integrator(std::string_view text);
VelocityMode parse_velocity(std::string_view text);
std::string to_string(Integrator v);
std::string to_string(VelocityMode v);

struct PathPoint {
    double t = 0.0;
    RealTensor g;
};

/// g = t f + (1 - t) h + sigma_path t (1 - t) xi, xi ~ N(0, 1) per entry (drawn only when sigma_path > 0).
PathPoint sample_path_point(const RealTensor& h_emb, const RealTensor& f, double t, double sigma_path, Rng& rng);

/// f - h_emb.
RealTensor conditional_velocity(const RealTensor& f, const RealTensor& h_emb);

/// In-graph path state for a batch [B, C, L]: same arithmetic as sample_path_point.
/// `noise` may be empty when sigma_path is 0.
numerics::Var path_state(numerics::Tape& tape, numerics::Var h, const RealTensor& f, std::span<const double> t,
                         const RealTensor& noise, double sigma_path);

struct TrainConfig {
    numerics::AdamConfig adam;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 30;
    std::size_t patience = 3;
    std::uint64_t seed = 0;
    /// 0 = every batch of the shuffled epoch.
    std::size_t max_batches_per_epoch = 0;
    /// 0 = every validation window; otherwise an evenly spaced subset.
    std::size_t max_val_windows = 0;
    double divergence_threshold = 1e6;

    void validate() const;
};

struct StepResult {
    double loss = 0.0;
    std::vector<double> sample_losses;
    GradientRecord grads;
};

/// Flow-matching loss and gradients on explicit flow times (one per pair).
StepResult training_step(std::span<const WindowPair* const> batch, const ModelConfig& cfg, const ParameterSet& params,
                         const FlowConfig& flow, std::span<const double> t, Rng& noise_rng);
/// Draws t ~ U[0, 1] per pair from `rng`, then as above.
StepResult training_step(std::span<const WindowPair* const> batch, const ModelConfig& cfg, const ParameterSet& params,
                         const FlowConfig& flow, Rng& rng);

struct LossEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t draws = 0;
};

/// Monte-Carlo estimate of the flow loss with `draws_per_pair` flow times per pair.
LossEstimate estimate_loss(std::span<const WindowPair> pairs, const ModelConfig& cfg, const ParameterSet& params,
                           const FlowConfig& flow, std::size_t draws_per_pair, Rng& rng);

struct Trajectory {
    /// g_0, g_{1/n}, ..., g_1; each [B, C, L].
    std::vector<RealTensor> states;
    const RealTensor& final() const { return states.back(); }
};

/// Solves the flow ODE from the path source of `history` ([B, C, S]).
Trajectory integrate(const ModelConfig& cfg, const ParameterSet& params, const RealTensor& history,
                     const FlowConfig& flow);
/// Single window, time-major [S, C] -> [L, C].
RealTensor integrate_window(const RealTensor& H, const ModelConfig& cfg, const ParameterSet& params,
                            const FlowConfig& flow);

/// Predictions for every pair, time-major [L, C] each, in batches.
std::vector<RealTensor> predict_pairs(std::span<const WindowPair> pairs, const ModelConfig& cfg,
                                      const ParameterSet& params, const FlowConfig& flow, std::size_t batch_size = 64);

/// Mean squared error of integrated predictions against the pairs' futures.
double evaluate_mse(std::span<const WindowPair> pairs, const ModelConfig& cfg, const ParameterSet& params,
                    const FlowConfig& flow, std::size_t batch_size = 64);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_mse = 0.0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    ParameterSet params;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_mse = 0.0;
    bool stopped_early = false;
};

/// Adam over shuffled batches with early stopping on validation MSE; returns the
/// best-validation parameters. Writes "epoch,train_loss,val_mse,wall_seconds" rows to `log`.
TrainResult train_loop(std::span<const WindowPair> train, std::span<const WindowPair> val, const ModelConfig& cfg,
                       ParameterSet init, const TrainConfig& train_cfg, const FlowConfig& flow,
                       std::ostream* log = nullptr);

} // namespace neutsflow::flow
