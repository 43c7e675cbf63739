#pragma once

// The velocity-field operator. Batched tensors are time-last: histories are
// [B, C, S], path states and outputs [B, C, L]. The single-window functions at
// the bottom take and return time-major [time, channel] tensors.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "neutsflow/numerics/autodiff.hpp"
#include "neutsflow/numerics/parameters.hpp"
#include "neutsflow/op/config.hpp"
#include "neutsflow/op/preprocess.hpp"

namespace neutsflow::op {

using numerics::ComplexTensor;
using numerics::CVar;
using numerics::GradientRecord;
using numerics::ParameterSet;
using numerics::Tape;
using numerics::Var;

/// Deterministic in `seed`: fan-in uniform real weights, complex kernels uniform / k.
ParameterSet init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Throws UsageError unless `params` has exactly the tensors `cfg` needs.
void check_params(const ModelConfig& cfg, const ParameterSet& params);

/// One line per tensor plus the total scalar count.
std::string parameter_summary(const ParameterSet& params);

/// Parameters placed on a tape, addressable by name.
class BoundParams {
public:
    BoundParams(Tape& tape, const ParameterSet& params, bool trainable);
    Var real(std::string_view name) const;
    CVar complex(std::string_view name) const;
    /// Gradients after tape.backward(), congruent with the bound set.
    GradientRecord gradients(const Tape& tape) const;

private:
    const ParameterSet* params_;
    std::vector<std::size_t> ids_;
};

/// Parameter-free preprocessing of a history batch.
struct Prepared {
    std::size_t batch = 0;
    NormStats stats;
    /// Normalized branch inputs, [B, C, S] each; one entry per branch.
    std::vector<RealTensor> branch_inputs;
};

Prepared prepare(const ModelConfig& cfg, const RealTensor& history);

/// Per-branch history embeddings in normalized units, [B, C, L] each.
std::vector<Var> embed(Tape& tape, const ModelConfig& cfg, const BoundParams& p, const Prepared& prep);

/// Path source h_emb: denormalized sum of the branch embeddings.
Var path_source(Tape& tape, const Prepared& prep, std::span<const Var> embeddings);

/// F_hat for path state `state` (raw units, [B, C, L]) at flow times t (one per batch entry).
Var predict(Tape& tape, const ModelConfig& cfg, const BoundParams& p, const Prepared& prep,
            std::span<const Var> embeddings, Var state, std::span<const double> t);

/// Inference helper: caches preprocessing and embeddings for a fixed history batch.
class Predictor {
public:
    Predictor(const ModelConfig& cfg, const ParameterSet& params, const RealTensor& history);
    const RealTensor& source() const { return source_; }
    RealTensor operator()(const RealTensor& state, std::span<const double> t) const;
    RealTensor operator()(const RealTensor& state, double t) const;

private:
    const ModelConfig* cfg_;
    const ParameterSet* params_;
    Prepared prep_;
    std::vector<RealTensor> embeddings_;
    RealTensor source_;
};

// Single-window API, time-major.

struct OperatorInput {
    RealTensor H;  // [S, C]
    RealTensor G;  // [L, C]
    double t = 0.0;
};

/// Shared two-layer MLP over the time axis of each channel: [S, C] -> [L, C].
RealTensor embed_history(const RealTensor& H_branch, const ParameterSet& params, std::string_view branch);
/// [L, C], [L, C], t -> [L, 2C + 1].
RealTensor assemble_input(const RealTensor& G, const RealTensor& H_emb, double t);
/// [L, F] x [1, k] -> [L, F, k].
RealTensor dimension_expand(const RealTensor& z0, const RealTensor& W_e);
/// [L, F, k] with W [k, k, M] -> [L, F, k].
RealTensor spectral_layer(const RealTensor& z1, const ComplexTensor& W);
/// [L, F, k] with weight [C, F k] and bias [C] -> [L, C].
RealTensor project(const RealTensor& Y, const RealTensor& weight, const RealTensor& bias);
/// Full pipeline -> [L, C].
RealTensor forward(const OperatorInput& input, const ModelConfig& cfg, const ParameterSet& params);
/// History embedding used as the path source -> [L, C].
RealTensor history_source(const RealTensor& H, const ModelConfig& cfg, const ParameterSet& params);

/// Time-major [B][time, C] windows <-> time-last [B, C, time] batch.
RealTensor to_batch(std::span<const RealTensor> windows);
RealTensor window_of(const RealTensor& batch, std::size_t b);

} // namespace neutsflow::op
