#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "neutsflow/data/split.hpp"
#include "neutsflow/data/windows.hpp"
#include "neutsflow/flow/flow.hpp"

namespace neutsflow::eval {

using data::TaskKind;
using data::TaskSpec;
using numerics::RealTensor;
using op::Variant;

double mse(const RealTensor& pred, const RealTensor& target);
double mae(const RealTensor& pred, const RealTensor& target);

struct VariantBuild {
    op::ModelConfig model;
    flow::FlowConfig flow;
};

/// Model and flow settings for one ablation variant; wo_flow_matching trains and predicts directly.
VariantBuild build_variant(Variant v, const op::OperatorDims& dims, const flow::FlowConfig& base);

struct RunSpec {
    TaskSpec task;
    std::string dataset = "synthetic";
    Variant variant = Variant::full;
    /// S, L and C are taken from the task and the table.
    op::OperatorDims dims;
    flow::TrainConfig train;
    flow::FlowConfig flow;
    data::SplitSpec split;
    /// Independent training runs with seeds train.seed, train.seed + 1, ...
    std::size_t seeds = 1;
    std::size_t test_stride = 1;

    std::vector<std::pair<std::string, std::string>> to_pairs() const;
};

/// FNV-1a 64 over "key=value\n" lines, as 16 hex digits.
std::string config_digest(const std::vector<std::pair<std::string, std::string>>& pairs);

struct MetricReport {
    TaskKind task = TaskKind::CFT;
    std::string dataset;
    Variant variant = Variant::full;
    double mse = 0.0;
    double mae = 0.0;
    /// Spread across seeds (0 for a single seed).
    double mse_std = 0.0;
    double mae_std = 0.0;
    std::size_t n_windows = 0;
    /// Length each window is scored at.
    std::size_t horizon = 0;
    std::uint64_t seed = 0;
    std::size_t seeds = 1;
    std::string config_digest;
    bool failed = false;
    std::string failure;
    /// Excluded from the summary CSV so reruns compare byte-equal there.
    double wall_seconds = 0.0;
};

struct Scores {
    double mse = 0.0;
    double mae = 0.0;
};

/// Errors of predictions against each pair's future on the task's scoring grid.
Scores score(const std::vector<RealTensor>& preds, std::span<const data::WindowPair> pairs, const TaskSpec& task);

struct TaskData {
    data::Splits splits;
    data::Scaler scaler;
    std::vector<data::WindowPair> train, val, test;
};

/// Chronological split, train-fitted standardization, and task pairs per segment.
TaskData prepare_task_data(const data::SeriesTable& table, const RunSpec& spec);

struct RunOutcome {
    MetricReport report;
    op::ModelConfig model;
    flow::FlowConfig flow;
    /// Parameters of the first seed.
    numerics::ParameterSet params;
    data::Scaler scaler;
    std::vector<flow::EpochRecord> history;
};

/// Trains on train, early-stops on val and scores on test in standardized units.
/// Divergence yields a report with `failed` set instead of an exception.
RunOutcome run_task(const data::SeriesTable& table, const RunSpec& spec, std::ostream* log = nullptr);

/// Rank by ascending MSE within each (task, dataset) group; failed runs rank last.
std::vector<std::size_t> ranks(const std::vector<MetricReport>& reports);

std::string report_json(const MetricReport& r);
std::string summary_csv(const std::vector<MetricReport>& reports);
std::vector<MetricReport> parse_summary_csv(const std::string& text);
std::string report_filename(const MetricReport& r);

/// Writes <dir>/<task>_<dataset>_<variant>.json per report and merges all of them
/// into <dir>/summary.csv, replacing rows with the same (task, dataset, variant).
void emit_report(const std::vector<MetricReport>& reports, const std::filesystem::path& dir);

} // namespace neutsflow::eval
