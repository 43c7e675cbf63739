#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "neutsflow/data/series.hpp"

namespace neutsflow::data {

/// History H [S, C] and target F [L, C]. Indices refer to rows of the source table.
struct WindowPair {
    RealTensor history;
    RealTensor future;
    std::size_t start_index = 0;
    std::size_t future_start = 0;
    /// Subsampling that produced `history` (1 for plain windows).
    std::size_t decimation = 1;
    std::size_t phase = 0;
};

/// Windows at starts 0, stride, 2 stride, ...; count = floor((T - S - L) / stride) + 1.
std::vector<WindowPair> make_windows(const SeriesTable& table, std::size_t S, std::size_t L, std::size_t stride);

/// Keeps rows phase, phase + factor, ... of a [T, ...] tensor.
RealTensor decimate(const RealTensor& x, std::size_t factor, std::size_t phase = 0);

enum class TaskKind { CFT, TSSR, CRTL };

TaskKind parse_task(std::string_view text);
std::string to_string(TaskKind kind);

struct TaskSpec {
    TaskKind kind = TaskKind::CFT;
    /// Model history length (after decimation) and horizon.
    std::size_t S = 96;
    std::size_t L = 96;
    std::size_t decimation = 1;
    std::size_t phase = 0;

    static TaskSpec defaults(TaskKind kind);
    void validate() const;
    /// Source rows one pair spans.
    std::size_t span() const;
    /// Length at which predictions are scored (L / decimation for CRTL, else L).
    std::size_t scored_length() const;
};

/// CFT: H = rows [s, s+S), F = rows [s+S, s+S+L).
/// TSSR: F = rows [s, s+L), H = decimate(F, factor, phase).
/// CRTL: H = decimate(rows [s, s+S*factor)), F = the next L rows.
std::vector<WindowPair> build_task_pairs(const SeriesTable& table, const TaskSpec& task, std::size_t stride = 1);

/// Target as scored: CRTL decimates predictions and truth onto the low-rate grid.
RealTensor scoring_view(const RealTensor& series, const TaskSpec& task);

struct CacheManifest {
    std::size_t S = 0;
    std::size_t L = 0;
    std::size_t stride = 1;
    std::string split;
    std::string task;
    std::size_t decimation = 1;
    std::size_t phase = 0;
    std::size_t channels = 0;
    std::size_t count = 0;
};

/// Writes `<stem>.bin` (little-endian doubles, H then F per pair) and `<stem>.json`.
void export_window_cache(const std::vector<WindowPair>& pairs, const CacheManifest& manifest,
                         const std::filesystem::path& stem);
std::vector<WindowPair> import_window_cache(const std::filesystem::path& stem, CacheManifest* manifest = nullptr);

} // namespace neutsflow::data
