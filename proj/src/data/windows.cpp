#include "neutsflow/data/windows.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "json.hpp"

namespace neutsflow::data {

namespace {

RealTensor rows(const RealTensor& x, std::size_t begin, std::size_t count) {
    const std::size_t C = x.dim(1);
    std::vector<double> v(x.storage().begin() + begin * C, x.storage().begin() + (begin + count) * C);
    return RealTensor({count, C}, std::move(v));
}

std::size_t window_count(std::size_t T, std::size_t span, std::size_t stride) {
    return T < span ? 0 : (T - span) / stride + 1;
}

} // namespace

std::vector<WindowPair> make_windows(const SeriesTable& table, std::size_t S, std::size_t L, std::size_t stride) {
    if (stride == 0) throw UsageError("make_windows: stride must be >= 1");
    if (S == 0 || L == 0) throw UsageError("make_windows: S and L must be >= 1");
    const std::size_t T = table.length();
    if (T < S + L)
        throw DataError("make_windows: " + std::to_string(T) + " rows cannot hold a window of " + std::to_string(S) +
                        " + " + std::to_string(L));
    const std::size_t n = window_count(T, S + L, stride);
    std::vector<WindowPair> out;
    out.reserve(n);
    for (std::size_t w = 0; w < n; ++w) {
        const std::size_t s = w * stride;
        out.push_back(WindowPair{rows(table.values, s, S), rows(table.values, s + S, L), s, s + S, 1, 0});
    }
    return out;
}

RealTensor decimate(const RealTensor& x, std::size_t factor, std::size_t phase) {
    if (factor < 1) throw UsageError("decimate: factor must be >= 1");
    if (phase >= factor) throw UsageError("decimate: phase must lie in [0, factor)");
    if (x.rank() < 1) throw UsageError("decimate: missing time axis");
    const std::size_t T = x.dim(0);
    const std::size_t inner = T ? x.size() / T : 0;
    const std::size_t n = T > phase ? (T - phase + factor - 1) / factor : 0;
    Shape shape = x.shape();
    shape[0] = n;
    RealTensor out(shape);
    for (std::size_t i = 0; i < n; ++i)
        std::copy_n(x.data() + (phase + i * factor) * inner, inner, out.data() + i * inner);
    return out;
}

TaskKind parse_task(std::string_view text) {
    if (text == "CFT" || text == "cft") return TaskKind::CFT;
    if (text == "TSSR" || text == "tssr") return TaskKind::TSSR;
    if (text == "CRTL" || text == "crtl") return TaskKind::CRTL;
    throw UsageError("unknown task '" + std::string(text) + "' (expected CFT, TSSR or CRTL)");
}

std::string to_string(TaskKind kind) {
    switch (kind) {
    case TaskKind::CFT: return "CFT";
    case TaskKind::TSSR: return "TSSR";
    case TaskKind::CRTL: return "CRTL";
    }
    return "?";
}

TaskSpec TaskSpec::defaults(TaskKind kind) {
    if (kind == TaskKind::CFT) return {kind, 96, 96, 1, 0};
    return {kind, 24, 96, 4, 0};
}

void TaskSpec::validate() const {
    if (S == 0 || L == 0) throw UsageError("task: S and L must be >= 1");
    if (phase >= decimation) throw UsageError("task: phase must lie in [0, decimation)");
    switch (kind) {
    case TaskKind::CFT:
        if (decimation != 1) throw UsageError("task: CFT requires decimation 1");
        break;
    case TaskKind::TSSR:
        if (decimation < 2) throw UsageError("task: TSSR requires decimation >= 2");
        if ((L - std::min(phase, L) + decimation - 1) / decimation != S)
            throw UsageError("task: TSSR needs S = ceil((L - phase) / decimation), got S=" + std::to_string(S) +
                             " L=" + std::to_string(L) + " factor=" + std::to_string(decimation));
        break;
    case TaskKind::CRTL:
        if (decimation < 2) throw UsageError("task: CRTL requires decimation >= 2");
        if (L % decimation != 0) throw UsageError("task: CRTL horizon must be a multiple of the decimation factor");
        break;
    }
}

std::size_t TaskSpec::span() const {
    switch (kind) {
    case TaskKind::CFT: return S + L;
    case TaskKind::TSSR: return L;
    case TaskKind::CRTL: return S * decimation + L;
    }
    return 0;
}

std::size_t TaskSpec::scored_length() const { return kind == TaskKind::CRTL ? L / decimation : L; }

std::vector<WindowPair> build_task_pairs(const SeriesTable& table, const TaskSpec& task, std::size_t stride) {
    task.validate();
    if (stride == 0) throw UsageError("build_task_pairs: stride must be >= 1");
    if (task.kind == TaskKind::CFT) return make_windows(table, task.S, task.L, stride);
    const std::size_t T = table.length();
    if (T < task.span())
        throw DataError(to_string(task.kind) + ": " + std::to_string(T) + " rows cannot hold a span of " +
                        std::to_string(task.span()));
    const std::size_t n = window_count(T, task.span(), stride);
    std::vector<WindowPair> out;
    out.reserve(n);
    for (std::size_t w = 0; w < n; ++w) {
        const std::size_t s = w * stride;
        WindowPair p;
        p.start_index = s;
        p.decimation = task.decimation;
        p.phase = task.phase;
        if (task.kind == TaskKind::TSSR) {
            p.future = rows(table.values, s, task.L);
            p.history = decimate(p.future, task.decimation, task.phase);
            p.future_start = s;
        } else {
            const std::size_t hsr = task.S * task.decimation;
            p.history = decimate(rows(table.values, s, hsr), task.decimation, task.phase);
            p.future = rows(table.values, s + hsr, task.L);
            p.future_start = s + hsr;
        }
        out.push_back(std::move(p));
    }
    return out;
}

RealTensor scoring_view(const RealTensor& series, const TaskSpec& task) {
    if (task.kind != TaskKind::CRTL) return series;
    return decimate(series, task.decimation, task.phase);
}

void export_window_cache(const std::vector<WindowPair>& pairs, const CacheManifest& manifest,
                         const std::filesystem::path& stem) {
    static_assert(std::endian::native == std::endian::little, "cache format is little-endian");
    std::filesystem::path bin = stem, meta = stem;
    bin += ".bin";
    meta += ".json";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw DataError("cannot write '" + bin.string() + "'");
    for (const auto& p : pairs) {
        out.write(reinterpret_cast<const char*>(p.history.data()), static_cast<std::streamsize>(p.history.size() * 8));
        out.write(reinterpret_cast<const char*>(p.future.data()), static_cast<std::streamsize>(p.future.size() * 8));
    }
    nlohmann::ordered_json j;
    j["S"] = manifest.S;
    j["L"] = manifest.L;
    j["stride"] = manifest.stride;
    j["split"] = manifest.split;
    j["task"] = manifest.task;
    j["decimation"] = manifest.decimation;
    j["phase"] = manifest.phase;
    j["channels"] = manifest.channels;
    j["count"] = pairs.size();
    std::vector<std::size_t> starts, future_starts;
    for (const auto& p : pairs) {
        starts.push_back(p.start_index);
        future_starts.push_back(p.future_start);
    }
    j["start_index"] = starts;
    j["future_start"] = future_starts;
    std::ofstream(meta) << j.dump(2) << '\n';
}

std::vector<WindowPair> import_window_cache(const std::filesystem::path& stem, CacheManifest* manifest) {
    std::filesystem::path bin = stem, meta = stem;
    bin += ".bin";
    meta += ".json";
    std::ifstream min(meta);
    if (!min) throw DataError("cannot open '" + meta.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(min);
    } catch (const std::exception& e) {
        throw DataError("malformed cache manifest '" + meta.string() + "': " + e.what());
    }
    CacheManifest m;
    m.S = j.at("S");
    m.L = j.at("L");
    m.stride = j.at("stride");
    m.split = j.at("split");
    m.task = j.at("task");
    m.decimation = j.at("decimation");
    m.phase = j.at("phase");
    m.channels = j.at("channels");
    m.count = j.at("count");
    const auto starts = j.at("start_index").get<std::vector<std::size_t>>();
    const auto future_starts = j.at("future_start").get<std::vector<std::size_t>>();
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw DataError("cannot open '" + bin.string() + "'");
    std::vector<WindowPair> pairs;
    for (std::size_t i = 0; i < m.count; ++i) {
        WindowPair p;
        p.history = RealTensor(Shape{m.S, m.channels});
        p.future = RealTensor(Shape{m.L, m.channels});
        in.read(reinterpret_cast<char*>(p.history.data()), static_cast<std::streamsize>(p.history.size() * 8));
        in.read(reinterpret_cast<char*>(p.future.data()), static_cast<std::streamsize>(p.future.size() * 8));
        if (!in) throw DataError("window cache '" + bin.string() + "' is truncated");
        p.start_index = starts.at(i);
        p.future_start = future_starts.at(i);
        p.decimation = m.decimation;
        p.phase = m.phase;
        pairs.push_back(std::move(p));
    }
    if (manifest) *manifest = m;
    return pairs;
}

} // namespace neutsflow::data
