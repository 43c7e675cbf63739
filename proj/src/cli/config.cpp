#include "neutsflow/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "neutsflow/error.hpp"

namespace neutsflow::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::size_t to_count(std::string_view key, std::string_view v) {
    std::size_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || v.empty())
        throw UsageError("config key '" + std::string(key) + "': expected a non-negative integer, got '" +
                         std::string(v) + "'");
    return out;
}

double to_real(std::string_view key, std::string_view v) {
    double out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || v.empty())
        throw UsageError("config key '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
    return out;
}

bool to_flag(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("config key '" + std::string(key) + "': expected true or false, got '" + std::string(v) + "'");
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = [] {
        std::map<std::string, Setter, std::less<>> t;
        auto count = [&](const char* name, std::size_t eval::RunSpec::*field) {
            t[name] = [field](RunConfig& c, std::string_view k, std::string_view v) { c.run.*field = to_count(k, v); };
        };
        t["data"] = [](RunConfig& c, auto, std::string_view v) { c.data = v; };
        t["dataset"] = [](RunConfig& c, auto, std::string_view v) { c.dataset = v; };
        t["datetime_column"] = [](RunConfig& c, auto, std::string_view v) { c.datetime_column = v; };
        t["fill"] = [](RunConfig& c, auto, std::string_view v) { c.fill = data::parse_fill_policy(v); };
        t["out"] = [](RunConfig& c, auto, std::string_view v) { c.out = v; };
        t["task"] = [](RunConfig& c, auto, std::string_view v) { c.run.task = data::TaskSpec::defaults(data::parse_task(v)); };
        t["S"] = [](RunConfig& c, auto k, std::string_view v) { c.run.task.S = to_count(k, v); };
        t["L"] = [](RunConfig& c, auto k, std::string_view v) { c.run.task.L = to_count(k, v); };
        t["decimation"] = [](RunConfig& c, auto k, std::string_view v) { c.run.task.decimation = to_count(k, v); };
        t["phase"] = [](RunConfig& c, auto k, std::string_view v) { c.run.task.phase = to_count(k, v); };
        t["variant"] = [](RunConfig& c, auto, std::string_view v) { c.run.variant = op::parse_variant(v); };
        t["k"] = [](RunConfig& c, auto k, std::string_view v) { c.run.dims.k = to_count(k, v); };
        t["K"] = [](RunConfig& c, auto k, std::string_view v) { c.run.dims.K = to_count(k, v); };
        t["m_max"] = [](RunConfig& c, auto k, std::string_view v) { c.run.dims.m_max = to_count(k, v); };
        t["hidden"] = [](RunConfig& c, auto k, std::string_view v) { c.run.dims.hidden = to_count(k, v); };
        t["eps_norm"] = [](RunConfig& c, auto k, std::string_view v) { c.run.dims.eps_norm = to_real(k, v); };
        t["sigma_path"] = [](RunConfig& c, auto k, std::string_view v) { c.run.flow.sigma_path = to_real(k, v); };
        t["n_steps"] = [](RunConfig& c, auto k, std::string_view v) { c.run.flow.n_steps = to_count(k, v); };
        t["reparameterized"] = [](RunConfig& c, auto k, std::string_view v) { c.run.flow.reparameterized = to_flag(k, v); };
        t["integrator"] = [](RunConfig& c, auto, std::string_view v) { c.run.flow.integrator = flow::parse_integrator(v); };
        t["velocity"] = [](RunConfig& c, auto, std::string_view v) { c.run.flow.velocity = flow::parse_velocity(v); };
        t["lr"] = [](RunConfig& c, auto k, std::string_view v) { c.run.train.adam.lr = to_real(k, v); };
        t["beta1"] = [](RunConfig& c, auto k, std::string_view v) { c.run.train.adam.beta1 = to_real(k, v); };
        t["beta2"] = [](RunConfig& c, auto k, std::string_view v) { c.run.train.adam.beta2 = to_real(k, v); };
        t["adam_eps"] = [](RunConfig& c, auto k, std::string_view v) { c.run.train.adam.eps = to_real(k, v); };
        t["batch_size"] = [](RunConfig& c, auto k, std::string_view v) { c.run.train.batch_size = to_count(k, v); };
        t["max_epochs"] = [](RunConfig& c, auto k, std::string_view v) { c.run.train.max_epochs = to_count(k, v); };
        t["patience"] = [](RunConfig& c, auto k, std::string_view v) { c.run.train.patience = to_count(k, v); };
        t["max_batches_per_epoch"] = [](RunConfig& c, auto k, std::string_view v) {
            c.run.train.max_batches_per_epoch = to_count(k, v);
        };
        t["max_val_windows"] = [](RunConfig& c, auto k, std::string_view v) { c.run.train.max_val_windows = to_count(k, v); };
        t["divergence_threshold"] = [](RunConfig& c, auto k, std::string_view v) {
            c.run.train.divergence_threshold = to_real(k, v);
        };
        t["seed"] = [](RunConfig& c, auto k, std::string_view v) { c.run.train.seed = to_count(k, v); };
        t["train_fraction"] = [](RunConfig& c, auto k, std::string_view v) { c.run.split.train_fraction = to_real(k, v); };
        t["val_fraction"] = [](RunConfig& c, auto k, std::string_view v) { c.run.split.val_fraction = to_real(k, v); };
        t["test_fraction"] = [](RunConfig& c, auto k, std::string_view v) { c.run.split.test_fraction = to_real(k, v); };
        count("seeds", &eval::RunSpec::seeds);
        count("test_stride", &eval::RunSpec::test_stride);
        return t;
    }();
    return table;
}

} // namespace

RunConfig::RunConfig() { run.split = data::SplitSpec::for_dataset(""); }

void RunConfig::set(std::string_view key, std::string_view value) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw UsageError("unknown config key '" + std::string(key) + "'");
    it->second(*this, key, value);
}

void RunConfig::apply(const Pairs& pairs) {
    for (const auto& [k, v] : pairs)
        if (k == "task") set(k, v);
    bool split_given = false;
    for (const auto& [k, v] : pairs) {
        if (k != "task") set(k, v);
        split_given |= k.ends_with("_fraction");
    }
    run.dataset = dataset_name();
    if (!split_given) run.split = data::SplitSpec::for_dataset(run.dataset);
}

Pairs RunConfig::to_pairs() const {
    Pairs p{{"data", data},
            {"dataset", dataset_name()},
            {"datetime_column", datetime_column},
            {"fill", data::to_string(fill)},
            {"out", out}};
    for (auto& kv : run.to_pairs())
        if (kv.first != "dataset") p.push_back(kv);
    return p;
}

std::string RunConfig::dataset_name() const {
    if (!dataset.empty()) return dataset;
    if (!data.empty()) return std::filesystem::path(data).stem().string();
    return "synthetic";
}

void RunConfig::validate() const {
    run.task.validate();
    run.split.validate();
    run.flow.validate();
    run.train.validate();
    op::OperatorDims d = run.dims;
    d.S = run.task.S;
    d.L = run.task.L;
    d.C = std::max<std::size_t>(d.C, 1);
    d.validate();
    if (run.seeds < 1) throw UsageError("config key 'seeds' must be >= 1");
    if (run.test_stride < 1) throw UsageError("config key 'test_stride' must be >= 1");
}

Pairs parse_config_text(std::string_view text, std::string_view source) {
    Pairs out;
    std::size_t lineno = 0;
    while (!text.empty()) {
        ++lineno;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw UsageError(std::string(source) + ":" + std::to_string(lineno) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw UsageError(std::string(source) + ":" + std::to_string(lineno) + ": empty key");
        out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
    }
    return out;
}

Pairs read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

std::string render_config(const Pairs& pairs) {
    std::string out;
    for (const auto& [k, v] : pairs) out += k + " = " + v + "\n";
    return out;
}

std::pair<std::string, std::string> parse_assignment(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos || trim(text.substr(0, eq)).empty())
        throw UsageError("expected key=value, got '" + std::string(text) + "'");
    return {std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1)))};
}

} // namespace neutsflow::cli
