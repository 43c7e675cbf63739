#include "neutsflow/eval/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "neutsflow/error.hpp"

namespace neutsflow::eval {

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string num(std::size_t v) { return std::to_string(v); }

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

double mse(const RealTensor& pred, const RealTensor& target) {
    numerics::require_same_shape(pred.shape(), target.shape(), "mse");
    if (pred.size() == 0) throw UsageError("mse: empty tensors");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
    return s / static_cast<double>(pred.size());
}

double mae(const RealTensor& pred, const RealTensor& target) {
    numerics::require_same_shape(pred.shape(), target.shape(), "mae");
    if (pred.size() == 0) throw UsageError("mae: empty tensors");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
    return s / static_cast<double>(pred.size());
}

VariantBuild build_variant(Variant v, const op::OperatorDims& dims, const flow::FlowConfig& base) {
    VariantBuild b{op::ModelConfig{dims, v}, base};
    b.flow.direct = v == Variant::wo_flow_matching;
    b.model.validate();
    b.flow.validate();
    return b;
}

std::vector<std::pair<std::string, std::string>> RunSpec::to_pairs() const {
    std::vector<std::pair<std::string, std::string>> p{
        {"task", data::to_string(task.kind)},
        {"S", num(task.S)},
        {"L", num(task.L)},
        {"decimation", num(task.decimation)},
        {"phase", num(task.phase)},
        {"dataset", dataset},
        {"variant", op::to_string(variant)},
        {"k", num(dims.k)},
        {"K", num(dims.K)},
        {"m_max", num(dims.m_max)},
        {"hidden", num(dims.hidden)},
        {"eps_norm", num(dims.eps_norm)},
        {"sigma_path", num(flow.sigma_path)},
        {"n_steps", num(flow.n_steps)},
        {"reparameterized", flow.reparameterized ? "true" : "false"},
        {"integrator", flow::to_string(flow.integrator)},
        {"velocity", flow::to_string(flow.velocity)},
        {"lr", num(train.adam.lr)},
        {"beta1", num(train.adam.beta1)},
        {"beta2", num(train.adam.beta2)},
        {"adam_eps", num(train.adam.eps)},
        {"batch_size", num(train.batch_size)},
        {"max_epochs", num(train.max_epochs)},
        {"patience", num(train.patience)},
        {"max_batches_per_epoch", num(train.max_batches_per_epoch)},
        {"max_val_windows", num(train.max_val_windows)},
        {"divergence_threshold", num(train.divergence_threshold)},
        {"seed", std::to_string(train.seed)},
        {"seeds", num(seeds)},
        {"train_fraction", num(split.train_fraction)},
        {"val_fraction", num(split.val_fraction)},
        {"test_fraction", num(split.test_fraction)},
        {"test_stride", num(test_stride)},
    };
    return p;
}

std::string config_digest(const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    const auto feed = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& [k, v] : pairs) {
        feed(k);
        feed("=");
        feed(v);
        feed("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Scores score(const std::vector<RealTensor>& preds, std::span<const data::WindowPair> pairs, const TaskSpec& task) {
    if (preds.size() != pairs.size()) throw UsageError("score: prediction count does not match pair count");
    if (pairs.empty()) throw UsageError("score: no windows");
    double se = 0.0, ae = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const RealTensor p = data::scoring_view(preds[i], task);
        const RealTensor f = data::scoring_view(pairs[i].future, task);
        numerics::require_same_shape(p.shape(), f.shape(), "score");
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double d = p[j] - f[j];
            se += d * d;
            ae += std::abs(d);
        }
        n += p.size();
    }
    return {se / static_cast<double>(n), ae / static_cast<double>(n)};
}

TaskData prepare_task_data(const data::SeriesTable& table, const RunSpec& spec) {
    spec.task.validate();
    spec.split.validate();
    TaskData d;
    d.splits = data::chronological_split(table, spec.split, spec.task.span());
    d.scaler = data::Scaler::fit(d.splits.train);
    d.train = data::build_task_pairs(d.scaler.apply(d.splits.train), spec.task, 1);
    d.val = data::build_task_pairs(d.scaler.apply(d.splits.val), spec.task, 1);
    d.test = data::build_task_pairs(d.scaler.apply(d.splits.test), spec.task, spec.test_stride);
    return d;
}

RunOutcome run_task(const data::SeriesTable& table, const RunSpec& spec, std::ostream* log) {
    if (spec.seeds < 1) throw UsageError("run_task: seeds must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    op::OperatorDims dims = spec.dims;
    dims.S = spec.task.S;
    dims.L = spec.task.L;
    dims.C = table.channels();
    const VariantBuild vb = build_variant(spec.variant, dims, spec.flow);
    const TaskData d = prepare_task_data(table, spec);

    RunOutcome out;
    out.model = vb.model;
    out.flow = vb.flow;
    out.scaler = d.scaler;
    MetricReport& r = out.report;
    r.task = spec.task.kind;
    r.dataset = spec.dataset;
    r.variant = spec.variant;
    r.n_windows = d.test.size();
    r.horizon = spec.task.scored_length();
    r.seed = spec.train.seed;
    r.seeds = spec.seeds;
    r.config_digest = config_digest(spec.to_pairs());

    std::vector<double> mses, maes;
    for (std::size_t i = 0; i < spec.seeds; ++i) {
        flow::TrainConfig tc = spec.train;
        tc.seed = spec.train.seed + i;
        try {
            auto res = flow::train_loop(d.train, d.val, vb.model, op::init_params(vb.model, tc.seed), tc, vb.flow, log);
            const auto preds = flow::predict_pairs(d.test, vb.model, res.params, vb.flow);
            const Scores s = score(preds, d.test, spec.task);
            mses.push_back(s.mse);
            maes.push_back(s.mae);
            if (i == 0) {
                out.params = std::move(res.params);
                out.history = std::move(res.history);
            }
        } catch (const NumericalError& e) {
            r.failed = true;
            r.failure = e.what();
            r.mse = r.mae = NAN;
            break;
        }
    }
    if (!r.failed) {
        r.mse = mean_of(mses);
        r.mae = mean_of(maes);
        r.mse_std = std_of(mses);
        r.mae_std = std_of(maes);
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::vector<std::size_t> ranks(const std::vector<MetricReport>& reports) {
    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < reports.size(); ++i)
        groups[{data::to_string(reports[i].task), reports[i].dataset}].push_back(i);
    std::vector<std::size_t> out(reports.size());
    for (auto& [key, idx] : groups) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            const MetricReport &x = reports[a], &y = reports[b];
            const bool xbad = x.failed || std::isnan(x.mse), ybad = y.failed || std::isnan(y.mse);
            if (xbad != ybad) return ybad;
            return !xbad && x.mse < y.mse;
        });
        for (std::size_t r = 0; r < idx.size(); ++r) out[idx[r]] = r + 1;
    }
    return out;
}

std::string report_json(const MetricReport& r) {
    nlohmann::ordered_json j;
    j["task"] = data::to_string(r.task);
    j["dataset"] = r.dataset;
    j["variant"] = op::to_string(r.variant);
    j["mse"] = r.mse;
    j["mae"] = r.mae;
    j["mse_std"] = r.mse_std;
    j["mae_std"] = r.mae_std;
    j["n_windows"] = r.n_windows;
    j["horizon"] = r.horizon;
    j["seed"] = r.seed;
    j["seeds"] = r.seeds;
    j["config_digest"] = r.config_digest;
    j["failed"] = r.failed;
    j["failure"] = r.failure;
    j["metadata"] = {{"wall_seconds", r.wall_seconds}};
    return j.dump(2) + "\n";
}

namespace {

const char* const kColumns = "task,dataset,variant,mse,mae,mse_std,mae_std,n_windows,horizon,seed,seeds,config_digest,failed,rank";

} // namespace

std::string summary_csv(const std::vector<MetricReport>& reports) {
    const auto rk = ranks(reports);
    std::string out = std::string(kColumns) + "\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const MetricReport& r = reports[i];
        out += data::to_string(r.task) + "," + r.dataset + "," + op::to_string(r.variant) + "," + num(r.mse) + "," +
               num(r.mae) + "," + num(r.mse_std) + "," + num(r.mae_std) + "," + num(r.n_windows) + "," +
               num(r.horizon) + "," + std::to_string(r.seed) + "," + num(r.seeds) + "," + r.config_digest + "," +
               (r.failed ? "1" : "0") + "," + num(rk[i]) + "\n";
    }
    return out;
}

std::vector<MetricReport> parse_summary_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kColumns) throw DataError("summary.csv: unexpected header");
    std::vector<MetricReport> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 14) throw DataError("summary.csv: line " + std::to_string(lineno) + " has " +
                                            std::to_string(f.size()) + " fields, expected 14");
        try {
            MetricReport r;
            r.task = data::parse_task(f[0]);
            r.dataset = f[1];
            r.variant = op::parse_variant(f[2]);
            r.mse = std::stod(f[3]);
            r.mae = std::stod(f[4]);
            r.mse_std = std::stod(f[5]);
            r.mae_std = std::stod(f[6]);
            r.n_windows = std::stoull(f[7]);
            r.horizon = std::stoull(f[8]);
            r.seed = std::stoull(f[9]);
            r.seeds = std::stoull(f[10]);
            r.config_digest = f[11];
            r.failed = f[12] == "1";
            out.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw DataError("summary.csv: malformed line " + std::to_string(lineno));
        } catch (const UsageError& e) {
            throw DataError("summary.csv: line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::string report_filename(const MetricReport& r) {
    return data::to_string(r.task) + "_" + r.dataset + "_" + op::to_string(r.variant) + ".json";
}

void emit_report(const std::vector<MetricReport>& reports, const std::filesystem::path& dir) {
    if (reports.empty()) throw UsageError("emit_report: no reports");
    std::filesystem::create_directories(dir);
    const auto write = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary);
        out << text;
        if (!out) throw DataError("cannot write " + p.string());
    };
    for (const auto& r : reports) write(dir / report_filename(r), report_json(r));

    const auto summary = dir / "summary.csv";
    std::vector<MetricReport> merged;
    if (std::filesystem::exists(summary)) {
        std::ifstream in(summary, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        merged = parse_summary_csv(ss.str());
    }
    for (const auto& r : reports) {
        const auto same = [&](const MetricReport& o) {
            return o.task == r.task && o.dataset == r.dataset && o.variant == r.variant;
        };
        const auto it = std::find_if(merged.begin(), merged.end(), same);
        if (it != merged.end())
            *it = r;
        else
            merged.push_back(r);
    }
    write(summary, summary_csv(merged));
}

} // namespace neutsflow::eval
