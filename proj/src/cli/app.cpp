#include "neutsflow/cli/app.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "neutsflow/cli/config.hpp"
#include "neutsflow/error.hpp"
#include "neutsflow/numerics/gradcheck.hpp"
#include "neutsflow/numerics/kernels.hpp"
#include "neutsflow/op/checkpoint.hpp"

namespace neutsflow::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "key = value configuration file");
    cmd->add_option("--seed", o.seed, "random seed (overrides the config)");
    cmd->add_option("--out", o.out, "output directory (overrides the config)");
    cmd->add_option("--set", o.sets, "key=value override, repeatable")->take_all()->allow_extra_args(false);
}

RunConfig resolve(const CommonOptions& o) {
    Pairs pairs;
    if (!o.config.empty()) pairs = read_config_file(o.config);
    for (const auto& s : o.sets) pairs.push_back(parse_assignment(s));
    if (o.seed) pairs.emplace_back("seed", std::to_string(*o.seed));
    if (!o.out.empty()) pairs.emplace_back("out", o.out);
    RunConfig cfg;
    cfg.apply(pairs);
    cfg.validate();
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw DataError("cannot write '" + path.string() + "'");
}

data::SeriesTable load_data(const RunConfig& cfg) {
    if (cfg.data.empty()) throw UsageError("config key 'data' is required (path to a CSV file)");
    if (!fs::exists(cfg.data)) throw DataError("data file not found: '" + cfg.data + "'");
    return data::load_csv(cfg.data, cfg.datetime_column, cfg.fill);
}

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? std::string(1, sep) : "") + parts[i];
    return out;
}

std::string format_row(const eval::MetricReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s %s %s: mse=%.6g mae=%.6g windows=%zu scored_length=%zu%s",
                  data::to_string(r.task).c_str(), r.dataset.c_str(), op::to_string(r.variant).c_str(), r.mse, r.mae,
                  r.n_windows, r.horizon, r.failed ? " FAILED" : "");
    return buf;
}

// Trains one variant, writing its epoch log under `dir`.
eval::RunOutcome train_variant(const RunConfig& cfg, const data::SeriesTable& table, const fs::path& log_path) {
    fs::create_directories(log_path.parent_path());
    std::ofstream log(log_path, std::ios::binary);
    if (!log) throw DataError("cannot write '" + log_path.string() + "'");
    return eval::run_task(table, cfg.run, &log);
}

op::Checkpoint make_checkpoint(const RunConfig& cfg, const eval::RunOutcome& o, const data::SeriesTable& table) {
    op::Checkpoint ck;
    ck.config = o.model;
    ck.seed = cfg.run.train.seed;
    ck.params = o.params;
    const std::size_t C = table.channels();
    ck.buffers.add("scaler.mean", numerics::RealTensor({C}, o.scaler.mean));
    ck.buffers.add("scaler.std", numerics::RealTensor({C}, o.scaler.std));
    for (const auto& [k, v] : cfg.to_pairs())
        if (k != "out") ck.set_attribute(k, v);
    ck.set_attribute("sampling_interval", std::to_string(table.sampling_interval()));
    ck.set_attribute("channel_names", join(table.channel_names, ','));
    return ck;
}

int cmd_train(const CommonOptions& o, std::ostream& out) {
    const RunConfig cfg = resolve(o);
    const fs::path dir = cfg.out;
    const auto table = load_data(cfg);
    write_text(dir / "config.resolved", render_config(cfg.to_pairs()));
    const auto outcome = train_variant(cfg, table, dir / "train_log.csv");
    if (outcome.report.failed) throw NumericalError(outcome.report.failure);
    op::save_checkpoint(make_checkpoint(cfg, outcome, table), dir / "checkpoint.ntsf");
    eval::emit_report({outcome.report}, dir / "reports");
    out << format_row(outcome.report) << "\n";
    out << "checkpoint: " << (dir / "checkpoint.ntsf").string() << "\n";
    return kSuccess;
}

int cmd_eval(const CommonOptions& o, std::ostream& out, bool all_variants) {
    RunConfig cfg = resolve(o);
    const fs::path dir = cfg.out;
    const auto table = load_data(cfg);
    write_text(dir / "config.resolved", render_config(cfg.to_pairs()));
    std::vector<eval::MetricReport> reports;
    const std::vector<op::Variant> variants = all_variants ? op::all_variants() : std::vector{cfg.run.variant};
    for (op::Variant v : variants) {
        cfg.run.variant = v;
        const auto outcome = train_variant(cfg, table, dir / "logs" / (op::to_string(v) + ".csv"));
        reports.push_back(outcome.report);
        out << format_row(outcome.report) << "\n";
    }
    eval::emit_report(reports, dir / "reports");
    out << "reports: " << (dir / "reports").string() << "\n";
    for (const auto& r : reports)
        if (r.failed) throw NumericalError(op::to_string(r.variant) + ": " + r.failure);
    return kSuccess;
}

struct ForecastOptions {
    std::string checkpoint;
    std::string input;
    std::optional<std::size_t> n_steps;
    std::string out = ".";
};

int cmd_forecast(const ForecastOptions& o, std::ostream& out) {
    const op::Checkpoint ck = op::load_checkpoint(o.checkpoint);
    RunConfig cfg;
    Pairs pairs;
    for (const auto& kv : ck.attributes)
        if (kv.first != "sampling_interval" && kv.first != "channel_names") pairs.push_back(kv);
    cfg.apply(pairs);
    if (o.n_steps) cfg.run.flow.n_steps = *o.n_steps;
    cfg.validate();

    if (!fs::exists(o.input)) throw DataError("input file not found: '" + o.input + "'");
    std::ifstream probe(o.input);
    if (probe.peek() == std::ifstream::traits_type::eof()) throw UsageError("input file '" + o.input + "' is empty");
    const auto table = data::load_csv(o.input, cfg.datetime_column, cfg.fill);
    const std::size_t C = ck.config.dims.C;
    if (table.length() == 0) throw UsageError("input file '" + o.input + "' has no rows");
    if (table.channels() != C) {
        const std::string* names = ck.attribute("channel_names");
        throw UsageError("input has " + std::to_string(table.channels()) + " channels; the checkpoint expects C = " +
                         std::to_string(C) + (names ? " (" + *names + ")" : ""));
    }
    const data::TaskSpec& task = cfg.run.task;
    const std::size_t need = task.kind == data::TaskKind::CFT ? task.S
                             : task.kind == data::TaskKind::CRTL ? task.S * task.decimation
                                                                 : task.L;
    if (table.length() < need)
        throw DataError("input has " + std::to_string(table.length()) + " rows; " + data::to_string(task.kind) +
                        " needs at least " + std::to_string(need));

    const data::Scaler scaler{
        {ck.buffers.real("scaler.mean").values().begin(), ck.buffers.real("scaler.mean").values().end()},
        {ck.buffers.real("scaler.std").values().begin(), ck.buffers.real("scaler.std").values().end()}};
    const data::SeriesTable recent = scaler.apply(table.slice(table.length() - need, table.length()));
    const numerics::RealTensor H = task.kind == data::TaskKind::CFT
                                       ? recent.values
                                       : data::decimate(recent.values, task.decimation, task.phase);

    const auto vb = eval::build_variant(ck.config.variant, ck.config.dims, cfg.run.flow);
    const numerics::RealTensor pred = scaler.invert(flow::integrate_window(H, vb.model, ck.params, vb.flow));
    flow::FlowConfig one = vb.flow;
    one.n_steps = 1;
    const numerics::RealTensor ref = scaler.invert(flow::integrate_window(H, vb.model, ck.params, one));

    data::SeriesTable result;
    result.values = pred;
    result.channel_names = table.channel_names;
    const std::string* iv = ck.attribute("sampling_interval");
    const data::Timestamp interval = iv ? std::stoll(*iv) : table.sampling_interval();
    for (std::size_t i = 0; i < task.L; ++i)
        result.timestamps.push_back(task.kind == data::TaskKind::TSSR
                                        ? recent.timestamps[i]
                                        : table.timestamps.back() + static_cast<data::Timestamp>(i + 1) * interval);

    const fs::path dir = o.out;
    fs::create_directories(dir);
    data::save_csv(result, dir / "forecast.csv", cfg.datetime_column);
    double diff = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) diff += (pred[i] - ref[i]) * (pred[i] - ref[i]);
    nlohmann::ordered_json side;
    side["checkpoint"] = o.checkpoint;
    side["input"] = o.input;
    side["task"] = data::to_string(task.kind);
    side["rows"] = task.L;
    side["channels"] = C;
    side["n_steps"] = vb.flow.n_steps;
    side["reference_n_steps"] = 1;
    side["difference_norm"] = std::sqrt(diff);
    write_text(dir / "forecast.json", side.dump(2) + "\n");
    out << "forecast: " << (dir / "forecast.csv").string() << " (" << task.L << " rows, n_steps=" << vb.flow.n_steps
        << ", difference vs one step " << std::sqrt(diff) << ")\n";
    return kSuccess;
}

int cmd_gradcheck(const CommonOptions& o, std::ostream& out) {
    RunConfig cfg = resolve(o);
    std::vector<data::WindowPair> pairs;
    op::OperatorDims dims = cfg.run.dims;
    dims.S = cfg.run.task.S;
    dims.L = cfg.run.task.L;
    if (!cfg.data.empty()) {
        const auto table = load_data(cfg);
        dims.C = table.channels();
        auto d = eval::prepare_task_data(table, cfg.run);
        pairs.assign(d.train.begin(), d.train.begin() + std::min<std::size_t>(2, d.train.size()));
    } else {
        numerics::Rng rng(cfg.run.train.seed + 1);
        for (int i = 0; i < 2; ++i) {
            data::WindowPair p;
            p.history = numerics::RealTensor({dims.S, dims.C});
            p.future = numerics::RealTensor({dims.L, dims.C});
            for (auto& v : p.history.values()) v = rng.normal();
            for (auto& v : p.future.values()) v = rng.normal();
            pairs.push_back(std::move(p));
        }
    }
    const auto vb = eval::build_variant(cfg.run.variant, dims, cfg.run.flow);
    const auto params = op::init_params(vb.model, cfg.run.train.seed);
    std::vector<const data::WindowPair*> batch;
    for (const auto& p : pairs) batch.push_back(&p);
    const numerics::LossFn loss = [&](const numerics::ParameterSet& p, numerics::GradientRecord* g) {
        numerics::Rng rng(cfg.run.train.seed);
        auto r = flow::training_step(batch, vb.model, p, vb.flow, rng);
        if (g) *g = std::move(r.grads);
        return r.loss;
    };
    numerics::GradCheckOptions opt;
    opt.seed = cfg.run.train.seed;
    const auto r = numerics::grad_check(loss, params, opt);
    char buf[256];
    std::snprintf(buf, sizeof buf, "max_relative_error %.3e (checked %zu scalars, worst %s[%zu]: analytic %.6e numeric %.6e)\n",
                  r.max_relative_error, r.checked, r.worst_parameter.c_str(), r.worst_index, r.worst_analytic,
                  r.worst_numeric);
    out << buf;
    if (!(r.max_relative_error < 1e-4)) throw NumericalError("gradient check failed: max relative error above 1e-4");
    return kSuccess;
}

int cmd_ingest(const CommonOptions& o, const std::string& input, std::ostream& out) {
    RunConfig cfg = resolve(o);
    if (!input.empty()) cfg.data = input;
    const auto table = load_data(cfg);
    out << "rows: " << table.length() << "\n";
    out << "channels: " << table.channels() << " (" << join(table.channel_names, ',') << ")\n";
    if (table.length() > 0) {
        out << "first: " << data::format_datetime(table.timestamps.front()) << "\n";
        out << "last: " << data::format_datetime(table.timestamps.back()) << "\n";
    }
    if (table.length() > 1) out << "sampling_interval_seconds: " << table.sampling_interval() << "\n";
    return kSuccess;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    numerics::kernels::set_max_threads(0);
    CLI::App app{"Time-series forecasting with flow matching and a spectral neural operator", "neutsflow"};
    app.require_subcommand(1);
    CommonOptions common;
    ForecastOptions fc;
    std::string ingest_input;

    auto* train = app.add_subcommand("train", "train a model; writes checkpoint, epoch log and config echo");
    add_common(train, common);
    auto* eval_cmd = app.add_subcommand("eval", "train and score one variant; writes report files");
    add_common(eval_cmd, common);
    auto* ablate = app.add_subcommand("ablate", "train and score all five variants");
    add_common(ablate, common);
    auto* grad = app.add_subcommand("gradcheck", "compare analytic and numeric gradients of the flow loss");
    add_common(grad, common);
    auto* ingest = app.add_subcommand("ingest", "validate a CSV file");
    add_common(ingest, common);
    ingest->add_option("--input", ingest_input, "CSV file (defaults to the config's data)");
    auto* forecast = app.add_subcommand("forecast", "predict the next horizon from the end of a CSV file");
    forecast->add_option("--checkpoint", fc.checkpoint, "checkpoint file")->required();
    forecast->add_option("--input", fc.input, "CSV file with at least one history window")->required();
    forecast->add_option("--n-steps", fc.n_steps, "ODE steps (defaults to the checkpoint's)");
    forecast->add_option("--out", fc.out, "output directory");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            return app.exit(e, out, err) == 0 ? kSuccess : kUsage;
        }
        if (train->parsed()) return cmd_train(common, out);
        if (eval_cmd->parsed()) return cmd_eval(common, out, false);
        if (ablate->parsed()) return cmd_eval(common, out, true);
        if (grad->parsed()) return cmd_gradcheck(common, out);
        if (ingest->parsed()) return cmd_ingest(common, ingest_input, out);
        if (forecast->parsed()) return cmd_forecast(fc, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kData;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUnexpected;
    }
    return kUsage;
}

} // namespace neutsflow::cli
