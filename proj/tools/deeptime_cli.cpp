// deeptime: synthetic-family studies, benchmark training/evaluation, the
// lookback-multiplier sweep, ablation variants, forecasting, and
// self-profiling, all driven by a JSON config plus a few flags.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deeptime/ablation.hpp"
#include "deeptime/checkpoint.hpp"
#include "deeptime/evaluate.hpp"
#include "deeptime/profile.hpp"
#include "deeptime/run_config.hpp"
#include "deeptime/sweep.hpp"

namespace {

using namespace deeptime;
using io::json;
using io::RunConfig;

namespace fs = std::filesystem;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

RunConfig load_run_config(const GlobalArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty())
        cfg = io::run_config_from_json(io::read_json_file(args.config_path));
    if (args.seed) {
        cfg.train.seed = *args.seed;
        cfg.synth.seed = *args.seed;
    }
    if (args.threads) cfg.train.threads = *args.threads;
    return cfg;
}

std::string out_path(const GlobalArgs& args, const std::string& name) {
    fs::create_directories(args.out_dir);
    return (fs::path(args.out_dir) / name).string();
}

// Every report opens with its schema version and the fully parsed config.
json base_report(const std::string& command, const RunConfig& cfg) {
    return json{{"schema_version", io::kSchemaVersion},
                {"command", command},
                {"config", io::run_config_to_json(cfg)}};
}

json metrics_json(const eval::Metrics& m) { return io::metrics_to_json(m); }

json report_without_timing(const forecaster::TrainReport& r) {
    json j = io::report_to_json(r);
    j.erase("epoch_seconds");
    return j;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void dump_task_csv(const std::string& path, const std::vector<double>& grid,
                   const forecaster::Task& task) {
    std::ofstream out(path);
    out.precision(17);
    out << "x,y\n";
    for (std::size_t i = 0; i < task.lookback.rows(); ++i)
        out << grid[i] << ',' << task.lookback(i, 0) << '\n';
    for (std::size_t i = 0; i < task.horizon.rows(); ++i)
        out << grid[task.lookback.rows() + i] << ',' << task.horizon(i, 0) << '\n';
}

int cmd_synth(const GlobalArgs& args, const RunConfig& run, bool dump_tasks, bool dump_preds) {
    const auto t0 = std::chrono::steady_clock::now();

    data::SyntheticData dataset = data::gen_synthetic(run.synth);
    if (dump_tasks) {
        fs::create_directories(fs::path(args.out_dir) / "tasks");
        for (std::size_t i = 0; i < dataset.train.size(); ++i)
            dump_task_csv(out_path(args, "tasks/train_" + std::to_string(i) + ".csv"),
                          dataset.grid, dataset.train[i]);
        for (std::size_t i = 0; i < dataset.test.size(); ++i)
            dump_task_csv(out_path(args, "tasks/test_" + std::to_string(i) + ".csv"),
                          dataset.grid, dataset.test[i]);
    }

    forecaster::TrainConfig cfg = run.train;
    cfg.horizon = run.synth.horizon_len;
    const forecaster::TaskSet test_tasks = forecaster::TaskSet::from_tasks(std::move(dataset.test));
    auto [train_tasks, val_tasks] = eval::split_train_val(std::move(dataset.train));

    auto [model, report] = forecaster::train(forecaster::init_model(cfg, numkit::Rng(cfg.seed)),
                                             train_tasks, val_tasks, cfg);

    eval::EvalOptions opts;
    opts.threads = cfg.threads;
    opts.store_per_window = true;
    const eval::Metrics metrics = eval::evaluate_tasks(model, test_tasks, opts);
    const eval::Metrics baseline = eval::baseline_constant_last(test_tasks);

    json rep = base_report("synth", run);
    rep["family"] = data::family_name(run.synth.family);
    json m = metrics_json(metrics);
    json per_task = m["per_window"];
    m.erase("per_window");
    rep["metrics"] = m;
    rep["per_task"] = per_task;
    rep["baseline"] = metrics_json(baseline);
    rep["improvement_factor"] = baseline.mse / metrics.mse;
    rep["train_report"] = report_without_timing(report);
    rep["timing"] = json{{"total_seconds", seconds_since(t0)},
                         {"epoch_seconds", report.epoch_seconds}};
    io::write_json_file(out_path(args, "report.json"), rep);

    if (dump_preds)
        eval::dump_forecasts_csv(model, test_tasks, out_path(args, "predictions.csv"));
    std::cout << "synth " << data::family_name(run.synth.family) << ": test mse " << metrics.mse
              << ", baseline mse " << baseline.mse << "\n";
    return 0;
}

int cmd_train(const GlobalArgs& args, RunConfig run, const std::string& csv_flag) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!csv_flag.empty()) run.csv_path = csv_flag;
    if (run.csv_path.empty()) throw InvalidConfig("train: no CSV path given");

    const data::TimeSeries raw = data::load_csv(run.csv_path, run.target);
    const eval::PreparedSeries prep = eval::prepare_series(raw, run.split, false);

    const std::size_t lookback_len = run.train.lookback();
    const auto train_tasks = data::windows(prep.splits.train, lookback_len, run.train.horizon);
    const auto val_tasks = data::windows(prep.splits.val, lookback_len, run.train.horizon);
    auto [model, report] = forecaster::train(
        forecaster::init_model(run.train, numkit::Rng(run.train.seed)), train_tasks, val_tasks,
        run.train);

    eval::EvalOptions opts;
    opts.threads = run.train.threads;
    const eval::Metrics test =
        eval::evaluate(model, prep.splits.test, lookback_len, run.train.horizon, opts);

    io::save_checkpoint(out_path(args, "checkpoint.json"),
                        io::Checkpoint{std::move(model), run.train, prep.norm});

    json rep = base_report("train", run);
    rep["train_report"] = report_without_timing(report);
    rep["test_metrics"] = metrics_json(test);
    rep["checkpoint"] = out_path(args, "checkpoint.json");
    rep["timing"] = json{{"total_seconds", seconds_since(t0)},
                         {"epoch_seconds", report.epoch_seconds}};
    io::write_json_file(out_path(args, "train_report.json"), rep);
    std::cout << "train: best val " << report.best_val << " (epoch " << report.best_epoch
              << "), test mse " << test.mse << "\n";
    return 0;
}

data::Splits standardized_splits(const data::TimeSeries& raw, const data::SplitSpec& split,
                                 const std::optional<data::Normalization>& stored,
                                 data::Normalization& used) {
    data::Splits splits = data::chrono_split(raw, split);
    used = stored ? *stored : data::fit_standardizer(splits.train);
    splits.train = data::apply_standardizer(std::move(splits.train), used);
    splits.val = data::apply_standardizer(std::move(splits.val), used);
    splits.test = data::apply_standardizer(std::move(splits.test), used);
    return splits;
}

int cmd_eval(const GlobalArgs& args, RunConfig run, const std::string& ckpt_path,
             const std::string& csv_flag, std::size_t horizon_flag, std::size_t lookback_flag,
             const std::string& split_name, bool raw_metrics, bool dump) {
    if (!csv_flag.empty()) run.csv_path = csv_flag;
    if (run.csv_path.empty()) throw InvalidConfig("eval: no CSV path given");

    const io::Checkpoint ckpt = io::load_checkpoint(ckpt_path);
    const data::TimeSeries raw = data::load_csv(run.csv_path, run.target);
    data::Normalization norm;
    const data::Splits splits = standardized_splits(raw, run.split, ckpt.normalization, norm);

    const data::TimeSeries* part = &splits.test;
    if (split_name == "train") part = &splits.train;
    else if (split_name == "val") part = &splits.val;
    else if (split_name != "test") throw InvalidConfig("eval: unknown split " + split_name);

    const std::size_t horizon_len = horizon_flag ? horizon_flag : ckpt.config.horizon;
    const std::size_t lookback_len = lookback_flag ? lookback_flag : ckpt.config.lookback();

    eval::EvalOptions opts;
    opts.threads = run.train.threads;
    if (raw_metrics) opts.raw_scale = &norm;
    const eval::Metrics metrics =
        eval::evaluate(ckpt.model, *part, lookback_len, horizon_len, opts);

    json rep = base_report("eval", run);
    rep["checkpoint"] = ckpt_path;
    rep["checkpoint_config"] = io::config_to_json(ckpt.config);
    rep["split"] = split_name;
    rep["lookback"] = lookback_len;
    rep["horizon"] = horizon_len;
    rep["raw_scale"] = raw_metrics;
    rep["metrics"] = metrics_json(metrics);
    io::write_json_file(out_path(args, "metrics.json"), rep);

    if (dump)
        eval::dump_forecasts_csv(ckpt.model, data::windows(*part, lookback_len, horizon_len),
                                 out_path(args, "forecasts.csv"),
                                 raw_metrics ? &norm : nullptr);
    std::cout << "eval[" << split_name << "]: mse " << metrics.mse << ", mae " << metrics.mae
              << "\n";
    return 0;
}

int cmd_sweep(const GlobalArgs& args, RunConfig run, const std::string& csv_flag) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!csv_flag.empty()) run.csv_path = csv_flag;
    if (run.csv_path.empty()) throw InvalidConfig("sweep: no CSV path given");

    const data::TimeSeries raw = data::load_csv(run.csv_path, run.target);
    const eval::PreparedSeries prep = eval::prepare_series(raw, run.split, false);
    const eval::SweepOutput out = eval::sweep_mu(run.train, prep.splits, run.mus);

    json rows = json::array();
    for (const eval::MuEntry& e : out.result.entries)
        rows.push_back(json{{"mu", e.mu},
                            {"lookback", e.lookback_len},
                            {"val_loss", e.val_loss},
                            {"test", metrics_json(e.test)}});
    json rep = base_report("sweep", run);
    rep["table"] = rows;
    rep["chosen_mu"] = out.result.chosen().mu;
    rep["chosen_test"] = metrics_json(out.result.chosen().test);
    rep["test_evaluations"] = out.result.test_evaluations;
    rep["timing"] = json{{"total_seconds", seconds_since(t0)}};
    io::write_json_file(out_path(args, "sweep.json"), rep);

    forecaster::TrainConfig chosen_cfg = run.train;
    chosen_cfg.mu = out.result.chosen().mu;
    io::save_checkpoint(out_path(args, "checkpoint.json"),
                        io::Checkpoint{out.best_model, chosen_cfg, prep.norm});
    std::cout << "sweep: chose mu " << out.result.chosen().mu << " with test mse "
              << out.result.chosen().test.mse << "\n";
    return 0;
}

int cmd_ablate(const GlobalArgs& args, RunConfig run, const std::string& variant_flag) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!variant_flag.empty()) run.variant = eval::variant_from_name(variant_flag);

    eval::AblationResult res;
    if (run.csv_path.empty()) {
        forecaster::TrainConfig cfg = run.train;
        cfg.horizon = run.synth.horizon_len;
        res = eval::run_ablation_synth(run.variant, cfg, run.synth, run.local_epoch_grid);
    } else {
        const data::TimeSeries raw = data::load_csv(run.csv_path, run.target);
        res = eval::run_ablation_series(run.variant, run.train, raw, run.split,
                                        run.local_epoch_grid);
    }

    json rep = base_report("ablate", run);
    rep["variant"] = eval::variant_name(res.variant);
    rep["metrics"] = metrics_json(res.test);
    rep["val_loss"] = res.val_loss;
    if (res.variant == eval::AblationVariant::kLocal) rep["local_epochs"] = res.local_epochs;
    rep["timing"] = json{{"total_seconds", seconds_since(t0)}};
    io::write_json_file(out_path(args, "ablation.json"), rep);
    std::cout << "ablate " << eval::variant_name(res.variant) << ": test mse " << res.test.mse
              << "\n";
    return 0;
}

int cmd_forecast(const GlobalArgs& args, RunConfig run, const std::string& ckpt_path,
                 const std::string& csv_flag, std::size_t horizon_flag) {
    if (!csv_flag.empty()) run.csv_path = csv_flag;
    if (run.csv_path.empty()) throw InvalidConfig("forecast: no CSV path given");

    const io::Checkpoint ckpt = io::load_checkpoint(ckpt_path);
    const data::TimeSeries raw = data::load_csv(run.csv_path, run.target);
    const data::Normalization norm =
        ckpt.normalization ? *ckpt.normalization : data::fit_standardizer(raw);

    const std::size_t horizon_len = horizon_flag ? horizon_flag : ckpt.config.horizon;
    const std::size_t lookback_len = ckpt.config.lookback();
    const std::size_t total = raw.values.rows();
    if (total < lookback_len + horizon_len)
        throw SplitTooSmall("forecast: series shorter than lookback + horizon");

    const numkit::Matrix all_std = data::standardize(raw.values, norm);
    const std::size_t start = total - horizon_len - lookback_len;
    const numkit::Matrix lookback = numkit::rows_block(all_std, start, lookback_len);
    const numkit::Matrix truth = numkit::rows_block(raw.values, start + lookback_len, horizon_len);

    const forecaster::Forecast fc =
        forecaster::forecast(ckpt.model, lookback, horizon_len, inr::Mode::kEval);
    const numkit::Matrix preds = data::unstandardize(fc.preds, norm);

    const std::string path = out_path(args, "forecast.csv");
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out.precision(17);
    out << "window_start,step,channel,y_true,y_pred\n";
    for (std::size_t h = 0; h < horizon_len; ++h)
        for (std::size_t c = 0; c < preds.cols(); ++c)
            out << start + lookback_len << ',' << h << ',' << c << ',' << truth(h, c) << ','
                << preds(h, c) << '\n';

    json rep = base_report("forecast", run);
    rep["checkpoint"] = ckpt_path;
    rep["window_start"] = start + lookback_len;
    rep["horizon"] = horizon_len;
    rep["csv"] = path;
    rep["raw_scale_mse"] = eval::mse(preds, truth);
    rep["raw_scale_mae"] = eval::mae(preds, truth);
    io::write_json_file(out_path(args, "forecast.json"), rep);
    std::cout << "forecast: wrote " << path << " (horizon " << horizon_len << ", "
              << preds.cols() << " channels)\n";
    return 0;
}

int cmd_profile(const GlobalArgs& args, const RunConfig& run) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto entries =
        eval::profile(run.train, run.lookback_grid, run.horizon_grid, run.fixed_lookback,
                      run.fixed_horizon, run.profile_batch, run.profile_reps,
                      run.profile_channels);

    json rows = json::array();
    const std::string csv_path = out_path(args, "profile.csv");
    std::ofstream csv(csv_path);
    csv << "axis,lookback,horizon,seconds_per_iter,peak_rss_delta_bytes\n";
    for (const eval::ProfileEntry& e : entries) {
        rows.push_back(json{{"axis", e.axis},
                            {"lookback", e.lookback_len},
                            {"horizon", e.horizon_len},
                            {"seconds_per_iter", e.seconds_per_iter},
                            {"peak_rss_delta_bytes", e.peak_rss_delta_bytes}});
        csv << e.axis << ',' << e.lookback_len << ',' << e.horizon_len << ','
            << e.seconds_per_iter << ',' << e.peak_rss_delta_bytes << '\n';
    }
    json rep = base_report("profile", run);
    rep["entries"] = rows;
    rep["timing"] = json{{"total_seconds", seconds_since(t0)}};
    io::write_json_file(out_path(args, "profile.json"), rep);
    std::cout << "profile: " << entries.size() << " grid points -> " << csv_path << "\n";
    return 0;
}

std::string error_type_name(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
    if (dynamic_cast<const EmptyFile*>(&e)) return "EmptyFile";
    if (dynamic_cast<const SplitTooSmall*>(&e)) return "SplitTooSmall";
    if (dynamic_cast<const NotPositiveDefinite*>(&e)) return "NotPositiveDefinite";
    if (dynamic_cast<const Degenerate*>(&e)) return "Degenerate";
    if (dynamic_cast<const NonFiniteValue*>(&e)) return "NonFiniteValue";
    if (dynamic_cast<const NonFiniteGradient*>(&e)) return "NonFiniteGradient";
    if (dynamic_cast<const ShapeMismatch*>(&e)) return "ShapeMismatch";
    if (dynamic_cast<const InvalidConfig*>(&e)) return "InvalidConfig";
    return "Error";
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const EmptyFile*>(&e) ||
        dynamic_cast<const SplitTooSmall*>(&e))
        return 2;
    if (dynamic_cast<const NotPositiveDefinite*>(&e) || dynamic_cast<const Degenerate*>(&e) ||
        dynamic_cast<const NonFiniteValue*>(&e) || dynamic_cast<const NonFiniteGradient*>(&e) ||
        dynamic_cast<const ShapeMismatch*>(&e))
        return 3;
    return 1; // config/usage
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deeptime: deep time-index models with meta-optimization"};
    app.require_subcommand(1);

    GlobalArgs args;
    std::uint64_t seed_flag = 0;
    std::size_t threads_flag = 0;
    std::vector<CLI::Option*> seed_opts, thread_opts;

    auto add_globals = [&](CLI::App* sub) {
        sub->add_option("--config", args.config_path, "JSON config file");
        sub->add_option("--out", args.out_dir, "output directory (default .)");
        seed_opts.push_back(sub->add_option("--seed", seed_flag, "override the run seed"));
        thread_opts.push_back(
            sub->add_option("--threads", threads_flag, "worker threads (never affects results)"));
    };

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic family, train, evaluate");
    add_globals(synth);
    std::string family;
    bool dump_tasks = false, dump_preds = false;
    std::size_t synth_train_tasks = 0, synth_test_tasks = 0, synth_epochs = 0;
    std::size_t synth_layer_size = 0, synth_ff_size = 0, synth_layers = 0;
    synth->add_option("--family", family, "linear | cubic | sines");
    synth->add_option("--train-tasks", synth_train_tasks, "override train task count");
    synth->add_option("--test-tasks", synth_test_tasks, "override test task count");
    synth->add_option("--epochs", synth_epochs, "override epochs");
    synth->add_option("--layers", synth_layers, "override trunk depth");
    synth->add_option("--layer-size", synth_layer_size, "override trunk width");
    synth->add_option("--ff-size", synth_ff_size, "override Fourier feature width");
    synth->add_flag("--dump-tasks", dump_tasks, "write one x,y CSV per task");
    synth->add_flag("--dump-preds", dump_preds, "write test predictions CSV");

    // train
    auto* train_cmd = app.add_subcommand("train", "train on a CSV benchmark series");
    add_globals(train_cmd);
    std::string csv_flag;
    train_cmd->add_option("--csv", csv_flag, "CSV path (overrides config)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a CSV series");
    add_globals(eval_cmd);
    std::string ckpt_path, split_name = "test";
    std::size_t horizon_flag = 0, lookback_flag = 0;
    bool raw_metrics = false, dump_forecasts = false;
    eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
    eval_cmd->add_option("--csv", csv_flag, "CSV path (overrides config)");
    eval_cmd->add_option("--horizon", horizon_flag, "horizon (default: checkpoint's)");
    eval_cmd->add_option("--lookback", lookback_flag, "lookback (default: checkpoint's)");
    eval_cmd->add_option("--split", split_name, "train | val | test (default test)");
    eval_cmd->add_flag("--raw", raw_metrics, "metrics in raw scale instead of standardized");
    eval_cmd->add_flag("--dump-forecasts", dump_forecasts, "write per-window forecasts CSV");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "lookback-multiplier sweep on a CSV series");
    add_globals(sweep_cmd);
    sweep_cmd->add_option("--csv", csv_flag, "CSV path (overrides config)");

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "train and evaluate an ablation variant");
    add_globals(ablate_cmd);
    std::string variant_flag;
    ablate_cmd->add_option("--variant", variant_flag,
                           "full | no_cff | no_rr | plus_datetime | local");

    // forecast
    auto* forecast_cmd = app.add_subcommand("forecast", "forecast the final window of a CSV");
    add_globals(forecast_cmd);
    forecast_cmd->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
    forecast_cmd->add_option("--csv", csv_flag, "CSV path (overrides config)");
    forecast_cmd->add_option("--horizon", horizon_flag, "horizon (default: checkpoint's)");

    // profile
    auto* profile_cmd = app.add_subcommand("profile", "time forward+backward over size grids");
    add_globals(profile_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    for (const CLI::Option* opt : seed_opts)
        if (opt->count() > 0) args.seed = seed_flag;
    for (const CLI::Option* opt : thread_opts)
        if (opt->count() > 0) args.threads = threads_flag;

    try {
        RunConfig run = load_run_config(args);
        if (*synth) {
            if (!family.empty()) run.synth.family = data::family_from_name(family);
            if (synth_train_tasks) run.synth.n_train_tasks = synth_train_tasks;
            if (synth_test_tasks) run.synth.n_test_tasks = synth_test_tasks;
            if (synth_epochs) run.train.epochs = synth_epochs;
            if (synth_layers) run.train.layers = synth_layers;
            if (synth_layer_size) run.train.layer_size = synth_layer_size;
            if (synth_ff_size) run.train.ff_size = synth_ff_size;
            return cmd_synth(args, run, dump_tasks, dump_preds);
        }
        if (*train_cmd) return cmd_train(args, run, csv_flag);
        if (*eval_cmd)
            return cmd_eval(args, run, ckpt_path, csv_flag, horizon_flag, lookback_flag,
                            split_name, raw_metrics, dump_forecasts);
        if (*sweep_cmd) return cmd_sweep(args, run, csv_flag);
        if (*ablate_cmd) return cmd_ablate(args, run, variant_flag);
        if (*forecast_cmd) return cmd_forecast(args, run, ckpt_path, csv_flag, horizon_flag);
        if (*profile_cmd) return cmd_profile(args, run);
        throw InvalidConfig("no subcommand given");
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        json err{{"error",
                  {{"type", error_type_name(e)}, {"exit", code}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        std::cerr << "error: " << e.what() << "\n";
        return code;
    }
}
