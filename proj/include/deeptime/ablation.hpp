#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "deeptime/evaluate.hpp"
#include "deeptime/sweep.hpp"
#include "deeptime/synthetic.hpp"
#include "deeptime/train.hpp"

namespace deeptime::eval {

using data::SyntheticSpec;
using forecaster::Task;
using forecaster::TaskSet;
using forecaster::TrainConfig;
using numkit::Matrix;
using numkit::Rng;

enum class AblationVariant { kFull, kNoCff, kNoRr, kPlusDatetime, kLocal };

inline std::string variant_name(AblationVariant v) {
    switch (v) {
        case AblationVariant::kFull: return "full";
        case AblationVariant::kNoCff: return "no_cff";
        case AblationVariant::kNoRr: return "no_rr";
        case AblationVariant::kPlusDatetime: return "plus_datetime";
        case AblationVariant::kLocal: return "local";
    }
    throw InvalidConfig("variant_name: unknown variant");
}

inline AblationVariant variant_from_name(const std::string& name) {
    if (name == "full") return AblationVariant::kFull;
    if (name == "no_cff") return AblationVariant::kNoCff;
    if (name == "no_rr") return AblationVariant::kNoRr;
    if (name == "plus_datetime") return AblationVariant::kPlusDatetime;
    if (name == "local") return AblationVariant::kLocal;
    throw InvalidConfig("unknown ablation variant: " + name);
}

struct AblationResult {
    AblationVariant variant = AblationVariant::kFull;
    Metrics test;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
    std::size_t local_epochs = 0; // chosen inner epoch count, local only
};

// App-J style comparison: positive means the first run underperforms.
inline double percent_change(double mse_a, double mse_b) {
    return (mse_a - mse_b) / mse_b;
}

inline inr::ModelSpec variant_spec(const TrainConfig& cfg, AblationVariant v,
                                   std::size_t channels) {
    inr::ModelSpec spec = cfg.model_spec();
    if (v == AblationVariant::kNoCff) spec.featurizer = inr::FeaturizerKind::kLinear;
    if (v == AblationVariant::kNoRr || v == AblationVariant::kLocal)
        spec.head_channels = channels;
    return spec;
}

namespace detail {

// Fits a fresh INR (linear head, no ridge) to one lookback window by
// full-batch Adam steps, and returns eval-mode horizon predictions at each
// requested step count.
inline std::vector<Matrix> local_fit_predict(const inr::ModelSpec& spec, const Task& task,
                                             const std::vector<std::size_t>& checkpoints,
                                             double lr, Rng window_rng) {
    const std::size_t lookback_len = task.lookback.rows();
    const std::size_t horizon_len = task.horizon.rows();
    const Matrix tau_lookback = numkit::rows_block(task.tau, 0, lookback_len);

    inr::InrModel model = inr::init_model(spec, window_rng.split(0));
    Rng dropout_rng = window_rng.split(1);
    forecaster::AdamState opt = forecaster::AdamState::init(model);

    const std::size_t max_steps =
        *std::max_element(checkpoints.begin(), checkpoints.end());
    std::vector<Matrix> preds;
    for (std::size_t step = 1; step <= max_steps; ++step) {
        auto [reprs, cache] = inr::forward(model, tau_lookback, inr::Mode::kTrain, &dropout_rng);
        Matrix fitted = numkit::matmul(reprs, model.head->weight);
        numkit::add_row_vector(fitted, model.head->bias);
        const Matrix d_preds = forecaster::loss_mse_grad(fitted, task.lookback);

        inr::BackwardResult bres = inr::backward(model, cache,
                                                 numkit::matmul_nt(d_preds, model.head->weight));
        bres.grads.head_weight += numkit::matmul_tn(reprs, d_preds);
        bres.grads.head_bias += numkit::col_sums(d_preds);
        forecaster::adam_update(opt, model, bres.grads, lr, lr);

        if (std::find(checkpoints.begin(), checkpoints.end(), step) != checkpoints.end()) {
            const forecaster::Forecast fc = forecaster::forecast_window(
                model, task.tau, task.lookback, horizon_len, inr::Mode::kEval);
            preds.push_back(fc.preds);
        }
    }
    return preds;
}

struct ErrSums {
    double sse = 0.0, sae = 0.0;
    std::size_t count = 0;
};

inline Metrics metrics_from(const std::vector<ErrSums>& sums) {
    Metrics m;
    m.n_windows = sums.size();
    double sse = 0.0, sae = 0.0;
    std::size_t total = 0;
    for (const ErrSums& e : sums) {
        sse += e.sse;
        sae += e.sae;
        total += e.count;
    }
    m.mse = sse / static_cast<double>(total);
    m.mae = sae / static_cast<double>(total);
    return m;
}

// Per-window from-scratch fits; the inner epoch count is tuned on the
// validation windows, then applied to the test windows.
inline AblationResult local_ablation(const TrainConfig& cfg, const TaskSet& val_tasks,
                                     const TaskSet& test_tasks, std::size_t channels,
                                     const std::vector<std::size_t>& epoch_grid) {
    const inr::ModelSpec spec = variant_spec(cfg, AblationVariant::kLocal, channels);
    const Rng root(cfg.seed);
    constexpr double kLocalLr = 1e-3;

    // One fit per validation window covers the whole epoch grid by snapshotting
    // the trajectory at each grid value.
    std::vector<std::vector<ErrSums>> val_err(epoch_grid.size(),
                                              std::vector<ErrSums>(val_tasks.size()));
    parallel_for(val_tasks.size(), cfg.threads, [&](std::size_t i) {
        const Task task = val_tasks.get(i);
        const std::vector<Matrix> preds =
            local_fit_predict(spec, task, epoch_grid, kLocalLr, root.split(9000 + i));
        for (std::size_t e = 0; e < epoch_grid.size(); ++e) {
            ErrSums& s = val_err[e][i];
            s.count = preds[e].size();
            for (std::size_t j = 0; j < preds[e].size(); ++j) {
                const double d = preds[e].data()[j] - task.horizon.data()[j];
                s.sse += d * d;
                s.sae += std::abs(d);
            }
        }
    });

    std::size_t best_e = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < epoch_grid.size(); ++e) {
        const double v = metrics_from(val_err[e]).mse;
        if (v < best_val) {
            best_val = v;
            best_e = e;
        }
    }

    const std::vector<std::size_t> chosen = {epoch_grid[best_e]};
    std::vector<ErrSums> test_err(test_tasks.size());
    parallel_for(test_tasks.size(), cfg.threads, [&](std::size_t i) {
        const Task task = test_tasks.get(i);
        const std::vector<Matrix> preds =
            local_fit_predict(spec, task, chosen, kLocalLr, root.split(50000 + i));
        ErrSums& s = test_err[i];
        s.count = preds[0].size();
        for (std::size_t j = 0; j < preds[0].size(); ++j) {
            const double d = preds[0].data()[j] - task.horizon.data()[j];
            s.sse += d * d;
            s.sae += std::abs(d);
        }
    });

    AblationResult out;
    out.variant = AblationVariant::kLocal;
    out.test = metrics_from(test_err);
    out.val_loss = best_val;
    out.local_epochs = epoch_grid[best_e];
    return out;
}

} // namespace detail

inline const std::vector<std::size_t>& default_local_epoch_grid() {
    static const std::vector<std::size_t> grid = {10, 20, 30, 40, 50};
    return grid;
}

// Splits materialized synthetic train tasks into train/validation (19:1).
inline std::pair<TaskSet, TaskSet> split_train_val(std::vector<Task> tasks) {
    const std::size_t n_val = std::max<std::size_t>(1, tasks.size() / 20);
    std::vector<Task> val(tasks.end() - static_cast<long>(n_val), tasks.end());
    tasks.resize(tasks.size() - n_val);
    return {TaskSet::from_tasks(std::move(tasks)), TaskSet::from_tasks(std::move(val))};
}

// Trains and evaluates one ablation variant on a synthetic family under the
// same protocol as the full model.
inline AblationResult run_ablation_synth(AblationVariant variant, const TrainConfig& cfg,
                                         const SyntheticSpec& spec,
                                         const std::vector<std::size_t>& local_grid =
                                             default_local_epoch_grid()) {
    if (variant == AblationVariant::kPlusDatetime)
        throw InvalidConfig("plus_datetime needs timestamped data, not synthetic tasks");

    data::SyntheticData dataset = data::gen_synthetic(spec);
    auto [train_tasks, val_tasks] = split_train_val(std::move(dataset.train));
    const TaskSet test_tasks = TaskSet::from_tasks(std::move(dataset.test));

    if (variant == AblationVariant::kLocal)
        return detail::local_ablation(cfg, val_tasks, test_tasks, 1, local_grid);

    auto [model, report] =
        forecaster::train(inr::init_model(variant_spec(cfg, variant, 1), Rng(cfg.seed)),
                          train_tasks, val_tasks, cfg);
    EvalOptions opts;
    opts.threads = cfg.threads;

    AblationResult out;
    out.variant = variant;
    out.val_loss = report.best_val;
    out.test = evaluate_tasks(model, test_tasks, opts);
    return out;
}

// Split + standardized series plus optional per-split datetime features,
// shared by the CSV training, sweep, and ablation entry points.
struct PreparedSeries {
    data::Splits splits; // standardized
    data::Normalization norm;
    std::shared_ptr<const Matrix> train_extras, val_extras, test_extras;
    std::size_t extra_dim = 0;
};

inline PreparedSeries prepare_series(const data::TimeSeries& raw,
                                     const data::SplitSpec& split_spec, bool with_datetime) {
    PreparedSeries prep;
    prep.splits = data::chrono_split(raw, split_spec);
    prep.norm = data::fit_standardizer(prep.splits.train);
    prep.splits.train = data::apply_standardizer(std::move(prep.splits.train), prep.norm);
    prep.splits.val = data::apply_standardizer(std::move(prep.splits.val), prep.norm);
    prep.splits.test = data::apply_standardizer(std::move(prep.splits.test), prep.norm);

    if (with_datetime) {
        if (!raw.has_timestamps())
            throw InvalidConfig("datetime features need a timestamped series");
        long long period = 0;
        if (raw.timestamps.size() >= 2)
            period = data::epoch_seconds(raw.timestamps[1]) -
                     data::epoch_seconds(raw.timestamps[0]);
        const auto cols = data::datetime_columns_for_period(static_cast<int>(period));
        auto features_of = [&](const data::TimeSeries& part) {
            return std::make_shared<const Matrix>(
                data::select_columns(data::datetime_features(part.timestamps), cols));
        };
        prep.train_extras = features_of(prep.splits.train);
        prep.val_extras = features_of(prep.splits.val);
        prep.test_extras = features_of(prep.splits.test);
        prep.extra_dim = cols.size();
    }
    return prep;
}

// CSV-series ablation under the benchmark protocol (standardized metrics).
inline AblationResult run_ablation_series(AblationVariant variant, TrainConfig cfg,
                                          const data::TimeSeries& raw,
                                          const data::SplitSpec& split_spec,
                                          const std::vector<std::size_t>& local_grid =
                                              default_local_epoch_grid()) {
    const PreparedSeries prep =
        prepare_series(raw, split_spec, variant == AblationVariant::kPlusDatetime);
    cfg.extra_feature_dim = prep.extra_dim;
    const std::size_t channels = prep.splits.train.values.cols();
    const std::size_t lookback_len = cfg.lookback();

    const TaskSet train_tasks =
        data::windows(prep.splits.train, lookback_len, cfg.horizon, prep.train_extras);
    const TaskSet val_tasks =
        data::windows(prep.splits.val, lookback_len, cfg.horizon, prep.val_extras);
    const TaskSet test_tasks =
        data::windows(prep.splits.test, lookback_len, cfg.horizon, prep.test_extras);

    if (variant == AblationVariant::kLocal)
        return detail::local_ablation(cfg, val_tasks, test_tasks, channels, local_grid);

    auto [model, report] = forecaster::train(
        inr::init_model(variant_spec(cfg, variant, channels), Rng(cfg.seed)), train_tasks,
        val_tasks, cfg);
    EvalOptions opts;
    opts.threads = cfg.threads;

    AblationResult out;
    out.variant = variant;
    out.val_loss = report.best_val;
    out.test = evaluate_tasks(model, test_tasks, opts);
    return out;
}

} // namespace deeptime::eval
