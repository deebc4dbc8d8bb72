#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "deeptime/data.hpp"
#include "deeptime/forecast.hpp"
#include "deeptime/metrics.hpp"
#include "deeptime/parallel.hpp"

namespace deeptime::eval {

using forecaster::TaskSet;
using inr::InrModel;

struct EvalOptions {
    std::size_t threads = 1;
    bool store_per_window = false;
    // Undo standardization before computing errors (needs normalization
    // stats); benchmark metrics stay in standardized space by default.
    const data::Normalization* raw_scale = nullptr;
};

// Eval-mode forecast of every task; errors reduced in window order so the
// result is independent of the thread count.
inline Metrics evaluate_tasks(const InrModel& model, const TaskSet& tasks,
                              const EvalOptions& opts = {}) {
    const std::size_t n = tasks.size();
    if (n == 0) throw SplitTooSmall("evaluate: no windows to evaluate");

    struct WindowErr {
        double sse = 0.0, sae = 0.0;
        std::size_t count = 0;
    };
    std::vector<WindowErr> errs(n);
    parallel_for(n, opts.threads, [&](std::size_t i) {
        const forecaster::Task task = tasks.get(i);
        const forecaster::Forecast fc = forecaster::forecast_window(
            model, task.tau, task.lookback, task.horizon.rows(), inr::Mode::kEval);
        numkit::Matrix preds = fc.preds;
        numkit::Matrix truth = task.horizon;
        if (opts.raw_scale != nullptr) {
            preds = data::unstandardize(preds, *opts.raw_scale);
            truth = data::unstandardize(truth, *opts.raw_scale);
        }
        WindowErr& e = errs[i];
        e.count = preds.size();
        for (std::size_t j = 0; j < preds.size(); ++j) {
            const double d = preds.data()[j] - truth.data()[j];
            e.sse += d * d;
            e.sae += std::abs(d);
        }
    });

    Metrics m;
    m.n_windows = n;
    if (opts.store_per_window) m.per_window.emplace();
    double sse = 0.0, sae = 0.0;
    std::size_t total = 0;
    for (const WindowErr& e : errs) {
        sse += e.sse;
        sae += e.sae;
        total += e.count;
        if (m.per_window)
            m.per_window->emplace_back(e.sse / static_cast<double>(e.count),
                                       e.sae / static_cast<double>(e.count));
    }
    m.mse = sse / static_cast<double>(total);
    m.mae = sae / static_cast<double>(total);
    return m;
}

// Stride-1 evaluation over every window of a (standardized) series.
inline Metrics evaluate(const InrModel& model, const data::TimeSeries& series,
                        std::size_t lookback_len, std::size_t horizon_len,
                        const EvalOptions& opts = {},
                        std::shared_ptr<const numkit::Matrix> extra_features = nullptr) {
    return evaluate_tasks(model, data::windows(series, lookback_len, horizon_len,
                                               std::move(extra_features)),
                          opts);
}

// Constant-last-value baseline: every horizon step repeats the final lookback
// row. Computed by the harness itself as a sanity yardstick.
inline Metrics baseline_constant_last(const TaskSet& tasks) {
    const std::size_t n = tasks.size();
    if (n == 0) throw SplitTooSmall("baseline: no windows");
    Metrics m;
    m.n_windows = n;
    double sse = 0.0, sae = 0.0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const forecaster::Task task = tasks.get(i);
        const std::size_t last = task.lookback.rows() - 1;
        for (std::size_t h = 0; h < task.horizon.rows(); ++h)
            for (std::size_t c = 0; c < task.horizon.cols(); ++c) {
                const double d = task.lookback(last, c) - task.horizon(h, c);
                sse += d * d;
                sae += std::abs(d);
                ++total;
            }
    }
    m.mse = sse / static_cast<double>(total);
    m.mae = sae / static_cast<double>(total);
    return m;
}

// Tidy forecast dump: window_start, step, channel, y_true, y_pred.
inline void dump_forecasts_csv(const InrModel& model, const TaskSet& tasks,
                               const std::string& path,
                               const data::Normalization* raw_scale = nullptr) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << "window_start,step,channel,y_true,y_pred\n";
    out.precision(17);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const forecaster::Task task = tasks.get(i);
        const forecaster::Forecast fc = forecaster::forecast_window(
            model, task.tau, task.lookback, task.horizon.rows(), inr::Mode::kEval);
        numkit::Matrix preds = fc.preds;
        numkit::Matrix truth = task.horizon;
        if (raw_scale != nullptr) {
            preds = data::unstandardize(preds, *raw_scale);
            truth = data::unstandardize(truth, *raw_scale);
        }
        for (std::size_t h = 0; h < preds.rows(); ++h)
            for (std::size_t c = 0; c < preds.cols(); ++c)
                out << i << ',' << h << ',' << c << ',' << truth(h, c) << ',' << preds(h, c)
                    << '\n';
    }
}

} // namespace deeptime::eval
