#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "deeptime/evaluate.hpp"
#include "deeptime/train.hpp"

namespace deeptime::eval {

using forecaster::TrainConfig;
using forecaster::TrainReport;

struct MuEntry {
    std::size_t mu = 0;
    std::size_t lookback_len = 0;
    double val_loss = 0.0;
    Metrics test;
};

struct SweepResult {
    std::vector<MuEntry> entries; // one row per mu, in grid order
    std::size_t chosen_index = 0;
    // Number of test-split evaluations performed; exactly one per configuration.
    std::size_t test_evaluations = 0;

    const MuEntry& chosen() const { return entries[chosen_index]; }
};

// First index with the smallest validation loss.
inline std::size_t argmin_val(const std::vector<MuEntry>& entries) {
    if (entries.empty()) throw InvalidConfig("argmin_val: empty sweep table");
    std::size_t best = 0;
    for (std::size_t i = 1; i < entries.size(); ++i)
        if (entries[i].val_loss < entries[best].val_loss) best = i;
    return best;
}

struct SweepOutput {
    SweepResult result;
    inr::InrModel best_model; // the model trained at the chosen mu
    TrainReport best_report;
};

// Trains one model per lookback multiplier (L = mu * H), selects by
// validation loss, and reports the full test table for analysis. Test windows
// are evaluated exactly once per configuration; selection never sees them.
inline SweepOutput sweep_mu(const TrainConfig& base, const data::Splits& splits,
                            const std::vector<std::size_t>& mus = {1, 3, 5, 7, 9}) {
    if (mus.empty()) throw InvalidConfig("sweep_mu: empty mu grid");
    SweepOutput out;
    double best_val = std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < mus.size(); ++i) {
        TrainConfig cfg = base;
        cfg.mu = mus[i];
        const std::size_t lookback_len = cfg.lookback();

        const forecaster::TaskSet train_tasks =
            data::windows(splits.train, lookback_len, cfg.horizon);
        const forecaster::TaskSet val_tasks =
            data::windows(splits.val, lookback_len, cfg.horizon);

        auto [model, report] =
            forecaster::train(forecaster::init_model(cfg, numkit::Rng(cfg.seed)), train_tasks,
                              val_tasks, cfg);

        EvalOptions opts;
        opts.threads = cfg.threads;
        MuEntry entry;
        entry.mu = mus[i];
        entry.lookback_len = lookback_len;
        entry.val_loss = report.best_val;
        entry.test = evaluate(model, splits.test, lookback_len, cfg.horizon, opts);
        out.result.test_evaluations += 1;
        out.result.entries.push_back(entry);

        if (entry.val_loss < best_val) {
            best_val = entry.val_loss;
            out.best_model = std::move(model);
            out.best_report = std::move(report);
        }
    }
    out.result.chosen_index = argmin_val(out.result.entries);
    return out;
}

} // namespace deeptime::eval
