#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "deeptime/errors.hpp"
#include "deeptime/forecast.hpp"
#include "deeptime/optimizer.hpp"
#include "deeptime/parallel.hpp"
#include "deeptime/rng.hpp"

namespace deeptime::forecaster {

struct TrainConfig {
    // Optimization
    std::size_t epochs = 50;
    double lr = 1e-3;
    double lambda_lr = 1.0;
    std::size_t warmup_epochs = 5;
    std::size_t batch_size = 256;
    std::size_t patience = 7;
    double max_grad_norm = 10.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    // Model
    std::size_t layers = 5;
    std::size_t layer_size = 256;
    std::vector<double> scales = {0.01, 0.1, 1.0, 5.0, 10.0, 20.0, 50.0, 100.0};
    std::size_t ff_size = 4096;
    double dropout = 0.1;

    // Task geometry
    std::size_t mu = 7;       // lookback multiplier, L = mu * H
    std::size_t horizon = 96;
    std::size_t extra_feature_dim = 0; // datetime columns appended to tau

    std::uint64_t seed = 0;
    std::size_t threads = 1;

    std::size_t lookback() const { return mu * horizon; }

    inr::ModelSpec model_spec() const {
        inr::ModelSpec spec;
        spec.input_dim = 1 + extra_feature_dim;
        spec.layers = layers;
        spec.layer_size = layer_size;
        spec.scales = scales;
        spec.ff_size = ff_size;
        spec.dropout = dropout;
        return spec;
    }

    AdamConfig adam() const { return {adam_beta1, adam_beta2, adam_eps}; }
};

inline InrModel init_model(const TrainConfig& cfg, Rng rng) {
    return inr::init_model(cfg.model_spec(), rng);
}

// Stops once the validation metric has failed to improve for more than
// `patience` consecutive epochs.
struct EarlyStopping {
    std::size_t patience = 7;
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    std::size_t bad_epochs = 0;

    bool observe(int epoch, double value) {
        if (value < best) {
            best = value;
            best_epoch = epoch;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
        }
        return bad_epochs > patience;
    }
};

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> lr_history;
    std::vector<double> epoch_seconds;
    int best_epoch = -1;
    int stopped_epoch = -1;
    double best_val = std::numeric_limits<double>::infinity();
};

// Mean eval-mode horizon MSE over a task set. Per-task losses land in indexed
// slots and are reduced in task order, so the result does not depend on the
// thread count.
inline double eval_loss(const InrModel& model, const TaskSet& tasks, std::size_t threads = 1) {
    const std::size_t n = tasks.size();
    if (n == 0) throw InvalidConfig("eval_loss: empty task set");
    std::vector<double> losses(n);
    parallel_for(n, threads,
                 [&](std::size_t i) { losses[i] = task_eval_loss(model, tasks.get(i)); });
    double sum = 0.0;
    for (double l : losses) sum += l;
    return sum / static_cast<double>(n);
}

// Bi-level meta-optimization: shuffled mini-batches of window tasks, each
// solved in closed form on its lookback; the averaged outer-loss gradients
// flow through the ridge solution into the meta parameters. Returns the
// best-validation snapshot.
inline std::pair<InrModel, TrainReport> train(InrModel model, const TaskSet& train_tasks,
                                              const TaskSet& val_tasks,
                                              const TrainConfig& cfg) {
    const std::size_t n_train = train_tasks.size();
    if (n_train == 0 || val_tasks.size() == 0)
        throw InvalidConfig("train: task sets must be non-empty");
    if (cfg.epochs == 0) throw InvalidConfig("train: epochs must be >= 1");

    const std::size_t batch = std::min(cfg.batch_size, n_train);
    const std::size_t steps_per_epoch = (n_train + batch - 1) / batch;
    const std::size_t total_steps = cfg.epochs * steps_per_epoch;
    // Clamp so short runs (epochs < warmup_epochs) still have a valid schedule.
    const std::size_t warmup_steps =
        std::min(cfg.warmup_epochs * steps_per_epoch, total_steps - 1);

    Rng root(cfg.seed);
    Rng shuffle_rng = root.split(1);
    const Rng dropout_root = root.split(2);

    AdamState opt = AdamState::init(model);
    EarlyStopping stopper{cfg.patience};
    TrainReport report;
    InrModel best_model = model;

    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        numkit::shuffle(shuffle_rng, order);

        double epoch_loss_sum = 0.0;
        report.lr_history.push_back(lr_at(opt.step, total_steps, warmup_steps, cfg.lr));

        for (std::size_t batch_start = 0; batch_start < n_train; batch_start += batch) {
            const std::size_t b = std::min(batch, n_train - batch_start);
            std::vector<TaskGradients> slots(b);
            parallel_for(b, cfg.threads, [&](std::size_t s) {
                const Task task = train_tasks.get(order[batch_start + s]);
                Rng task_rng = dropout_root.split(
                    static_cast<std::uint64_t>(epoch) * n_train + batch_start + s);
                slots[s] = task_gradients(model, task, &task_rng);
            });

            GradientSet total = inr::zero_grads(model);
            double batch_loss = 0.0;
            const double inv_b = 1.0 / static_cast<double>(b);
            for (std::size_t s = 0; s < b; ++s) {
                inr::accumulate(total, slots[s].grads, inv_b);
                batch_loss += slots[s].loss;
            }
            epoch_loss_sum += batch_loss;
            if (!std::isfinite(batch_loss))
                throw NonFiniteValue("train: non-finite loss at epoch " +
                                     std::to_string(epoch) + ", step " +
                                     std::to_string(opt.step));

            clip_grad_norm(total, cfg.max_grad_norm);
            const double lr_now = lr_at(opt.step, total_steps, warmup_steps, cfg.lr);
            const double lam_lr_now = lr_at(opt.step, total_steps, warmup_steps, cfg.lambda_lr);
            adam_update(opt, model, total, lr_now, lam_lr_now, cfg.adam());
        }

        report.train_loss.push_back(epoch_loss_sum / static_cast<double>(n_train));

        const double val = eval_loss(model, val_tasks, cfg.threads);
        if (!std::isfinite(val))
            throw NonFiniteValue("train: non-finite validation loss at epoch " +
                                 std::to_string(epoch));
        report.val_loss.push_back(val);
        if (val < stopper.best) best_model = model;
        const bool stop = stopper.observe(static_cast<int>(epoch), val);

        report.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
                .count());
        report.stopped_epoch = static_cast<int>(epoch);
        if (stop) break;
    }

    report.best_epoch = stopper.best_epoch;
    report.best_val = stopper.best;
    return {std::move(best_model), std::move(report)};
}

} // namespace deeptime::forecaster
