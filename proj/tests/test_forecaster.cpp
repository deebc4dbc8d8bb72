#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "deeptime/forecast.hpp"
#include "deeptime/optimizer.hpp"
#include "deeptime/train.hpp"
#include "support/oracles.hpp"

using namespace deeptime;
using namespace deeptime::numkit;
using namespace deeptime::forecaster;

namespace {

inr::ModelSpec small_spec(std::size_t layers = 2, std::size_t width = 6, double dropout = 0.0) {
    inr::ModelSpec spec;
    spec.layers = layers;
    spec.layer_size = width;
    spec.scales = {1.0, 5.0};
    spec.ff_size = 8;
    spec.dropout = dropout;
    return spec;
}

Task make_task(const Matrix& lookback, const Matrix& horizon) {
    Task t;
    t.lookback = lookback;
    t.horizon = horizon;
    t.tau = inr::make_time_index(lookback.rows(), horizon.rows());
    return t;
}

TaskSet constant_tasks(std::size_t n, std::size_t lookback_len, std::size_t horizon_len,
                       double value) {
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < n; ++i)
        tasks.push_back(make_task(Matrix(lookback_len, 1, value), Matrix(horizon_len, 1, value)));
    return TaskSet::from_tasks(std::move(tasks));
}

TaskSet random_walk_tasks(Rng& rng, std::size_t n, std::size_t lookback_len,
                          std::size_t horizon_len, std::size_t channels) {
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < n; ++i) {
        Matrix window(lookback_len + horizon_len, channels);
        for (std::size_t c = 0; c < channels; ++c) {
            double level = rng.next_normal();
            for (std::size_t r = 0; r < window.rows(); ++r) {
                level += 0.1 * rng.next_normal();
                window(r, c) = level;
            }
        }
        tasks.push_back(make_task(rows_block(window, 0, lookback_len),
                                  rows_block(window, lookback_len, horizon_len)));
    }
    return TaskSet::from_tasks(std::move(tasks));
}

bool models_identical(const inr::InrModel& a, const inr::InrModel& b) {
    auto ta = inr::trainable_tensors(const_cast<inr::InrModel&>(a));
    auto tb = inr::trainable_tensors(const_cast<inr::InrModel&>(b));
    if (ta.size() != tb.size() || a.lambda_raw != b.lambda_raw) return false;
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (!(*ta[i] == *tb[i])) return false;
    return true;
}

} // namespace

TEST_CASE("forecast output shape contract") {
    Rng rng(1);
    const std::tuple<std::size_t, std::size_t, std::size_t> shapes[] = {
        {8, 4, 1}, {5, 9, 3}, {12, 2, 2}};
    for (const auto& [lookback_len, horizon_len, channels] : shapes) {
        inr::InrModel model = inr::init_model(small_spec(), Rng(2));
        const Matrix lookback = randn(rng, lookback_len, channels, 1.0);
        const Forecast fc = forecast(model, lookback, horizon_len, inr::Mode::kEval);
        REQUIRE(fc.preds.rows() == horizon_len);
        REQUIRE(fc.preds.cols() == channels);
    }
}

TEST_CASE("forecast in eval mode is deterministic") {
    inr::InrModel model = inr::init_model(small_spec(2, 6, 0.4), Rng(3));
    Rng rng(4);
    const Matrix lookback = randn(rng, 10, 2, 1.0);
    const Forecast a = forecast(model, lookback, 5, inr::Mode::kEval);
    const Forecast b = forecast(model, lookback, 5, inr::Mode::kEval);
    REQUIRE(a.preds == b.preds);
}

TEST_CASE("zero-trunk model predicts the regularized lookback mean") {
    inr::InrModel model = inr::init_model(small_spec(2, 4), Rng(5));
    for (inr::MlpLayer& l : model.layers) {
        l.weight.fill(0.0);
        l.bias.fill(0.0);
    }
    const std::size_t lookback_len = 6;
    Rng rng(6);
    const Matrix lookback = randn(rng, lookback_len, 2, 1.0);
    const Forecast fc = forecast(model, lookback, 3, inr::Mode::kEval);

    const double lam = std::log(2.0); // softplus(0)
    for (std::size_t c = 0; c < 2; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < lookback_len; ++r) sum += lookback(r, c);
        const double expected = sum / (static_cast<double>(lookback_len) + lam);
        for (std::size_t h = 0; h < 3; ++h)
            REQUIRE(std::abs(fc.preds(h, c) - expected) < 1e-12);
    }
}

TEST_CASE("forecast never reads the horizon values") {
    inr::InrModel model = inr::init_model(small_spec(), Rng(7));
    Rng rng(8);
    const Matrix lookback = randn(rng, 8, 1, 1.0);
    const Task a = make_task(lookback, Matrix(4, 1, 0.0));
    const Task b = make_task(lookback, randn(rng, 4, 1, 100.0));
    const Forecast fa = forecast_window(model, a.tau, a.lookback, 4, inr::Mode::kEval);
    const Forecast fb = forecast_window(model, b.tau, b.lookback, 4, inr::Mode::kEval);
    REQUIRE(fa.preds == fb.preds);
}

TEST_CASE("loss_mse hand values and gradient") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    REQUIRE(loss_mse(a, a) == 0.0);

    const Matrix shifted = Matrix::from_rows({{2, 3}, {4, 5}});
    REQUIRE(std::abs(loss_mse(shifted, a) - 1.0) < 1e-15);

    REQUIRE(std::abs(loss_mse(Matrix::from_rows({{0, 0}}), Matrix::from_rows({{3, 4}})) - 12.5) <
            1e-15);

    const Matrix g = loss_mse_grad(shifted, a);
    REQUIRE(max_abs_diff(g, Matrix(2, 2, 2.0 / 4.0)) < 1e-15);
    REQUIRE_THROWS_AS(loss_mse(a, Matrix(1, 2)), ShapeMismatch);
}

TEST_CASE("lr_at warmup and cosine landmarks") {
    REQUIRE(lr_at(0, 100, 10, 0.5) == 0.0);
    REQUIRE(lr_at(10, 100, 10, 0.5) == 0.5);
    REQUIRE(std::abs(lr_at(100, 100, 10, 0.5)) < 1e-15);

    double prev = -1.0;
    for (std::size_t s = 0; s <= 10; ++s) {
        const double v = lr_at(s, 100, 10, 0.5);
        REQUIRE(v >= prev);
        prev = v;
    }
    for (std::size_t s = 10; s <= 100; ++s) {
        const double v = lr_at(s, 100, 10, 0.5);
        REQUIRE(v <= prev + 1e-15);
        prev = v;
    }
    REQUIRE_THROWS_AS(lr_at(0, 5, 5, 1.0), InvalidConfig);
}

TEST_CASE("clip_grad_norm scales only above the threshold") {
    inr::InrModel model = inr::init_model(small_spec(1, 2), Rng(9));
    inr::GradientSet g = inr::zero_grads(model);
    g.layers[0].weight(0, 0) = 3.0;
    g.layers[0].weight(0, 1) = 4.0;
    const double norm = clip_grad_norm(g, 10.0);
    REQUIRE(norm == 5.0);
    REQUIRE(g.layers[0].weight(0, 0) == 3.0);

    inr::GradientSet big = inr::zero_grads(model);
    big.layers[0].weight(0, 0) = 30.0;
    big.layers[0].weight(0, 1) = 40.0;
    clip_grad_norm(big, 10.0);
    REQUIRE(std::abs(big.layers[0].weight(0, 0) - 6.0) < 1e-12);
    REQUIRE(std::abs(big.layers[0].weight(0, 1) - 8.0) < 1e-12);

    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        inr::GradientSet r = inr::zero_grads(model);
        for (Matrix* t : inr::gradient_tensors(r)) *t = randn(rng, t->rows(), t->cols(), 20.0);
        r.lambda_raw = rng.next_normal() * 20.0;
        clip_grad_norm(r, 10.0);
        REQUIRE(global_grad_norm(r) <= 10.0 + 1e-9);
    }

    inr::GradientSet bad = inr::zero_grads(model);
    bad.lambda_raw = std::nan("");
    REQUIRE_THROWS_AS(clip_grad_norm(bad, 10.0), NonFiniteGradient);
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
    inr::InrModel model = inr::init_model(small_spec(), Rng(11));
    const inr::InrModel before = model;
    AdamState state = AdamState::init(model);
    adam_update(state, model, inr::zero_grads(model), 1e-3, 1.0);
    adam_update(state, model, inr::zero_grads(model), 1e-3, 1.0);
    REQUIRE(models_identical(before, model));
}

TEST_CASE("adam first step magnitude and group rates") {
    inr::InrModel model = inr::init_model(small_spec(1, 2), Rng(12));
    const double w_before = model.layers[0].weight(0, 0);
    const double lam_before = model.lambda_raw;

    AdamState state = AdamState::init(model);
    inr::GradientSet g = inr::zero_grads(model);
    g.layers[0].weight(0, 0) = 1.0;
    g.lambda_raw = 1.0;
    const double lr = 1e-3, lambda_lr = 1.0;
    adam_update(state, model, g, lr, lambda_lr);

    const double dw = std::abs(model.layers[0].weight(0, 0) - w_before);
    const double dlam = std::abs(model.lambda_raw - lam_before);
    REQUIRE(dw >= lr * (1.0 - 1e-6));
    REQUIRE(dw <= lr);
    REQUIRE(dlam >= lambda_lr * (1.0 - 1e-6));
    REQUIRE(dlam <= lambda_lr);
    REQUIRE(dlam / dw == Catch::Approx(1000.0).epsilon(1e-6));
}

TEST_CASE("early stopping bookkeeping") {
    // Improves through epoch 2, then flat: with patience 2 the run stops at
    // epoch 5 with the best at epoch 2.
    EarlyStopping stopper{2};
    const double vals[] = {5.0, 4.0, 3.0, 3.5, 3.6, 3.7, 3.8};
    int stopped_at = -1;
    for (int e = 0; e < 7; ++e) {
        if (stopper.observe(e, vals[e])) {
            stopped_at = e;
            break;
        }
    }
    REQUIRE(stopped_at == 5);
    REQUIRE(stopper.best_epoch == 2);
}

TEST_CASE("end-to-end gradient matches finite differences through the ridge head") {
    for (const std::size_t lookback_len : {10u, 4u}) { // standard and Woodbury branches
        inr::InrModel model = inr::init_model(small_spec(2, 6, 0.0), Rng(13));
        Rng rng(14);
        const Task task = make_task(randn(rng, lookback_len, 2, 1.0), randn(rng, 4, 2, 1.0));
        if (lookback_len < model.hidden_size() + 1) {
            const Forecast fc =
                forecast_window(model, task.tau, task.lookback, 4, inr::Mode::kEval);
            REQUIRE(fc.ridge.used_woodbury);
        }

        const TaskGradients tg = task_gradients(model, task, nullptr);
        auto probe = [&]() {
            return loss_mse(
                forecast_window(model, task.tau, task.lookback, 4, inr::Mode::kTrain).preds,
                task.horizon);
        };

        auto params = inr::trainable_tensors(model);
        auto grads = inr::gradient_tensors(const_cast<inr::GradientSet&>(tg.grads));
        for (std::size_t t = 0; t < params.size(); ++t) {
            Matrix* p = params[t];
            Matrix fd(p->rows(), p->cols());
            for (std::size_t i = 0; i < p->size(); ++i) {
                const double orig = p->data()[i], h = 1e-5;
                p->data()[i] = orig + h;
                const double fp = probe();
                p->data()[i] = orig - h;
                const double fm = probe();
                p->data()[i] = orig;
                fd.data()[i] = (fp - fm) / (2.0 * h);
            }
            INFO("lookback " << lookback_len << " tensor " << t);
            REQUIRE(oracles::grad_rel_err(*grads[t], fd) < 1e-4);
        }

        const double fd_lam = oracles::fd_scalar(
            [&](double l) {
                inr::InrModel m2 = model;
                m2.lambda_raw = l;
                return loss_mse(
                    forecast_window(m2, task.tau, task.lookback, 4, inr::Mode::kTrain).preds,
                    task.horizon);
            },
            model.lambda_raw);
        REQUIRE(oracles::grad_rel_err(tg.grads.lambda_raw, fd_lam) < 1e-4);
    }
}

TEST_CASE("training constant tasks drives validation loss to zero") {
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.warmup_epochs = 1;
    cfg.batch_size = 8;
    cfg.layers = 2;
    cfg.layer_size = 6;
    cfg.scales = {1.0, 5.0};
    cfg.ff_size = 8;
    cfg.dropout = 0.0;
    cfg.seed = 15;

    const TaskSet tasks = constant_tasks(16, 8, 4, 3.0);
    inr::InrModel model = init_model(cfg, Rng(cfg.seed));
    const double before = eval_loss(model, tasks);
    auto [best, report] = train(std::move(model), tasks, tasks, cfg);
    REQUIRE(report.best_val <= before + 1e-12);
    REQUIRE(report.best_val < 1e-3);
}

TEST_CASE("training is deterministic and thread-count independent") {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.warmup_epochs = 1;
    cfg.batch_size = 4;
    cfg.layers = 2;
    cfg.layer_size = 4;
    cfg.scales = {1.0, 10.0};
    cfg.ff_size = 8;
    cfg.dropout = 0.1;
    cfg.seed = 16;

    Rng data_rng1(20), data_rng2(20);
    const TaskSet tasks1 = random_walk_tasks(data_rng1, 10, 8, 4, 2);
    const TaskSet tasks2 = random_walk_tasks(data_rng2, 10, 8, 4, 2);

    auto [m1, r1] = train(init_model(cfg, Rng(cfg.seed)), tasks1, tasks1, cfg);
    auto [m2, r2] = train(init_model(cfg, Rng(cfg.seed)), tasks2, tasks2, cfg);
    REQUIRE(models_identical(m1, m2));
    REQUIRE(r1.train_loss == r2.train_loss);
    REQUIRE(r1.val_loss == r2.val_loss);
    REQUIRE(r1.best_epoch == r2.best_epoch);

    TrainConfig threaded = cfg;
    threaded.threads = 3;
    auto [m3, r3] = train(init_model(cfg, Rng(cfg.seed)), tasks1, tasks1, threaded);
    REQUIRE(models_identical(m1, m3));
    REQUIRE(r1.val_loss == r3.val_loss);
}
