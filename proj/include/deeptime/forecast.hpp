#pragma once

#include <utility>

#include "deeptime/errors.hpp"
#include "deeptime/inr.hpp"
#include "deeptime/ridge.hpp"
#include "deeptime/tasks.hpp"

namespace deeptime::forecaster {

using inr::GradientSet;
using inr::InrModel;
using inr::Mode;
using numkit::Matrix;
using numkit::RidgeSolution;
using numkit::Rng;

struct Forecast {
    Matrix preds;            // H x m
    Matrix reprs;            // (L+H) x d
    inr::ForwardCache cache;
    RidgeSolution ridge;     // empty-weight when the model carries a linear head
};

// One forward over the whole window, then either the closed-form ridge head
// fitted on the lookback rows or the model's trained linear head.
inline Forecast forecast_window(const InrModel& model, const Matrix& tau,
                                const Matrix& lookback, std::size_t horizon_len, Mode mode,
                                Rng* rng = nullptr) {
    const std::size_t lookback_len = lookback.rows();
    if (lookback_len < 1) throw InvalidConfig("forecast: lookback must be non-empty");
    if (tau.rows() != lookback_len + horizon_len)
        throw ShapeMismatch("forecast: tau rows != lookback + horizon");

    Forecast fc;
    auto [reprs, cache] = inr::forward(model, tau, mode, rng);
    fc.reprs = std::move(reprs);
    fc.cache = std::move(cache);

    if (model.head) {
        Matrix horizon_reprs = numkit::rows_block(fc.reprs, lookback_len, horizon_len);
        fc.preds = numkit::matmul(horizon_reprs, model.head->weight);
        numkit::add_row_vector(fc.preds, model.head->bias);
    } else {
        const Matrix lookback_reprs = numkit::rows_block(fc.reprs, 0, lookback_len);
        fc.ridge = numkit::ridge_fit(lookback_reprs, lookback, model.lambda(), true);
        const Matrix horizon_reprs =
            numkit::hcat_ones(numkit::rows_block(fc.reprs, lookback_len, horizon_len));
        fc.preds = numkit::matmul(horizon_reprs, fc.ridge.weights);
    }
    return fc;
}

inline Forecast forecast(const InrModel& model, const Matrix& lookback, std::size_t horizon_len,
                         Mode mode, Rng* rng = nullptr) {
    return forecast_window(model, inr::make_time_index(lookback.rows(), horizon_len), lookback,
                           horizon_len, mode, rng);
}

// Mean squared error over every entry.
inline double loss_mse(const Matrix& preds, const Matrix& target) {
    if (!preds.same_shape(target)) throw ShapeMismatch("loss_mse: shapes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = preds.data()[i] - target.data()[i];
        s += d * d;
    }
    return s / static_cast<double>(preds.size());
}

inline Matrix loss_mse_grad(const Matrix& preds, const Matrix& target) {
    if (!preds.same_shape(target)) throw ShapeMismatch("loss_mse_grad: shapes differ");
    Matrix g(preds.rows(), preds.cols());
    const double scale = 2.0 / static_cast<double>(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        g.data()[i] = scale * (preds.data()[i] - target.data()[i]);
    return g;
}

struct TaskGradients {
    GradientSet grads;
    double loss = 0.0;
};

// Horizon MSE of one task and its gradient w.r.t. every meta parameter,
// backpropagated through the closed-form ridge solution (or the linear head).
inline TaskGradients task_gradients(const InrModel& model, const Task& task, Rng* rng) {
    const std::size_t lookback_len = task.lookback.rows();
    const std::size_t horizon_len = task.horizon.rows();
    Forecast fc = forecast_window(model, task.tau, task.lookback, horizon_len, Mode::kTrain, rng);

    TaskGradients out;
    out.loss = loss_mse(fc.preds, task.horizon);
    const Matrix d_preds = loss_mse_grad(fc.preds, task.horizon);

    Matrix d_reprs(fc.reprs.rows(), fc.reprs.cols());
    double d_lambda_raw = 0.0;
    Matrix head_dw, head_db;

    if (model.head) {
        const Matrix horizon_reprs = numkit::rows_block(fc.reprs, lookback_len, horizon_len);
        head_dw = numkit::matmul_tn(horizon_reprs, d_preds);
        head_db = numkit::col_sums(d_preds);
        numkit::set_rows_block(d_reprs, lookback_len,
                               numkit::matmul_nt(d_preds, model.head->weight));
    } else {
        const Matrix horizon_reprs =
            numkit::hcat_ones(numkit::rows_block(fc.reprs, lookback_len, horizon_len));
        const Matrix d_weights = numkit::matmul_tn(horizon_reprs, d_preds);
        const Matrix d_horizon_reprs =
            numkit::drop_last_col(numkit::matmul_nt(d_preds, fc.ridge.weights));

        const Matrix lookback_reprs = numkit::rows_block(fc.reprs, 0, lookback_len);
        const numkit::RidgeGrads rg = numkit::ridge_backward(
            lookback_reprs, task.lookback, model.lambda(), true, d_weights, &fc.ridge);

        numkit::set_rows_block(d_reprs, 0, rg.d_z);
        numkit::set_rows_block(d_reprs, lookback_len, d_horizon_reprs);
        d_lambda_raw = rg.d_lam * inr::sigmoid(model.lambda_raw);
    }

    inr::BackwardResult bres = inr::backward(model, fc.cache, d_reprs);
    out.grads = std::move(bres.grads);
    out.grads.lambda_raw += d_lambda_raw;
    if (model.head) {
        out.grads.head_weight += head_dw;
        out.grads.head_bias += head_db;
    }
    return out;
}

// Eval-mode horizon MSE of one task.
inline double task_eval_loss(const InrModel& model, const Task& task) {
    const Forecast fc =
        forecast_window(model, task.tau, task.lookback, task.horizon.rows(), Mode::kEval);
    return loss_mse(fc.preds, task.horizon);
}

} // namespace deeptime::forecaster
