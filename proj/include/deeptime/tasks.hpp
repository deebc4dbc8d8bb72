#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "deeptime/errors.hpp"
#include "deeptime/inr.hpp"
#include "deeptime/matrix.hpp"

namespace deeptime::forecaster {

using numkit::Matrix;

// One lookback/horizon pair with its shared [0,1] time-index. tau carries the
// relative index in column 0 and any extra features (datetime ablation) in
// the remaining columns.
struct Task {
    Matrix lookback; // L x m
    Matrix horizon;  // H x m
    Matrix tau;      // (L+H) x c
};

// Ordered collection of tasks. Either materialized (synthetic families) or a
// stride-1 sliding-window view over a series; windows materialize per access
// so long series do not blow up memory.
class TaskSet {
public:
    TaskSet() = default;

    static TaskSet from_tasks(std::vector<Task> tasks) {
        TaskSet ts;
        ts.tasks_ = std::make_shared<std::vector<Task>>(std::move(tasks));
        return ts;
    }

    static TaskSet sliding_windows(std::shared_ptr<const Matrix> values,
                                   std::shared_ptr<const Matrix> extra_features,
                                   std::size_t lookback_len, std::size_t horizon_len) {
        if (lookback_len < 1 || horizon_len < 1)
            throw InvalidConfig("sliding_windows: lookback and horizon must be >= 1");
        const std::size_t need = lookback_len + horizon_len;
        if (values->rows() < need)
            throw SplitTooSmall("sliding_windows: series has " +
                                std::to_string(values->rows()) + " rows, needs >= " +
                                std::to_string(need));
        if (extra_features && extra_features->rows() != values->rows())
            throw ShapeMismatch("sliding_windows: extra feature rows != series rows");
        TaskSet ts;
        ts.values_ = std::move(values);
        ts.extras_ = std::move(extra_features);
        ts.lookback_len_ = lookback_len;
        ts.horizon_len_ = horizon_len;
        ts.base_tau_ = std::make_shared<Matrix>(inr::make_time_index(lookback_len, horizon_len));
        return ts;
    }

    std::size_t size() const {
        if (tasks_) return tasks_->size();
        if (values_) return values_->rows() - lookback_len_ - horizon_len_ + 1;
        return 0;
    }

    Task get(std::size_t i) const {
        if (tasks_) return (*tasks_)[i];
        const std::size_t window = lookback_len_ + horizon_len_;
        Task t;
        t.lookback = numkit::rows_block(*values_, i, lookback_len_);
        t.horizon = numkit::rows_block(*values_, i + lookback_len_, horizon_len_);
        if (!extras_) {
            t.tau = *base_tau_;
        } else {
            t.tau = Matrix(window, 1 + extras_->cols());
            for (std::size_t r = 0; r < window; ++r) {
                t.tau(r, 0) = (*base_tau_)(r, 0);
                for (std::size_t c = 0; c < extras_->cols(); ++c)
                    t.tau(r, 1 + c) = (*extras_)(i + r, c);
            }
        }
        return t;
    }

    std::size_t lookback_len() const { return tasks_ ? front_dim(&Task::lookback) : lookback_len_; }
    std::size_t horizon_len() const { return tasks_ ? front_dim(&Task::horizon) : horizon_len_; }

private:
    std::size_t front_dim(Matrix Task::*field) const {
        if (tasks_->empty()) return 0;
        return (tasks_->front().*field).rows();
    }

    std::shared_ptr<std::vector<Task>> tasks_;
    std::shared_ptr<const Matrix> values_;
    std::shared_ptr<const Matrix> extras_;
    std::shared_ptr<Matrix> base_tau_;
    std::size_t lookback_len_ = 0;
    std::size_t horizon_len_ = 0;
};

} // namespace deeptime::forecaster
