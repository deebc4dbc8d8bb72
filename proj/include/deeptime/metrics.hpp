#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "deeptime/errors.hpp"
#include "deeptime/matrix.hpp"

namespace deeptime::eval {

using numkit::Matrix;

inline double mse(const Matrix& preds, const Matrix& target) {
    if (!preds.same_shape(target)) throw ShapeMismatch("mse: shapes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = preds.data()[i] - target.data()[i];
        s += d * d;
    }
    return s / static_cast<double>(preds.size());
}

inline double mae(const Matrix& preds, const Matrix& target) {
    if (!preds.same_shape(target)) throw ShapeMismatch("mae: shapes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        s += std::abs(preds.data()[i] - target.data()[i]);
    return s / static_cast<double>(preds.size());
}

// Aggregates are exact means over all windows, horizon steps, and channels,
// kept as running error sums rather than averaged averages.
struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
    std::size_t n_windows = 0;
    std::optional<std::vector<std::pair<double, double>>> per_window; // (mse, mae)
};

} // namespace deeptime::eval
