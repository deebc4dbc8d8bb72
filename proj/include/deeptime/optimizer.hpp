#pragma once

#include <cmath>
#include <vector>

#include "deeptime/errors.hpp"
#include "deeptime/inr.hpp"

namespace deeptime::forecaster {

using inr::GradientSet;
using inr::InrModel;
using numkit::Matrix;

// Linear warmup to lr_max, then cosine annealing to 0 at total_steps.
inline double lr_at(std::size_t step, std::size_t total_steps, std::size_t warmup_steps,
                    double lr_max) {
    if (warmup_steps >= total_steps)
        throw InvalidConfig("lr_at: warmup_steps must be < total_steps");
    if (step < warmup_steps)
        return lr_max * static_cast<double>(step) / static_cast<double>(warmup_steps);
    const double progress = static_cast<double>(step - warmup_steps) /
                            static_cast<double>(total_steps - warmup_steps);
    return lr_max * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

// Global L2 norm over every gradient tensor plus the lambda scalar.
inline double global_grad_norm(const GradientSet& grads) {
    double sq = grads.lambda_raw * grads.lambda_raw;
    for (const Matrix* g : inr::gradient_tensors(grads)) sq += numkit::sq_sum(*g);
    return std::sqrt(sq);
}

// Scales all gradients so the global norm is at most max_norm. Returns the
// pre-clip norm.
inline double clip_grad_norm(GradientSet& grads, double max_norm = 10.0) {
    const double norm = global_grad_norm(grads);
    if (!std::isfinite(norm)) throw NonFiniteGradient("clip_grad_norm: non-finite gradients");
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (Matrix* g : inr::gradient_tensors(grads)) *g *= scale;
        grads.lambda_raw *= scale;
    }
    return norm;
}

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Two parameter groups: lambda_raw steps at its own (much larger) rate, all
// other meta parameters at the trunk rate.
struct AdamState {
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    double lambda_first = 0.0;
    double lambda_second = 0.0;
    std::size_t step = 0;

    static AdamState init(InrModel& model) {
        AdamState s;
        for (const Matrix* p : inr::trainable_tensors(model)) {
            s.first_moment.emplace_back(p->rows(), p->cols());
            s.second_moment.emplace_back(p->rows(), p->cols());
        }
        return s;
    }
};

inline void adam_update(AdamState& state, InrModel& model, const GradientSet& grads,
                        double lr_now, double lambda_lr_now, const AdamConfig& cfg = {}) {
    const auto params = inr::trainable_tensors(model);
    const auto gs = inr::gradient_tensors(grads);
    if (params.size() != state.first_moment.size() || params.size() != gs.size())
        throw ShapeMismatch("adam_update: state does not match model");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    for (std::size_t t = 0; t < params.size(); ++t) {
        Matrix& p = *params[t];
        Matrix& m = state.first_moment[t];
        Matrix& v = state.second_moment[t];
        const Matrix& g = *gs[t];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g.data()[i];
            m.data()[i] = cfg.beta1 * m.data()[i] + (1.0 - cfg.beta1) * gi;
            v.data()[i] = cfg.beta2 * v.data()[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = m.data()[i] / bc1;
            const double vhat = v.data()[i] / bc2;
            p.data()[i] -= lr_now * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }

    const double gl = grads.lambda_raw;
    state.lambda_first = cfg.beta1 * state.lambda_first + (1.0 - cfg.beta1) * gl;
    state.lambda_second = cfg.beta2 * state.lambda_second + (1.0 - cfg.beta2) * gl * gl;
    const double mhat = state.lambda_first / bc1;
    const double vhat = state.lambda_second / bc2;
    model.lambda_raw -= lambda_lr_now * mhat / (std::sqrt(vhat) + cfg.eps);
}

} // namespace deeptime::forecaster
