#pragma once

#include <algorithm>
#include <chrono>
#include <string>
#include <sys/resource.h>
#include <vector>

#include "deeptime/forecast.hpp"
#include "deeptime/train.hpp"

namespace deeptime::eval {

using forecaster::Task;
using forecaster::TrainConfig;
using numkit::Matrix;
using numkit::Rng;

struct ProfileEntry {
    std::string axis; // "lookback" or "horizon"
    std::size_t lookback_len = 0;
    std::size_t horizon_len = 0;
    double seconds_per_iter = 0.0; // median over the timed repetitions
    long peak_rss_delta_bytes = 0;
};

namespace detail {

inline long peak_rss_bytes() {
    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    return usage.ru_maxrss * 1024L; // Linux reports KiB
}

inline ProfileEntry time_one_setting(const TrainConfig& cfg, std::size_t lookback_len,
                                     std::size_t horizon_len, std::size_t batch,
                                     std::size_t reps, std::size_t channels,
                                     const std::string& axis) {
    inr::InrModel model = forecaster::init_model(cfg, Rng(cfg.seed));
    Rng data_rng = Rng(cfg.seed).split(77);
    std::vector<Task> tasks;
    for (std::size_t b = 0; b < batch; ++b) {
        Task t;
        t.lookback = numkit::randn(data_rng, lookback_len, channels, 1.0);
        t.horizon = numkit::randn(data_rng, horizon_len, channels, 1.0);
        t.tau = inr::make_time_index(lookback_len, horizon_len);
        tasks.push_back(std::move(t));
    }

    const long rss_before = peak_rss_bytes();
    std::vector<double> times;
    for (std::size_t rep = 0; rep < reps + 1; ++rep) { // first run warms up
        Rng dropout_rng = Rng(cfg.seed).split(1000 + rep);
        const auto start = std::chrono::steady_clock::now();
        inr::GradientSet total = inr::zero_grads(model);
        for (std::size_t b = 0; b < batch; ++b) {
            const forecaster::TaskGradients tg =
                forecaster::task_gradients(model, tasks[b], &dropout_rng);
            inr::accumulate(total, tg.grads, 1.0 / static_cast<double>(batch));
        }
        const double sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (rep > 0) times.push_back(sec);
    }
    std::sort(times.begin(), times.end());

    ProfileEntry entry;
    entry.axis = axis;
    entry.lookback_len = lookback_len;
    entry.horizon_len = horizon_len;
    entry.seconds_per_iter = times[times.size() / 2];
    entry.peak_rss_delta_bytes = std::max(0L, peak_rss_bytes() - rss_before);
    return entry;
}

} // namespace detail

// Times one forward+backward training iteration (batch of 32 windows by
// default) at each grid point: the lookback grid at fixed horizon, then the
// horizon grid at fixed lookback.
inline std::vector<ProfileEntry> profile(const TrainConfig& cfg,
                                         const std::vector<std::size_t>& lookback_grid,
                                         const std::vector<std::size_t>& horizon_grid,
                                         std::size_t fixed_lookback = 48,
                                         std::size_t fixed_horizon = 48,
                                         std::size_t batch = 32, std::size_t reps = 5,
                                         std::size_t channels = 7) {
    if (lookback_grid.empty() && horizon_grid.empty())
        throw InvalidConfig("profile: both grids are empty");
    std::vector<ProfileEntry> out;
    for (std::size_t lookback_len : lookback_grid)
        out.push_back(detail::time_one_setting(cfg, lookback_len, fixed_horizon, batch, reps,
                                               channels, "lookback"));
    for (std::size_t horizon_len : horizon_grid)
        out.push_back(detail::time_one_setting(cfg, fixed_lookback, horizon_len, batch, reps,
                                               channels, "horizon"));
    return out;
}

} // namespace deeptime::eval
