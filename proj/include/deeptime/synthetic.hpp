#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "deeptime/errors.hpp"
#include "deeptime/inr.hpp"
#include "deeptime/rng.hpp"
#include "deeptime/tasks.hpp"

namespace deeptime::data {

using forecaster::Task;
using numkit::Matrix;
using numkit::Rng;

enum class SyntheticFamily { kLinear, kCubic, kSines };

inline std::string family_name(SyntheticFamily f) {
    switch (f) {
        case SyntheticFamily::kLinear: return "linear";
        case SyntheticFamily::kCubic: return "cubic";
        case SyntheticFamily::kSines: return "sines";
    }
    throw InvalidConfig("family_name: unknown family");
}

inline SyntheticFamily family_from_name(const std::string& name) {
    if (name == "linear") return SyntheticFamily::kLinear;
    if (name == "cubic") return SyntheticFamily::kCubic;
    if (name == "sines") return SyntheticFamily::kSines;
    throw InvalidConfig("unknown synthetic family: " + name);
}

struct SyntheticSpec {
    SyntheticFamily family = SyntheticFamily::kLinear;
    std::size_t n_train_tasks = 1000;
    std::size_t n_test_tasks = 100;
    std::size_t points = 400;
    std::size_t lookback_len = 200;
    std::size_t horizon_len = 200;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    SyntheticFamily family = SyntheticFamily::kLinear;
    std::vector<double> grid; // the x values shared by every task
    std::vector<Task> train;
    std::vector<Task> test;
    std::vector<std::vector<double>> train_params;
    std::vector<std::vector<double>> test_params;
};

namespace detail {

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

struct FamilySampler {
    SyntheticFamily family;
    std::vector<double> omega; // fixed frequency set, sines only

    std::vector<double> draw_params(Rng& rng) const {
        switch (family) {
            case SyntheticFamily::kLinear:
                return {50.0 * rng.next_normal(), 50.0 * rng.next_normal()};
            case SyntheticFamily::kCubic:
                return {rng.next_uniform(-50.0, 50.0), rng.next_uniform(-50.0, 50.0),
                        rng.next_uniform(-50.0, 50.0), rng.next_uniform(-50.0, 50.0)};
            case SyntheticFamily::kSines: {
                const std::size_t j = 1 + rng.next_index(5);
                std::vector<double> p;
                p.push_back(static_cast<double>(j));
                for (std::size_t k = 0; k < j; ++k) {
                    p.push_back(rng.next_uniform(0.1, 5.0));         // amplitude
                    p.push_back(omega[rng.next_index(omega.size())]); // frequency from the set
                    p.push_back(rng.next_uniform(0.0, 3.14159265358979323846)); // phase
                }
                return p;
            }
        }
        throw InvalidConfig("draw_params: unknown family");
    }

    double evaluate(const std::vector<double>& p, double x) const {
        switch (family) {
            case SyntheticFamily::kLinear: return p[0] * x + p[1];
            case SyntheticFamily::kCubic:
                return ((p[0] * x + p[1]) * x + p[2]) * x + p[3];
            case SyntheticFamily::kSines: {
                const std::size_t j = static_cast<std::size_t>(p[0]);
                double y = 0.0;
                for (std::size_t k = 0; k < j; ++k)
                    y += p[1 + 3 * k] * std::sin(p[2 + 3 * k] * x + p[3 + 3 * k]);
                return y;
            }
        }
        throw InvalidConfig("evaluate: unknown family");
    }
};

inline Task make_task(const FamilySampler& sampler, const std::vector<double>& params,
                      const std::vector<double>& grid, std::size_t lookback_len,
                      std::size_t horizon_len) {
    Task t;
    t.lookback = Matrix(lookback_len, 1);
    t.horizon = Matrix(horizon_len, 1);
    for (std::size_t i = 0; i < lookback_len; ++i)
        t.lookback(i, 0) = sampler.evaluate(params, grid[i]);
    for (std::size_t i = 0; i < horizon_len; ++i)
        t.horizon(i, 0) = sampler.evaluate(params, grid[lookback_len + i]);
    t.tau = inr::make_time_index(lookback_len, horizon_len);
    return t;
}

} // namespace detail

// Appendix-style task generators. Linear and cubic tasks live on an even grid
// over [-1, 1]; sums-of-sinusoids on [0, 1] with frequencies drawn once per
// seed from U(0, 12 pi). Train and test parameter tuples never overlap.
inline SyntheticData gen_synthetic(const SyntheticSpec& spec) {
    if (spec.points != spec.lookback_len + spec.horizon_len)
        throw InvalidConfig("gen_synthetic: points must equal lookback + horizon");
    if (spec.points < 2) throw InvalidConfig("gen_synthetic: need at least 2 points");

    SyntheticData out;
    out.family = spec.family;
    out.grid = spec.family == SyntheticFamily::kSines
                   ? detail::linspace(0.0, 1.0, spec.points)
                   : detail::linspace(-1.0, 1.0, spec.points);

    Rng root(spec.seed);
    detail::FamilySampler sampler{spec.family, {}};
    if (spec.family == SyntheticFamily::kSines) {
        Rng omega_rng = root.split(0);
        for (int k = 0; k < 5; ++k)
            sampler.omega.push_back(omega_rng.next_uniform(0.0, 12.0 * 3.14159265358979323846));
    }

    Rng param_rng = root.split(1);
    std::set<std::vector<double>> seen;
    auto draw_unique = [&]() {
        for (;;) {
            std::vector<double> p = sampler.draw_params(param_rng);
            if (seen.insert(p).second) return p;
        }
    };

    for (std::size_t i = 0; i < spec.n_train_tasks; ++i) {
        out.train_params.push_back(draw_unique());
        out.train.push_back(detail::make_task(sampler, out.train_params.back(), out.grid,
                                              spec.lookback_len, spec.horizon_len));
    }
    for (std::size_t i = 0; i < spec.n_test_tasks; ++i) {
        out.test_params.push_back(draw_unique());
        out.test.push_back(detail::make_task(sampler, out.test_params.back(), out.grid,
                                             spec.lookback_len, spec.horizon_len));
    }
    return out;
}

} // namespace deeptime::data
