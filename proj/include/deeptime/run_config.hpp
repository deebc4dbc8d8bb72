#pragma once

#include <string>
#include <vector>

#include "deeptime/ablation.hpp"
#include "deeptime/serialize.hpp"
#include "deeptime/synthetic.hpp"

namespace deeptime::io {

// Full configuration document for the command-line tool. Every field defaults
// to the stock hyperparameters; unknown keys are rejected at every level.
struct RunConfig {
    forecaster::TrainConfig train;

    // data
    std::string csv_path;
    data::TargetMode target = data::TargetMode::kMultivariate;
    data::SplitSpec split = data::SplitSpec::standard();

    // synth
    data::SyntheticSpec synth;

    // ablation
    eval::AblationVariant variant = eval::AblationVariant::kFull;
    std::vector<std::size_t> local_epoch_grid = {10, 20, 30, 40, 50};

    // sweep
    std::vector<std::size_t> mus = {1, 3, 5, 7, 9};

    // profile
    std::vector<std::size_t> lookback_grid = {48, 96, 192, 384, 768};
    std::vector<std::size_t> horizon_grid = {48, 96, 192, 384, 768};
    std::size_t fixed_lookback = 48;
    std::size_t fixed_horizon = 48;
    std::size_t profile_batch = 32;
    std::size_t profile_reps = 5;
    std::size_t profile_channels = 7;
};

inline json split_to_json(const data::SplitSpec& s) {
    return json{{"train", s.train_frac}, {"val", s.val_frac}, {"test", s.test_frac}};
}

inline data::SplitSpec split_from_json(const json& j) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name == "standard") return data::SplitSpec::standard();
        if (name == "ettm2") return data::SplitSpec::ettm2();
        throw InvalidConfig("unknown split preset: " + name);
    }
    expect_keys(j, {"train", "val", "test"}, "split");
    data::SplitSpec s;
    s.train_frac = j.value("train", s.train_frac);
    s.val_frac = j.value("val", s.val_frac);
    s.test_frac = j.value("test", s.test_frac);
    s.validate();
    return s;
}

inline json synth_to_json(const data::SyntheticSpec& s) {
    return json{{"family", data::family_name(s.family)},
                {"train_tasks", s.n_train_tasks},
                {"test_tasks", s.n_test_tasks},
                {"points", s.points},
                {"lookback", s.lookback_len},
                {"horizon", s.horizon_len}};
}

inline data::SyntheticSpec synth_from_json(const json& j) {
    expect_keys(j, {"family", "train_tasks", "test_tasks", "points", "lookback", "horizon"},
                "synth");
    data::SyntheticSpec s;
    if (j.contains("family")) s.family = data::family_from_name(j.at("family").get<std::string>());
    s.n_train_tasks = j.value("train_tasks", s.n_train_tasks);
    s.n_test_tasks = j.value("test_tasks", s.n_test_tasks);
    s.points = j.value("points", s.points);
    s.lookback_len = j.value("lookback", s.lookback_len);
    s.horizon_len = j.value("horizon", s.horizon_len);
    return s;
}

inline json run_config_to_json(const RunConfig& cfg) {
    return json{
        {"train", config_to_json(cfg.train)},
        {"data",
         json{{"csv", cfg.csv_path},
              {"target",
               cfg.target == data::TargetMode::kMultivariate ? "multivariate"
                                                             : "univariate_last"},
              {"split", split_to_json(cfg.split)}}},
        {"synth", synth_to_json(cfg.synth)},
        {"ablation",
         json{{"variant", eval::variant_name(cfg.variant)},
              {"local_epoch_grid", cfg.local_epoch_grid}}},
        {"sweep", json{{"mus", cfg.mus}}},
        {"profile", json{{"lookback_grid", cfg.lookback_grid},
                         {"horizon_grid", cfg.horizon_grid},
                         {"fixed_lookback", cfg.fixed_lookback},
                         {"fixed_horizon", cfg.fixed_horizon},
                         {"batch", cfg.profile_batch},
                         {"reps", cfg.profile_reps},
                         {"channels", cfg.profile_channels}}}};
}

inline RunConfig run_config_from_json(const json& j) {
    expect_keys(j, {"train", "data", "synth", "ablation", "sweep", "profile"}, "run config");
    RunConfig cfg;
    if (j.contains("train")) cfg.train = config_from_json(j.at("train"));
    if (j.contains("data")) {
        const json& d = j.at("data");
        expect_keys(d, {"csv", "target", "split"}, "data");
        cfg.csv_path = d.value("csv", cfg.csv_path);
        if (d.contains("target")) {
            const std::string t = d.at("target").get<std::string>();
            if (t == "multivariate") {
                cfg.target = data::TargetMode::kMultivariate;
            } else if (t == "univariate_last") {
                cfg.target = data::TargetMode::kUnivariateLast;
            } else {
                throw InvalidConfig("unknown target mode: " + t);
            }
        }
        if (d.contains("split")) cfg.split = split_from_json(d.at("split"));
    }
    if (j.contains("synth")) cfg.synth = synth_from_json(j.at("synth"));
    if (j.contains("ablation")) {
        const json& a = j.at("ablation");
        expect_keys(a, {"variant", "local_epoch_grid"}, "ablation");
        if (a.contains("variant"))
            cfg.variant = eval::variant_from_name(a.at("variant").get<std::string>());
        cfg.local_epoch_grid = a.value("local_epoch_grid", cfg.local_epoch_grid);
    }
    if (j.contains("sweep")) {
        expect_keys(j.at("sweep"), {"mus"}, "sweep");
        cfg.mus = j.at("sweep").value("mus", cfg.mus);
    }
    if (j.contains("profile")) {
        const json& p = j.at("profile");
        expect_keys(p,
                    {"lookback_grid", "horizon_grid", "fixed_lookback", "fixed_horizon",
                     "batch", "reps", "channels"},
                    "profile");
        cfg.lookback_grid = p.value("lookback_grid", cfg.lookback_grid);
        cfg.horizon_grid = p.value("horizon_grid", cfg.horizon_grid);
        cfg.fixed_lookback = p.value("fixed_lookback", cfg.fixed_lookback);
        cfg.fixed_horizon = p.value("fixed_horizon", cfg.fixed_horizon);
        cfg.profile_batch = p.value("batch", cfg.profile_batch);
        cfg.profile_reps = p.value("reps", cfg.profile_reps);
        cfg.profile_channels = p.value("channels", cfg.profile_channels);
    }
    // The synthetic generator follows the run seed.
    cfg.synth.seed = cfg.train.seed;
    return cfg;
}

} // namespace deeptime::io
