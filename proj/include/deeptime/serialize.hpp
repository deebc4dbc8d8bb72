#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "deeptime/data.hpp"
#include "deeptime/errors.hpp"
#include "deeptime/inr.hpp"
#include "deeptime/metrics.hpp"
#include "deeptime/train.hpp"

namespace deeptime::io {

using nlohmann::json;
using numkit::Matrix;

constexpr int kSchemaVersion = 1;

inline void expect_keys(const json& obj, const std::set<std::string>& allowed,
                        const std::string& context) {
    if (!obj.is_object()) throw InvalidConfig(context + ": expected a JSON object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.contains(key))
            throw InvalidConfig(context + ": unknown key '" + key + "'");
}

inline json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.storage()}};
}

inline Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.size()) throw InvalidConfig("matrix: data length != rows*cols");
    std::copy(data.begin(), data.end(), m.data());
    return m;
}

inline json config_to_json(const forecaster::TrainConfig& cfg) {
    return json{{"epochs", cfg.epochs},
                {"lr", cfg.lr},
                {"lambda_lr", cfg.lambda_lr},
                {"warmup_epochs", cfg.warmup_epochs},
                {"batch_size", cfg.batch_size},
                {"patience", cfg.patience},
                {"max_grad_norm", cfg.max_grad_norm},
                {"adam_beta1", cfg.adam_beta1},
                {"adam_beta2", cfg.adam_beta2},
                {"adam_eps", cfg.adam_eps},
                {"layers", cfg.layers},
                {"layer_size", cfg.layer_size},
                {"scales", cfg.scales},
                {"ff_size", cfg.ff_size},
                {"dropout", cfg.dropout},
                {"mu", cfg.mu},
                {"horizon", cfg.horizon},
                {"extra_feature_dim", cfg.extra_feature_dim},
                {"seed", cfg.seed},
                {"threads", cfg.threads}};
}

inline forecaster::TrainConfig config_from_json(const json& j) {
    expect_keys(j,
                {"epochs", "lr", "lambda_lr", "warmup_epochs", "batch_size", "patience",
                 "max_grad_norm", "adam_beta1", "adam_beta2", "adam_eps", "layers",
                 "layer_size", "scales", "ff_size", "dropout", "mu", "horizon",
                 "extra_feature_dim", "seed", "threads"},
                "train config");
    forecaster::TrainConfig cfg;
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.lambda_lr = j.value("lambda_lr", cfg.lambda_lr);
    cfg.warmup_epochs = j.value("warmup_epochs", cfg.warmup_epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.patience = j.value("patience", cfg.patience);
    cfg.max_grad_norm = j.value("max_grad_norm", cfg.max_grad_norm);
    cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
    cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
    cfg.layers = j.value("layers", cfg.layers);
    cfg.layer_size = j.value("layer_size", cfg.layer_size);
    cfg.scales = j.value("scales", cfg.scales);
    cfg.ff_size = j.value("ff_size", cfg.ff_size);
    cfg.dropout = j.value("dropout", cfg.dropout);
    cfg.mu = j.value("mu", cfg.mu);
    cfg.horizon = j.value("horizon", cfg.horizon);
    cfg.extra_feature_dim = j.value("extra_feature_dim", cfg.extra_feature_dim);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    return cfg;
}

inline json normalization_to_json(const data::Normalization& n) {
    return json{{"mean", n.mean}, {"std", n.std_dev}};
}

inline data::Normalization normalization_from_json(const json& j) {
    data::Normalization n;
    n.mean = j.at("mean").get<std::vector<double>>();
    n.std_dev = j.at("std").get<std::vector<double>>();
    return n;
}

inline json metrics_to_json(const eval::Metrics& m) {
    json j{{"mse", m.mse}, {"mae", m.mae}, {"n_windows", m.n_windows}};
    if (m.per_window) {
        json rows = json::array();
        for (const auto& [w_mse, w_mae] : *m.per_window)
            rows.push_back(json{{"mse", w_mse}, {"mae", w_mae}});
        j["per_window"] = std::move(rows);
    }
    return j;
}

inline json report_to_json(const forecaster::TrainReport& r) {
    return json{{"train_loss", r.train_loss},   {"val_loss", r.val_loss},
                {"lr", r.lr_history},           {"best_epoch", r.best_epoch},
                {"stopped_epoch", r.stopped_epoch}, {"best_val", r.best_val},
                {"epoch_seconds", r.epoch_seconds}};
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << j.dump(2) << '\n';
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

} // namespace deeptime::io
