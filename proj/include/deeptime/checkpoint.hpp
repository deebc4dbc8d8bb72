#pragma once

#include <optional>
#include <string>

#include "deeptime/serialize.hpp"

namespace deeptime::io {

struct Checkpoint {
    inr::InrModel model;
    forecaster::TrainConfig config;
    std::optional<data::Normalization> normalization;
};

namespace detail {

inline json model_to_json(const inr::InrModel& model) {
    json j;
    j["lambda_raw"] = model.lambda_raw;
    if (model.featurizer_kind == inr::FeaturizerKind::kConcatFourier) {
        j["featurizer"] = "concat_fourier";
        j["scales"] = model.cff.scales;
        json bands = json::array();
        for (const Matrix& b : model.cff.bands) bands.push_back(matrix_to_json(b));
        j["bands"] = std::move(bands);
    } else {
        j["featurizer"] = "linear";
        j["feat_weight"] = matrix_to_json(model.feat_linear.weight);
        j["feat_bias"] = matrix_to_json(model.feat_linear.bias);
    }
    json layers = json::array();
    for (const inr::MlpLayer& l : model.layers)
        layers.push_back(json{{"weight", matrix_to_json(l.weight)},
                              {"bias", matrix_to_json(l.bias)},
                              {"ln_gain", matrix_to_json(l.ln_gain)},
                              {"ln_bias", matrix_to_json(l.ln_bias)},
                              {"dropout_p", l.dropout_p}});
    j["layers"] = std::move(layers);
    if (model.head)
        j["head"] = json{{"weight", matrix_to_json(model.head->weight)},
                         {"bias", matrix_to_json(model.head->bias)}};
    return j;
}

inline inr::InrModel model_from_json(const json& j) {
    inr::InrModel model;
    model.lambda_raw = j.at("lambda_raw").get<double>();
    const std::string kind = j.at("featurizer").get<std::string>();
    if (kind == "concat_fourier") {
        model.featurizer_kind = inr::FeaturizerKind::kConcatFourier;
        model.cff.scales = j.at("scales").get<std::vector<double>>();
        for (const json& b : j.at("bands")) model.cff.bands.push_back(matrix_from_json(b));
    } else if (kind == "linear") {
        model.featurizer_kind = inr::FeaturizerKind::kLinear;
        model.feat_linear.weight = matrix_from_json(j.at("feat_weight"));
        model.feat_linear.bias = matrix_from_json(j.at("feat_bias"));
    } else {
        throw InvalidConfig("checkpoint: unknown featurizer kind '" + kind + "'");
    }
    for (const json& l : j.at("layers")) {
        inr::MlpLayer layer;
        layer.weight = matrix_from_json(l.at("weight"));
        layer.bias = matrix_from_json(l.at("bias"));
        layer.ln_gain = matrix_from_json(l.at("ln_gain"));
        layer.ln_bias = matrix_from_json(l.at("ln_bias"));
        layer.dropout_p = l.at("dropout_p").get<double>();
        model.layers.push_back(std::move(layer));
    }
    if (j.contains("head"))
        model.head = inr::LinearHead{matrix_from_json(j.at("head").at("weight")),
                                     matrix_from_json(j.at("head").at("bias"))};
    return model;
}

} // namespace detail

// Self-describing JSON document: config, every parameter tensor, the fixed
// CFF matrices, lambda_raw, normalization stats, and the seed lineage.
// Finite doubles round-trip bit-exactly through the JSON encoder.
inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "deeptime_checkpoint";
    j["config"] = config_to_json(ckpt.config);
    j["model"] = detail::model_to_json(ckpt.model);
    j["seed_lineage"] = json{{"root_seed", ckpt.config.seed}};
    j["normalization"] =
        ckpt.normalization ? normalization_to_json(*ckpt.normalization) : json(nullptr);
    write_json_file(path, j);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    const json j = read_json_file(path);
    if (j.value("kind", "") != "deeptime_checkpoint")
        throw ParseError("not a deeptime checkpoint: " + path);
    Checkpoint ckpt;
    ckpt.config = config_from_json(j.at("config"));
    ckpt.model = detail::model_from_json(j.at("model"));
    if (!j.at("normalization").is_null())
        ckpt.normalization = normalization_from_json(j.at("normalization"));
    return ckpt;
}

} // namespace deeptime::io
