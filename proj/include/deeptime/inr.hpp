#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "deeptime/errors.hpp"
#include "deeptime/matrix.hpp"
#include "deeptime/rng.hpp"

namespace deeptime::inr {

using numkit::Matrix;
using numkit::Rng;

inline double softplus(double x) {
    // log1p(exp(x)) without overflow for large x.
    return x > 30.0 ? x : std::log1p(std::exp(x));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Shared [0,1] time-index over a lookback/horizon window: entry i is
// i / (L+H-1), i.e. linspace(0, 1, L+H).
inline Matrix make_time_index(std::size_t lookback_len, std::size_t horizon_len) {
    if (lookback_len < 1 || horizon_len < 1)
        throw InvalidConfig("make_time_index: lookback and horizon must be >= 1");
    const std::size_t n = lookback_len + horizon_len;
    Matrix tau(n, 1);
    for (std::size_t i = 0; i < n; ++i)
        tau(i, 0) = static_cast<double>(i) / static_cast<double>(n - 1);
    return tau;
}

// Concatenated Fourier features: per scale s a block
// [sin(2 pi tau B_s^T), cos(2 pi tau B_s^T)], blocks stacked in scale order.
// The projection matrices are sampled once at init and never trained.
struct CffLayer {
    std::vector<double> scales;
    std::vector<Matrix> bands; // one (ff/(2S)) x c matrix per scale

    std::size_t input_dim() const { return bands.empty() ? 0 : bands.front().cols(); }
    std::size_t feature_size() const {
        std::size_t total = 0;
        for (const Matrix& b : bands) total += 2 * b.rows();
        return total;
    }
};

struct LinearFeaturizer {
    Matrix weight; // c x F
    Matrix bias;   // 1 x F
};

struct MlpLayer {
    Matrix weight;  // in x out
    Matrix bias;    // 1 x out
    Matrix ln_gain; // 1 x out
    Matrix ln_bias; // 1 x out
    double dropout_p = 0.0;
};

struct LinearHead {
    Matrix weight; // d x m
    Matrix bias;   // 1 x m
};

enum class FeaturizerKind { kConcatFourier, kLinear };

struct ModelSpec {
    std::size_t input_dim = 1;
    std::size_t layers = 5;
    std::size_t layer_size = 256;
    std::vector<double> scales = {0.01, 0.1, 1.0, 5.0, 10.0, 20.0, 50.0, 100.0};
    std::size_t ff_size = 4096;
    double dropout = 0.1;
    FeaturizerKind featurizer = FeaturizerKind::kConcatFourier;
    std::size_t head_channels = 0; // 0: the ridge regressor supplies the last layer
};

// Meta parameters phi: featurizer (CFF fixed, linear trainable), trunk layers,
// raw ridge regularizer. The per-window last layer is not stored here; it is
// produced in closed form by the ridge regressor.
struct InrModel {
    FeaturizerKind featurizer_kind = FeaturizerKind::kConcatFourier;
    CffLayer cff;
    LinearFeaturizer feat_linear;
    std::vector<MlpLayer> layers;
    double lambda_raw = 0.0;
    std::optional<LinearHead> head;

    std::size_t input_dim() const {
        return featurizer_kind == FeaturizerKind::kConcatFourier ? cff.input_dim()
                                                                 : feat_linear.weight.rows();
    }
    std::size_t feature_size() const {
        return featurizer_kind == FeaturizerKind::kConcatFourier ? cff.feature_size()
                                                                 : feat_linear.weight.cols();
    }
    std::size_t hidden_size() const { return layers.back().weight.cols(); }
    double lambda() const { return softplus(lambda_raw); }
};

constexpr double kLayerNormEps = 1e-5;

enum class Mode { kTrain, kEval };

struct LayerCache {
    Matrix pre;      // X W + b
    Matrix mask;     // 0/1 dropout mask; empty when dropout was not applied
    Matrix xhat;     // LayerNorm pre-affine output
    Matrix inv_std;  // n x 1
    Matrix guarded;  // n x 1, 1.0 where row variance <= eps
    Matrix out;      // gain * xhat + bias
};

struct ForwardCache {
    Matrix tau;
    Matrix features;
    std::vector<LayerCache> layers;
    bool train_mode = false;
};

struct LayerGrads {
    Matrix weight, bias, ln_gain, ln_bias;
};

struct GradientSet {
    Matrix feat_weight, feat_bias; // empty for the CFF featurizer
    std::vector<LayerGrads> layers;
    Matrix head_weight, head_bias; // empty without a linear head
    double lambda_raw = 0.0;
};

inline GradientSet zero_grads(const InrModel& model) {
    GradientSet g;
    if (model.featurizer_kind == FeaturizerKind::kLinear) {
        g.feat_weight = Matrix(model.feat_linear.weight.rows(), model.feat_linear.weight.cols());
        g.feat_bias = Matrix(1, model.feat_linear.bias.cols());
    }
    g.layers.reserve(model.layers.size());
    for (const MlpLayer& l : model.layers)
        g.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()),
                            Matrix(1, l.bias.cols()), Matrix(1, l.ln_gain.cols()),
                            Matrix(1, l.ln_bias.cols())});
    if (model.head) {
        g.head_weight = Matrix(model.head->weight.rows(), model.head->weight.cols());
        g.head_bias = Matrix(1, model.head->bias.cols());
    }
    return g;
}

// Trainable tensors in a fixed order; gradient_tensors mirrors it exactly.
// lambda_raw is handled separately as a scalar.
inline std::vector<Matrix*> trainable_tensors(InrModel& model) {
    std::vector<Matrix*> out;
    if (model.featurizer_kind == FeaturizerKind::kLinear) {
        out.push_back(&model.feat_linear.weight);
        out.push_back(&model.feat_linear.bias);
    }
    for (MlpLayer& l : model.layers) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
        out.push_back(&l.ln_gain);
        out.push_back(&l.ln_bias);
    }
    if (model.head) {
        out.push_back(&model.head->weight);
        out.push_back(&model.head->bias);
    }
    return out;
}

inline std::vector<Matrix*> gradient_tensors(GradientSet& g) {
    std::vector<Matrix*> out;
    if (!g.feat_weight.empty()) {
        out.push_back(&g.feat_weight);
        out.push_back(&g.feat_bias);
    }
    for (LayerGrads& l : g.layers) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
        out.push_back(&l.ln_gain);
        out.push_back(&l.ln_bias);
    }
    if (!g.head_weight.empty()) {
        out.push_back(&g.head_weight);
        out.push_back(&g.head_bias);
    }
    return out;
}

inline std::vector<const Matrix*> gradient_tensors(const GradientSet& g) {
    auto mut = gradient_tensors(const_cast<GradientSet&>(g));
    return {mut.begin(), mut.end()};
}

inline void accumulate(GradientSet& acc, const GradientSet& g, double scale = 1.0) {
    auto dst = gradient_tensors(acc);
    auto src = gradient_tensors(const_cast<GradientSet&>(g));
    if (dst.size() != src.size()) throw ShapeMismatch("accumulate: gradient sets differ");
    for (std::size_t i = 0; i < dst.size(); ++i) numkit::axpy(scale, *src[i], *dst[i]);
    acc.lambda_raw += scale * g.lambda_raw;
}

inline Matrix cff_forward(const CffLayer& cff, const Matrix& tau) {
    if (tau.cols() != cff.input_dim())
        throw ShapeMismatch("cff_forward: tau width does not match CFF input dim");
    const std::size_t n = tau.rows();
    Matrix out(n, cff.feature_size());
    std::size_t col = 0;
    for (const Matrix& band : cff.bands) {
        const Matrix proj = numkit::matmul_nt(tau, band); // n x rs
        const std::size_t rs = band.rows();
        for (std::size_t i = 0; i < n; ++i) {
            const double* p = proj.row_ptr(i);
            double* o = out.row_ptr(i);
            for (std::size_t j = 0; j < rs; ++j) {
                const double angle = 2.0 * 3.14159265358979323846 * p[j];
                o[col + j] = std::sin(angle);
                o[col + rs + j] = std::cos(angle);
            }
        }
        col += 2 * rs;
    }
    return out;
}

// d(loss)/d(tau) given the gradient w.r.t. the CFF output. The cached output
// blocks are exactly cos/sin of the projection angles.
inline Matrix cff_backward(const CffLayer& cff, const Matrix& features, const Matrix& d_feat) {
    const std::size_t n = features.rows();
    Matrix d_tau(n, cff.input_dim());
    std::size_t col = 0;
    for (const Matrix& band : cff.bands) {
        const std::size_t rs = band.rows();
        Matrix d_proj(n, rs);
        for (std::size_t i = 0; i < n; ++i) {
            const double* f = features.row_ptr(i);
            const double* g = d_feat.row_ptr(i);
            double* dp = d_proj.row_ptr(i);
            for (std::size_t j = 0; j < rs; ++j) {
                const double s = f[col + j];
                const double c = f[col + rs + j];
                dp[j] = 2.0 * 3.14159265358979323846 * (g[col + j] * c - g[col + rs + j] * s);
            }
        }
        d_tau += numkit::matmul(d_proj, band);
        col += 2 * rs;
    }
    return d_tau;
}

namespace detail {

inline void layer_norm_forward(const Matrix& x, const MlpLayer& layer, LayerCache& cache) {
    const std::size_t n = x.rows(), d = x.cols();
    cache.xhat = Matrix(n, d);
    cache.inv_std = Matrix(n, 1);
    cache.guarded = Matrix(n, 1);
    cache.out = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x.row_ptr(i);
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = row[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        // Exact normalization for healthy rows; the eps floor keeps constant
        // rows (variance 0) finite and maps them to 0.
        const bool guarded = var <= kLayerNormEps;
        const double inv = 1.0 / std::sqrt(guarded ? kLayerNormEps : var);
        cache.inv_std(i, 0) = inv;
        cache.guarded(i, 0) = guarded ? 1.0 : 0.0;
        double* xh = cache.xhat.row_ptr(i);
        double* out = cache.out.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) {
            xh[j] = (row[j] - mean) * inv;
            out[j] = layer.ln_gain(0, j) * xh[j] + layer.ln_bias(0, j);
        }
    }
}

// Returns the gradient w.r.t. the LayerNorm input and accumulates the affine
// parameter gradients.
inline Matrix layer_norm_backward(const Matrix& d_out, const MlpLayer& layer,
                                  const LayerCache& cache, LayerGrads& grads) {
    const std::size_t n = d_out.rows(), d = d_out.cols();
    Matrix d_x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* go = d_out.row_ptr(i);
        const double* xh = cache.xhat.row_ptr(i);
        double* gx = d_x.row_ptr(i);
        double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            grads.ln_gain(0, j) += go[j] * xh[j];
            grads.ln_bias(0, j) += go[j];
            const double dxh = go[j] * layer.ln_gain(0, j);
            gx[j] = dxh; // stash dxhat
            mean_dxhat += dxh;
            mean_dxhat_xhat += dxh * xh[j];
        }
        mean_dxhat /= static_cast<double>(d);
        mean_dxhat_xhat /= static_cast<double>(d);
        const double inv = cache.inv_std(i, 0);
        const bool guarded = cache.guarded(i, 0) != 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double centered = gx[j] - mean_dxhat;
            gx[j] = inv * (guarded ? centered : centered - xh[j] * mean_dxhat_xhat);
        }
    }
    return d_x;
}

} // namespace detail

// Forward pass through featurizer and trunk. In train mode, rng drives
// inverted dropout and masks are recorded in the cache; fixed_masks replays
// the masks of a previous forward (finite-difference checks).
inline std::pair<Matrix, ForwardCache> forward(const InrModel& model, const Matrix& tau,
                                               Mode mode, Rng* rng = nullptr,
                                               const ForwardCache* fixed_masks = nullptr) {
    if (tau.cols() != model.input_dim())
        throw ShapeMismatch("inr forward: tau width does not match model input dim");
    ensure_finite(tau, "inr forward tau");

    ForwardCache cache;
    cache.tau = tau;
    cache.train_mode = mode == Mode::kTrain;
    cache.features = model.featurizer_kind == FeaturizerKind::kConcatFourier
                         ? cff_forward(model.cff, tau)
                         : [&] {
                               Matrix f = numkit::matmul(tau, model.feat_linear.weight);
                               numkit::add_row_vector(f, model.feat_linear.bias);
                               return f;
                           }();

    const Matrix* x = &cache.features;
    cache.layers.resize(model.layers.size());
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        const MlpLayer& layer = model.layers[k];
        LayerCache& lc = cache.layers[k];

        lc.pre = numkit::matmul(*x, layer.weight);
        numkit::add_row_vector(lc.pre, layer.bias);

        Matrix act(lc.pre.rows(), lc.pre.cols());
        for (std::size_t i = 0; i < act.size(); ++i)
            act.data()[i] = lc.pre.data()[i] > 0.0 ? lc.pre.data()[i] : 0.0;

        const bool apply_dropout = mode == Mode::kTrain && layer.dropout_p > 0.0;
        if (apply_dropout) {
            if (fixed_masks != nullptr) {
                lc.mask = fixed_masks->layers.at(k).mask;
            } else {
                if (rng == nullptr)
                    throw InvalidConfig("inr forward: train mode with dropout needs an rng");
                lc.mask = Matrix(act.rows(), act.cols());
                for (std::size_t i = 0; i < lc.mask.size(); ++i)
                    lc.mask.data()[i] = rng->next_double() >= layer.dropout_p ? 1.0 : 0.0;
            }
            const double scale = 1.0 / (1.0 - layer.dropout_p);
            for (std::size_t i = 0; i < act.size(); ++i)
                act.data()[i] *= lc.mask.data()[i] * scale;
        }

        detail::layer_norm_forward(act, layer, lc);
        x = &lc.out;
    }

    Matrix reprs = *x;
    return {std::move(reprs), std::move(cache)};
}

struct BackwardResult {
    GradientSet grads;
    Matrix d_tau;
};

// Reverse pass over the cached forward. CFF projection matrices are fixed and
// receive no gradient; d_tau is returned for completeness.
inline BackwardResult backward(const InrModel& model, const ForwardCache& cache,
                               const Matrix& d_reprs) {
    if (cache.layers.size() != model.layers.size())
        throw ShapeMismatch("inr backward: cache does not match model");
    if (d_reprs.rows() != cache.features.rows() || d_reprs.cols() != model.hidden_size())
        throw ShapeMismatch("inr backward: dReprs shape mismatch");

    BackwardResult res;
    res.grads = zero_grads(model);

    Matrix d_out = d_reprs;
    for (std::size_t k = model.layers.size(); k-- > 0;) {
        const MlpLayer& layer = model.layers[k];
        const LayerCache& lc = cache.layers[k];
        LayerGrads& lg = res.grads.layers[k];

        Matrix d_act = detail::layer_norm_backward(d_out, layer, lc, lg);

        if (!lc.mask.empty()) {
            const double scale = 1.0 / (1.0 - layer.dropout_p);
            for (std::size_t i = 0; i < d_act.size(); ++i)
                d_act.data()[i] *= lc.mask.data()[i] * scale;
        }

        for (std::size_t i = 0; i < d_act.size(); ++i)
            if (lc.pre.data()[i] <= 0.0) d_act.data()[i] = 0.0;

        const Matrix& input = k == 0 ? cache.features : cache.layers[k - 1].out;
        lg.weight += numkit::matmul_tn(input, d_act);
        lg.bias += numkit::col_sums(d_act);
        d_out = numkit::matmul_nt(d_act, layer.weight);
    }

    if (model.featurizer_kind == FeaturizerKind::kConcatFourier) {
        res.d_tau = cff_backward(model.cff, cache.features, d_out);
    } else {
        res.grads.feat_weight += numkit::matmul_tn(cache.tau, d_out);
        res.grads.feat_bias += numkit::col_sums(d_out);
        res.d_tau = numkit::matmul_nt(d_out, model.feat_linear.weight);
    }
    return res;
}

namespace detail {

inline Matrix fan_in_uniform(Rng& rng, std::size_t rows, std::size_t cols, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return numkit::rand_uniform(rng, rows, cols, -bound, bound);
}

inline MlpLayer make_layer(Rng& rng, std::size_t in, std::size_t out, double dropout_p) {
    MlpLayer l;
    l.weight = fan_in_uniform(rng, in, out, in);
    l.bias = fan_in_uniform(rng, 1, out, in);
    l.ln_gain = Matrix(1, out, 1.0);
    l.ln_bias = Matrix(1, out, 0.0);
    l.dropout_p = dropout_p;
    return l;
}

} // namespace detail

inline InrModel init_model(const ModelSpec& spec, Rng rng) {
    if (spec.layers < 1) throw InvalidConfig("init_model: need at least one layer");
    if (spec.layer_size < 1) throw InvalidConfig("init_model: layer_size must be >= 1");
    if (spec.input_dim < 1) throw InvalidConfig("init_model: input_dim must be >= 1");
    if (!(spec.dropout >= 0.0 && spec.dropout < 1.0))
        throw InvalidConfig("init_model: dropout must be in [0, 1)");

    InrModel model;
    model.featurizer_kind = spec.featurizer;
    std::size_t feature_size = 0;

    if (spec.featurizer == FeaturizerKind::kConcatFourier) {
        if (spec.scales.empty()) throw InvalidConfig("init_model: scales must be non-empty");
        if (spec.ff_size == 0 || spec.ff_size % (2 * spec.scales.size()) != 0)
            throw InvalidConfig("init_model: ff_size must be divisible by 2 * n_scales");
        for (double s : spec.scales)
            if (!(s > 0.0)) throw InvalidConfig("init_model: scales must be positive");
        Rng cff_rng = rng.split(0);
        const std::size_t rows_per_scale = spec.ff_size / (2 * spec.scales.size());
        model.cff.scales = spec.scales;
        for (double sigma : spec.scales)
            model.cff.bands.push_back(
                numkit::randn(cff_rng, rows_per_scale, spec.input_dim, sigma));
        feature_size = spec.ff_size;
    } else {
        Rng feat_rng = rng.split(0);
        feature_size = spec.layer_size;
        model.feat_linear.weight =
            detail::fan_in_uniform(feat_rng, spec.input_dim, feature_size, spec.input_dim);
        model.feat_linear.bias =
            detail::fan_in_uniform(feat_rng, 1, feature_size, spec.input_dim);
    }

    std::size_t in = feature_size;
    for (std::size_t k = 0; k < spec.layers; ++k) {
        Rng layer_rng = rng.split(1 + k);
        model.layers.push_back(detail::make_layer(layer_rng, in, spec.layer_size, spec.dropout));
        in = spec.layer_size;
    }

    if (spec.head_channels > 0) {
        Rng head_rng = rng.split(1000);
        model.head = LinearHead{
            detail::fan_in_uniform(head_rng, spec.layer_size, spec.head_channels,
                                   spec.layer_size),
            detail::fan_in_uniform(head_rng, 1, spec.head_channels, spec.layer_size)};
    }

    model.lambda_raw = 0.0;
    return model;
}

} // namespace deeptime::inr
