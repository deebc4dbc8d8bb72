#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "deeptime/ablation.hpp"
#include "deeptime/checkpoint.hpp"
#include "deeptime/evaluate.hpp"
#include "deeptime/profile.hpp"
#include "deeptime/sweep.hpp"

using namespace deeptime;
using namespace deeptime::numkit;
using namespace deeptime::eval;

namespace {

// Two sinusoid channels plus mild seeded noise; looks like a miniature
// benchmark series.
data::TimeSeries sine_series(std::size_t total, double noise = 0.05) {
    Rng rng(31);
    data::TimeSeries ts;
    ts.values = Matrix(total, 2);
    for (std::size_t t = 0; t < total; ++t) {
        const double x = static_cast<double>(t);
        ts.values(t, 0) = std::sin(2.0 * 3.14159265 * x / 48.0) + noise * rng.next_normal();
        ts.values(t, 1) =
            0.5 * std::sin(2.0 * 3.14159265 * x / 24.0 + 1.0) + noise * rng.next_normal();
    }
    return ts;
}

forecaster::TrainConfig small_cfg() {
    forecaster::TrainConfig cfg;
    cfg.epochs = 8;
    cfg.warmup_epochs = 1;
    cfg.batch_size = 64;
    cfg.layers = 2;
    cfg.layer_size = 16;
    cfg.scales = {1.0, 10.0};
    cfg.ff_size = 32;
    cfg.dropout = 0.0;
    cfg.mu = 2;
    cfg.horizon = 12;
    cfg.seed = 7;
    return cfg;
}

} // namespace

TEST_CASE("mse and mae hand values") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    REQUIRE(mse(a, a) == 0.0);
    REQUIRE(mae(a, a) == 0.0);

    Matrix shifted = a;
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted.data()[i] -= 2.0;
    REQUIRE(mse(shifted, a) == 4.0);
    REQUIRE(mae(shifted, a) == 2.0);
    REQUIRE_THROWS_AS(mse(a, Matrix(1, 1)), ShapeMismatch);
}

TEST_CASE("mae is bounded by root mse") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix p = randn(rng, 6, 3, 2.0);
        const Matrix t = randn(rng, 6, 3, 2.0);
        REQUIRE(mae(p, t) <= std::sqrt(mse(p, t)) + 1e-12);
    }
}

TEST_CASE("evaluate is exact on a model that reproduces constants") {
    // Zero trunk + lambda driven to ~0 makes the ridge head reproduce the
    // lookback mean exactly, i.e. a perfect model for a constant series.
    inr::ModelSpec spec;
    spec.layers = 2;
    spec.layer_size = 4;
    spec.scales = {1.0};
    spec.ff_size = 4;
    spec.dropout = 0.0;
    inr::InrModel model = inr::init_model(spec, Rng(1));
    for (inr::MlpLayer& l : model.layers) {
        l.weight.fill(0.0);
        l.bias.fill(0.0);
    }
    model.lambda_raw = -60.0; // softplus(-60) ~ 1e-27

    data::TimeSeries flat;
    flat.values = Matrix(30, 1, 5.0);
    const Metrics m = evaluate(model, flat, 8, 4);
    REQUIRE(m.n_windows == 30 - 8 - 4 + 1);
    REQUIRE(m.mse < 1e-20);
    REQUIRE(m.mae < 1e-10);
}

TEST_CASE("evaluate aggregates are independent of window order") {
    inr::InrModel model = inr::init_model(inr::ModelSpec{1, 2, 8, {1.0, 5.0}, 8, 0.0}, Rng(3));
    data::TimeSeries ts = sine_series(60, 0.0);
    EvalOptions opts;
    opts.store_per_window = true;
    const Metrics m = evaluate(model, ts, 10, 5, opts);
    REQUIRE(m.per_window->size() == m.n_windows);

    // Every window has the same entry count, so the aggregate equals the mean
    // of per-window means in any order.
    double sum = 0.0;
    for (auto it = m.per_window->rbegin(); it != m.per_window->rend(); ++it) sum += it->first;
    REQUIRE(std::abs(sum / static_cast<double>(m.n_windows) - m.mse) < 1e-12);

    EvalOptions threaded = opts;
    threaded.threads = 3;
    const Metrics m2 = evaluate(model, ts, 10, 5, threaded);
    REQUIRE(m2.mse == m.mse);
    REQUIRE(m2.mae == m.mae);
}

TEST_CASE("trained model beats the constant-last-value baseline") {
    const data::TimeSeries raw = sine_series(400);
    const forecaster::TrainConfig cfg = small_cfg();
    const PreparedSeries prep = prepare_series(raw, data::SplitSpec::standard(), false);

    const std::size_t lookback_len = cfg.lookback();
    const auto train_tasks = data::windows(prep.splits.train, lookback_len, cfg.horizon);
    const auto val_tasks = data::windows(prep.splits.val, lookback_len, cfg.horizon);
    auto [model, report] = forecaster::train(forecaster::init_model(cfg, Rng(cfg.seed)),
                                             train_tasks, val_tasks, cfg);

    const auto test_tasks = data::windows(prep.splits.test, lookback_len, cfg.horizon);
    const Metrics ours = evaluate_tasks(model, test_tasks);
    const Metrics baseline = baseline_constant_last(test_tasks);
    REQUIRE(ours.mse <= baseline.mse);
}

TEST_CASE("sweep argmin bookkeeping ignores test metrics") {
    std::vector<MuEntry> entries;
    const double vals[] = {3.0, 1.0, 2.0, 5.0, 4.0};
    const std::size_t mus[] = {1, 3, 5, 7, 9};
    for (int i = 0; i < 5; ++i) entries.push_back({mus[i], 0, vals[i], {}});
    // Give a non-chosen row the best test score; selection must still follow
    // the validation loss.
    entries[3].test.mse = 1e-9;
    entries[1].test.mse = 123.0;
    REQUIRE(argmin_val(entries) == 1);
    SweepResult res{entries, argmin_val(entries)};
    REQUIRE(res.chosen().mu == 3);
}

TEST_CASE("sweep_mu trains per mu and reports a consistent table") {
    const data::TimeSeries raw = sine_series(320);
    forecaster::TrainConfig cfg = small_cfg();
    cfg.epochs = 4;
    cfg.horizon = 8;
    const PreparedSeries prep = prepare_series(raw, data::SplitSpec::standard(), false);

    const SweepOutput out = sweep_mu(cfg, prep.splits, {1, 2});
    REQUIRE(out.result.entries.size() == 2);
    REQUIRE(out.result.chosen_index == argmin_val(out.result.entries));
    REQUIRE(out.result.test_evaluations == out.result.entries.size());

    const MuEntry& chosen = out.result.chosen();
    REQUIRE(chosen.lookback_len == chosen.mu * cfg.horizon);
    const Metrics again =
        evaluate(out.best_model, prep.splits.test, chosen.lookback_len, cfg.horizon);
    REQUIRE(again.mse == chosen.test.mse);
    REQUIRE(again.mae == chosen.test.mae);
}

TEST_CASE("no_rr predictions ignore the lookback window") {
    forecaster::TrainConfig cfg = small_cfg();
    const inr::ModelSpec spec = variant_spec(cfg, AblationVariant::kNoRr, 2);
    REQUIRE(spec.head_channels == 2);
    inr::InrModel model = inr::init_model(spec, Rng(5));

    Rng rng(6);
    const Matrix lb1 = randn(rng, 10, 2, 1.0);
    const Matrix lb2 = randn(rng, 10, 2, 5.0);
    const auto f1 = forecaster::forecast(model, lb1, 4, inr::Mode::kEval);
    const auto f2 = forecaster::forecast(model, lb2, 4, inr::Mode::kEval);
    REQUIRE(f1.preds == f2.preds);
}

TEST_CASE("local ablation fits each window from scratch") {
    data::SyntheticSpec spec;
    spec.family = data::SyntheticFamily::kLinear;
    spec.n_train_tasks = 20;
    spec.n_test_tasks = 4;
    spec.points = 40;
    spec.lookback_len = 20;
    spec.horizon_len = 20;
    spec.seed = 9;

    forecaster::TrainConfig cfg = small_cfg();
    cfg.layers = 2;
    cfg.layer_size = 8;
    cfg.ff_size = 8;
    const AblationResult res =
        run_ablation_synth(AblationVariant::kLocal, cfg, spec, {2, 4});
    REQUIRE(res.variant == AblationVariant::kLocal);
    REQUIRE((res.local_epochs == 2 || res.local_epochs == 4));
    REQUIRE(std::isfinite(res.test.mse));
    REQUIRE(res.test.n_windows == 4);
}

TEST_CASE("plus_datetime rejects data without timestamps") {
    forecaster::TrainConfig cfg = small_cfg();
    data::SyntheticSpec spec;
    REQUIRE_THROWS_AS(run_ablation_synth(AblationVariant::kPlusDatetime, cfg, spec),
                      InvalidConfig);
    const data::TimeSeries no_stamps = sine_series(100);
    REQUIRE_THROWS_AS(
        run_ablation_series(AblationVariant::kPlusDatetime, cfg, no_stamps,
                            data::SplitSpec::standard()),
        InvalidConfig);
}

TEST_CASE("percent_change sign convention") {
    REQUIRE(percent_change(1.1, 1.0) == Catch::Approx(0.1));
    REQUIRE(percent_change(0.9, 1.0) == Catch::Approx(-0.1));
}

TEST_CASE("profile returns positive timings on a toy grid") {
    forecaster::TrainConfig cfg = small_cfg();
    cfg.layers = 1;
    cfg.layer_size = 8;
    cfg.ff_size = 8;
    const auto entries = profile(cfg, {8, 16}, {8}, 8, 8, 4, 2, 2);
    REQUIRE(entries.size() == 3);
    for (const ProfileEntry& e : entries) {
        REQUIRE(e.seconds_per_iter > 0.0);
        REQUIRE(e.peak_rss_delta_bytes >= 0);
    }
    REQUIRE(entries[0].axis == "lookback");
    REQUIRE(entries[2].axis == "horizon");
}

TEST_CASE("profile runtime scales roughly linearly with batch size") {
    forecaster::TrainConfig cfg = small_cfg();
    cfg.layers = 2;
    cfg.layer_size = 32;
    cfg.ff_size = 32;
    const auto single = profile(cfg, {64}, {}, 48, 32, 8, 7, 3);
    const auto doubled = profile(cfg, {64}, {}, 48, 32, 16, 7, 3);
    const double ratio = doubled[0].seconds_per_iter / single[0].seconds_per_iter;
    REQUIRE(ratio >= 1.0);
    REQUIRE(ratio <= 3.0); // ~2x with a +/-50% allowance
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    forecaster::TrainConfig cfg = small_cfg();
    cfg.dropout = 0.2;
    inr::InrModel model = forecaster::init_model(cfg, Rng(cfg.seed));
    model.lambda_raw = -1.2345678901234567;

    io::Checkpoint ckpt;
    ckpt.model = model;
    ckpt.config = cfg;
    ckpt.normalization = data::Normalization{{0.5, -0.25}, {1.5, 2.0}};

    const auto path = (std::filesystem::temp_directory_path() / "deeptime_ckpt.json").string();
    io::save_checkpoint(path, ckpt);
    const io::Checkpoint loaded = io::load_checkpoint(path);

    REQUIRE(loaded.model.lambda_raw == model.lambda_raw);
    REQUIRE(loaded.model.cff.scales == model.cff.scales);
    for (std::size_t s = 0; s < model.cff.bands.size(); ++s)
        REQUIRE(loaded.model.cff.bands[s] == model.cff.bands[s]);
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        REQUIRE(loaded.model.layers[k].weight == model.layers[k].weight);
        REQUIRE(loaded.model.layers[k].bias == model.layers[k].bias);
        REQUIRE(loaded.model.layers[k].ln_gain == model.layers[k].ln_gain);
        REQUIRE(loaded.model.layers[k].ln_bias == model.layers[k].ln_bias);
        REQUIRE(loaded.model.layers[k].dropout_p == model.layers[k].dropout_p);
    }
    REQUIRE(loaded.config.seed == cfg.seed);
    REQUIRE(loaded.config.scales == cfg.scales);
    REQUIRE(loaded.normalization->mean == ckpt.normalization->mean);
    REQUIRE(loaded.normalization->std_dev == ckpt.normalization->std_dev);

    // Identical forecasts from the reloaded model.
    Rng rng(2);
    const Matrix lookback = randn(rng, 12, 2, 1.0);
    REQUIRE(forecaster::forecast(model, lookback, 6, inr::Mode::kEval).preds ==
            forecaster::forecast(loaded.model, lookback, 6, inr::Mode::kEval).preds);
}

TEST_CASE("checkpoint rejects foreign json") {
    const auto path = (std::filesystem::temp_directory_path() / "deeptime_bad_ckpt.json").string();
    io::write_json_file(path, io::json{{"kind", "something_else"}});
    REQUIRE_THROWS_AS(io::load_checkpoint(path), ParseError);
}
