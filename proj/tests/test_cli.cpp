#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#ifndef DEEPTIME_CLI_PATH
#error "DEEPTIME_CLI_PATH must be defined"
#endif

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

RunResult run_cli(const std::string& cli_args) {
    const fs::path log = fs::temp_directory_path() / "deeptime_cli_log.txt";
    const std::string cmd =
        std::string(DEEPTIME_CLI_PATH) + " " + cli_args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    res.output = ss.str();
    return res;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_sine_csv(const fs::path& dir) {
    const fs::path path = dir / "series.csv";
    std::ofstream out(path);
    out << "date,a,b\n";
    out.precision(17);
    for (int t = 0; t < 320; ++t) {
        const int minute = (t * 15) % 60;
        const int hour = (t / 4) % 24;
        const int day = 1 + t / 96;
        out << "2020-01-" << (day < 10 ? "0" : "") << day << ' ' << (hour < 10 ? "0" : "")
            << hour << ':' << (minute < 10 ? "0" : "") << minute << ":00,"
            << std::sin(2.0 * 3.14159265 * t / 48.0) << ','
            << 2.0 + 0.5 * std::cos(2.0 * 3.14159265 * t / 96.0) << "\n";
    }
    return path.string();
}

std::string small_train_config(const fs::path& dir, const std::string& csv) {
    const json cfg{{"train",
                    {{"epochs", 3},
                     {"warmup_epochs", 1},
                     {"batch_size", 64},
                     {"layers", 2},
                     {"layer_size", 8},
                     {"scales", {1.0, 10.0}},
                     {"ff_size", 16},
                     {"dropout", 0.1},
                     {"mu", 2},
                     {"horizon", 8},
                     {"seed", 5}}},
                   {"data", {{"csv", csv}}}};
    const fs::path path = dir / "config.json";
    std::ofstream out(path);
    out << cfg.dump(2);
    return path.string();
}

const std::string kTinySynth =
    "--train-tasks 40 --test-tasks 10 --epochs 3 --layers 2 --layer-size 8 --ff-size 16";

json load_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    json j;
    in >> j;
    return j;
}

} // namespace

TEST_CASE("help lists every subcommand") {
    const RunResult res = run_cli("--help");
    REQUIRE(res.exit_code == 0);
    for (const char* sub : {"synth", "train", "eval", "sweep", "ablate", "forecast", "profile"})
        REQUIRE(res.output.find(sub) != std::string::npos);
}

TEST_CASE("missing input file exits 2 and names the path") {
    const auto dir = fresh_dir("deeptime_cli_missing");
    const RunResult res =
        run_cli("train --csv /nonexistent/input.csv --out " + dir.string());
    REQUIRE(res.exit_code == 2);
    REQUIRE(res.output.find("/nonexistent/input.csv") != std::string::npos);
    REQUIRE(res.output.find("\"exit\":2") != std::string::npos);
}

TEST_CASE("unknown config keys exit 1") {
    const auto dir = fresh_dir("deeptime_cli_badcfg");
    std::ofstream(dir / "bad.json") << "{\"no_such_section\": 1}";
    const RunResult res = run_cli("synth --config " + (dir / "bad.json").string() + " --out " +
                                  dir.string());
    REQUIRE(res.exit_code == 1);
    REQUIRE(res.output.find("no_such_section") != std::string::npos);
}

TEST_CASE("synth writes a reproducible report with one metric per test task") {
    const auto dir1 = fresh_dir("deeptime_cli_synth1");
    const auto dir2 = fresh_dir("deeptime_cli_synth2");
    REQUIRE(run_cli("synth --family linear --seed 7 " + kTinySynth + " --out " + dir1.string())
                .exit_code == 0);
    REQUIRE(run_cli("synth --family linear --seed 7 " + kTinySynth + " --out " + dir2.string())
                .exit_code == 0);

    json a = load_json(dir1 / "report.json");
    json b = load_json(dir2 / "report.json");
    REQUIRE(a["per_task"].size() == 10);
    REQUIRE(a["schema_version"] == 1);
    a.erase("timing");
    b.erase("timing");
    REQUIRE(a.dump() == b.dump());

    // A different seed changes the numbers.
    const auto dir3 = fresh_dir("deeptime_cli_synth3");
    REQUIRE(run_cli("synth --family linear --seed 8 " + kTinySynth + " --out " + dir3.string())
                .exit_code == 0);
    json c = load_json(dir3 / "report.json");
    REQUIRE(a["metrics"]["mse"] != c["metrics"]["mse"]);
}

TEST_CASE("train then eval reproduces the reported validation metric") {
    const auto dir = fresh_dir("deeptime_cli_roundtrip");
    const std::string csv = write_sine_csv(dir);
    const std::string cfg = small_train_config(dir, csv);

    const RunResult tr = run_cli("train --config " + cfg + " --out " + dir.string());
    INFO(tr.output);
    REQUIRE(tr.exit_code == 0);
    const json report = load_json(dir / "train_report.json");
    const double best_val = report["train_report"]["best_val"].get<double>();

    const RunResult ev = run_cli("eval --checkpoint " + (dir / "checkpoint.json").string() +
                                 " --config " + cfg + " --split val --out " + dir.string());
    INFO(ev.output);
    REQUIRE(ev.exit_code == 0);
    const json metrics = load_json(dir / "metrics.json");
    const double eval_mse = metrics["metrics"]["mse"].get<double>();
    REQUIRE(std::abs(eval_mse - best_val) <= 1e-12 * (1.0 + std::abs(best_val)));
}

TEST_CASE("forecast writes the final-window CSV") {
    const auto dir = fresh_dir("deeptime_cli_forecast");
    const std::string csv = write_sine_csv(dir);
    const std::string cfg = small_train_config(dir, csv);
    REQUIRE(run_cli("train --config " + cfg + " --out " + dir.string()).exit_code == 0);

    const RunResult fc = run_cli("forecast --checkpoint " + (dir / "checkpoint.json").string() +
                                 " --csv " + csv + " --out " + dir.string());
    INFO(fc.output);
    REQUIRE(fc.exit_code == 0);

    std::ifstream in(dir / "forecast.csv");
    std::string header;
    std::getline(in, header);
    REQUIRE(header == "window_start,step,channel,y_true,y_pred");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++rows;
    REQUIRE(rows == 8 * 2); // horizon x channels
}

TEST_CASE("sweep selects a mu and stores its checkpoint") {
    const auto dir = fresh_dir("deeptime_cli_sweep");
    const std::string csv = write_sine_csv(dir);
    json cfg = load_json(small_train_config(dir, csv));
    cfg["sweep"] = {{"mus", {1, 2}}};
    std::ofstream(dir / "config.json") << cfg.dump(2);

    const RunResult res =
        run_cli("sweep --config " + (dir / "config.json").string() + " --out " + dir.string());
    INFO(res.output);
    REQUIRE(res.exit_code == 0);
    const json sweep = load_json(dir / "sweep.json");
    REQUIRE(sweep["table"].size() == 2);
    const std::size_t chosen = sweep["chosen_mu"].get<std::size_t>();
    REQUIRE((chosen == 1 || chosen == 2));
    REQUIRE(fs::exists(dir / "checkpoint.json"));
}

TEST_CASE("ablate runs the no_rr variant on a synthetic family") {
    const auto dir = fresh_dir("deeptime_cli_ablate");
    const json cfg{{"train",
                    {{"epochs", 2},
                     {"warmup_epochs", 1},
                     {"batch_size", 32},
                     {"layers", 2},
                     {"layer_size", 8},
                     {"scales", {1.0, 10.0}},
                     {"ff_size", 16},
                     {"dropout", 0.0},
                     {"seed", 3}}},
                   {"synth",
                    {{"family", "linear"},
                     {"train_tasks", 30},
                     {"test_tasks", 5},
                     {"points", 40},
                     {"lookback", 20},
                     {"horizon", 20}}}};
    std::ofstream(dir / "config.json") << cfg.dump(2);

    const RunResult res = run_cli("ablate --variant no_rr --config " +
                                  (dir / "config.json").string() + " --out " + dir.string());
    INFO(res.output);
    REQUIRE(res.exit_code == 0);
    const json rep = load_json(dir / "ablation.json");
    REQUIRE(rep["variant"] == "no_rr");
    REQUIRE(rep["metrics"]["mse"].get<double>() > 0.0);
}

TEST_CASE("profile emits one entry per grid point") {
    const auto dir = fresh_dir("deeptime_cli_profile");
    const json cfg{{"train",
                    {{"layers", 1},
                     {"layer_size", 8},
                     {"scales", {1.0}},
                     {"ff_size", 8},
                     {"dropout", 0.0},
                     {"seed", 1}}},
                   {"profile",
                    {{"lookback_grid", {8, 16}},
                     {"horizon_grid", json::array()},
                     {"fixed_horizon", 8},
                     {"batch", 4},
                     {"reps", 3},
                     {"channels", 2}}}};
    std::ofstream(dir / "config.json") << cfg.dump(2);

    const RunResult res = run_cli("profile --config " + (dir / "config.json").string() +
                                  " --out " + dir.string());
    INFO(res.output);
    REQUIRE(res.exit_code == 0);
    const json rep = load_json(dir / "profile.json");
    REQUIRE(rep["entries"].size() == 2);
    for (const auto& e : rep["entries"])
        REQUIRE(e["seconds_per_iter"].get<double>() > 0.0);
    REQUIRE(fs::exists(dir / "profile.csv"));
}
