/*
 * Copyright 2026 The Traitsense Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "traitsense/io.hpp"
#include "traitsense/pipeline.hpp"
#include "traitsense/synth.hpp"

using namespace traitsense;
using namespace traitsense::pipeline;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

/// Small planted cohort on disk plus a pipeline config pointing at it.
PipelineConfig small_config(const fs::path& dir, std::uint64_t seed, const std::string& rfe_mode = "off") {
    auto cfg = synth::SynthConfig::preset("low", 4242);
    cfg.n_users = 24;
    cfg.n_days = 21;
    auto cohort = synth::gen_cohort(cfg, targets::ScoringKey::builtin(), par::Exec::Serial);
    synth::write_cohort((dir / "in").string(), cohort);

    PipelineConfig config;
    config.events_path = (dir / "in/events.csv").string();
    config.metrics_path = (dir / "in/daily_metrics.csv").string();
    config.bfi_path = (dir / "in/bfi.csv").string();
    config.key_file = "data/bfi_key.csv";
    config.reference_stats_path = "data/bbc_reference.csv";
    config.seed = seed;
    config.folds = 4;
    config.rfe.mode = rfe_mode;
    config.rfe.step = 0.5;
    config.bo.budget = 0;
    config.rf_defaults.n_trees = 30;
    config.rf_defaults.max_depth = 8;
    config.gbt_defaults.n_rounds = 20;
    config.output_dir = (dir / "out").string();
    return config;
}

}  // namespace

TEST_CASE("config requires a seed and a known rfe mode") {
    nlohmann::json j = {{"inputs", {{"events", "a"}, {"metrics", "b"}, {"bfi", "c"}}}};
    CHECK_THROWS_WITH_AS(PipelineConfig::from_json(j), doctest::Contains("seed"), std::runtime_error);
    j["seed"] = 1;
    CHECK_NOTHROW(PipelineConfig::from_json(j));
    j["rfe"] = {{"mode", "sometimes"}};
    CHECK_THROWS(PipelineConfig::from_json(j));
}

TEST_CASE("config json round trips through from_json") {
    TempDir dir("ts_pipe_cfg");
    auto config = small_config(dir.path, 5);
    auto restored = PipelineConfig::from_json(config.to_json());
    CHECK(restored.to_json() == config.to_json());
}

TEST_CASE("full pipeline produces the expected artifact set") {
    TempDir dir("ts_pipe_full");
    auto config = small_config(dir.path, 7);
    auto manifest = run_pipeline(config);

    int cv_reports = 0, kde_curves = 0;
    for (const auto& a : manifest.artifacts) {
        if (a.path.rfind("reports/cv_", 0) == 0) ++cv_reports;
        if (a.path.rfind("curves/kde_", 0) == 0) ++kde_curves;
    }
    CHECK(cv_reports == 20);  // 5 traits x 2 schemes x 2 models
    CHECK(kde_curves == 5);
    for (const char* expected :
         {"features.csv", "features_meta.json", "scores.csv", "labels_binary.csv", "labels_ternary.csv",
          "validation_report.json", "tables/results.csv", "tables/results.md", "tables/importance.json",
          "tables/population.csv", "reports/cv_EXT_binary_rf.json"}) {
        bool found = false;
        for (const auto& a : manifest.artifacts) found |= a.path == expected;
        CHECK_MESSAGE(found, expected);
    }
    CHECK(fs::exists(fs::path(config.output_dir) / "manifest.json"));
    CHECK_FALSE(fs::exists(fs::path(config.output_dir) / ".lock"));

    // Manifest written to disk parses back to the same artifact list.
    auto loaded = RunManifest::from_json(
        nlohmann::json::parse(io::read_file((fs::path(config.output_dir) / "manifest.json").string())));
    CHECK(loaded.config_hash == manifest.config_hash);
    CHECK(loaded.artifacts.size() == manifest.artifacts.size());
}

TEST_CASE("identical config and seed reproduce identical hashes") {
    TempDir dir("ts_pipe_det");
    auto config = small_config(dir.path, 11);
    auto m1 = run_pipeline(config);
    fs::remove_all(config.output_dir);
    auto m2 = run_pipeline(config);
    REQUIRE(m1.artifacts.size() == m2.artifacts.size());
    for (std::size_t i = 0; i < m1.artifacts.size(); ++i) {
        CHECK(m1.artifacts[i].path == m2.artifacts[i].path);
        CHECK(m1.artifacts[i].hash == m2.artifacts[i].hash);
    }
    CHECK(m1.config_hash == m2.config_hash);
}

TEST_CASE("missing input aborts with the stage name") {
    TempDir dir("ts_pipe_missing");
    auto config = small_config(dir.path, 3);
    config.bfi_path = (dir.path / "in/nonexistent.csv").string();
    CHECK_THROWS_WITH_AS(run_pipeline(config), doctest::Contains("stage ingest: file not found"), std::runtime_error);
    // The lock is released on failure so a corrected run can proceed.
    CHECK_FALSE(fs::exists(fs::path(config.output_dir) / ".lock"));
}

TEST_CASE("evaluate runs from cached features and labels") {
    TempDir dir("ts_pipe_cached");
    auto config = small_config(dir.path, 13);
    StageTracker tracker(config.output_dir);
    fs::create_directories(config.output_dir);
    run_ingest(config, tracker);
    run_featurize(config, tracker);
    run_targets(config, tracker);

    // No select/tune artifacts: evaluate falls back to all features and defaults.
    run_evaluate(config, tracker);
    CHECK(fs::exists(fs::path(config.output_dir) / "reports/cv_OPE_ternary_gbt.json"));
    run_report(config, tracker);
    CHECK(fs::exists(fs::path(config.output_dir) / "tables/results.csv"));

    auto report = modelsel::CVReport::from_json(nlohmann::json::parse(
        io::read_file((fs::path(config.output_dir) / "reports/cv_EXT_binary_rf.json").string())));
    CHECK(report.fold_f1.size() == 4);
    CHECK(report.mean_f1 > 0.5);  // planted low-noise cohort
}

TEST_CASE("output directory lock blocks concurrent runs") {
    TempDir dir("ts_pipe_lock");
    auto config = small_config(dir.path, 17);
    fs::create_directories(config.output_dir);
    std::ofstream((fs::path(config.output_dir) / ".lock").string()) << "held";
    CHECK_THROWS_WITH_AS(run_pipeline(config), doctest::Contains("locked"), std::runtime_error);
    fs::remove(fs::path(config.output_dir) / ".lock");
}

TEST_CASE("nested rfe and fold-local thresholds run end to end") {
    TempDir dir("ts_pipe_nested");
    auto config = small_config(dir.path, 19, "nested");
    config.schemes = {targets::LabelScheme::Binary};
    config.models = {ensemble::ModelKind::RF};
    config.fold_local_thresholds = true;
    config.rf_defaults.n_trees = 15;
    auto manifest = run_pipeline(config);
    int cv_reports = 0;
    for (const auto& a : manifest.artifacts) cv_reports += a.path.rfind("reports/cv_", 0) == 0;
    CHECK(cv_reports == 5);
    auto report = modelsel::CVReport::from_json(nlohmann::json::parse(
        io::read_file((fs::path(config.output_dir) / "reports/cv_CON_binary_rf.json").string())));
    CHECK(report.fold_f1.size() == 4);
    for (double f : report.fold_f1) {
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
    }
}

TEST_CASE("cli rejects unknown subcommands with a usage error") {
    const char* bin = std::getenv("TRAITSENSE_BIN");
    if (!bin) return;  // available only under ctest
    std::string cmd = std::string(bin) + " definitely-not-a-subcommand >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    CHECK(status != 0);
    CHECK(std::system((std::string(bin) + " --help >/dev/null 2>&1").c_str()) == 0);
}

TEST_CASE("tune stage writes tuned params that evaluate picks up") {
    TempDir dir("ts_pipe_tune");
    auto config = small_config(dir.path, 23);
    config.schemes = {targets::LabelScheme::Binary};
    config.models = {ensemble::ModelKind::RF};
    config.bo.budget = 6;
    config.bo.init_points = 5;
    config.rf_defaults.n_trees = 10;

    StageTracker tracker(config.output_dir);
    fs::create_directories(config.output_dir);
    run_ingest(config, tracker);
    run_featurize(config, tracker);
    run_targets(config, tracker);
    run_select(config, tracker);
    run_tune(config, tracker, "EXT_binary_rf");
    CHECK(fs::exists(fs::path(config.output_dir) / "tune/tuned_EXT_binary_rf.json"));
    CHECK_FALSE(fs::exists(fs::path(config.output_dir) / "tune/tuned_AGR_binary_rf.json"));

    auto tuned = nlohmann::json::parse(
        io::read_file((fs::path(config.output_dir) / "tune/tuned_EXT_binary_rf.json").string()));
    CHECK(tuned["params"].contains("n_trees"));
    CHECK(tuned["params"]["n_trees"].get<int>() >= 50);
    CHECK(tuned["params"]["n_trees"].get<int>() <= 500);

    run_evaluate(config, tracker);
    auto report = modelsel::CVReport::from_json(nlohmann::json::parse(
        io::read_file((fs::path(config.output_dir) / "reports/cv_EXT_binary_rf.json").string())));
    CHECK(report.tuned_params["n_trees"] == tuned["params"]["n_trees"]);
}
