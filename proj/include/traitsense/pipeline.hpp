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
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "traitsense/bayesopt.hpp"
#include "traitsense/ensemble.hpp"
#include "traitsense/featurize.hpp"
#include "traitsense/modelsel.hpp"
#include "traitsense/targets.hpp"

namespace traitsense::pipeline {

inline constexpr const char* kToolVersion = "1.0.0";

struct RfeConfig {
    std::string mode = "nested";  // nested | paper | off
    double step = 0.1;
};

struct BoConfig {
    int budget = 40;  // 0 disables tuning
    int init_points = 10;
};

struct PipelineConfig {
    std::string events_path;
    std::string metrics_path;
    std::string bfi_path;
    std::string events_format = "csv";  // csv | jsonl
    std::string key_file;               // empty -> built-in balanced key
    std::string reference_stats_path;   // empty -> skip population comparison
    std::string tz = "Europe/London";
    int min_days = 7;
    featurize::NightWindow night;
    std::vector<targets::LabelScheme> schemes = {targets::LabelScheme::Binary, targets::LabelScheme::Ternary};
    std::vector<ensemble::ModelKind> models = {ensemble::ModelKind::RF, ensemble::ModelKind::GBT};
    int folds = 5;
    std::uint64_t seed = 0;  // mandatory; from_json rejects configs without one
    modelsel::F1Averaging f1 = modelsel::F1Averaging::Macro;
    bool fold_local_thresholds = false;
    RfeConfig rfe;
    BoConfig bo;
    ensemble::RFParams rf_defaults;
    ensemble::GBTParams gbt_defaults;
    std::string output_dir = "out";
    int threads = 0;  // 0 keeps the runtime default; 1 forces the serial path

    static PipelineConfig from_json(const nlohmann::json& j);
    /// Canonical form; hashed into the run manifest.
    nlohmann::json to_json() const;
};

/// One (trait, scheme, model) unit of the modeling stages.
struct Cell {
    targets::Trait trait = targets::Trait::EXT;
    targets::LabelScheme scheme = targets::LabelScheme::Binary;
    ensemble::ModelKind model = ensemble::ModelKind::RF;
    std::size_t index = 0;

    std::string slug() const;
};

std::vector<Cell> enumerate_cells(const PipelineConfig& config);

struct RunManifest {
    std::string config_hash;
    struct Artifact {
        std::string path;  // relative to output_dir
        std::string hash;  // fnv1a-64 of contents
    };
    std::vector<Artifact> artifacts;
    std::map<std::string, double> stage_seconds;
    std::string version = kToolVersion;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

/// Files written by one stage, for the manifest and for cleanup on failure.
class StageTracker {
public:
    explicit StageTracker(std::string output_dir) : output_dir_(std::move(output_dir)) {}

    const std::string& output_dir() const { return output_dir_; }
    /// Absolute path for a relative artifact name, recording it.
    std::string artifact(const std::string& relative);
    void begin_stage(const std::string& name);
    void end_stage();
    /// Deletes everything written by the current (failed) stage.
    void discard_current_stage();

    const std::vector<std::string>& written() const { return written_; }
    const std::map<std::string, double>& stage_seconds() const { return seconds_; }

private:
    std::string output_dir_;
    std::vector<std::string> written_;         // relative paths, all stages
    std::vector<std::string> current_stage_;   // relative paths, current stage
    std::string stage_name_;
    double stage_start_ = 0.0;
    std::map<std::string, double> seconds_;
};

// Individual stages; each reads the previous stage's artifacts from the
// output directory.
void run_ingest(const PipelineConfig& config, StageTracker& tracker);
void run_featurize(const PipelineConfig& config, StageTracker& tracker);
void run_targets(const PipelineConfig& config, StageTracker& tracker);
void run_select(const PipelineConfig& config, StageTracker& tracker);
void run_tune(const PipelineConfig& config, StageTracker& tracker, const std::string& only_cell = "");
void run_evaluate(const PipelineConfig& config, StageTracker& tracker);
void run_report(const PipelineConfig& config, StageTracker& tracker, const std::string& format = "");

/// All stages in order, guarded by an output-directory lock file. Stage
/// failures abort with "stage <name>: <cause>" after removing the failed
/// stage's partial artifacts.
RunManifest run_pipeline(const PipelineConfig& config);

/// Hyperparameter boxes searched by the tune stage.
bayesopt::SearchSpace rf_search_space();
bayesopt::SearchSpace gbt_search_space();
ensemble::RFParams rf_params_from_config(const ensemble::RFParams& defaults, const nlohmann::json& tuned);
ensemble::GBTParams gbt_params_from_config(const ensemble::GBTParams& defaults, const nlohmann::json& tuned);

}  // namespace traitsense::pipeline
