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
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "traitsense/pipeline.hpp"
#include "traitsense/synth.hpp"

namespace {

using namespace traitsense;

struct CommonOpts {
    std::string config_path;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::string tz;
    std::optional<int> min_days;
    std::optional<int> folds;
    std::string f1;
    int threads = 0;
    bool paper_mode = false;
    bool fold_local_thresholds = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config_path, "pipeline config JSON")->required();
    cmd->add_option("-o,--output-dir", opts.output_dir, "override output directory");
    cmd->add_option("--seed", opts.seed, "override master seed");
    cmd->add_option("--tz", opts.tz, "override cohort time zone");
    cmd->add_option("--min-days", opts.min_days, "override user-inclusion day threshold");
    cmd->add_option("--folds", opts.folds, "override cross-validation fold count");
    cmd->add_option("--f1", opts.f1, "F1 averaging: macro|positive|weighted");
    cmd->add_option("--threads", opts.threads, "worker threads (1 = serial reference path)");
    cmd->add_flag("--paper-mode", opts.paper_mode, "non-nested feature selection (full-data rfe ranking)");
    cmd->add_flag("--fold-local-thresholds", opts.fold_local_thresholds,
                  "recompute label thresholds inside each training fold");
}

pipeline::PipelineConfig load_config(const CommonOpts& opts) {
    std::ifstream f(opts.config_path, std::ios::binary);
    if (!f) throw std::runtime_error("config file not found: " + opts.config_path);
    auto config = pipeline::PipelineConfig::from_json(nlohmann::json::parse(f));
    if (!opts.output_dir.empty()) config.output_dir = opts.output_dir;
    if (opts.seed) config.seed = *opts.seed;
    if (!opts.tz.empty()) config.tz = opts.tz;
    if (opts.min_days) config.min_days = *opts.min_days;
    if (opts.folds) config.folds = *opts.folds;
    if (!opts.f1.empty()) config.f1 = modelsel::parse_f1_averaging(opts.f1);
    if (opts.threads != 0) config.threads = opts.threads;
    if (opts.paper_mode) config.rfe.mode = "paper";
    if (opts.fold_local_thresholds) config.fold_local_thresholds = true;
    if (config.threads != 0) par::set_threads(config.threads);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"smartphone-sensing personality prediction pipeline"};
    app.require_subcommand(1);

    CommonOpts run_opts, ingest_opts, feat_opts, targets_opts, select_opts, tune_opts, eval_opts, report_opts;
    std::string tune_model, tune_trait, tune_scheme, report_format;

    auto* run_cmd = app.add_subcommand("run", "execute the full pipeline");
    add_common(run_cmd, run_opts);
    auto* ingest_cmd = app.add_subcommand("ingest", "parse and validate the input files");
    add_common(ingest_cmd, ingest_opts);
    auto* feat_cmd = app.add_subcommand("featurize", "build the per-user feature matrix");
    add_common(feat_cmd, feat_opts);
    auto* targets_cmd = app.add_subcommand("targets", "score the questionnaire and derive class labels");
    add_common(targets_cmd, targets_opts);
    auto* select_cmd = app.add_subcommand("select", "recursive feature elimination per cell");
    add_common(select_cmd, select_opts);
    auto* tune_cmd = app.add_subcommand("tune", "Bayesian hyperparameter search per cell");
    add_common(tune_cmd, tune_opts);
    tune_cmd->add_option("--model", tune_model, "restrict to one model kind (rf|gbt)");
    tune_cmd->add_option("--trait", tune_trait, "restrict to one trait (EXT|AGR|CON|NEU|OPE)");
    tune_cmd->add_option("--scheme", tune_scheme, "restrict to one scheme (binary|ternary)");
    auto* eval_cmd = app.add_subcommand("evaluate", "cross-validated F1 per cell");
    add_common(eval_cmd, eval_opts);
    auto* report_cmd = app.add_subcommand("report", "tables, density curves and population comparison");
    add_common(report_cmd, report_opts);
    report_cmd->add_option("--format", report_format, "emit a single format: csv|json|md");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cohort with planted effects");
    std::string synth_preset = "low", synth_out = "synth_out", synth_config_path;
    int synth_users = 0, synth_days = 0;
    std::uint64_t synth_seed = 1;
    synth_cmd->add_option("--preset", synth_preset, "effect suite: low|medium|null");
    synth_cmd->add_option("--config", synth_config_path, "generator config JSON (overrides preset)");
    synth_cmd->add_option("--users", synth_users, "number of users");
    synth_cmd->add_option("--days", synth_days, "number of days");
    synth_cmd->add_option("--seed", synth_seed, "generator seed");
    synth_cmd->add_option("-o,--out", synth_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            auto manifest = pipeline::run_pipeline(load_config(run_opts));
            std::cout << "wrote " << manifest.artifacts.size() << " artifacts (config " << manifest.config_hash
                      << ")\n";
            return 0;
        }
        if (*synth_cmd) {
            synth::SynthConfig cfg;
            if (!synth_config_path.empty()) {
                std::ifstream f(synth_config_path, std::ios::binary);
                if (!f) throw std::runtime_error("config file not found: " + synth_config_path);
                cfg = synth::SynthConfig::from_json(nlohmann::json::parse(f));
            } else {
                cfg = synth::SynthConfig::preset(synth_preset, synth_seed);
            }
            if (synth_users > 0) cfg.n_users = synth_users;
            if (synth_days > 0) cfg.n_days = synth_days;
            if (synth_cmd->count("--seed")) cfg.seed = synth_seed;
            auto cohort = synth::gen_cohort(cfg, targets::ScoringKey::builtin());
            synth::write_cohort(synth_out, cohort);
            std::cout << "wrote synthetic cohort (" << cfg.n_users << " users, " << cfg.n_days << " days) to "
                      << synth_out << "\n";
            return 0;
        }

        auto run_stage = [&](const CommonOpts& opts, auto&& stage, const char* name) {
            auto config = load_config(opts);
            pipeline::StageTracker tracker(config.output_dir);
            try {
                stage(config, tracker);
            } catch (const std::exception& e) {
                tracker.discard_current_stage();
                throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
            }
        };

        if (*ingest_cmd) run_stage(ingest_opts, [](auto& c, auto& t) { pipeline::run_ingest(c, t); }, "ingest");
        if (*feat_cmd) run_stage(feat_opts, [](auto& c, auto& t) { pipeline::run_featurize(c, t); }, "featurize");
        if (*targets_cmd) run_stage(targets_opts, [](auto& c, auto& t) { pipeline::run_targets(c, t); }, "targets");
        if (*select_cmd) run_stage(select_opts, [](auto& c, auto& t) { pipeline::run_select(c, t); }, "select");
        if (*tune_cmd) {
            std::string only;
            if (!tune_trait.empty() || !tune_scheme.empty() || !tune_model.empty()) {
                if (tune_trait.empty() || tune_scheme.empty() || tune_model.empty())
                    throw std::runtime_error("tune: --trait, --scheme and --model must be given together");
                only = tune_trait + "_" + tune_scheme + "_" + tune_model;
            }
            run_stage(tune_opts, [&](auto& c, auto& t) { pipeline::run_tune(c, t, only); }, "tune");
        }
        if (*eval_cmd) run_stage(eval_opts, [](auto& c, auto& t) { pipeline::run_evaluate(c, t); }, "evaluate");
        if (*report_cmd)
            run_stage(report_opts, [&](auto& c, auto& t) { pipeline::run_report(c, t, report_format); }, "report");
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
