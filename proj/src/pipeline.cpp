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
#include "traitsense/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <span>

#include "traitsense/csv.hpp"
#include "traitsense/io.hpp"
#include "traitsense/report.hpp"
#include "traitsense/rng.hpp"

namespace traitsense::pipeline {
namespace fs = std::filesystem;
namespace {

// Stage ordinals for the seed fan-out: stage_seed = derive(master, ordinal),
// cell_seed = derive(stage_seed, cell index).
enum StageOrdinal : std::uint64_t {
    kSeedIngest = 1,
    kSeedFeaturize = 2,
    kSeedTargets = 3,
    kSeedSelect = 4,
    kSeedTune = 5,
    kSeedEvaluate = 6,
};

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

void log_stage(const std::string& stage, const std::string& msg) {
    std::cerr << "[" << stage << "] " << msg << "\n";
}

ingest::ValidateOptions validate_options(const PipelineConfig& config) {
    ingest::ValidateOptions opts;
    opts.min_days = config.min_days;
    opts.tz = TimeZone::parse(config.tz);
    return opts;
}

std::pair<ingest::CohortDataset, ingest::ValidationReport> load_cohort(const PipelineConfig& config,
                                                                       const std::string& dir) {
    std::ifstream ev(dir + "/cohort/events.csv", std::ios::binary);
    if (!ev) throw std::runtime_error("missing cohort artifacts; run the ingest stage first");
    std::ifstream mt(dir + "/cohort/daily_metrics.csv", std::ios::binary);
    std::ifstream bf(dir + "/cohort/bfi.csv", std::ios::binary);
    auto events = ingest::parse_events(ev);
    auto metrics = ingest::parse_daily_metrics(mt);
    auto responses = ingest::parse_bfi(bf);
    return ingest::validate_cohort(std::move(events), std::move(metrics), std::move(responses),
                                   validate_options(config));
}

targets::ScoringKey load_key(const PipelineConfig& config) {
    if (config.key_file.empty()) return targets::ScoringKey::builtin();
    std::ifstream f(config.key_file, std::ios::binary);
    if (!f) throw std::runtime_error("file not found: " + config.key_file);
    return targets::ScoringKey::load(f);
}

struct Features {
    std::vector<std::string> users;
    std::vector<std::string> columns;
    Matrix X;
};

Features load_features(const std::string& dir) {
    std::ifstream f(dir + "/features.csv", std::ios::binary);
    if (!f) throw std::runtime_error("missing features.csv; run the featurize stage first");
    csv::Reader reader(f);
    auto header = reader.next();
    if (!header || header->fields.empty() || header->fields[0] != "user_id")
        throw std::runtime_error("bad features.csv header");
    Features out;
    out.columns.assign(header->fields.begin() + 1, header->fields.end());
    std::vector<double> data;
    while (auto row = reader.next()) {
        if (row->fields.size() != header->fields.size())
            throw std::runtime_error("features.csv: ragged row at line " + std::to_string(row->line));
        out.users.push_back(row->fields[0]);
        for (std::size_t j = 1; j < row->fields.size(); ++j) data.push_back(std::stod(row->fields[j]));
    }
    out.X = Matrix(out.users.size(), out.columns.size());
    out.X.data = std::move(data);
    return out;
}

/// user_id,EXT,AGR,CON,NEU,OPE rows, any numeric payload.
template <typename T>
std::pair<std::vector<std::string>, std::vector<std::array<T, targets::kTraits>>> load_trait_table(
    const std::string& path, const char* what) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(std::string("missing ") + what + "; run the targets stage first");
    csv::Reader reader(f);
    auto header = reader.next();
    std::vector<std::string> want = {"user_id"};
    for (targets::Trait t : targets::kTraitOrder) want.push_back(targets::trait_name(t));
    if (!header || header->fields != want) throw std::runtime_error(std::string("bad header in ") + what);
    std::vector<std::string> users;
    std::vector<std::array<T, targets::kTraits>> values;
    while (auto row = reader.next()) {
        users.push_back(row->fields[0]);
        std::array<T, targets::kTraits> v{};
        for (int t = 0; t < targets::kTraits; ++t)
            v[static_cast<std::size_t>(t)] = static_cast<T>(std::stod(row->fields[static_cast<std::size_t>(t) + 1]));
        values.push_back(v);
    }
    return {std::move(users), std::move(values)};
}

std::string labels_path(const std::string& dir, targets::LabelScheme scheme) {
    return dir + "/labels_" + targets::scheme_name(scheme) + ".csv";
}

void check_same_users(const std::vector<std::string>& a, const std::vector<std::string>& b, const char* what) {
    if (a != b) throw std::runtime_error(std::string("user rows of ") + what + " do not match features.csv");
}

std::vector<std::string> load_selected(const std::string& dir, const Cell& cell,
                                       const std::vector<std::string>& all_columns) {
    std::string path = dir + "/select/selected_" + cell.slug() + ".json";
    std::ifstream f(path, std::ios::binary);
    if (!f) return all_columns;  // select stage not run or mode off
    nlohmann::json j = nlohmann::json::parse(f);
    return j.at("features").get<std::vector<std::string>>();
}

nlohmann::json load_tuned(const std::string& dir, const Cell& cell) {
    std::ifstream f(dir + "/tune/tuned_" + cell.slug() + ".json", std::ios::binary);
    if (!f) return nlohmann::json();
    return nlohmann::json::parse(f).at("params");
}

std::vector<std::size_t> column_indices(const std::vector<std::string>& all, const std::vector<std::string>& subset) {
    std::vector<std::size_t> idx;
    for (const auto& name : subset) {
        auto it = std::find(all.begin(), all.end(), name);
        if (it == all.end()) throw std::runtime_error("selected feature '" + name + "' not in feature matrix");
        idx.push_back(static_cast<std::size_t>(it - all.begin()));
    }
    return idx;
}

modelsel::ModelSpec spec_for(const PipelineConfig& config, const Cell& cell, const nlohmann::json& tuned) {
    modelsel::ModelSpec spec;
    spec.kind = cell.model;
    spec.rf = rf_params_from_config(config.rf_defaults, cell.model == ensemble::ModelKind::RF ? tuned : nlohmann::json());
    spec.gbt =
        gbt_params_from_config(config.gbt_defaults, cell.model == ensemble::ModelKind::GBT ? tuned : nlohmann::json());
    return spec;
}

/// Owns the output-directory lock file for the duration of a pipeline run.
class RunLock {
public:
    explicit RunLock(const std::string& dir) : path_(dir + "/.lock") {
        int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0) throw std::runtime_error("output directory is locked by another run: " + path_);
        ::close(fd);
    }
    ~RunLock() { ::unlink(path_.c_str()); }
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::string path_;
};

}  // namespace

std::string Cell::slug() const {
    return std::string(targets::trait_name(trait)) + "_" + targets::scheme_name(scheme) + "_" +
           ensemble::model_kind_name(model);
}

std::vector<Cell> enumerate_cells(const PipelineConfig& config) {
    std::vector<Cell> cells;
    for (targets::Trait t : targets::kTraitOrder)
        for (auto scheme : config.schemes)
            for (auto model : config.models) cells.push_back({t, scheme, model, cells.size()});
    return cells;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    PipelineConfig c;
    if (!j.contains("seed")) throw std::runtime_error("config: 'seed' is mandatory (runs must be reproducible)");
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& inputs = j.value("inputs", nlohmann::json::object());
    c.events_path = inputs.value("events", "");
    c.metrics_path = inputs.value("metrics", "");
    c.bfi_path = inputs.value("bfi", "");
    c.events_format = inputs.value("events_format", c.events_format);
    c.key_file = j.value("key_file", c.key_file);
    c.reference_stats_path = j.value("reference_stats", c.reference_stats_path);
    c.tz = j.value("tz", c.tz);
    c.min_days = j.value("min_days", c.min_days);
    if (j.contains("night_window")) {
        c.night.start_hour = j["night_window"].value("start_hour", c.night.start_hour);
        c.night.end_hour = j["night_window"].value("end_hour", c.night.end_hour);
    }
    if (j.contains("schemes")) {
        c.schemes.clear();
        for (const auto& s : j["schemes"]) c.schemes.push_back(targets::parse_scheme(s.get<std::string>()));
    }
    if (j.contains("models")) {
        c.models.clear();
        for (const auto& m : j["models"]) c.models.push_back(ensemble::parse_model_kind(m.get<std::string>()));
    }
    c.folds = j.value("folds", c.folds);
    if (j.contains("f1")) c.f1 = modelsel::parse_f1_averaging(j["f1"].get<std::string>());
    c.fold_local_thresholds = j.value("fold_local_thresholds", c.fold_local_thresholds);
    if (j.contains("rfe")) {
        c.rfe.mode = j["rfe"].value("mode", c.rfe.mode);
        c.rfe.step = j["rfe"].value("step", c.rfe.step);
    }
    if (c.rfe.mode != "nested" && c.rfe.mode != "paper" && c.rfe.mode != "off")
        throw std::runtime_error("config: rfe.mode must be nested|paper|off");
    if (j.contains("bo")) {
        c.bo.budget = j["bo"].value("budget", c.bo.budget);
        c.bo.init_points = j["bo"].value("init_points", c.bo.init_points);
    }
    if (j.contains("rf_defaults")) c.rf_defaults = ensemble::RFParams::from_json(j["rf_defaults"]);
    if (j.contains("gbt_defaults")) c.gbt_defaults = ensemble::GBTParams::from_json(j["gbt_defaults"]);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.threads = j.value("threads", c.threads);
    return c;
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json schemes_json = nlohmann::json::array();
    for (auto s : schemes) schemes_json.push_back(targets::scheme_name(s));
    nlohmann::json models_json = nlohmann::json::array();
    for (auto m : models) models_json.push_back(ensemble::model_kind_name(m));
    return nlohmann::json{
        {"inputs",
         {{"events", events_path}, {"metrics", metrics_path}, {"bfi", bfi_path}, {"events_format", events_format}}},
        {"key_file", key_file},
        {"reference_stats", reference_stats_path},
        {"tz", tz},
        {"min_days", min_days},
        {"night_window", {{"start_hour", night.start_hour}, {"end_hour", night.end_hour}}},
        {"schemes", schemes_json},
        {"models", models_json},
        {"folds", folds},
        {"seed", seed},
        {"f1", modelsel::f1_averaging_name(f1)},
        {"fold_local_thresholds", fold_local_thresholds},
        {"rfe", {{"mode", rfe.mode}, {"step", rfe.step}}},
        {"bo", {{"budget", bo.budget}, {"init_points", bo.init_points}}},
        {"rf_defaults", rf_defaults.to_json()},
        {"gbt_defaults", gbt_defaults.to_json()},
        {"output_dir", output_dir},
        {"threads", threads}};
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json arts = nlohmann::json::array();
    for (const auto& a : artifacts) arts.push_back({{"path", a.path}, {"hash", a.hash}});
    nlohmann::json timings = nlohmann::json::object();
    for (const auto& [k, v] : stage_seconds) timings[k] = v;
    return nlohmann::json{
        {"config_hash", config_hash}, {"artifacts", arts}, {"stage_seconds", timings}, {"version", version}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& a : j.at("artifacts")) m.artifacts.push_back({a.at("path"), a.at("hash")});
    m.version = j.at("version").get<std::string>();
    if (j.contains("stage_seconds"))
        for (auto it = j["stage_seconds"].begin(); it != j["stage_seconds"].end(); ++it)
            m.stage_seconds[it.key()] = it.value().get<double>();
    return m;
}

std::string StageTracker::artifact(const std::string& relative) {
    written_.push_back(relative);
    current_stage_.push_back(relative);
    fs::path full = fs::path(output_dir_) / relative;
    fs::create_directories(full.parent_path());
    return full.string();
}

void StageTracker::begin_stage(const std::string& name) {
    stage_name_ = name;
    current_stage_.clear();
    stage_start_ = now_seconds();
}

void StageTracker::end_stage() {
    if (!stage_name_.empty()) seconds_[stage_name_] = now_seconds() - stage_start_;
    stage_name_.clear();
    current_stage_.clear();
}

void StageTracker::discard_current_stage() {
    for (const auto& rel : current_stage_) {
        std::error_code ec;
        fs::remove(fs::path(output_dir_) / rel, ec);
        written_.erase(std::remove(written_.begin(), written_.end(), rel), written_.end());
    }
    current_stage_.clear();
}

bayesopt::SearchSpace rf_search_space() {
    using bayesopt::ParamType;
    return {{{"n_trees", ParamType::Int, 50, 500},
             {"max_depth", ParamType::Int, 2, 16},
             {"min_samples_leaf", ParamType::Int, 1, 10},
             {"feature_fraction", ParamType::Real, 0.1, 1.0}}};
}

bayesopt::SearchSpace gbt_search_space() {
    using bayesopt::ParamType;
    return {{{"n_rounds", ParamType::Int, 50, 500},
             {"learning_rate", ParamType::RealLog, 0.01, 0.3},
             {"max_depth", ParamType::Int, 2, 8},
             {"lambda_l2", ParamType::RealLog, 1e-3, 10.0},
             {"min_split_gain", ParamType::Real, 0.0, 5.0},
             {"subsample", ParamType::Real, 0.5, 1.0},
             {"feature_fraction", ParamType::Real, 0.5, 1.0}}};
}

ensemble::RFParams rf_params_from_config(const ensemble::RFParams& defaults, const nlohmann::json& tuned) {
    ensemble::RFParams p = defaults;
    if (tuned.is_object()) {
        p.n_trees = tuned.value("n_trees", p.n_trees);
        p.max_depth = tuned.value("max_depth", p.max_depth);
        p.min_samples_leaf = tuned.value("min_samples_leaf", p.min_samples_leaf);
        p.feature_fraction = tuned.value("feature_fraction", p.feature_fraction);
    }
    return p;
}

ensemble::GBTParams gbt_params_from_config(const ensemble::GBTParams& defaults, const nlohmann::json& tuned) {
    ensemble::GBTParams p = defaults;
    if (tuned.is_object()) {
        p.n_rounds = tuned.value("n_rounds", p.n_rounds);
        p.learning_rate = tuned.value("learning_rate", p.learning_rate);
        p.max_depth = tuned.value("max_depth", p.max_depth);
        p.lambda_l2 = tuned.value("lambda_l2", p.lambda_l2);
        p.min_split_gain = tuned.value("min_split_gain", p.min_split_gain);
        p.subsample = tuned.value("subsample", p.subsample);
        p.feature_fraction = tuned.value("feature_fraction", p.feature_fraction);
    }
    return p;
}

void run_ingest(const PipelineConfig& config, StageTracker& tracker) {
    tracker.begin_stage("ingest");
    auto open = [](const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("file not found: " + path);
        return f;
    };
    auto ev_stream = open(config.events_path);
    auto events = ingest::parse_events(
        ev_stream, config.events_format == "jsonl" ? ingest::EventFormat::JsonLines : ingest::EventFormat::Csv);
    auto mt_stream = open(config.metrics_path);
    auto metrics = ingest::parse_daily_metrics(mt_stream);
    auto bf_stream = open(config.bfi_path);
    auto responses = ingest::parse_bfi(bf_stream);

    auto [cohort, report] =
        ingest::validate_cohort(std::move(events), std::move(metrics), std::move(responses), validate_options(config));
    log_stage("ingest", report.summary() + ", " + std::to_string(report.n_modelable) + " modelable");

    {
        std::ofstream f(tracker.artifact("cohort/events.csv"), std::ios::binary);
        ingest::write_events(f, cohort.events);
    }
    {
        std::ofstream f(tracker.artifact("cohort/daily_metrics.csv"), std::ios::binary);
        ingest::write_daily_metrics(f, cohort.metrics);
    }
    {
        std::ofstream f(tracker.artifact("cohort/bfi.csv"), std::ios::binary);
        ingest::write_bfi(f, cohort.responses);
    }
    io::write_file(tracker.artifact("validation_report.json"), report.to_json().dump(2) + "\n");
    tracker.end_stage();
}

void run_featurize(const PipelineConfig& config, StageTracker& tracker) {
    tracker.begin_stage("featurize");
    auto [cohort, report] = load_cohort(config, tracker.output_dir());
    TimeZone tz = TimeZone::parse(config.tz);
    auto vectors = featurize::featurize_cohort(cohort, tz, config.night);
    auto matrix = featurize::build_matrix(vectors);
    log_stage("featurize", std::to_string(matrix.user_ids.size()) + " users x " +
                               std::to_string(matrix.column_names.size()) + " features, " +
                               std::to_string(matrix.dropped_columns.size()) + " columns dropped");

    std::string body = "user_id";
    for (const auto& c : matrix.column_names) body += "," + c;
    body += "\n";
    for (std::size_t i = 0; i < matrix.user_ids.size(); ++i) {
        body += csv::escape(matrix.user_ids[i]);
        for (std::size_t j = 0; j < matrix.column_names.size(); ++j)
            body += "," + io::format_double(matrix.values.at(i, j));
        body += "\n";
    }
    io::write_file(tracker.artifact("features.csv"), body);

    nlohmann::json imputed = nlohmann::json::array();
    for (const auto& [r, c] : matrix.imputed) imputed.push_back({r, c});
    nlohmann::json meta{{"catalog_version", featurize::kCatalogVersion},
                        {"columns", matrix.column_names},
                        {"dropped_columns", matrix.dropped_columns},
                        {"imputed_cells", imputed},
                        {"n_users", matrix.user_ids.size()}};
    io::write_file(tracker.artifact("features_meta.json"), meta.dump(2) + "\n");
    tracker.end_stage();
}

void run_targets(const PipelineConfig& config, StageTracker& tracker) {
    tracker.begin_stage("targets");
    auto [cohort, report] = load_cohort(config, tracker.output_dir());
    auto key = load_key(config);

    std::map<std::string, const ingest::BfiResponse*> responses;
    for (const auto& r : cohort.responses) responses[r.user_id] = &r;

    std::vector<targets::TraitScores> scores;
    for (const auto& user : cohort.modelable_users) scores.push_back(targets::score_bfi(*responses.at(user), key));

    std::string body = "user_id";
    for (targets::Trait t : targets::kTraitOrder) body += std::string(",") + targets::trait_name(t);
    body += "\n";
    for (const auto& s : scores) {
        body += csv::escape(s.user_id);
        for (int v : s.score) body += "," + std::to_string(v);
        body += "\n";
    }
    io::write_file(tracker.artifact("scores.csv"), body);

    nlohmann::json thresholds_meta = nlohmann::json::object();
    for (auto scheme : config.schemes) {
        std::string labels_body = "user_id";
        for (targets::Trait t : targets::kTraitOrder) labels_body += std::string(",") + targets::trait_name(t);
        labels_body += "\n";
        std::vector<targets::LabelSet> sets;
        for (targets::Trait t : targets::kTraitOrder) {
            std::vector<std::pair<std::string, double>> trait_scores;
            for (const auto& s : scores)
                trait_scores.push_back({s.user_id, static_cast<double>(s.score[static_cast<std::size_t>(t)])});
            sets.push_back(targets::discretize(trait_scores, scheme, t));
            thresholds_meta[targets::scheme_name(scheme)][targets::trait_name(t)] = sets.back().thresholds;
        }
        for (std::size_t i = 0; i < scores.size(); ++i) {
            labels_body += csv::escape(scores[i].user_id);
            for (const auto& set : sets) labels_body += "," + std::to_string(set.labels[i]);
            labels_body += "\n";
        }
        io::write_file(tracker.artifact("labels_" + std::string(targets::scheme_name(scheme)) + ".csv"), labels_body);
    }
    io::write_file(tracker.artifact("targets_meta.json"),
                   nlohmann::json{{"thresholds", thresholds_meta}}.dump(2) + "\n");
    tracker.end_stage();
}

void run_select(const PipelineConfig& config, StageTracker& tracker) {
    tracker.begin_stage("select");
    auto cells = enumerate_cells(config);
    if (config.rfe.mode == "off") {
        log_stage("select", "rfe disabled; keeping all features");
        tracker.end_stage();
        return;
    }
    auto features = load_features(tracker.output_dir());
    std::uint64_t stage_seed = derive_seed(config.seed, kSeedSelect);

    std::vector<modelsel::RfeResult> results(cells.size());
    for (const auto& cell : cells) {
        auto [users, labels] = load_trait_table<int>(labels_path(tracker.output_dir(), cell.scheme), "labels");
        check_same_users(features.users, users, "labels");
        std::vector<int> y;
        for (const auto& row : labels) y.push_back(row[static_cast<std::size_t>(cell.trait)]);

        auto spec = spec_for(config, cell, nlohmann::json());
        results[cell.index] =
            modelsel::rfe_cv(spec, features.X, features.columns, y, targets::class_count(cell.scheme), config.folds,
                             derive_seed(stage_seed, cell.index), config.rfe.step, config.f1);
        log_stage("select", cell.slug() + ": " + std::to_string(results[cell.index].selected.size()) +
                                " features, best mean F1 " + io::format_double(results[cell.index].best_score));
    }

    for (const auto& cell : cells) {
        const auto& res = results[cell.index];
        std::string trace = "n_features,mean_f1,features\n";
        for (const auto& step : res.trace) {
            std::string joined;
            for (const auto& f : step.features) joined += (joined.empty() ? "" : ";") + f;
            trace += std::to_string(step.n_features) + "," + io::format_double(step.mean_f1) + "," +
                     csv::escape(joined) + "\n";
        }
        io::write_file(tracker.artifact("select/rfe_" + cell.slug() + ".csv"), trace);
        io::write_file(tracker.artifact("select/selected_" + cell.slug() + ".json"),
                       nlohmann::json{{"features", res.selected}, {"best_score", res.best_score}}.dump(2) + "\n");
    }
    tracker.end_stage();
}

void run_tune(const PipelineConfig& config, StageTracker& tracker, const std::string& only_cell) {
    tracker.begin_stage("tune");
    if (config.bo.budget <= 0) {
        log_stage("tune", "bo budget 0; using default hyperparameters");
        tracker.end_stage();
        return;
    }
    auto features = load_features(tracker.output_dir());
    std::uint64_t stage_seed = derive_seed(config.seed, kSeedTune);

    for (const auto& cell : enumerate_cells(config)) {
        if (!only_cell.empty() && cell.slug() != only_cell) continue;
        auto [users, labels] = load_trait_table<int>(labels_path(tracker.output_dir(), cell.scheme), "labels");
        check_same_users(features.users, users, "labels");
        std::vector<int> y;
        for (const auto& row : labels) y.push_back(row[static_cast<std::size_t>(cell.trait)]);

        auto selected = load_selected(tracker.output_dir(), cell, features.columns);
        Matrix Xsel = features.X.select_columns(column_indices(features.columns, selected));

        std::uint64_t cell_seed = derive_seed(stage_seed, cell.index);
        std::uint64_t fold_seed = derive_seed(cell_seed, 0xf01d);
        const int n_classes = targets::class_count(cell.scheme);
        auto space = cell.model == ensemble::ModelKind::RF ? rf_search_space() : gbt_search_space();

        // Fixed fold seed per tuning run keeps the objective deterministic.
        bayesopt::Objective objective = [&](std::span<const double> x) {
            auto tuned = space.config_json(x);
            auto spec = spec_for(config, cell, tuned);
            return modelsel::cross_validate(spec, Xsel, y, n_classes, config.folds, fold_seed, config.f1).mean_f1;
        };

        bayesopt::BoOptions opts;
        opts.budget = config.bo.budget;
        opts.init_points = config.bo.init_points;
        opts.seed = cell_seed;
        auto result = bayesopt::bayes_opt(space, objective, opts);

        std::string trace = "iteration,score";
        for (const auto& dim : space.dims) trace += "," + dim.name;
        trace += "\n";
        for (const auto& entry : result.trace) {
            trace += std::to_string(entry.iteration) + "," +
                     (entry.finite ? io::format_double(entry.score) : std::string("nan"));
            for (double v : entry.config) trace += "," + io::format_double(v);
            trace += "\n";
        }
        io::write_file(tracker.artifact("tune/bo_" + cell.slug() + ".csv"), trace);
        io::write_file(tracker.artifact("tune/tuned_" + cell.slug() + ".json"),
                       nlohmann::json{{"params", space.config_json(result.best_config)},
                                      {"best_score", result.best_score}}
                               .dump(2) +
                           "\n");
        log_stage("tune", cell.slug() + ": best mean F1 " + io::format_double(result.best_score));
    }
    tracker.end_stage();
}

namespace {

/// Evaluation with cohort-level labels, optionally re-deriving thresholds
/// from each training fold (leakage-sensitivity mode).
modelsel::CVReport evaluate_cell(const PipelineConfig& config, const Cell& cell, const Matrix& Xall,
                                 const std::vector<std::string>& columns, std::span<const int> cohort_labels,
                                 std::span<const double> raw_scores, const std::vector<std::string>& selected,
                                 const nlohmann::json& tuned, std::uint64_t cell_seed) {
    const int n_classes = targets::class_count(cell.scheme);
    auto spec = spec_for(config, cell, tuned);
    const bool nested = config.rfe.mode == "nested";

    Matrix Xsel = Xall.select_columns(column_indices(columns, selected));

    if (!nested && !config.fold_local_thresholds) {
        auto report = modelsel::cross_validate(spec, Xsel, cohort_labels, n_classes, config.folds, cell_seed,
                                               config.f1);
        report.trait = targets::trait_name(cell.trait);
        report.scheme = targets::scheme_name(cell.scheme);
        report.selected_features = selected;
        report.tuned_params = tuned.is_object() ? tuned : spec.params_json();
        return report;
    }

    // Custom fold loop: nested RFE and/or fold-local thresholds.
    auto folds = modelsel::stratified_folds(cohort_labels, config.folds, cell_seed);
    modelsel::CVReport report;
    report.trait = targets::trait_name(cell.trait);
    report.scheme = targets::scheme_name(cell.scheme);
    report.model = ensemble::model_kind_name(spec.kind);
    report.seed = cell_seed;
    report.selected_features = selected;
    report.tuned_params = tuned.is_object() ? tuned : spec.params_json();
    report.fold_f1.assign(static_cast<std::size_t>(config.folds), 0.0);

    par::for_each_index(static_cast<std::size_t>(config.folds), [&](std::size_t fold) {
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < cohort_labels.size(); ++i)
            (folds.fold_of_row[i] == static_cast<int>(fold) ? test_rows : train_rows).push_back(i);

        std::vector<int> ytr, yte;
        if (config.fold_local_thresholds) {
            std::vector<double> train_scores;
            for (std::size_t r : train_rows) train_scores.push_back(raw_scores[r]);
            std::vector<double> thresholds;
            if (cell.scheme == targets::LabelScheme::Binary) {
                thresholds = {targets::percentile(train_scores, 0.5)};
            } else {
                thresholds = {targets::percentile(train_scores, 0.33), targets::percentile(train_scores, 0.67)};
            }
            auto label_of = [&](double v) {
                int label = 0;
                for (double t : thresholds)
                    if (v > t) ++label;
                return label;
            };
            for (std::size_t r : train_rows) ytr.push_back(label_of(raw_scores[r]));
            for (std::size_t r : test_rows) yte.push_back(label_of(raw_scores[r]));
        } else {
            for (std::size_t r : train_rows) ytr.push_back(cohort_labels[r]);
            for (std::size_t r : test_rows) yte.push_back(cohort_labels[r]);
        }

        Matrix Xtr_all = Xall.select_rows(train_rows);
        std::vector<std::string> fold_features = selected;
        if (nested) {
            auto rfe = modelsel::rfe_cv(spec, Xtr_all, columns, ytr, n_classes, config.folds,
                                        derive_seed(cell_seed, 0xabc + fold), config.rfe.step, config.f1,
                                        par::Exec::Serial);
            fold_features = rfe.selected;
        }
        auto fold_cols = column_indices(columns, fold_features);
        Matrix Xtr = Xtr_all.select_columns(fold_cols);
        Matrix Xte = Xall.select_rows(test_rows).select_columns(fold_cols);

        auto model = spec.fit(Xtr, ytr, n_classes, derive_seed(cell_seed, fold), par::Exec::Serial);
        auto pred = ensemble::predict(model, Xte);
        report.fold_f1[fold] = modelsel::f1(yte, pred.labels, config.f1);
    });

    report.mean_f1 = std::accumulate(report.fold_f1.begin(), report.fold_f1.end(), 0.0) /
                     static_cast<double>(config.folds);
    double var = 0.0;
    for (double v : report.fold_f1) var += (v - report.mean_f1) * (v - report.mean_f1);
    report.std_f1 = std::sqrt(var / static_cast<double>(config.folds));
    return report;
}

}  // namespace

void run_evaluate(const PipelineConfig& config, StageTracker& tracker) {
    tracker.begin_stage("evaluate");
    auto features = load_features(tracker.output_dir());
    auto [score_users, score_rows] = load_trait_table<double>(tracker.output_dir() + "/scores.csv", "scores.csv");
    check_same_users(features.users, score_users, "scores.csv");
    std::uint64_t stage_seed = derive_seed(config.seed, kSeedEvaluate);

    for (const auto& cell : enumerate_cells(config)) {
        auto [users, labels] = load_trait_table<int>(labels_path(tracker.output_dir(), cell.scheme), "labels");
        check_same_users(features.users, users, "labels");
        std::vector<int> y;
        std::vector<double> raw;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            y.push_back(labels[i][static_cast<std::size_t>(cell.trait)]);
            raw.push_back(score_rows[i][static_cast<std::size_t>(cell.trait)]);
        }
        auto selected = load_selected(tracker.output_dir(), cell, features.columns);
        auto tuned = load_tuned(tracker.output_dir(), cell);
        std::uint64_t cell_seed = derive_seed(stage_seed, cell.index);

        auto report =
            evaluate_cell(config, cell, features.X, features.columns, y, raw, selected, tuned, cell_seed);
        io::write_file(tracker.artifact("reports/cv_" + cell.slug() + ".json"), report.to_json().dump(2) + "\n");

        // Full-data model for the importance ranking artifact.
        auto spec = spec_for(config, cell, tuned);
        Matrix Xsel = features.X.select_columns(column_indices(features.columns, selected));
        auto model = spec.fit(Xsel, y, targets::class_count(cell.scheme), derive_seed(cell_seed, 0x1394));
        model.feature_names = selected;
        auto ranking = ensemble::model_importance(model);
        nlohmann::json rank_json = nlohmann::json::array();
        for (const auto& [name, gain] : ranking) rank_json.push_back({{"feature", name}, {"gain", gain}});
        io::write_file(tracker.artifact("reports/importance_" + cell.slug() + ".json"),
                       nlohmann::json{{"ranking", rank_json}}.dump(2) + "\n");
        log_stage("evaluate", cell.slug() + ": mean F1 " + io::format_double(report.mean_f1));
    }
    tracker.end_stage();
}

void run_report(const PipelineConfig& config, StageTracker& tracker, const std::string& format) {
    tracker.begin_stage("report");
    const std::string dir = tracker.output_dir();
    auto want = [&](const char* f) { return format.empty() || format == f; };

    std::vector<modelsel::CVReport> reports;
    std::vector<report::ImportanceEntry> importances;
    for (const auto& cell : enumerate_cells(config)) {
        std::ifstream f(dir + "/reports/cv_" + cell.slug() + ".json", std::ios::binary);
        if (!f) throw std::runtime_error("missing CV report for " + cell.slug() + "; run the evaluate stage first");
        reports.push_back(modelsel::CVReport::from_json(nlohmann::json::parse(f)));

        std::ifstream fi(dir + "/reports/importance_" + cell.slug() + ".json", std::ios::binary);
        report::ImportanceEntry entry;
        entry.scheme = targets::scheme_name(cell.scheme);
        entry.model = ensemble::model_kind_name(cell.model);
        entry.trait = targets::trait_name(cell.trait);
        if (fi) {
            auto j = nlohmann::json::parse(fi);
            for (const auto& r : j.at("ranking")) entry.ranked_features.push_back(r.at("feature").get<std::string>());
        }
        importances.push_back(std::move(entry));
    }

    auto emit_table = [&](const std::string& name, const report::TableArtifact& table) {
        if (want("csv")) io::write_file(tracker.artifact("tables/" + name + ".csv"), table.to_csv());
        if (want("json")) io::write_file(tracker.artifact("tables/" + name + ".json"), table.to_json().dump(2) + "\n");
        if (want("md")) io::write_file(tracker.artifact("tables/" + name + ".md"), table.to_markdown());
    };
    emit_table("results", report::results_table(reports));
    emit_table("importance", report::importance_table(importances));

    auto [score_users, score_rows] = load_trait_table<double>(dir + "/scores.csv", "scores.csv");
    for (targets::Trait t : targets::kTraitOrder) {
        std::vector<double> values;
        for (const auto& row : score_rows) values.push_back(row[static_cast<std::size_t>(t)]);
        auto curve = report::kde(values);
        std::string body = "grid,density\n";
        for (std::size_t i = 0; i < curve.grid.size(); ++i)
            body += io::format_double(curve.grid[i]) + "," + io::format_double(curve.density[i]) + "\n";
        io::write_file(tracker.artifact(std::string("curves/kde_") + targets::trait_name(t) + ".csv"), body);
    }

    if (!config.reference_stats_path.empty()) {
        std::ifstream rf(config.reference_stats_path, std::ios::binary);
        if (!rf) throw std::runtime_error("file not found: " + config.reference_stats_path);
        auto reference = report::ReferenceStats::load(rf);
        std::vector<targets::TraitScores> cohort;
        for (std::size_t i = 0; i < score_users.size(); ++i) {
            targets::TraitScores s;
            s.user_id = score_users[i];
            for (int t = 0; t < targets::kTraits; ++t)
                s.score[static_cast<std::size_t>(t)] = static_cast<int>(score_rows[i][static_cast<std::size_t>(t)]);
            cohort.push_back(std::move(s));
        }
        auto rows = report::compare_population(cohort, reference);
        emit_table("population", report::comparison_table(rows));
    }
    tracker.end_stage();
}

RunManifest run_pipeline(const PipelineConfig& config) {
    if (config.threads != 0) par::set_threads(config.threads);
    fs::create_directories(config.output_dir);
    RunLock lock(config.output_dir);
    StageTracker tracker(config.output_dir);

    auto guarded = [&](const char* name, auto&& stage) {
        try {
            stage();
        } catch (const std::exception& e) {
            tracker.discard_current_stage();
            throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
        }
    };

    guarded("ingest", [&] { run_ingest(config, tracker); });
    guarded("featurize", [&] { run_featurize(config, tracker); });
    guarded("targets", [&] { run_targets(config, tracker); });
    guarded("select", [&] { run_select(config, tracker); });
    guarded("tune", [&] { run_tune(config, tracker); });
    guarded("evaluate", [&] { run_evaluate(config, tracker); });
    guarded("report", [&] { run_report(config, tracker); });

    RunManifest manifest;
    manifest.config_hash = io::fnv1a64_hex(config.to_json().dump());
    manifest.stage_seconds = tracker.stage_seconds();
    auto paths = tracker.written();
    std::sort(paths.begin(), paths.end());
    for (const auto& rel : paths)
        manifest.artifacts.push_back({rel, io::fnv1a64_hex(io::read_file((fs::path(config.output_dir) / rel).string()))});
    io::write_file((fs::path(config.output_dir) / "manifest.json").string(), manifest.to_json().dump(2) + "\n");
    return manifest;
}

}  // namespace traitsense::pipeline
