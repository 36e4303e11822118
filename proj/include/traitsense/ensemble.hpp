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
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "traitsense/matrix.hpp"
#include "traitsense/parallel.hpp"
#include "traitsense/trees.hpp"

namespace traitsense::ensemble {

enum class ModelKind { RF, GBT };
const char* model_kind_name(ModelKind k);
ModelKind parse_model_kind(const std::string& s);

struct RFParams {
    int n_trees = 200;
    int max_depth = 12;
    int min_samples_leaf = 2;
    double feature_fraction = 0.33;
    bool bootstrap = true;  // test hook; production forests always resample

    nlohmann::json to_json() const;
    static RFParams from_json(const nlohmann::json& j);
};

struct GBTParams {
    int n_rounds = 150;
    double learning_rate = 0.1;
    int max_depth = 4;
    double lambda_l2 = 1.0;
    double min_split_gain = 0.0;  // gamma
    double subsample = 1.0;
    double feature_fraction = 1.0;

    nlohmann::json to_json() const;
    static GBTParams from_json(const nlohmann::json& j);
};

struct ClassifierModel {
    ModelKind kind = ModelKind::RF;
    int n_classes = 2;
    int n_features = 0;
    std::vector<trees::Tree> trees;        // RF: n_trees; GBT: n_rounds (binary) or n_rounds*K (row-major by round)
    std::vector<double> base_margin;       // GBT: log class priors (binary: single log-odds entry)
    double learning_rate = 0.1;            // GBT
    std::vector<std::string> feature_names;
    std::uint64_t seed = 0;
    nlohmann::json params;

    nlohmann::json to_json() const;
    static ClassifierModel from_json(const nlohmann::json& j);
};

/// Bagged Gini-impurity trees voting with soft (averaged) probabilities.
ClassifierModel fit_rf(const Matrix& X, std::span<const int> y, int n_classes, const RFParams& params,
                       std::uint64_t seed, par::Exec exec = par::default_exec());

/// Additive log-loss boosting initialized at the log class priors. Binary
/// targets get one sigmoid tree per round; K-class targets get K softmax
/// trees per round.
ClassifierModel fit_gbt(const Matrix& X, std::span<const int> y, int n_classes, const GBTParams& params,
                        std::uint64_t seed, par::Exec exec = par::default_exec());

struct Prediction {
    std::vector<int> labels;
    Matrix prob;  // rows x n_classes, rows sum to 1
};

Prediction predict(const ClassifierModel& model, const Matrix& X);

/// Per-feature gain summed over all trees, normalized to sum 1, sorted
/// descending (ties by feature name). Features with zero gain are omitted.
std::vector<std::pair<std::string, double>> model_importance(const ClassifierModel& model);

}  // namespace traitsense::ensemble
