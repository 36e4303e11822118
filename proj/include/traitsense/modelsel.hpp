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
#include "traitsense/ensemble.hpp"
#include "traitsense/matrix.hpp"
#include "traitsense/parallel.hpp"

namespace traitsense::modelsel {

struct FoldAssignment {
    int k = 5;
    std::vector<int> fold_of_row;
};

/// Within each class, rows are shuffled by seed and dealt round-robin, so
/// every fold's class count deviates from n_c/k by less than 1. Classes
/// with fewer than k members are an error.
FoldAssignment stratified_folds(std::span<const int> y, int k, std::uint64_t seed);

enum class F1Averaging { Macro, Positive, Weighted };
F1Averaging parse_f1_averaging(const std::string& s);
const char* f1_averaging_name(F1Averaging a);

/// Per-class F1 = 2PR/(P+R), 0 when P+R is 0. Classes are 0..max(y_true).
std::vector<double> f1_per_class(std::span<const int> y_true, std::span<const int> y_pred);
/// Macro: unweighted mean over classes present in y_true. Positive: class-1
/// F1. Weighted: support-weighted mean.
double f1(std::span<const int> y_true, std::span<const int> y_pred, F1Averaging averaging = F1Averaging::Macro);

struct ModelSpec {
    ensemble::ModelKind kind = ensemble::ModelKind::RF;
    ensemble::RFParams rf;
    ensemble::GBTParams gbt;

    ensemble::ClassifierModel fit(const Matrix& X, std::span<const int> y, int n_classes, std::uint64_t seed,
                                  par::Exec exec = par::default_exec()) const;
    nlohmann::json params_json() const;
};

struct CVReport {
    std::string trait;
    std::string scheme;
    std::string model;
    std::vector<double> fold_f1;
    double mean_f1 = 0.0;
    double std_f1 = 0.0;
    std::vector<std::string> selected_features;
    nlohmann::json tuned_params;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static CVReport from_json(const nlohmann::json& j);
};

/// k train/eval cycles over a stratified split; F1 on each held-out fold.
CVReport cross_validate(const ModelSpec& spec, const Matrix& X, std::span<const int> y, int n_classes, int k,
                        std::uint64_t seed, F1Averaging averaging = F1Averaging::Macro,
                        par::Exec exec = par::default_exec());

struct RfeStep {
    int n_features = 0;
    double mean_f1 = 0.0;
    std::vector<std::string> features;
};

struct RfeResult {
    std::vector<std::string> selected;
    double best_score = 0.0;
    std::vector<RfeStep> trace;
};

/// Recursive feature elimination: repeatedly rank features with a full-data
/// fit and drop the bottom max(1, ceil(step * current)) by importance,
/// scoring each candidate set with cross_validate. Picks the set with the
/// best mean F1 (ties toward fewer features). Note the full-data ranking
/// leaks labels into selection; run it inside each training fold when an
/// unbiased estimate is needed.
RfeResult rfe_cv(const ModelSpec& spec, const Matrix& X, std::span<const std::string> feature_names,
                 std::span<const int> y, int n_classes, int k, std::uint64_t seed, double step = 0.1,
                 F1Averaging averaging = F1Averaging::Macro, par::Exec exec = par::default_exec());

}  // namespace traitsense::modelsel
