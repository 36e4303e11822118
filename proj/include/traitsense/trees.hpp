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

namespace traitsense::trees {

enum class TreeMode { Impurity, GradHess };

struct TreeParams {
    int max_depth = 6;
    int min_samples_leaf = 1;
    double min_split_gain = 0.0;   // gamma in GradHess mode
    double lambda_l2 = 1.0;        // GradHess regularizer
    double feature_fraction = 1.0; // candidate features resampled per split
    TreeMode mode = TreeMode::Impurity;
};

/// Flat node storage; nodes[0] is the root. feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<double> prob;  // Impurity leaves: class frequencies
    double value = 0.0;        // GradHess leaves: -G/(H+lambda)
    double gain = 0.0;         // split contribution used for importance
    std::int32_t n_rows = 0;
    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    TreeMode mode = TreeMode::Impurity;
    int n_features = 0;
    int n_classes = 0;  // Impurity mode only
    std::vector<TreeNode> nodes;

    nlohmann::json to_json() const;
    static Tree from_json(const nlohmann::json& j);
};

/// Greedy CART growth, Gini impurity criterion. `rows` selects the training
/// subset (repeats allowed, e.g. bootstrap resamples). Splits sit at
/// midpoints of consecutive distinct sorted values; gain ties break toward
/// the lowest feature index, then the lowest threshold.
Tree fit_tree_impurity(const Matrix& X, std::span<const int> y, int n_classes, std::span<const std::size_t> rows,
                       const TreeParams& params, std::uint64_t seed);
Tree fit_tree_impurity(const Matrix& X, std::span<const int> y, int n_classes, const TreeParams& params,
                       std::uint64_t seed);

/// Second-order boosting base learner. Split gain is
///   0.5 * (GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)) - gamma
/// and leaves carry weight -G/(H+lambda). All hessians must be >= 0.
Tree fit_tree_gradhess(const Matrix& X, std::span<const double> grad, std::span<const double> hess,
                       std::span<const std::size_t> rows, const TreeParams& params, std::uint64_t seed);
Tree fit_tree_gradhess(const Matrix& X, std::span<const double> grad, std::span<const double> hess,
                       const TreeParams& params, std::uint64_t seed);

/// Root-to-leaf descent; x[feature] <= threshold goes left.
const TreeNode& predict_leaf(const Tree& tree, std::span<const double> x);
std::span<const double> predict_tree_prob(const Tree& tree, std::span<const double> x);
double predict_tree_value(const Tree& tree, std::span<const double> x);

/// Accumulated split gain per feature (weighted impurity decrease in
/// Impurity mode, boosting gain in GradHess mode); unused features get 0.
std::vector<double> tree_importance(const Tree& tree);

}  // namespace traitsense::trees
