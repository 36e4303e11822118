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
#include "traitsense/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>

#include "traitsense/rng.hpp"

namespace traitsense::trees {
namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;           // selection criterion value
    std::size_t left_count = 0;  // rows going left after partition by threshold
};

double gini_from_counts(std::span<const std::size_t> counts, std::size_t n) {
    if (n == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t c : counts) {
        double p = static_cast<double>(c) / static_cast<double>(n);
        acc += p * p;
    }
    return 1.0 - acc;
}

/// Candidate features for one split: ceil(fraction * d) distinct indices,
/// returned in ascending order so the tie-break is evaluation order.
std::vector<int> sample_features(int d, double fraction, std::mt19937_64& rng) {
    int k = static_cast<int>(std::ceil(fraction * d));
    k = std::clamp(k, 1, d);
    std::vector<int> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), 0);
    if (k < d) {
        for (int i = 0; i < k; ++i) {
            std::uniform_int_distribution<int> pick(i, d - 1);
            std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
        }
        all.resize(static_cast<std::size_t>(k));
        std::sort(all.begin(), all.end());
    }
    return all;
}

class Builder {
public:
    Builder(const Matrix& X, const TreeParams& params, std::uint64_t seed)
        : X_(X), params_(params), rng_(make_rng(seed)) {}

    virtual ~Builder() = default;

    Tree run(std::span<const std::size_t> rows) {
        if (X_.rows == 0 || X_.cols == 0) throw std::runtime_error("fit_tree: empty matrix");
        Tree tree;
        tree.mode = params_.mode;
        tree.n_features = static_cast<int>(X_.cols);
        tree.n_classes = n_classes();
        tree_ = &tree;
        std::vector<std::size_t> idx(rows.begin(), rows.end());
        grow(idx, 0);
        return tree;
    }

protected:
    virtual int n_classes() const = 0;
    virtual bool node_is_pure(std::span<const std::size_t> rows) const = 0;
    /// Best split over one feature's sorted rows, or nullopt.
    virtual std::optional<SplitChoice> best_split_on_feature(int feature,
                                                             std::span<const std::size_t> sorted_rows) const = 0;
    virtual void fill_leaf(TreeNode& node, std::span<const std::size_t> rows) const = 0;
    /// Multiplier applied to the selection gain when stored for importance.
    virtual double importance_scale(std::size_t node_rows) const = 0;

    const Matrix& X_;
    const TreeParams& params_;

private:
    std::int32_t grow(std::vector<std::size_t>& rows, int depth) {
        auto node_index = static_cast<std::int32_t>(tree_->nodes.size());
        tree_->nodes.emplace_back();
        tree_->nodes.back().n_rows = static_cast<std::int32_t>(rows.size());

        bool can_split = depth < params_.max_depth &&
                         rows.size() >= 2 * static_cast<std::size_t>(params_.min_samples_leaf) && !node_is_pure(rows);
        std::optional<SplitChoice> best;
        if (can_split) {
            auto features = sample_features(static_cast<int>(X_.cols), params_.feature_fraction, rng_);
            std::vector<std::size_t> sorted(rows);
            for (int f : features) {
                std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                    double va = X_.at(a, static_cast<std::size_t>(f)), vb = X_.at(b, static_cast<std::size_t>(f));
                    return va != vb ? va < vb : a < b;
                });
                auto cand = best_split_on_feature(f, sorted);
                if (cand && (!best || cand->gain > best->gain)) best = cand;
            }
        }

        if (!best) {
            fill_leaf(tree_->nodes[static_cast<std::size_t>(node_index)], rows);
            return node_index;
        }

        std::vector<std::size_t> left, right;
        left.reserve(best->left_count);
        right.reserve(rows.size() - best->left_count);
        for (std::size_t r : rows) {
            if (X_.at(r, static_cast<std::size_t>(best->feature)) <= best->threshold)
                left.push_back(r);
            else
                right.push_back(r);
        }

        {
            TreeNode& node = tree_->nodes[static_cast<std::size_t>(node_index)];
            node.feature = best->feature;
            node.threshold = best->threshold;
            node.gain = best->gain * importance_scale(rows.size());
        }
        rows.clear();
        rows.shrink_to_fit();
        std::int32_t l = grow(left, depth + 1);
        std::int32_t r = grow(right, depth + 1);
        tree_->nodes[static_cast<std::size_t>(node_index)].left = l;
        tree_->nodes[static_cast<std::size_t>(node_index)].right = r;
        return node_index;
    }

    std::mt19937_64 rng_;
    Tree* tree_ = nullptr;
};

class ImpurityBuilder : public Builder {
public:
    ImpurityBuilder(const Matrix& X, std::span<const int> y, int n_classes, const TreeParams& params,
                    std::uint64_t seed)
        : Builder(X, params, seed), y_(y), k_(n_classes) {
        if (y.size() != X.rows) throw std::runtime_error("fit_tree: label count does not match row count");
        for (int label : y)
            if (label < 0 || label >= n_classes) throw std::runtime_error("fit_tree: label outside [0, n_classes)");
    }

protected:
    int n_classes() const override { return k_; }

    bool node_is_pure(std::span<const std::size_t> rows) const override {
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (y_[rows[i]] != y_[rows[0]]) return false;
        return true;
    }

    std::optional<SplitChoice> best_split_on_feature(int feature,
                                                     std::span<const std::size_t> sorted_rows) const override {
        const std::size_t n = sorted_rows.size();
        std::vector<std::size_t> left_counts(static_cast<std::size_t>(k_), 0);
        std::vector<std::size_t> total_counts(static_cast<std::size_t>(k_), 0);
        for (std::size_t r : sorted_rows) ++total_counts[static_cast<std::size_t>(y_[r])];
        const double parent = gini_from_counts(total_counts, n);

        std::optional<SplitChoice> best;
        std::vector<std::size_t> right_counts = total_counts;
        const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            auto cls = static_cast<std::size_t>(y_[sorted_rows[i]]);
            ++left_counts[cls];
            --right_counts[cls];
            double v = X_.at(sorted_rows[i], static_cast<std::size_t>(feature));
            double next = X_.at(sorted_rows[i + 1], static_cast<std::size_t>(feature));
            if (v == next) continue;
            std::size_t nl = i + 1, nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            double decrease = parent -
                              (static_cast<double>(nl) / static_cast<double>(n)) * gini_from_counts(left_counts, nl) -
                              (static_cast<double>(nr) / static_cast<double>(n)) * gini_from_counts(right_counts, nr);
            if (decrease <= params_.min_split_gain || decrease <= 0.0) continue;
            if (!best || decrease > best->gain) best = SplitChoice{feature, (v + next) / 2.0, decrease, nl};
        }
        return best;
    }

    void fill_leaf(TreeNode& node, std::span<const std::size_t> rows) const override {
        node.prob.assign(static_cast<std::size_t>(k_), 0.0);
        for (std::size_t r : rows) node.prob[static_cast<std::size_t>(y_[r])] += 1.0;
        for (double& p : node.prob) p /= static_cast<double>(rows.size());
    }

    double importance_scale(std::size_t node_rows) const override {
        // Weighted impurity decrease: scale by the node's share of the root.
        return static_cast<double>(node_rows) / static_cast<double>(tree_root_rows_ ? tree_root_rows_ : node_rows);
    }

public:
    void set_root_rows(std::size_t n) { tree_root_rows_ = n; }

private:
    std::span<const int> y_;
    int k_;
    std::size_t tree_root_rows_ = 0;
};

class GradHessBuilder : public Builder {
public:
    GradHessBuilder(const Matrix& X, std::span<const double> g, std::span<const double> h, const TreeParams& params,
                    std::uint64_t seed)
        : Builder(X, params, seed), g_(g), h_(h) {
        if (g.size() != X.rows || h.size() != X.rows)
            throw std::runtime_error("fit_tree: gradient/hessian size does not match row count");
        for (double v : h)
            if (v < 0.0 || !std::isfinite(v)) throw std::runtime_error("fit_tree: hessian must be finite and >= 0");
        for (double v : g)
            if (!std::isfinite(v)) throw std::runtime_error("fit_tree: gradient must be finite");
    }

protected:
    int n_classes() const override { return 0; }

    bool node_is_pure(std::span<const std::size_t>) const override { return false; }

    std::optional<SplitChoice> best_split_on_feature(int feature,
                                                     std::span<const std::size_t> sorted_rows) const override {
        const std::size_t n = sorted_rows.size();
        double total_g = 0.0, total_h = 0.0;
        for (std::size_t r : sorted_rows) {
            total_g += g_[r];
            total_h += h_[r];
        }
        const double lambda = params_.lambda_l2;
        const double parent_score = total_g * total_g / (total_h + lambda);

        std::optional<SplitChoice> best;
        double gl = 0.0, hl = 0.0;
        const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            gl += g_[sorted_rows[i]];
            hl += h_[sorted_rows[i]];
            double v = X_.at(sorted_rows[i], static_cast<std::size_t>(feature));
            double next = X_.at(sorted_rows[i + 1], static_cast<std::size_t>(feature));
            if (v == next) continue;
            std::size_t nl = i + 1, nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            double gr = total_g - gl, hr = total_h - hl;
            double gain =
                0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_score) - params_.min_split_gain;
            if (gain <= 0.0) continue;
            if (!best || gain > best->gain) best = SplitChoice{feature, (v + next) / 2.0, gain, nl};
        }
        return best;
    }

    void fill_leaf(TreeNode& node, std::span<const std::size_t> rows) const override {
        double g = 0.0, h = 0.0;
        for (std::size_t r : rows) {
            g += g_[r];
            h += h_[r];
        }
        node.value = -g / (h + params_.lambda_l2);
    }

    double importance_scale(std::size_t) const override { return 1.0; }

private:
    std::span<const double> g_;
    std::span<const double> h_;
};

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

}  // namespace

Tree fit_tree_impurity(const Matrix& X, std::span<const int> y, int n_classes, std::span<const std::size_t> rows,
                       const TreeParams& params, std::uint64_t seed) {
    if (params.mode != TreeMode::Impurity) throw std::runtime_error("fit_tree_impurity: params.mode mismatch");
    if (rows.empty()) throw std::runtime_error("fit_tree: empty row set");
    ImpurityBuilder b(X, y, n_classes, params, seed);
    b.set_root_rows(rows.size());
    return b.run(rows);
}

Tree fit_tree_impurity(const Matrix& X, std::span<const int> y, int n_classes, const TreeParams& params,
                       std::uint64_t seed) {
    auto rows = all_rows(X.rows);
    return fit_tree_impurity(X, y, n_classes, rows, params, seed);
}

Tree fit_tree_gradhess(const Matrix& X, std::span<const double> grad, std::span<const double> hess,
                       std::span<const std::size_t> rows, const TreeParams& params, std::uint64_t seed) {
    if (params.mode != TreeMode::GradHess) throw std::runtime_error("fit_tree_gradhess: params.mode mismatch");
    if (rows.empty()) throw std::runtime_error("fit_tree: empty row set");
    GradHessBuilder b(X, grad, hess, params, seed);
    return b.run(rows);
}

Tree fit_tree_gradhess(const Matrix& X, std::span<const double> grad, std::span<const double> hess,
                       const TreeParams& params, std::uint64_t seed) {
    auto rows = all_rows(X.rows);
    return fit_tree_gradhess(X, grad, hess, rows, params, seed);
}

const TreeNode& predict_leaf(const Tree& tree, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(tree.n_features))
        throw std::runtime_error("predict_tree: feature count mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw std::runtime_error("non-finite feature");
    const TreeNode* node = &tree.nodes.at(0);
    while (!node->is_leaf()) {
        node = x[static_cast<std::size_t>(node->feature)] <= node->threshold
                   ? &tree.nodes[static_cast<std::size_t>(node->left)]
                   : &tree.nodes[static_cast<std::size_t>(node->right)];
    }
    return *node;
}

std::span<const double> predict_tree_prob(const Tree& tree, std::span<const double> x) {
    if (tree.mode != TreeMode::Impurity) throw std::runtime_error("predict_tree_prob: not an impurity tree");
    return predict_leaf(tree, x).prob;
}

double predict_tree_value(const Tree& tree, std::span<const double> x) {
    if (tree.mode != TreeMode::GradHess) throw std::runtime_error("predict_tree_value: not a gradhess tree");
    return predict_leaf(tree, x).value;
}

std::vector<double> tree_importance(const Tree& tree) {
    std::vector<double> imp(static_cast<std::size_t>(tree.n_features), 0.0);
    for (const auto& node : tree.nodes)
        if (!node.is_leaf()) imp[static_cast<std::size_t>(node.feature)] += node.gain;
    return imp;
}

nlohmann::json Tree::to_json() const {
    nlohmann::json nodes_json = nlohmann::json::array();
    for (const auto& n : nodes) {
        nlohmann::json jn{{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
                          {"right", n.right},     {"gain", n.gain},           {"n_rows", n.n_rows}};
        if (mode == TreeMode::Impurity)
            jn["prob"] = n.prob;
        else
            jn["value"] = n.value;
        nodes_json.push_back(std::move(jn));
    }
    return nlohmann::json{{"mode", mode == TreeMode::Impurity ? "impurity" : "gradhess"},
                          {"n_features", n_features},
                          {"n_classes", n_classes},
                          {"nodes", std::move(nodes_json)}};
}

Tree Tree::from_json(const nlohmann::json& j) {
    Tree t;
    t.mode = j.at("mode").get<std::string>() == "impurity" ? TreeMode::Impurity : TreeMode::GradHess;
    t.n_features = j.at("n_features").get<int>();
    t.n_classes = j.at("n_classes").get<int>();
    for (const auto& jn : j.at("nodes")) {
        TreeNode n;
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<std::int32_t>();
        n.right = jn.at("right").get<std::int32_t>();
        n.gain = jn.at("gain").get<double>();
        n.n_rows = jn.at("n_rows").get<std::int32_t>();
        if (jn.contains("prob")) n.prob = jn.at("prob").get<std::vector<double>>();
        if (jn.contains("value")) n.value = jn.at("value").get<double>();
        t.nodes.push_back(std::move(n));
    }
    return t;
}

}  // namespace traitsense::trees
