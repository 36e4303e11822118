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
#include "traitsense/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "traitsense/rng.hpp"

namespace traitsense::ensemble {
namespace {

void check_labels(std::span<const int> y, int n_classes, std::size_t n_rows) {
    if (y.size() != n_rows) throw std::runtime_error("fit: label count does not match row count");
    if (y.empty()) throw std::runtime_error("fit: empty training set");
    std::vector<bool> present(static_cast<std::size_t>(n_classes), false);
    for (int label : y) {
        if (label < 0 || label >= n_classes) throw std::runtime_error("fit: label outside [0, n_classes)");
        present[static_cast<std::size_t>(label)] = true;
    }
    int distinct = static_cast<int>(std::count(present.begin(), present.end(), true));
    if (distinct < 2) throw std::runtime_error("degenerate training labels: fewer than 2 classes present");
    if (distinct != n_classes) throw std::runtime_error("fit: some classes absent from training labels");
}

std::vector<double> class_priors(std::span<const int> y, int n_classes) {
    std::vector<double> p(static_cast<std::size_t>(n_classes), 0.0);
    for (int label : y) p[static_cast<std::size_t>(label)] += 1.0;
    for (double& v : p) v /= static_cast<double>(y.size());
    return p;
}

/// Rows kept for a boosting round: the first ceil(subsample*n) positions of
/// a seeded permutation, re-sorted to keep row order deterministic.
std::vector<std::size_t> subsample_rows(std::size_t n, double fraction, std::mt19937_64& rng) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    if (fraction >= 1.0) return rows;
    auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    keep = std::max<std::size_t>(keep, 1);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(keep);
    std::sort(rows.begin(), rows.end());
    return rows;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

const char* model_kind_name(ModelKind k) { return k == ModelKind::RF ? "rf" : "gbt"; }

ModelKind parse_model_kind(const std::string& s) {
    if (s == "rf") return ModelKind::RF;
    if (s == "gbt" || s == "xgb") return ModelKind::GBT;
    throw std::runtime_error("unknown model kind: " + s);
}

nlohmann::json RFParams::to_json() const {
    return {{"n_trees", n_trees},
            {"max_depth", max_depth},
            {"min_samples_leaf", min_samples_leaf},
            {"feature_fraction", feature_fraction},
            {"bootstrap", bootstrap}};
}

RFParams RFParams::from_json(const nlohmann::json& j) {
    RFParams p;
    p.n_trees = j.value("n_trees", p.n_trees);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
    p.feature_fraction = j.value("feature_fraction", p.feature_fraction);
    p.bootstrap = j.value("bootstrap", p.bootstrap);
    return p;
}

nlohmann::json GBTParams::to_json() const {
    return {{"n_rounds", n_rounds},   {"learning_rate", learning_rate},
            {"max_depth", max_depth}, {"lambda_l2", lambda_l2},
            {"min_split_gain", min_split_gain}, {"subsample", subsample},
            {"feature_fraction", feature_fraction}};
}

GBTParams GBTParams::from_json(const nlohmann::json& j) {
    GBTParams p;
    p.n_rounds = j.value("n_rounds", p.n_rounds);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.lambda_l2 = j.value("lambda_l2", p.lambda_l2);
    p.min_split_gain = j.value("min_split_gain", p.min_split_gain);
    p.subsample = j.value("subsample", p.subsample);
    p.feature_fraction = j.value("feature_fraction", p.feature_fraction);
    return p;
}

ClassifierModel fit_rf(const Matrix& X, std::span<const int> y, int n_classes, const RFParams& params,
                       std::uint64_t seed, par::Exec exec) {
    check_labels(y, n_classes, X.rows);
    if (params.n_trees < 1) throw std::runtime_error("fit_rf: n_trees must be >= 1");

    ClassifierModel model;
    model.kind = ModelKind::RF;
    model.n_classes = n_classes;
    model.n_features = static_cast<int>(X.cols);
    model.seed = seed;
    model.params = params.to_json();
    model.trees.resize(static_cast<std::size_t>(params.n_trees));

    trees::TreeParams tp;
    tp.mode = trees::TreeMode::Impurity;
    tp.max_depth = params.max_depth;
    tp.min_samples_leaf = params.min_samples_leaf;
    tp.feature_fraction = params.feature_fraction;

    par::for_each_index(
        static_cast<std::size_t>(params.n_trees),
        [&](std::size_t t) {
            std::uint64_t tree_seed = derive_seed(seed, t);
            std::vector<std::size_t> rows(X.rows);
            if (params.bootstrap) {
                auto rng = make_rng(derive_seed(tree_seed, 0x0b00));
                std::uniform_int_distribution<std::size_t> pick(0, X.rows - 1);
                for (auto& r : rows) r = pick(rng);
                std::sort(rows.begin(), rows.end());
            } else {
                std::iota(rows.begin(), rows.end(), std::size_t{0});
            }
            model.trees[t] = trees::fit_tree_impurity(X, y, n_classes, rows, tp, derive_seed(tree_seed, 0x7ee));
        },
        exec);
    return model;
}

ClassifierModel fit_gbt(const Matrix& X, std::span<const int> y, int n_classes, const GBTParams& params,
                        std::uint64_t seed, par::Exec exec) {
    check_labels(y, n_classes, X.rows);
    if (params.n_rounds < 1) throw std::runtime_error("fit_gbt: n_rounds must be >= 1");
    const std::size_t n = X.rows;
    const bool binary = n_classes == 2;
    const int k = binary ? 1 : n_classes;

    ClassifierModel model;
    model.kind = ModelKind::GBT;
    model.n_classes = n_classes;
    model.n_features = static_cast<int>(X.cols);
    model.seed = seed;
    model.learning_rate = params.learning_rate;
    model.params = params.to_json();

    auto priors = class_priors(y, n_classes);
    if (binary) {
        model.base_margin = {std::log(priors[1] / priors[0])};
    } else {
        model.base_margin.resize(static_cast<std::size_t>(n_classes));
        for (int c = 0; c < n_classes; ++c) model.base_margin[static_cast<std::size_t>(c)] = std::log(priors[static_cast<std::size_t>(c)]);
    }

    // margins[i*k + c]
    std::vector<double> margins(n * static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < k; ++c) margins[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)] = model.base_margin[static_cast<std::size_t>(c)];

    trees::TreeParams tp;
    tp.mode = trees::TreeMode::GradHess;
    tp.max_depth = params.max_depth;
    tp.min_samples_leaf = 1;
    tp.lambda_l2 = params.lambda_l2;
    tp.min_split_gain = params.min_split_gain;
    tp.feature_fraction = params.feature_fraction;

    std::vector<double> grad(n * static_cast<std::size_t>(k)), hess(n * static_cast<std::size_t>(k));
    model.trees.resize(static_cast<std::size_t>(params.n_rounds) * static_cast<std::size_t>(k));

    for (int round = 0; round < params.n_rounds; ++round) {
        std::uint64_t round_seed = derive_seed(seed, static_cast<std::uint64_t>(round));

        if (binary) {
            for (std::size_t i = 0; i < n; ++i) {
                double p = sigmoid(margins[i]);
                grad[i] = p - static_cast<double>(y[i]);
                hess[i] = p * (1.0 - p);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                double mx = margins[i * static_cast<std::size_t>(k)];
                for (int c = 1; c < k; ++c) mx = std::max(mx, margins[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)]);
                double denom = 0.0;
                for (int c = 0; c < k; ++c) denom += std::exp(margins[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)] - mx);
                for (int c = 0; c < k; ++c) {
                    double p = std::exp(margins[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)] - mx) / denom;
                    grad[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)] = p - (y[i] == c ? 1.0 : 0.0);
                    hess[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)] = p * (1.0 - p);
                }
            }
        }

        auto sub_rng = make_rng(derive_seed(round_seed, 0x5ab));
        auto rows = subsample_rows(n, params.subsample, sub_rng);

        // Per-class trees of one round are independent given the margins.
        std::vector<trees::Tree> round_trees(static_cast<std::size_t>(k));
        par::for_each_index(
            static_cast<std::size_t>(k),
            [&](std::size_t c) {
                std::vector<double> gc(n), hc(n);
                for (std::size_t i = 0; i < n; ++i) {
                    gc[i] = grad[i * static_cast<std::size_t>(k) + c];
                    hc[i] = hess[i * static_cast<std::size_t>(k) + c];
                }
                round_trees[c] = trees::fit_tree_gradhess(X, gc, hc, rows, tp, derive_seed(round_seed, 0x100 + c));
            },
            exec);

        for (int c = 0; c < k; ++c) {
            const auto& tree = round_trees[static_cast<std::size_t>(c)];
            for (std::size_t i = 0; i < n; ++i)
                margins[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)] +=
                    params.learning_rate * trees::predict_tree_value(tree, X.row(i));
            model.trees[static_cast<std::size_t>(round) * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)] =
                std::move(round_trees[static_cast<std::size_t>(c)]);
        }
    }
    return model;
}

Prediction predict(const ClassifierModel& model, const Matrix& X) {
    if (X.rows > 0 && X.cols != static_cast<std::size_t>(model.n_features))
        throw std::runtime_error("predict: feature count mismatch");
    Prediction out;
    out.prob = Matrix(X.rows, static_cast<std::size_t>(model.n_classes));
    out.labels.resize(X.rows);

    const bool binary_gbt = model.kind == ModelKind::GBT && model.n_classes == 2;
    const int k = model.kind == ModelKind::GBT ? (binary_gbt ? 1 : model.n_classes) : model.n_classes;

    for (std::size_t i = 0; i < X.rows; ++i) {
        auto x = X.row(i);
        if (model.kind == ModelKind::RF) {
            for (const auto& tree : model.trees) {
                auto p = trees::predict_tree_prob(tree, x);
                for (int c = 0; c < model.n_classes; ++c) out.prob.at(i, static_cast<std::size_t>(c)) += p[static_cast<std::size_t>(c)];
            }
            for (int c = 0; c < model.n_classes; ++c) out.prob.at(i, static_cast<std::size_t>(c)) /= static_cast<double>(model.trees.size());
        } else {
            std::vector<double> margin(model.base_margin);
            for (std::size_t t = 0; t < model.trees.size(); ++t)
                margin[t % static_cast<std::size_t>(k)] += model.learning_rate * trees::predict_tree_value(model.trees[t], x);
            if (binary_gbt) {
                double p1 = sigmoid(margin[0]);
                out.prob.at(i, 0) = 1.0 - p1;
                out.prob.at(i, 1) = p1;
            } else {
                double mx = *std::max_element(margin.begin(), margin.end());
                double denom = 0.0;
                for (double m : margin) denom += std::exp(m - mx);
                for (int c = 0; c < model.n_classes; ++c)
                    out.prob.at(i, static_cast<std::size_t>(c)) = std::exp(margin[static_cast<std::size_t>(c)] - mx) / denom;
            }
        }
        int best = 0;
        for (int c = 1; c < model.n_classes; ++c)
            if (out.prob.at(i, static_cast<std::size_t>(c)) > out.prob.at(i, static_cast<std::size_t>(best))) best = c;
        out.labels[i] = best;
    }
    return out;
}

std::vector<std::pair<std::string, double>> model_importance(const ClassifierModel& model) {
    std::vector<double> total(static_cast<std::size_t>(model.n_features), 0.0);
    for (const auto& tree : model.trees) {
        auto imp = trees::tree_importance(tree);
        for (std::size_t f = 0; f < imp.size(); ++f) total[f] += imp[f];
    }
    double sum = std::accumulate(total.begin(), total.end(), 0.0);
    std::vector<std::pair<std::string, double>> out;
    if (sum <= 0.0) return out;
    for (std::size_t f = 0; f < total.size(); ++f) {
        if (total[f] <= 0.0) continue;
        std::string name = f < model.feature_names.size() ? model.feature_names[f] : "f" + std::to_string(f);
        out.push_back({name, total[f] / sum});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return out;
}

nlohmann::json ClassifierModel::to_json() const {
    nlohmann::json trees_json = nlohmann::json::array();
    for (const auto& t : trees) trees_json.push_back(t.to_json());
    return nlohmann::json{{"format_version", 1},
                          {"kind", model_kind_name(kind)},
                          {"n_classes", n_classes},
                          {"n_features", n_features},
                          {"base_margin", base_margin},
                          {"learning_rate", learning_rate},
                          {"feature_names", feature_names},
                          {"seed", seed},
                          {"params", params},
                          {"trees", std::move(trees_json)}};
}

ClassifierModel ClassifierModel::from_json(const nlohmann::json& j) {
    if (j.value("format_version", 0) != 1) throw std::runtime_error("unsupported model format version");
    ClassifierModel m;
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.n_classes = j.at("n_classes").get<int>();
    m.n_features = j.at("n_features").get<int>();
    m.base_margin = j.at("base_margin").get<std::vector<double>>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.params = j.at("params");
    for (const auto& tj : j.at("trees")) m.trees.push_back(trees::Tree::from_json(tj));
    return m;
}

}  // namespace traitsense::ensemble
