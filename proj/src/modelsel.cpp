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
#include "traitsense/modelsel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "traitsense/rng.hpp"

namespace traitsense::modelsel {

FoldAssignment stratified_folds(std::span<const int> y, int k, std::uint64_t seed) {
    if (k < 2) throw std::runtime_error("stratified_folds: k must be >= 2");
    if (y.empty()) throw std::runtime_error("stratified_folds: empty labels");

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
    for (const auto& [cls, rows] : by_class)
        if (rows.size() < static_cast<std::size_t>(k))
            throw std::runtime_error("stratified_folds: class " + std::to_string(cls) + " has only " +
                                     std::to_string(rows.size()) + " members (< k=" + std::to_string(k) + ")");

    FoldAssignment out;
    out.k = k;
    out.fold_of_row.assign(y.size(), -1);
    auto rng = make_rng(seed);
    for (auto& [cls, rows] : by_class) {
        std::shuffle(rows.begin(), rows.end(), rng);
        for (std::size_t i = 0; i < rows.size(); ++i) out.fold_of_row[rows[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return out;
}

F1Averaging parse_f1_averaging(const std::string& s) {
    if (s == "macro") return F1Averaging::Macro;
    if (s == "positive") return F1Averaging::Positive;
    if (s == "weighted") return F1Averaging::Weighted;
    throw std::runtime_error("unknown F1 averaging: " + s);
}

const char* f1_averaging_name(F1Averaging a) {
    switch (a) {
        case F1Averaging::Macro: return "macro";
        case F1Averaging::Positive: return "positive";
        case F1Averaging::Weighted: return "weighted";
    }
    return "?";
}

std::vector<double> f1_per_class(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.empty()) throw std::runtime_error("f1: empty input");
    if (y_true.size() != y_pred.size()) throw std::runtime_error("f1: length mismatch");
    int k = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_pred[i] < 0) throw std::runtime_error("f1: negative label");
        k = std::max({k, y_true[i] + 1, y_pred[i] + 1});
    }
    std::vector<double> tp(static_cast<std::size_t>(k), 0), fp(static_cast<std::size_t>(k), 0), fn(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == y_pred[i]) {
            tp[static_cast<std::size_t>(y_true[i])] += 1;
        } else {
            fp[static_cast<std::size_t>(y_pred[i])] += 1;
            fn[static_cast<std::size_t>(y_true[i])] += 1;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(k), 0.0);
    for (int c = 0; c < k; ++c) {
        auto cc = static_cast<std::size_t>(c);
        double denom = 2 * tp[cc] + fp[cc] + fn[cc];
        out[cc] = denom > 0 ? 2 * tp[cc] / denom : 0.0;
    }
    return out;
}

double f1(std::span<const int> y_true, std::span<const int> y_pred, F1Averaging averaging) {
    auto per_class = f1_per_class(y_true, y_pred);
    std::vector<std::size_t> support(per_class.size(), 0);
    for (int t : y_true) support[static_cast<std::size_t>(t)] += 1;

    if (averaging == F1Averaging::Positive) {
        if (per_class.size() < 2) throw std::runtime_error("f1 positive: class 1 absent");
        return per_class[1];
    }
    double acc = 0.0, weight = 0.0;
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        if (support[c] == 0) continue;  // only classes present in y_true
        double w = averaging == F1Averaging::Weighted ? static_cast<double>(support[c]) : 1.0;
        acc += w * per_class[c];
        weight += w;
    }
    return acc / weight;
}

ensemble::ClassifierModel ModelSpec::fit(const Matrix& X, std::span<const int> y, int n_classes, std::uint64_t seed,
                                         par::Exec exec) const {
    return kind == ensemble::ModelKind::RF ? ensemble::fit_rf(X, y, n_classes, rf, seed, exec)
                                           : ensemble::fit_gbt(X, y, n_classes, gbt, seed, exec);
}

nlohmann::json ModelSpec::params_json() const {
    return kind == ensemble::ModelKind::RF ? rf.to_json() : gbt.to_json();
}

nlohmann::json CVReport::to_json() const {
    return nlohmann::json{{"trait", trait},
                          {"scheme", scheme},
                          {"model", model},
                          {"fold_f1", fold_f1},
                          {"mean_f1", mean_f1},
                          {"std_f1", std_f1},
                          {"selected_features", selected_features},
                          {"tuned_params", tuned_params},
                          {"seed", seed}};
}

CVReport CVReport::from_json(const nlohmann::json& j) {
    CVReport r;
    r.trait = j.at("trait").get<std::string>();
    r.scheme = j.at("scheme").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.fold_f1 = j.at("fold_f1").get<std::vector<double>>();
    r.mean_f1 = j.at("mean_f1").get<double>();
    r.std_f1 = j.at("std_f1").get<double>();
    r.selected_features = j.at("selected_features").get<std::vector<std::string>>();
    r.tuned_params = j.at("tuned_params");
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

CVReport cross_validate(const ModelSpec& spec, const Matrix& X, std::span<const int> y, int n_classes, int k,
                        std::uint64_t seed, F1Averaging averaging, par::Exec exec) {
    auto folds = stratified_folds(y, k, seed);
    CVReport report;
    report.model = ensemble::model_kind_name(spec.kind);
    report.seed = seed;
    report.fold_f1.assign(static_cast<std::size_t>(k), 0.0);

    par::for_each_index(
        static_cast<std::size_t>(k),
        [&](std::size_t fold) {
            std::vector<std::size_t> train_rows, test_rows;
            for (std::size_t i = 0; i < y.size(); ++i)
                (folds.fold_of_row[i] == static_cast<int>(fold) ? test_rows : train_rows).push_back(i);
            Matrix Xtr = X.select_rows(train_rows);
            Matrix Xte = X.select_rows(test_rows);
            std::vector<int> ytr, yte;
            for (std::size_t r : train_rows) ytr.push_back(y[r]);
            for (std::size_t r : test_rows) yte.push_back(y[r]);

            // Fold models run serially inside a parallel fold loop.
            auto model = spec.fit(Xtr, ytr, n_classes, derive_seed(seed, fold), par::Exec::Serial);
            auto pred = ensemble::predict(model, Xte);
            report.fold_f1[fold] = f1(yte, pred.labels, averaging);
        },
        exec);

    report.mean_f1 = std::accumulate(report.fold_f1.begin(), report.fold_f1.end(), 0.0) / static_cast<double>(k);
    double var = 0.0;
    for (double v : report.fold_f1) var += (v - report.mean_f1) * (v - report.mean_f1);
    report.std_f1 = std::sqrt(var / static_cast<double>(k));
    return report;
}

RfeResult rfe_cv(const ModelSpec& spec, const Matrix& X, std::span<const std::string> feature_names,
                 std::span<const int> y, int n_classes, int k, std::uint64_t seed, double step,
                 F1Averaging averaging, par::Exec exec) {
    if (X.cols < 2) throw std::runtime_error("rfe_cv: need at least 2 features");
    if (feature_names.size() != X.cols) throw std::runtime_error("rfe_cv: feature name count mismatch");
    if (step <= 0.0 || step >= 1.0) throw std::runtime_error("rfe_cv: step must be in (0,1)");

    std::vector<std::size_t> current(X.cols);
    std::iota(current.begin(), current.end(), std::size_t{0});

    RfeResult result;
    int iteration = 0;
    while (true) {
        Matrix Xc = X.select_columns(current);
        auto cv = cross_validate(spec, Xc, y, n_classes, k, seed, averaging, exec);

        RfeStep entry;
        entry.n_features = static_cast<int>(current.size());
        entry.mean_f1 = cv.mean_f1;
        for (std::size_t c : current) entry.features.push_back(feature_names[c]);
        result.trace.push_back(std::move(entry));

        if (current.size() == 1) break;

        // Rank on a full-data fit and drop the weakest tail.
        auto model = spec.fit(Xc, y, n_classes, derive_seed(seed, 0xfe00 + static_cast<std::uint64_t>(iteration)), exec);
        std::vector<double> gain(current.size(), 0.0);
        for (const auto& tree : model.trees) {
            auto imp = trees::tree_importance(tree);
            for (std::size_t j = 0; j < gain.size(); ++j) gain[j] += imp[j];
        }
        std::vector<std::size_t> order(current.size());  // ascending by gain, ties keep original order
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gain[a] < gain[b]; });

        auto drop = static_cast<std::size_t>(std::ceil(step * static_cast<double>(current.size())));
        drop = std::clamp<std::size_t>(std::max<std::size_t>(drop, 1), 1, current.size() - 1);
        std::vector<bool> dropped(current.size(), false);
        for (std::size_t i = 0; i < drop; ++i) dropped[order[i]] = true;
        std::vector<std::size_t> next;
        for (std::size_t j = 0; j < current.size(); ++j)
            if (!dropped[j]) next.push_back(current[j]);
        current = std::move(next);
        ++iteration;
    }

    // Best mean F1; ties resolved toward the smaller feature set.
    const RfeStep* best = nullptr;
    for (const auto& entry : result.trace)
        if (!best || entry.mean_f1 > best->mean_f1 ||
            (entry.mean_f1 == best->mean_f1 && entry.n_features < best->n_features))
            best = &entry;
    result.selected = best->features;
    result.best_score = best->mean_f1;
    return result;
}

}  // namespace traitsense::modelsel
