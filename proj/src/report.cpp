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
#include "traitsense/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "traitsense/csv.hpp"

namespace traitsense::report {
namespace {

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

double DensityCurve::integral() const {
    double acc = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        acc += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
    return acc;
}

DensityCurve kde(std::span<const double> values, std::optional<double> bandwidth, int grid_size) {
    if (values.size() < 2) throw std::runtime_error("kde needs at least 2 values");
    const double n = static_cast<double>(values.size());

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= (n - 1.0);
    if (var <= 0.0) throw std::runtime_error("kde: zero variance");
    const double sd = std::sqrt(var);

    double h;
    if (bandwidth) {
        h = *bandwidth;
        if (h <= 0.0) throw std::runtime_error("kde: bandwidth must be positive");
    } else {
        std::vector<double> sorted(values.begin(), values.end());
        double iqr = targets::percentile(sorted, 0.75) - targets::percentile(sorted, 0.25);
        double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
        h = 0.9 * spread * std::pow(n, -0.2);
    }

    auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *mn_it - 3.0 * h;
    const double hi = *mx_it + 3.0 * h;

    DensityCurve curve;
    curve.bandwidth = h;
    curve.grid.resize(static_cast<std::size_t>(grid_size));
    curve.density.resize(static_cast<std::size_t>(grid_size));
    const double step = (hi - lo) / static_cast<double>(grid_size - 1);
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * M_PI));
    for (int i = 0; i < grid_size; ++i) {
        double g = lo + step * i;
        double acc = 0.0;
        for (double v : values) {
            double z = (g - v) / h;
            acc += std::exp(-0.5 * z * z);
        }
        curve.grid[static_cast<std::size_t>(i)] = g;
        curve.density[static_cast<std::size_t>(i)] = norm * acc;
    }
    return curve;
}

ReferenceStats ReferenceStats::load(std::istream& in) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header || header->fields != std::vector<std::string>{"trait", "mean", "sd", "provenance"})
        throw std::runtime_error("bad reference stats header, expected 'trait,mean,sd,provenance'");
    ReferenceStats out;
    while (auto row = reader.next()) {
        if (row->fields.size() != 4) throw std::runtime_error("line " + std::to_string(row->line) + ": expected 4 fields");
        Entry e;
        e.trait = targets::parse_trait(row->fields[0]);
        if (!row->fields[1].empty()) {
            e.mean = std::stod(row->fields[1]);
            if (*e.mean < 10.0 || *e.mean > 50.0)
                throw std::runtime_error("line " + std::to_string(row->line) + ": reference mean outside [10,50]");
        }
        if (!row->fields[2].empty()) e.sd = std::stod(row->fields[2]);
        e.provenance = row->fields[3];
        out.entries.push_back(std::move(e));
    }
    return out;
}

const ReferenceStats::Entry* ReferenceStats::find(targets::Trait t) const {
    for (const auto& e : entries)
        if (e.trait == t) return &e;
    return nullptr;
}

std::vector<ComparisonRow> compare_population(std::span<const targets::TraitScores> cohort,
                                              const ReferenceStats& reference) {
    if (cohort.size() < 2) throw std::runtime_error("compare_population needs at least 2 users");
    std::vector<const targets::TraitScores*> sorted;
    for (const auto& s : cohort) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->user_id < b->user_id; });

    std::vector<ComparisonRow> rows;
    for (targets::Trait t : targets::kTraitOrder) {
        const auto* ref = reference.find(t);
        if (!ref || !ref->mean) continue;
        double sum = 0.0;
        for (const auto* s : sorted) sum += static_cast<double>(s->score[static_cast<std::size_t>(t)]);
        double cohort_mean = sum / static_cast<double>(sorted.size());

        ComparisonRow row;
        row.trait = t;
        row.cohort_mean = cohort_mean;
        row.reference_mean = *ref->mean;
        row.difference = cohort_mean - *ref->mean;
        row.direction = std::abs(row.difference) < 1.0 ? "similar" : (row.difference > 0.0 ? "higher" : "lower");
        if (ref->sd) {
            double var = 0.0;
            for (const auto* s : sorted) {
                double d = static_cast<double>(s->score[static_cast<std::size_t>(t)]) - cohort_mean;
                var += d * d;
            }
            var /= static_cast<double>(sorted.size() - 1);
            double se = std::sqrt(var / static_cast<double>(sorted.size()));
            if (se > 0.0) row.z_score = row.difference / se;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string TableArtifact::to_csv() const {
    std::string out = csv::join(header) + "\n";
    for (const auto& row : rows) out += csv::join(row) + "\n";
    return out;
}

nlohmann::json TableArtifact::to_json() const {
    nlohmann::json jrows = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json jr = nlohmann::json::object();
        for (std::size_t i = 0; i < header.size(); ++i) jr[header[i]] = i < row.size() ? row[i] : "";
        jrows.push_back(std::move(jr));
    }
    return nlohmann::json{{"columns", header}, {"rows", jrows}};
}

std::string TableArtifact::to_markdown() const {
    std::vector<std::size_t> width(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());

    auto emit = [&](const std::vector<std::string>& cells) {
        std::string line = "|";
        for (std::size_t i = 0; i < header.size(); ++i) {
            std::string cell = i < cells.size() ? cells[i] : "";
            line += " " + cell + std::string(width[i] - cell.size(), ' ') + " |";
        }
        return line + "\n";
    };
    std::string out = emit(header);
    out += "|";
    for (std::size_t i = 0; i < header.size(); ++i) out += " " + std::string(width[i], '-') + " |";
    out += "\n";
    for (const auto& row : rows) out += emit(row);
    return out;
}

TableArtifact results_table(std::span<const modelsel::CVReport> reports) {
    // Column key: scheme x model.
    const std::vector<std::pair<std::string, std::string>> columns = {
        {"binary", "rf"}, {"binary", "gbt"}, {"ternary", "rf"}, {"ternary", "gbt"}};
    std::map<std::string, std::map<std::pair<std::string, std::string>, double>> cells;
    for (const auto& r : reports) {
        auto key = std::make_pair(r.scheme, r.model);
        auto& per_trait = cells[r.trait];
        if (per_trait.count(key))
            throw std::runtime_error("duplicate report for " + r.trait + "/" + r.scheme + "/" + r.model);
        per_trait[key] = r.mean_f1;
    }

    TableArtifact table;
    table.header = {"trait", "binary_rf", "binary_gbt", "multiclass_rf", "multiclass_gbt"};
    if (reports.empty()) return table;
    for (targets::Trait t : targets::kTraitOrder) {
        auto it = cells.find(targets::trait_name(t));
        std::vector<std::string> row = {targets::trait_name(t)};
        for (const auto& col : columns) {
            if (it != cells.end() && it->second.count(col))
                row.push_back(fixed2(it->second.at(col)));
            else
                row.push_back("");
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

TableArtifact importance_table(std::span<const ImportanceEntry> entries) {
    TableArtifact table;
    table.header = {"scheme", "model", "trait", "first", "second", "third"};
    for (const auto& e : entries) {
        std::vector<std::string> row = {e.scheme, e.model, e.trait};
        for (std::size_t i = 0; i < 3; ++i)
            row.push_back(i < e.ranked_features.size() ? e.ranked_features[i] : "");
        table.rows.push_back(std::move(row));
    }
    return table;
}

TableArtifact comparison_table(std::span<const ComparisonRow> rows) {
    TableArtifact table;
    table.header = {"trait", "cohort_mean", "reference_mean", "difference", "direction", "z_score"};
    for (const auto& r : rows) {
        table.rows.push_back({targets::trait_name(r.trait), fixed2(r.cohort_mean), fixed2(r.reference_mean),
                              fixed2(r.difference), r.direction, r.z_score ? fixed2(*r.z_score) : ""});
    }
    return table;
}

}  // namespace traitsense::report
