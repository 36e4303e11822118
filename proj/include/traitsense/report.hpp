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

#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "traitsense/modelsel.hpp"
#include "traitsense/targets.hpp"

namespace traitsense::report {

struct DensityCurve {
    std::string label;
    std::vector<double> grid;     // ascending, spans [min-3h, max+3h]
    std::vector<double> density;  // >= 0, trapezoid integral ~ 1
    double bandwidth = 0.0;

    double integral() const;  // trapezoid over the grid
};

/// Gaussian-kernel density estimate. Bandwidth defaults to Silverman's rule
/// 0.9 * min(sd, IQR/1.34) * n^(-1/5); zero-variance input is an error.
DensityCurve kde(std::span<const double> values, std::optional<double> bandwidth = std::nullopt, int grid_size = 256);

struct ReferenceStats {
    struct Entry {
        targets::Trait trait = targets::Trait::EXT;
        std::optional<double> mean;
        std::optional<double> sd;
        std::string provenance;
    };
    std::vector<Entry> entries;

    /// CSV columns: trait, mean, sd, provenance (mean/sd may be blank).
    static ReferenceStats load(std::istream& in);
    const Entry* find(targets::Trait t) const;
};

struct ComparisonRow {
    targets::Trait trait = targets::Trait::EXT;
    double cohort_mean = 0.0;
    double reference_mean = 0.0;
    double difference = 0.0;         // cohort - reference, exactly
    std::string direction;           // higher | lower | similar (|diff| < 1)
    std::optional<double> z_score;   // only when the reference sd is known
};

/// Cohort means accumulate left-to-right over users sorted by id, so the
/// difference column is bit-stable. Traits without a reference mean are
/// omitted.
std::vector<ComparisonRow> compare_population(std::span<const targets::TraitScores> cohort,
                                              const ReferenceStats& reference);

struct TableArtifact {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

/// Trait rows x (Binary/Multiclass x RF/GBT) mean-F1 cells to 2 decimals;
/// missing combinations stay blank, duplicates are an error.
TableArtifact results_table(std::span<const modelsel::CVReport> reports);

struct ImportanceEntry {
    std::string scheme;
    std::string model;
    std::string trait;
    std::vector<std::string> ranked_features;
};

/// Top-3 feature names per (scheme, model, trait) row.
TableArtifact importance_table(std::span<const ImportanceEntry> entries);

TableArtifact comparison_table(std::span<const ComparisonRow> rows);

}  // namespace traitsense::report
