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

#include <array>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "traitsense/ingest.hpp"

namespace traitsense::targets {

enum class Trait { EXT = 0, AGR, CON, NEU, OPE };
inline constexpr int kTraits = 5;
inline constexpr std::array<Trait, 5> kTraitOrder = {Trait::EXT, Trait::AGR, Trait::CON, Trait::NEU, Trait::OPE};

const char* trait_name(Trait t);
Trait parse_trait(const std::string& s);

/// Item-to-trait assignment with polarity. 10 items per trait; polarity +1
/// scores the item as-is, -1 scores it reversed (6 - item).
struct ScoringKey {
    struct Item {
        Trait trait = Trait::EXT;
        int polarity = 1;
    };
    std::array<Item, 50> items{};

    /// CSV columns: item_index (1-based), trait, polarity (+1 / -1).
    static ScoringKey load(std::istream& in);
    /// Balanced built-in key: items cycle EXT..OPE, five +1 and five -1 per trait.
    static ScoringKey builtin();
};

struct TraitScores {
    std::string user_id;
    std::array<int, kTraits> score{};  // each in [10, 50]
};

TraitScores score_bfi(const ingest::BfiResponse& response, const ScoringKey& key);

/// Linear-interpolation quantile: rank h = (n-1)p on the ascending sort.
double percentile(std::vector<double> values, double p);

enum class LabelScheme { Binary, Ternary };
const char* scheme_name(LabelScheme s);
LabelScheme parse_scheme(const std::string& s);
inline int class_count(LabelScheme s) { return s == LabelScheme::Binary ? 2 : 3; }

struct LabelSet {
    LabelScheme scheme = LabelScheme::Binary;
    Trait trait = Trait::EXT;
    std::vector<double> thresholds;  // {p50} or {p33, p67}
    std::vector<std::string> user_ids;
    std::vector<int> labels;  // aligned with user_ids
};

/// Cohort-percentile discretization. Binary: 1 iff value > p50 (ties at the
/// threshold go to the lower class). Ternary: 0 | 1 | 2 at p33 / p67 with the
/// same tie rule. Throws when all values are identical.
LabelSet discretize(const std::vector<std::pair<std::string, double>>& scores, LabelScheme scheme, Trait trait);

}  // namespace traitsense::targets
