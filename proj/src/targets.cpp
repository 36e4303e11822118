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
#include "traitsense/targets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "traitsense/csv.hpp"

namespace traitsense::targets {

const char* trait_name(Trait t) {
    switch (t) {
        case Trait::EXT: return "EXT";
        case Trait::AGR: return "AGR";
        case Trait::CON: return "CON";
        case Trait::NEU: return "NEU";
        case Trait::OPE: return "OPE";
    }
    return "?";
}

Trait parse_trait(const std::string& s) {
    for (Trait t : kTraitOrder)
        if (s == trait_name(t)) return t;
    throw std::runtime_error("unknown trait: " + s);
}

const char* scheme_name(LabelScheme s) { return s == LabelScheme::Binary ? "binary" : "ternary"; }

LabelScheme parse_scheme(const std::string& s) {
    if (s == "binary") return LabelScheme::Binary;
    if (s == "ternary" || s == "multiclass") return LabelScheme::Ternary;
    throw std::runtime_error("unknown label scheme: " + s);
}

ScoringKey ScoringKey::load(std::istream& in) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header || header->fields != std::vector<std::string>{"item_index", "trait", "polarity"})
        throw std::runtime_error("bad scoring key header, expected 'item_index,trait,polarity'");
    ScoringKey key;
    std::array<bool, 50> seen{};
    while (auto row = reader.next()) {
        if (row->fields.size() != 3)
            throw std::runtime_error("line " + std::to_string(row->line) + ": expected 3 fields");
        int idx = std::stoi(row->fields[0]);
        if (idx < 1 || idx > 50)
            throw std::runtime_error("line " + std::to_string(row->line) + ": item_index out of range");
        if (seen[static_cast<std::size_t>(idx - 1)])
            throw std::runtime_error("line " + std::to_string(row->line) + ": duplicate item_index " + row->fields[0]);
        seen[static_cast<std::size_t>(idx - 1)] = true;
        Item item;
        item.trait = parse_trait(row->fields[1]);
        int pol = std::stoi(row->fields[2]);
        if (pol != 1 && pol != -1)
            throw std::runtime_error("line " + std::to_string(row->line) + ": polarity must be +1 or -1");
        item.polarity = pol;
        key.items[static_cast<std::size_t>(idx - 1)] = item;
    }
    for (bool s : seen)
        if (!s) throw std::runtime_error("scoring key must cover all 50 items");
    std::array<int, kTraits> per_trait{};
    for (const auto& item : key.items) ++per_trait[static_cast<std::size_t>(item.trait)];
    for (Trait t : kTraitOrder)
        if (per_trait[static_cast<std::size_t>(t)] != 10)
            throw std::runtime_error(std::string("scoring key must assign 10 items to ") + trait_name(t));
    return key;
}

ScoringKey ScoringKey::builtin() {
    ScoringKey key;
    for (int i = 0; i < 50; ++i) {
        int cycle = i / kTraits;
        key.items[static_cast<std::size_t>(i)] = {static_cast<Trait>(i % kTraits), cycle % 2 == 0 ? 1 : -1};
    }
    return key;
}

TraitScores score_bfi(const ingest::BfiResponse& response, const ScoringKey& key) {
    TraitScores out;
    out.user_id = response.user_id;
    for (std::size_t i = 0; i < 50; ++i) {
        int item = response.items[i];
        if (item < 1 || item > 5)
            throw std::runtime_error("item q" + std::to_string(i + 1) + " out of range for user " + response.user_id);
        const auto& k = key.items[i];
        out.score[static_cast<std::size_t>(k.trait)] += k.polarity == 1 ? item : 6 - item;
    }
    return out;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw std::runtime_error("percentile of empty input");
    if (p < 0.0 || p > 1.0) throw std::runtime_error("percentile fraction outside [0,1]");
    std::sort(values.begin(), values.end());
    double h = static_cast<double>(values.size() - 1) * p;
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = static_cast<std::size_t>(std::ceil(h));
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

LabelSet discretize(const std::vector<std::pair<std::string, double>>& scores, LabelScheme scheme, Trait trait) {
    if (scores.size() < 2) throw std::runtime_error("discretize needs at least 2 users");
    std::vector<double> values;
    values.reserve(scores.size());
    for (const auto& [_, v] : scores) values.push_back(v);
    if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; }))
        throw std::runtime_error("degenerate target: zero variance");

    LabelSet out;
    out.scheme = scheme;
    out.trait = trait;
    if (scheme == LabelScheme::Binary) {
        out.thresholds = {percentile(values, 0.5)};
    } else {
        out.thresholds = {percentile(values, 0.33), percentile(values, 0.67)};
    }
    for (const auto& [user, v] : scores) {
        int label = 0;
        for (double t : out.thresholds)
            if (v > t) ++label;
        out.user_ids.push_back(user);
        out.labels.push_back(label);
    }
    return out;
}

}  // namespace traitsense::targets
