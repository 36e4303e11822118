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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "traitsense/targets.hpp"

using namespace traitsense;
using namespace traitsense::targets;

namespace {

ingest::BfiResponse response_of(const std::string& user, const std::array<int, 50>& items) {
    ingest::BfiResponse r;
    r.user_id = user;
    r.items = items;
    return r;
}

}  // namespace

TEST_CASE("builtin key is balanced") {
    auto key = ScoringKey::builtin();
    std::array<int, kTraits> count{}, positive{};
    for (const auto& item : key.items) {
        count[static_cast<std::size_t>(item.trait)] += 1;
        if (item.polarity == 1) positive[static_cast<std::size_t>(item.trait)] += 1;
    }
    for (int t = 0; t < kTraits; ++t) {
        CHECK(count[static_cast<std::size_t>(t)] == 10);
        CHECK(positive[static_cast<std::size_t>(t)] == 5);
    }
}

TEST_CASE("shipped key file matches the builtin key") {
    std::ifstream f("data/bfi_key.csv");
    REQUIRE(f.good());
    auto key = ScoringKey::load(f);
    auto builtin = ScoringKey::builtin();
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(key.items[i].trait == builtin.items[i].trait);
        CHECK(key.items[i].polarity == builtin.items[i].polarity);
    }
}

TEST_CASE("score_bfi: all 3s give 30 per trait under any key") {
    std::array<int, 50> items;
    items.fill(3);
    auto scores = score_bfi(response_of("u", items), ScoringKey::builtin());
    for (int s : scores.score) CHECK(s == 30);
}

TEST_CASE("score_bfi extremes") {
    auto key = ScoringKey::builtin();
    std::array<int, 50> items;
    // Positively keyed items 5, reverse keyed 1: every trait maxes at 50.
    for (std::size_t i = 0; i < 50; ++i) items[i] = key.items[i].polarity == 1 ? 5 : 1;
    auto hi = score_bfi(response_of("u", items), key);
    for (int s : hi.score) CHECK(s == 50);

    // All-positive EXT keying with all items 1 gives the floor of 10.
    ScoringKey allpos = key;
    for (auto& item : allpos.items)
        if (item.trait == Trait::EXT) item.polarity = 1;
    items.fill(1);
    auto lo = score_bfi(response_of("u", items), allpos);
    CHECK(lo.score[static_cast<std::size_t>(Trait::EXT)] == 10);
}

TEST_CASE("percentile: linear interpolation") {
    CHECK(percentile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
    CHECK(percentile({7}, 0.0) == 7);
    CHECK(percentile({7}, 0.37) == 7);
    CHECK(percentile({7}, 1.0) == 7);
    // h = 9 * 0.33 = 2.97 -> between 30 and 40.
    CHECK(percentile({10, 20, 30, 40, 50, 60, 70, 80, 90, 100}, 0.33) == doctest::Approx(39.7));
    CHECK_THROWS(percentile({}, 0.5));
    CHECK_THROWS(percentile({1.0}, 1.5));
}

TEST_CASE("percentile endpoints are min and max") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> values;
        for (int i = 0; i < 1 + static_cast<int>(rng() % 40); ++i) values.push_back(u(rng));
        auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        CHECK(percentile(values, 0.0) == *mn);
        CHECK(percentile(values, 1.0) == *mx);
    }
}

TEST_CASE("binary discretization splits at the median") {
    std::vector<std::pair<std::string, double>> scores = {{"u1", 10}, {"u2", 20}, {"u3", 30}, {"u4", 40}};
    auto labels = discretize(scores, LabelScheme::Binary, Trait::EXT);
    CHECK(labels.thresholds == std::vector<double>{25.0});
    CHECK(labels.labels == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("ternary discretization: interpolated thresholds") {
    std::vector<std::pair<std::string, double>> scores;
    for (int i = 1; i <= 9; ++i) scores.push_back({"u" + std::to_string(i), static_cast<double>(i)});
    auto labels = discretize(scores, LabelScheme::Ternary, Trait::OPE);
    CHECK(labels.thresholds[0] == doctest::Approx(3.64));
    CHECK(labels.thresholds[1] == doctest::Approx(6.36));
    CHECK(labels.labels == std::vector<int>{0, 0, 0, 1, 1, 1, 2, 2, 2});
}

TEST_CASE("ties at the threshold take the lower class") {
    std::vector<std::pair<std::string, double>> scores = {{"a", 1}, {"b", 2}, {"c", 2}, {"d", 3}};
    auto labels = discretize(scores, LabelScheme::Binary, Trait::EXT);
    CHECK(labels.thresholds[0] == 2.0);
    CHECK(labels.labels == std::vector<int>{0, 0, 0, 1});
}

TEST_CASE("degenerate target errors") {
    std::vector<std::pair<std::string, double>> flat = {{"a", 5}, {"b", 5}, {"c", 5}};
    CHECK_THROWS_WITH_AS(discretize(flat, LabelScheme::Binary, Trait::EXT),
                         doctest::Contains("degenerate target: zero variance"), std::runtime_error);
    CHECK_THROWS(discretize({{"a", 1}}, LabelScheme::Binary, Trait::EXT));
}

TEST_CASE("labels are monotone in the score") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 100);
    for (auto scheme : {LabelScheme::Binary, LabelScheme::Ternary}) {
        std::vector<std::pair<std::string, double>> scores;
        for (int i = 0; i < 37; ++i) scores.push_back({"u" + std::to_string(i), std::round(u(rng))});
        auto labels = discretize(scores, scheme, Trait::CON);
        for (std::size_t a = 0; a < scores.size(); ++a)
            for (std::size_t b = 0; b < scores.size(); ++b)
                if (scores[a].second <= scores[b].second) CHECK(labels.labels[a] <= labels.labels[b]);
    }
}

TEST_CASE("labels are invariant under strictly increasing transforms") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(1, 50);
    std::vector<std::pair<std::string, double>> scores, transformed;
    for (int i = 0; i < 25; ++i) {
        double v = u(rng);
        scores.push_back({"u" + std::to_string(i), v});
        transformed.push_back({"u" + std::to_string(i), std::exp(v / 10.0) + 3.0 * v});
    }
    for (auto scheme : {LabelScheme::Binary, LabelScheme::Ternary}) {
        auto a = discretize(scores, scheme, Trait::NEU);
        auto b = discretize(transformed, scheme, Trait::NEU);
        CHECK(a.labels == b.labels);
    }
}

TEST_CASE("even count of distinct values splits evenly") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::pair<std::string, double>> scores;
        int n = 2 * (5 + static_cast<int>(rng() % 20));
        for (int i = 0; i < n; ++i) scores.push_back({"u" + std::to_string(i), static_cast<double>(rng() % 100000)});
        std::set<double> distinct;
        for (auto& [_, v] : scores) distinct.insert(v);
        if (static_cast<int>(distinct.size()) != n) continue;
        auto labels = discretize(scores, LabelScheme::Binary, Trait::AGR);
        int ones = 0;
        for (int l : labels.labels) ones += l;
        CHECK(ones == n / 2);
    }
}
