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

#include <cmath>
#include <random>
#include <sstream>

#include "traitsense/report.hpp"

using namespace traitsense;
using namespace traitsense::report;
using targets::Trait;

namespace {

/// n users whose integer scores hit the requested mean exactly.
std::vector<targets::TraitScores> cohort_with_means(double ext, double agr, double con, double neu, double ope) {
    auto scores_for = [](double mean) {
        // mean has two decimals; 100 users of floor/ceil values reproduce it.
        int lo = static_cast<int>(std::floor(mean));
        int n_hi = static_cast<int>(std::llround((mean - lo) * 100));
        std::vector<int> out;
        for (int i = 0; i < 100; ++i) out.push_back(i < n_hi ? lo + 1 : lo);
        return out;
    };
    auto e = scores_for(ext), a = scores_for(agr), c = scores_for(con), n = scores_for(neu), o = scores_for(ope);
    std::vector<targets::TraitScores> cohort(100);
    for (int i = 0; i < 100; ++i) {
        cohort[static_cast<std::size_t>(i)].user_id = "u" + std::to_string(1000 + i);
        cohort[static_cast<std::size_t>(i)].score = {e[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(i)],
                                                     c[static_cast<std::size_t>(i)], n[static_cast<std::size_t>(i)],
                                                     o[static_cast<std::size_t>(i)]};
    }
    return cohort;
}

ReferenceStats bbc_like() {
    std::istringstream in(
        "trait,mean,sd,provenance\n"
        "EXT,,,ref\n"
        "AGR,37.4,,ref\n"
        "CON,,,ref\n"
        "NEU,29.7,,ref\n"
        "OPE,36.7,,ref\n");
    return ReferenceStats::load(in);
}

modelsel::CVReport cv(const char* trait, const char* scheme, const char* model, double mean) {
    modelsel::CVReport r;
    r.trait = trait;
    r.scheme = scheme;
    r.model = model;
    r.mean_f1 = mean;
    return r;
}

}  // namespace

TEST_CASE("kde errors on degenerate input") {
    std::vector<double> flat(10, 30.0);
    CHECK_THROWS_WITH_AS(kde(flat), doctest::Contains("zero variance"), std::runtime_error);
    CHECK_THROWS(kde(std::vector<double>{1.0}));
}

TEST_CASE("kde integrates to one") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(30.0, 6.0);
    std::vector<double> values;
    for (int i = 0; i < 144; ++i) values.push_back(std::round(normal(rng)));
    auto curve = kde(values);
    CHECK(curve.integral() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(curve.grid.size() == 256);
    CHECK(std::is_sorted(curve.grid.begin(), curve.grid.end()));
    for (double d : curve.density) CHECK(d >= 0.0);
    CHECK(curve.bandwidth > 0.0);

    std::uniform_real_distribution<double> uni(10, 50);
    std::vector<double> flat_sample;
    for (int i = 0; i < 500; ++i) flat_sample.push_back(uni(rng));
    CHECK(kde(flat_sample).integral() == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("kde peak sits near the mode of a standard normal sample") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> values;
    for (int i = 0; i < 1000; ++i) values.push_back(normal(rng));
    auto curve = kde(values);
    std::size_t peak = 0;
    for (std::size_t i = 1; i < curve.density.size(); ++i)
        if (curve.density[i] > curve.density[peak]) peak = i;
    CHECK(std::abs(curve.grid[peak]) < 0.2);
}

TEST_CASE("bandwidth override is honored") {
    std::vector<double> values = {1, 2, 3, 4, 5, 6};
    auto curve = kde(values, 0.75);
    CHECK(curve.bandwidth == 0.75);
    CHECK(curve.grid.front() == doctest::Approx(1.0 - 2.25));
    CHECK(curve.grid.back() == doctest::Approx(6.0 + 2.25));
    CHECK_THROWS(kde(values, -1.0));
}

TEST_CASE("population comparison reproduces the reference deltas") {
    auto cohort = cohort_with_means(30.0, 43.74, 30.0, 21.27, 41.51);
    auto rows = compare_population(cohort, bbc_like());
    REQUIRE(rows.size() == 3);  // only traits with a reference mean

    auto row_of = [&](Trait t) {
        for (const auto& r : rows)
            if (r.trait == t) return r;
        REQUIRE(false);
        return rows[0];
    };
    auto ope = row_of(Trait::OPE);
    CHECK(std::llround(ope.difference * 100) == 481);
    CHECK(ope.direction == "higher");
    auto neu = row_of(Trait::NEU);
    CHECK(std::llround(neu.difference * 100) == -843);
    CHECK(neu.direction == "lower");
    auto agr = row_of(Trait::AGR);
    CHECK(std::llround(agr.difference * 100) == 634);
    CHECK(agr.direction == "higher");
}

TEST_CASE("similar direction within one point, z only with a reference sd") {
    auto cohort = cohort_with_means(30.0, 37.0, 30.0, 29.7, 36.2);
    std::istringstream in(
        "trait,mean,sd,provenance\n"
        "AGR,37.4,,r\n"
        "NEU,29.7,6.2,r\n"
        "OPE,36.7,,r\n");
    auto rows = compare_population(cohort, ReferenceStats::load(in));
    for (const auto& r : rows) {
        CHECK(r.direction == "similar");
        if (r.trait == Trait::NEU)
            CHECK(r.z_score.has_value());
        else
            CHECK_FALSE(r.z_score.has_value());
    }
}

TEST_CASE("results table lays out trait rows and scheme/model columns") {
    std::vector<modelsel::CVReport> reports = {
        cv("EXT", "binary", "rf", 0.78),   cv("EXT", "binary", "gbt", 0.61),
        cv("EXT", "ternary", "rf", 0.39),  cv("EXT", "ternary", "gbt", 0.392),
        cv("CON", "binary", "gbt", 0.75),
    };
    auto table = results_table(reports);
    REQUIRE(table.rows.size() == 5);
    CHECK(table.rows[0] == std::vector<std::string>{"EXT", "0.78", "0.61", "0.39", "0.39"});
    CHECK(table.rows[2] == std::vector<std::string>{"CON", "", "0.75", "", ""});
    CHECK(table.rows[4] == std::vector<std::string>{"OPE", "", "", "", ""});

    auto empty = results_table({});
    CHECK(empty.rows.empty());
    CHECK(!empty.header.empty());

    std::vector<modelsel::CVReport> dup = {cv("EXT", "binary", "rf", 0.5), cv("EXT", "binary", "rf", 0.6)};
    CHECK_THROWS_WITH_AS(results_table(dup), doctest::Contains("duplicate report"), std::runtime_error);
}

TEST_CASE("importance table pads missing ranks") {
    std::vector<ImportanceEntry> entries = {
        {"binary", "rf", "EXT", {"stationary_duration_weekday", "automotive_count_weekday", "automotive_duration_weekday"}},
        {"binary", "gbt", "AGR", {"floors_ascended_weekend", "stationary_count_weekday"}},
        {"ternary", "rf", "OPE", {}},
    };
    auto table = importance_table(entries);
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0][3] == "stationary_duration_weekday");
    CHECK(table.rows[0][5] == "automotive_duration_weekday");
    CHECK(table.rows[1][5] == "");
    CHECK(table.rows[2][3] == "");
}

TEST_CASE("table rendering is a pure function of its input") {
    std::vector<modelsel::CVReport> reports = {cv("NEU", "binary", "rf", 0.614999)};
    auto t1 = results_table(reports);
    auto t2 = results_table(reports);
    CHECK(t1.to_csv() == t2.to_csv());
    CHECK(t1.to_markdown() == t2.to_markdown());
    CHECK(t1.to_json() == t2.to_json());
    CHECK(t1.to_csv().find("0.61") != std::string::npos);
    // Markdown columns stay aligned.
    auto md = t1.to_markdown();
    std::size_t first = md.find('\n');
    std::size_t second = md.find('\n', first + 1);
    CHECK(first == second - first - 1);
}
