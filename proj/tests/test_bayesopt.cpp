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
#include <random>

#include "traitsense/bayesopt.hpp"
#include "traitsense/rng.hpp"

using namespace traitsense;
using namespace traitsense::bayesopt;

namespace {

SearchSpace unit_square() {
    return {{{"x", ParamType::Real, 0.0, 1.0}, {"y", ParamType::Real, 0.0, 1.0}}};
}

/// Negated quadratic with its maximum (value 0) at (0.3, 0.7).
double neg_quadratic(std::span<const double> x) {
    double dx = x[0] - 0.3, dy = x[1] - 0.7;
    return -(dx * dx + dy * dy);
}

}  // namespace

TEST_CASE("search space validation and mapping") {
    SearchSpace bad_order{{{"a", ParamType::Real, 2.0, 1.0}}};
    CHECK_THROWS(bad_order.validate());
    SearchSpace bad_log{{{"a", ParamType::RealLog, 0.0, 1.0}}};
    CHECK_THROWS(bad_log.validate());
    CHECK_THROWS(SearchSpace{}.validate());

    SearchSpace space{{{"n", ParamType::Int, 50, 500},
                       {"lr", ParamType::RealLog, 0.01, 0.3},
                       {"f", ParamType::Real, 0.1, 1.0}}};
    space.validate();
    auto x = space.from_unit(std::vector<double>{0.5, 0.0, 1.0});
    CHECK(x[0] == doctest::Approx(275.0));  // rounded int
    CHECK(x[0] == std::round(x[0]));
    CHECK(x[1] == doctest::Approx(0.01));
    CHECK(x[2] == doctest::Approx(1.0));
    auto u = space.to_unit(x);
    CHECK(u[1] == doctest::Approx(0.0));
    CHECK(u[2] == doctest::Approx(1.0));

    auto j = space.config_json(x);
    CHECK(j["n"].is_number_integer());
    CHECK(j["lr"].is_number_float());
}

TEST_CASE("gp interpolates noise-free observations") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 12; ++i) {
        std::vector<double> x = {u(rng), u(rng)};
        y.push_back(neg_quadratic(x) * 10.0 + 3.0);
        X.push_back(std::move(x));
    }
    GpSurrogate gp;
    gp.fit(X, y, {}, 7);
    for (std::size_t i = 0; i < X.size(); ++i) {
        auto [mu, var] = gp.mean_var(X[i]);
        CHECK(std::abs(mu - y[i]) < 10.0 * gp.jitter() * (std::abs(y[i]) + 1.0));
        CHECK(var >= 0.0);
    }
    CHECK(gp.lengthscales().size() == 2);
    CHECK(std::isfinite(gp.log_marginal_likelihood()));
}

TEST_CASE("expected improvement is nonnegative and vanishes at observed points") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 10; ++i) {
        std::vector<double> x = {u(rng), u(rng)};
        y.push_back(neg_quadratic(x));
        X.push_back(std::move(x));
    }
    GpSurrogate gp;
    gp.fit(X, y, {}, 1);
    double best = *std::max_element(y.begin(), y.end());
    double floor = 1e-10 * gp.signal_variance_raw();

    for (const auto& x : X) {
        auto [mu, var] = gp.mean_var(x);
        double ei = expected_improvement(mu, var, best, floor);
        CHECK(ei >= 0.0);
        CHECK(ei <= 1e-6);
    }
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x = {u(rng), u(rng)};
        auto [mu, var] = gp.mean_var(x);
        CHECK(expected_improvement(mu, var, best, floor) >= 0.0);
    }
}

TEST_CASE("budget equal to the initial design returns its best point") {
    BoOptions opts;
    opts.budget = 10;
    opts.init_points = 10;
    opts.seed = 5;
    auto result = bayes_opt(unit_square(), neg_quadratic, opts);
    CHECK(result.trace.size() == 10);
    double best = -1e9;
    for (const auto& t : result.trace) best = std::max(best, t.score);
    CHECK(result.best_score == doctest::Approx(best));
    BoOptions under;
    under.budget = 5;
    under.init_points = 10;
    CHECK_THROWS(bayes_opt(unit_square(), neg_quadratic, under));
}

TEST_CASE("optimizer approaches the quadratic optimum") {
    std::vector<double> bests;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        BoOptions opts;
        opts.budget = 40;
        opts.seed = seed;
        auto result = bayes_opt(unit_square(), neg_quadratic, opts);
        bests.push_back(result.best_score);
        CHECK(result.trace.size() == 40);
        for (const auto& t : result.trace) {
            CHECK(t.config[0] >= 0.0);
            CHECK(t.config[0] <= 1.0);
            CHECK(t.config[1] >= 0.0);
            CHECK(t.config[1] <= 1.0);
        }
    }
    std::sort(bests.begin(), bests.end());
    CHECK(bests[2] >= -0.05);  // median within 0.05 of the optimum value 0
}

TEST_CASE("integer dimensions evaluate and report rounded values") {
    SearchSpace space{{{"n", ParamType::Int, 1, 9}}};
    std::vector<double> seen;
    BoOptions opts;
    opts.budget = 12;
    opts.init_points = 6;
    opts.seed = 2;
    auto result = bayes_opt(
        space,
        [&](std::span<const double> x) {
            seen.push_back(x[0]);
            return -std::abs(x[0] - 5.0);
        },
        opts);
    for (double v : seen) CHECK(v == std::round(v));
    CHECK(result.best_config[0] == std::round(result.best_config[0]));
}

TEST_CASE("non-finite objective values are absorbed as worst observed") {
    BoOptions opts;
    opts.budget = 18;
    opts.init_points = 8;
    opts.seed = 3;
    int calls = 0;
    auto result = bayes_opt(
        unit_square(),
        [&](std::span<const double> x) {
            ++calls;
            if (calls % 4 == 0) return std::nan("");
            return neg_quadratic(x);
        },
        opts);
    CHECK(result.trace.size() == 18);
    int nonfinite = 0;
    for (const auto& t : result.trace) nonfinite += t.finite ? 0 : 1;
    CHECK(nonfinite > 0);
    CHECK(std::isfinite(result.best_score));
}

TEST_CASE("same seed reproduces the full trace") {
    BoOptions opts;
    opts.budget = 20;
    opts.seed = 13;
    auto a = bayes_opt(unit_square(), neg_quadratic, opts);
    auto b = bayes_opt(unit_square(), neg_quadratic, opts);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].config == b.trace[i].config);
        CHECK(a.trace[i].score == b.trace[i].score);
    }
}
