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

// Test-only exhaustive oracle for small classification trees: minimizes the
// leaf-weighted Gini loss over every feature/threshold/structure combination
// up to a depth bound. Losses are exact fractions so equality checks against
// a fitted tree are not epsilon-based. Independent of the production split
// search: it re-sorts, re-partitions and re-scores from scratch.

#include <algorithm>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "traitsense/matrix.hpp"
#include "traitsense/trees.hpp"

namespace tree_oracle {

struct Frac {
    long long num = 0;
    long long den = 1;
};

inline Frac reduce(Frac f) {
    long long g = std::gcd(f.num, f.den);
    if (g > 1) {
        f.num /= g;
        f.den /= g;
    }
    return f;
}

inline Frac frac_add(Frac a, Frac b) { return reduce({a.num * b.den + b.num * a.den, a.den * b.den}); }
inline bool frac_less(Frac a, Frac b) { return a.num * b.den < b.num * a.den; }
inline bool frac_eq(Frac a, Frac b) { return a.num * b.den == b.num * a.den; }

/// n_l * gini(leaf) = (n^2 - sum c_k^2) / n.
inline Frac leaf_loss(std::span<const int> y, int k, const std::vector<std::size_t>& rows) {
    std::vector<long long> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t r : rows) counts[static_cast<std::size_t>(y[r])] += 1;
    long long n = static_cast<long long>(rows.size());
    long long sq = 0;
    for (long long c : counts) sq += c * c;
    return reduce({n * n - sq, n});
}

inline Frac best_loss(const traitsense::Matrix& X, std::span<const int> y, int k,
                      const std::vector<std::size_t>& rows, int depth) {
    Frac best = leaf_loss(y, k, rows);
    if (depth == 0 || rows.size() < 2) return best;
    for (std::size_t f = 0; f < X.cols; ++f) {
        std::vector<std::size_t> sorted = rows;
        std::sort(sorted.begin(), sorted.end(),
                  [&](std::size_t a, std::size_t b) { return X.at(a, f) < X.at(b, f); });
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            if (X.at(sorted[i], f) == X.at(sorted[i + 1], f)) continue;
            std::vector<std::size_t> left(sorted.begin(), sorted.begin() + static_cast<long>(i) + 1);
            std::vector<std::size_t> right(sorted.begin() + static_cast<long>(i) + 1, sorted.end());
            Frac cand = frac_add(best_loss(X, y, k, left, depth - 1), best_loss(X, y, k, right, depth - 1));
            if (frac_less(cand, best)) best = cand;
        }
    }
    return best;
}

/// Loss of a fitted tree, computed by routing the rows through it.
inline Frac fitted_loss(const traitsense::trees::Tree& tree, const traitsense::Matrix& X, std::span<const int> y,
                        int k) {
    std::vector<std::vector<std::size_t>> leaf_rows(tree.nodes.size());
    for (std::size_t r = 0; r < X.rows; ++r) {
        std::size_t node = 0;
        while (!tree.nodes[node].is_leaf())
            node = X.at(r, static_cast<std::size_t>(tree.nodes[node].feature)) <= tree.nodes[node].threshold
                       ? static_cast<std::size_t>(tree.nodes[node].left)
                       : static_cast<std::size_t>(tree.nodes[node].right);
        leaf_rows[node].push_back(r);
    }
    Frac total{0, 1};
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (tree.nodes[i].is_leaf() && !leaf_rows[i].empty()) total = frac_add(total, leaf_loss(y, k, leaf_rows[i]));
    return total;
}

// Fixture families where the greedy optimum coincides with the global one:
// pure labels, planted stumps, and axis-aligned AND regions that a depth-2
// tree separates exactly.
struct Fixture {
    traitsense::Matrix X;
    std::vector<int> y;
};

inline Fixture pure_fixture(std::uint64_t seed, std::size_t n, std::size_t d) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    Fixture fx{traitsense::Matrix(n, d), std::vector<int>(n, 1)};
    for (auto& v : fx.X.data) v = u(rng);
    return fx;
}

inline Fixture stump_fixture(std::uint64_t seed, std::size_t n, std::size_t d) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    Fixture fx{traitsense::Matrix(n, d), std::vector<int>(n)};
    for (auto& v : fx.X.data) v = u(rng);
    std::size_t f = rng() % d;
    double cut = u(rng) * 0.5;
    for (std::size_t i = 0; i < n; ++i) fx.y[i] = fx.X.at(i, f) > cut ? 1 : 0;
    return fx;
}

inline Fixture and_fixture(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    Fixture fx{traitsense::Matrix(n, 2), std::vector<int>(n)};
    for (auto& v : fx.X.data) v = u(rng);
    for (std::size_t i = 0; i < n; ++i) fx.y[i] = (fx.X.at(i, 0) > 0.1 && fx.X.at(i, 1) > -0.2) ? 1 : 0;
    return fx;
}

inline std::vector<Fixture> oracle_fixture_suite() {
    std::vector<Fixture> fixtures;
    for (std::uint64_t s : {11u, 22u, 33u, 44u}) fixtures.push_back(pure_fixture(s, 12 + s % 19, 1 + s % 3));
    for (std::uint64_t s : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u}) fixtures.push_back(stump_fixture(s, 10 + s * 2, 1 + s % 3));
    for (std::uint64_t s : {101u, 102u, 104u, 105u, 106u, 107u}) fixtures.push_back(and_fixture(s, 30));
    return fixtures;
}

}  // namespace tree_oracle
