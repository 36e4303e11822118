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
#include "traitsense/bayesopt.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "traitsense/rng.hpp"

namespace traitsense::bayesopt {
namespace {

constexpr double kSqrt5 = 2.23606797749978969;

double matern52(double r) {
    double s = kSqrt5 * r;
    return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

double scaled_distance(std::span<const double> a, std::span<const double> b, std::span<const double> ls) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        double t = (a[d] - b[d]) / ls[d];
        acc += t * t;
    }
    return std::sqrt(acc);
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

}  // namespace

void SearchSpace::validate() const {
    if (dims.empty()) throw std::runtime_error("search space has no dimensions");
    for (const auto& d : dims) {
        if (!(d.lo < d.hi)) throw std::runtime_error("search space '" + d.name + "': lower bound must be < upper");
        if (d.type == ParamType::RealLog && d.lo <= 0.0)
            throw std::runtime_error("search space '" + d.name + "': log-scaled bounds must be positive");
    }
}

std::vector<double> SearchSpace::to_unit(std::span<const double> x) const {
    std::vector<double> u(dims.size());
    for (std::size_t d = 0; d < dims.size(); ++d) {
        const auto& def = dims[d];
        u[d] = def.type == ParamType::RealLog
                   ? (std::log(x[d]) - std::log(def.lo)) / (std::log(def.hi) - std::log(def.lo))
                   : (x[d] - def.lo) / (def.hi - def.lo);
        u[d] = std::clamp(u[d], 0.0, 1.0);
    }
    return u;
}

std::vector<double> SearchSpace::from_unit(std::span<const double> u) const {
    std::vector<double> x(dims.size());
    for (std::size_t d = 0; d < dims.size(); ++d) {
        const auto& def = dims[d];
        double v = def.type == ParamType::RealLog
                       ? std::exp(std::log(def.lo) + u[d] * (std::log(def.hi) - std::log(def.lo)))
                       : def.lo + u[d] * (def.hi - def.lo);
        if (def.type == ParamType::Int) v = std::clamp(std::round(v), def.lo, def.hi);
        x[d] = v;
    }
    return x;
}

nlohmann::json SearchSpace::config_json(std::span<const double> x) const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t d = 0; d < dims.size(); ++d) {
        if (dims[d].type == ParamType::Int)
            j[dims[d].name] = static_cast<long long>(std::llround(x[d]));
        else
            j[dims[d].name] = x[d];
    }
    return j;
}

double GpSurrogate::lml_for(const std::vector<double>& ls, std::vector<double>* alpha_out) const {
    const auto n = static_cast<Eigen::Index>(X_.size());
    Eigen::MatrixXd C(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        C(i, i) = 1.0 + opts_.jitter;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double v = matern52(scaled_distance(X_[static_cast<std::size_t>(i)], X_[static_cast<std::size_t>(j)], ls));
            C(i, j) = v;
            C(j, i) = v;
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();

    Eigen::Map<const Eigen::VectorXd> y(y_std_.data(), n);
    Eigen::VectorXd alpha = llt.solve(y);
    double quad = y.dot(alpha);
    if (quad <= 0.0) quad = std::numeric_limits<double>::min();
    double log_det_half = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det_half += std::log(llt.matrixL()(i, i));

    // Profiled signal variance: sigma_f^2 = y' C^{-1} y / n.
    double dn = static_cast<double>(n);
    double lml = -0.5 * dn * std::log(quad / dn) - log_det_half - 0.5 * dn * (1.0 + std::log(2.0 * M_PI));
    if (alpha_out) alpha_out->assign(alpha.data(), alpha.data() + n);
    return lml;
}

void GpSurrogate::fit(const std::vector<std::vector<double>>& X_unit, const std::vector<double>& y,
                      const Options& opts, std::uint64_t seed) {
    if (X_unit.empty() || X_unit.size() != y.size()) throw std::runtime_error("GpSurrogate::fit: bad inputs");
    opts_ = opts;
    X_ = X_unit;
    const std::size_t n = y.size();
    const std::size_t d = X_[0].size();

    y_mean_ = 0.0;
    for (double v : y) y_mean_ += v;
    y_mean_ /= static_cast<double>(n);
    double var = 0.0;
    for (double v : y) var += (v - y_mean_) * (v - y_mean_);
    y_scale_ = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    if (y_scale_ <= 0.0) y_scale_ = 1.0;
    y_std_.resize(n);
    for (std::size_t i = 0; i < n; ++i) y_std_[i] = (y[i] - y_mean_) / y_scale_;

    // Multi-start lengthscale search: random restarts in log space, each
    // refined by a coordinate pattern search.
    auto rng = make_rng(derive_seed(seed, 0x69b));
    std::uniform_real_distribution<double> log_ls(std::log(0.05), std::log(2.0));

    best_lml_ = -std::numeric_limits<double>::infinity();
    std::vector<double> best_ls(d, 1.0);
    for (int restart = 0; restart < opts.restarts; ++restart) {
        std::vector<double> ls(d);
        if (restart == 0) {
            std::fill(ls.begin(), ls.end(), 0.5);  // deterministic anchor
        } else {
            for (auto& v : ls) v = std::exp(log_ls(rng));
        }
        double cur = lml_for(ls, nullptr);
        for (int it = 0; it < opts.pattern_iters; ++it) {
            bool improved = false;
            for (std::size_t dim = 0; dim < d; ++dim) {
                for (double factor : {0.6, 1.6}) {
                    std::vector<double> cand = ls;
                    cand[dim] = std::clamp(cand[dim] * factor, 0.01, 10.0);
                    double lml = lml_for(cand, nullptr);
                    if (lml > cur) {
                        cur = lml;
                        ls = std::move(cand);
                        improved = true;
                    }
                }
            }
            if (!improved) break;
        }
        if (cur > best_lml_) {
            best_lml_ = cur;
            best_ls = ls;
        }
    }

    lengthscales_ = best_ls;
    lml_for(lengthscales_, &alpha_);

    // Keep the Cholesky factor for posterior variance computations.
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd C(ni, ni);
    for (Eigen::Index i = 0; i < ni; ++i) {
        C(i, i) = 1.0 + opts_.jitter;
        for (Eigen::Index j = i + 1; j < ni; ++j) {
            double v = matern52(
                scaled_distance(X_[static_cast<std::size_t>(i)], X_[static_cast<std::size_t>(j)], lengthscales_));
            C(i, j) = v;
            C(j, i) = v;
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    Eigen::MatrixXd L = llt.matrixL();
    chol_.assign(L.data(), L.data() + n * n);  // column-major from Eigen

    Eigen::Map<const Eigen::VectorXd> ystd(y_std_.data(), ni);
    Eigen::Map<const Eigen::VectorXd> alpha(alpha_.data(), ni);
    signal_var_ = ystd.dot(alpha) / static_cast<double>(n);
}

std::pair<double, double> GpSurrogate::mean_var(std::span<const double> x_unit) const {
    const std::size_t n = X_.size();
    // The jitter counts as part of the covariance at exact matches, so the
    // posterior interpolates observed points exactly (zero residual variance).
    Eigen::VectorXd c(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        double r = scaled_distance(x_unit, X_[i], lengthscales_);
        c(static_cast<Eigen::Index>(i)) = matern52(r) + (r == 0.0 ? opts_.jitter : 0.0);
    }

    Eigen::Map<const Eigen::MatrixXd> L(chol_.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::Map<const Eigen::VectorXd> alpha(alpha_.data(), static_cast<Eigen::Index>(n));

    double mean_std = c.dot(alpha);
    Eigen::VectorXd v = L.triangularView<Eigen::Lower>().solve(c);
    double var_std = signal_var_ * (1.0 + opts_.jitter - v.squaredNorm());
    var_std = std::max(var_std, 0.0);
    return {y_mean_ + y_scale_ * mean_std, y_scale_ * y_scale_ * var_std};
}

double expected_improvement(double mean, double var, double best, double certainty_floor) {
    // Below the floor the surrogate is numerically certain about the point
    // (it has been observed), so there is no improvement left in it.
    if (var <= certainty_floor) return 0.0;
    double sigma = std::sqrt(var);
    double z = (mean - best) / sigma;
    return (mean - best) * norm_cdf(z) + sigma * norm_pdf(z);
}

BoResult bayes_opt(const SearchSpace& space, const Objective& objective, const BoOptions& opts) {
    space.validate();
    if (opts.init_points < 1) throw std::runtime_error("bayes_opt: init_points must be >= 1");
    if (opts.budget < opts.init_points + 1 && opts.budget != opts.init_points)
        throw std::runtime_error("bayes_opt: budget must be >= init_points");
    const std::size_t d = space.dims.size();

    BoResult result;
    std::vector<std::vector<double>> X_unit;
    std::vector<double> scores;        // non-finite replaced lazily
    std::vector<bool> finite_flags;

    auto evaluate = [&](const std::vector<double>& u, int iteration) {
        auto native = space.from_unit(u);
        // Evaluate at the rounded point and store its unit image so the
        // surrogate sees exactly what was scored.
        double score = objective(native);
        bool finite = std::isfinite(score);
        X_unit.push_back(space.to_unit(native));
        scores.push_back(score);
        finite_flags.push_back(finite);
        result.trace.push_back({iteration, native, score, finite});
    };

    // Latin hypercube initialization.
    auto rng = make_rng(derive_seed(opts.seed, 0x1a5));
    {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<std::vector<double>> strata(d, std::vector<double>(static_cast<std::size_t>(opts.init_points)));
        for (std::size_t dim = 0; dim < d; ++dim) {
            std::vector<int> perm(static_cast<std::size_t>(opts.init_points));
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            for (int i = 0; i < opts.init_points; ++i)
                strata[dim][static_cast<std::size_t>(i)] =
                    (static_cast<double>(perm[static_cast<std::size_t>(i)]) + unif(rng)) /
                    static_cast<double>(opts.init_points);
        }
        for (int i = 0; i < opts.init_points; ++i) {
            std::vector<double> u(d);
            for (std::size_t dim = 0; dim < d; ++dim) u[dim] = strata[dim][static_cast<std::size_t>(i)];
            evaluate(u, i);
        }
    }

    auto surrogate_scores = [&] {
        double worst = std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (finite_flags[i]) {
                worst = std::min(worst, scores[i]);
                any = true;
            }
        if (!any) worst = 0.0;
        std::vector<double> out(scores);
        for (std::size_t i = 0; i < out.size(); ++i)
            if (!finite_flags[i]) out[i] = worst;
        return out;
    };

    for (int iteration = opts.init_points; iteration < opts.budget; ++iteration) {
        auto ys = surrogate_scores();
        GpSurrogate gp;
        gp.fit(X_unit, ys, opts.gp, derive_seed(opts.seed, 0x99 + static_cast<std::uint64_t>(iteration)));

        std::size_t incumbent = 0;
        for (std::size_t i = 1; i < ys.size(); ++i)
            if (ys[i] > ys[incumbent]) incumbent = i;
        const double best_seen = ys[incumbent];

        // Candidate pool: seeded uniform draws plus perturbations of the
        // incumbent at geometrically shrinking scales, so the argmax can
        // refine right down to fine resolution near the best point.
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::normal_distribution<double> gauss;
        std::vector<std::vector<double>> cands;
        cands.reserve(static_cast<std::size_t>(opts.candidates + opts.neighborhood));
        for (int i = 0; i < opts.candidates; ++i) {
            std::vector<double> u(d);
            for (auto& v : u) v = unif(rng);
            cands.push_back(std::move(u));
        }
        for (int i = 0; i < opts.neighborhood; ++i) {
            double scale = 0.1 * std::pow(0.5, i);
            std::vector<double> u = X_unit[incumbent];
            for (auto& v : u) v = std::clamp(v + scale * gauss(rng), 0.0, 1.0);
            cands.push_back(std::move(u));
        }

        // Nugget-inclusive prediction drives the variance at observed points
        // to zero up to factorization roundoff; the floor only absorbs that.
        const double floor = 1e-10 * gp.signal_variance_raw();
        std::vector<double> ei(cands.size());
        par::for_each_index(
            cands.size(),
            [&](std::size_t i) {
                auto [mu, var] = gp.mean_var(cands[i]);
                ei[i] = expected_improvement(mu, var, best_seen, floor);
            },
            opts.exec);

        std::size_t pick = 0;
        for (std::size_t i = 1; i < ei.size(); ++i)
            if (ei[i] > ei[pick]) pick = i;
        evaluate(cands[pick], iteration);
    }

    std::size_t best = 0;
    bool found = false;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!finite_flags[i]) continue;
        if (!found || scores[i] > scores[best]) {
            best = i;
            found = true;
        }
    }
    if (!found) throw std::runtime_error("bayes_opt: objective never returned a finite score");
    result.best_config = result.trace[best].config;
    result.best_score = scores[best];
    return result;
}

}  // namespace traitsense::bayesopt
