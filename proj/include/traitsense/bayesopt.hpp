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

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "traitsense/parallel.hpp"

namespace traitsense::bayesopt {

enum class ParamType { Int, Real, RealLog };

struct ParamDef {
    std::string name;
    ParamType type = ParamType::Real;
    double lo = 0.0;
    double hi = 1.0;
};

/// Hyperparameter box. Log-scaled dimensions need strictly positive bounds.
struct SearchSpace {
    std::vector<ParamDef> dims;

    void validate() const;
    std::vector<double> to_unit(std::span<const double> x) const;
    /// Unit cube -> native values, with Int dimensions rounded.
    std::vector<double> from_unit(std::span<const double> u) const;
    nlohmann::json config_json(std::span<const double> x) const;
};

/// Matern 5/2 ARD Gaussian process on [0,1]^d with profiled signal variance
/// and a fixed diagonal jitter. Lengthscales are chosen by multi-start
/// gradient-free maximization of the log marginal likelihood.
class GpSurrogate {
public:
    struct Options {
        double jitter = 1e-6;
        int restarts = 32;
        int pattern_iters = 8;
    };

    void fit(const std::vector<std::vector<double>>& X_unit, const std::vector<double>& y, const Options& opts,
             std::uint64_t seed);

    /// Posterior mean and variance on the observed-score scale.
    std::pair<double, double> mean_var(std::span<const double> x_unit) const;

    double log_marginal_likelihood() const { return best_lml_; }
    const std::vector<double>& lengthscales() const { return lengthscales_; }
    double signal_variance() const { return signal_var_; }
    /// Signal variance on the observed-score scale.
    double signal_variance_raw() const { return signal_var_ * y_scale_ * y_scale_; }
    double jitter() const { return opts_.jitter; }

private:
    double lml_for(const std::vector<double>& lengthscales, std::vector<double>* alpha_out) const;

    std::vector<std::vector<double>> X_;
    std::vector<double> y_std_;      // standardized observations
    double y_mean_ = 0.0, y_scale_ = 1.0;
    std::vector<double> lengthscales_;
    std::vector<double> alpha_;      // C^{-1} y_std
    std::vector<double> chol_;       // lower Cholesky of the correlation matrix, row-major
    double signal_var_ = 1.0;        // profiled, standardized scale
    double best_lml_ = 0.0;
    Options opts_;
};

/// Expected improvement for maximization; clamped to 0 where the posterior
/// is numerically certain so already-observed points score no improvement.
double expected_improvement(double mean, double var, double best, double certainty_floor = 0.0);

struct BoOptions {
    int budget = 40;
    int init_points = 10;  // Latin hypercube
    int candidates = 1024;
    int neighborhood = 8;  // perturbations of the incumbent
    GpSurrogate::Options gp;
    std::uint64_t seed = 0;
    par::Exec exec = par::Exec::Serial;
};

struct BoTraceEntry {
    int iteration = 0;
    std::vector<double> config;  // native values, ints rounded
    double score = 0.0;
    bool finite = true;
};

struct BoResult {
    std::vector<double> best_config;
    double best_score = 0.0;
    std::vector<BoTraceEntry> trace;
};

using Objective = std::function<double(std::span<const double>)>;

/// Sequential model-based maximization of `objective` over the space.
/// Non-finite objective values are recorded as such and stand in as the
/// worst observed score for the surrogate.
BoResult bayes_opt(const SearchSpace& space, const Objective& objective, const BoOptions& opts);

}  // namespace traitsense::bayesopt
