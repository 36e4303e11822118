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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "traitsense/featurize.hpp"
#include "traitsense/ingest.hpp"
#include "traitsense/parallel.hpp"
#include "traitsense/targets.hpp"

namespace traitsense::synth {

/// A known trait-to-behavior coefficient planted into the generated cohort.
/// beta is in metric units per trait-score point, applied around the scale
/// midpoint 30; sigma_day is additional per-day Gaussian noise on the metric.
struct PlantedEffect {
    targets::Trait trait = targets::Trait::EXT;
    std::string metric;  // catalog metric name
    featurize::DayContext context = featurize::DayContext::Overall;
    double beta = 0.0;
    double sigma_day = 0.0;

    nlohmann::json to_json() const;
};

struct TraitDist {
    double mean = 30.0;
    double sd = 6.0;
};

struct SynthConfig {
    int n_users = 144;
    int n_days = 60;
    CivilDate start_date{2021, 3, 1};
    std::string tz_name = "Europe/London";
    std::array<TraitDist, targets::kTraits> traits = {
        TraitDist{30.0, 6.0},  // EXT
        TraitDist{34.0, 5.0},  // AGR
        TraitDist{32.0, 6.0},  // CON
        TraitDist{27.0, 6.0},  // NEU
        TraitDist{36.0, 5.0},  // OPE
    };
    std::vector<PlantedEffect> effects;
    /// Multiplies every base-rate and effect noise sd.
    double noise_scale = 1.0;
    std::uint64_t seed = 1;

    void validate() const;

    /// Planted-effect suites used by the acceptance fixtures:
    ///   "low"    — default effects, noise_scale 0.5
    ///   "medium" — default effects, noise_scale 2.5
    ///   "null"   — no effects (pure noise), noise_scale 1
    static SynthConfig preset(const std::string& name, std::uint64_t seed);
    /// The five default effects (one behavioral signature per trait).
    static std::vector<PlantedEffect> default_effects();

    static SynthConfig from_json(const nlohmann::json& j);
};

struct SynthCohort {
    std::vector<ingest::ActivityEvent> events;
    std::vector<ingest::DailyMetrics> metrics;
    std::vector<ingest::BfiResponse> responses;
    std::vector<targets::TraitScores> truth;
    /// What the generator put into each user-day, as daily-summary fields;
    /// the oracle the featurize pipeline is checked against.
    std::vector<featurize::DailySummary> intended;
    nlohmann::json manifest;
};

/// Deterministic under seed: per-user substreams, outputs in user order.
SynthCohort gen_cohort(const SynthConfig& config, const targets::ScoringKey& key,
                       par::Exec exec = par::default_exec());

/// Re-scores the generated responses and compares with the ground truth.
/// Returns true when all users match; mismatching user ids are appended to
/// `mismatched` when provided.
bool score_roundtrip_check(const SynthCohort& cohort, const targets::ScoringKey& key,
                           std::vector<std::string>* mismatched = nullptr);

/// Writes events.csv, daily_metrics.csv, bfi.csv and manifest.json.
void write_cohort(const std::string& dir, const SynthCohort& cohort);

}  // namespace traitsense::synth
