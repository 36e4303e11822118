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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "traitsense/ingest.hpp"
#include "traitsense/matrix.hpp"
#include "traitsense/parallel.hpp"
#include "traitsense/time.hpp"

namespace traitsense::featurize {

using ingest::ActivityEvent;
using ingest::ActivityKind;
using ingest::DailyMetrics;

enum class SyntheticKind { Physical, NonPhysical };

/// Running and Cycling form the Physical label; everything else NonPhysical.
SyntheticKind synthetic_kind(ActivityKind kind);

/// Slot layout for per-kind duration/count arrays: the five base kinds in
/// enum order, then the two synthetic labels.
inline constexpr int kKindSlots = 7;
inline constexpr int kPhysicalSlot = 5;
inline constexpr int kNonPhysicalSlot = 6;
const char* kind_slot_name(int slot);

enum class DayContext { Weekday = 0, Weekend, Overall };
inline constexpr std::array<DayContext, 3> kContexts = {DayContext::Weekday, DayContext::Weekend, DayContext::Overall};
const char* context_name(DayContext c);

/// Night hours scanned for sleep: starts on the evening before the waking
/// day and ends on the waking day itself.
struct NightWindow {
    double start_hour = 22.0;  // on the previous day
    double end_hour = 10.0;    // on the waking day
    double length_h() const { return 24.0 - start_hour + end_hour; }
};

struct SleepRecord {
    CivilDate date;  // waking day
    double asleep_hour = 0.0;
    double wake_hour = 0.0;
    double duration_h = 0.0;
};

struct DailySummary {
    std::string user_id;
    CivilDate date;
    std::array<double, kKindSlots> duration_s{};
    std::array<int, kKindSlots> count{};
    int total_event_count = 0;
    std::optional<double> distance_m;
    std::optional<int> floors_ascended;
    std::optional<int> floors_descended;
    std::optional<long> steps;
    std::optional<double> longest_untouched_s;
    std::optional<SleepRecord> sleep;
    std::optional<double> active_pace_mps;  // set iff distance is known
    double cycling_duration_pct = 0.0;
    double physical_duration_pct = 0.0;
    double stationary_duration_pct = 0.0;
    double walking_duration_pct = 0.0;
};

/// Longest stretch of the night window not covered by a non-stationary
/// event (explicit stationary time and gaps both count as candidate sleep).
/// Returns nothing when the user has no events within a day of the window.
std::optional<SleepRecord> infer_sleep(std::span<const ActivityEvent> user_events, const TimeZone& tz,
                                       const NightWindow& window, const CivilDate& waking_day);

/// Sums one local calendar day of one user. Events are attributed to the
/// local day containing their start; metrics fields stay unset when the day
/// has no DailyMetrics record.
DailySummary aggregate_daily(std::span<const ActivityEvent> day_events, const DailyMetrics* metrics,
                             const std::string& user_id, const CivilDate& date, std::optional<SleepRecord> sleep);

/// All daily summaries of one user over the union of its event days and
/// metric days, with sleep inference applied per day.
std::vector<DailySummary> summarize_days(std::span<const ActivityEvent> user_events,
                                         std::span<const DailyMetrics> user_metrics, const std::string& user_id,
                                         const TimeZone& tz, const NightWindow& window = {});

/// The 28-metric catalog; feature names are `<metric>_<context>` giving
/// 84 canonical columns (catalog version 1).
const std::vector<std::string>& metric_catalog();
const std::vector<std::string>& feature_catalog();
inline constexpr const char* kCatalogVersion = "1";

struct FeatureVector {
    std::string user_id;
    std::vector<std::optional<double>> values;  // aligned with feature_catalog()
};

/// Per-context arithmetic means over the user's daily summaries. Metrics
/// undefined on a day (absent device record, no sleep inferred) average
/// over the days where they exist; a context with no qualifying day stays
/// missing.
FeatureVector summarize_user(std::span<const DailySummary> days);

struct FeatureMatrix {
    std::vector<std::string> user_ids;
    std::vector<std::string> column_names;
    Matrix values;
    std::vector<std::pair<std::size_t, std::size_t>> imputed;  // (row, column) cells filled with column means
    std::vector<std::string> dropped_columns;                  // missing for more than half the users
};

FeatureMatrix build_matrix(std::span<const FeatureVector> vectors);

/// Full featurize stage: modelable users only, parallel across users.
std::vector<FeatureVector> featurize_cohort(const ingest::CohortDataset& cohort, const TimeZone& tz,
                                            const NightWindow& window = {},
                                            par::Exec exec = par::default_exec());

}  // namespace traitsense::featurize
