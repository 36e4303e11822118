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
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "traitsense/time.hpp"

namespace traitsense::ingest {

enum class ActivityKind { Stationary = 0, Walking, Running, Cycling, Automotive };
inline constexpr int kBaseKinds = 5;

/// Case-insensitive; "driving" is an alias for Automotive. Throws on
/// anything outside the five base kinds.
ActivityKind parse_activity_kind(const std::string& s);
const char* activity_kind_name(ActivityKind k);

/// One phone-classified activity interval.
struct ActivityEvent {
    std::string user_id;
    ActivityKind kind = ActivityKind::Stationary;
    std::int64_t start_utc = 0;  // epoch seconds
    double duration_s = 0.0;
};

/// One per-day device metrics record.
struct DailyMetrics {
    std::string user_id;
    CivilDate date;
    double distance_m = 0.0;
    int floors_ascended = 0;
    int floors_descended = 0;
    long steps = 0;
    double longest_untouched_s = 0.0;
};

/// One questionnaire response: 50 items, each in [1,5].
struct BfiResponse {
    std::string user_id;
    std::array<int, 50> items{};
};

enum class EventFormat { Csv, JsonLines };

// Parsers. Errors carry the offending 1-based line number.
std::vector<ActivityEvent> parse_events(std::istream& in, EventFormat format = EventFormat::Csv);
std::vector<DailyMetrics> parse_daily_metrics(std::istream& in);
std::vector<BfiResponse> parse_bfi(std::istream& in);

// Canonical writers (inverse of the parsers for valid data).
void write_events(std::ostream& out, const std::vector<ActivityEvent>& events);
void write_daily_metrics(std::ostream& out, const std::vector<DailyMetrics>& metrics);
void write_bfi(std::ostream& out, const std::vector<BfiResponse>& responses);

struct ValidateOptions {
    int min_days = 7;  // minimum distinct event days for a modelable user
    TimeZone tz = TimeZone::utc();
};

struct CohortDataset {
    std::vector<ActivityEvent> events;
    std::vector<DailyMetrics> metrics;
    std::vector<BfiResponse> responses;
    std::vector<std::string> modelable_users;  // sorted
};

struct ValidationReport {
    std::size_t n_events = 0;
    std::size_t n_users_seen = 0;
    std::size_t n_modelable = 0;
    std::string date_min, date_max;
    std::vector<std::string> warnings;

    /// e.g. "3282 events, 144 users"
    std::string summary() const;
    nlohmann::json to_json() const;
};

/// Keeps only users that have a BFI response and at least min_days distinct
/// event days; excluded users stay in the raw lists but are dropped from
/// modelable_users, with one warning each. Throws if no user survives.
std::pair<CohortDataset, ValidationReport> validate_cohort(std::vector<ActivityEvent> events,
                                                           std::vector<DailyMetrics> metrics,
                                                           std::vector<BfiResponse> responses,
                                                           const ValidateOptions& opts = {});

}  // namespace traitsense::ingest
