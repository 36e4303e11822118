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
#include <string>
#include <string_view>

namespace traitsense {

/// Proleptic Gregorian calendar date.
struct CivilDate {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const CivilDate&) const = default;
};

struct CivilDateTime {
    CivilDate date;
    int hour = 0;
    int minute = 0;
    double second = 0.0;
};

/// Days since 1970-01-01.
std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t z);

/// 0 = Monday ... 6 = Sunday.
int weekday_index(const CivilDate& d);
bool is_weekend(const CivilDate& d);

CivilDate parse_date(std::string_view s);          // "YYYY-MM-DD"
std::string format_date(const CivilDate& d);

/// Parses an ISO-8601 timestamp with an explicit UTC designator or offset
/// ("2021-03-01T08:00:00Z", "2021-03-01T09:00:00+01:00") to epoch seconds.
std::int64_t parse_timestamp(std::string_view s);
/// Canonical form: "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(std::int64_t epoch_utc);

/// Wall-clock zone used for all calendar logic (weekday/weekend split,
/// night windows, daily bucketing). The toolchain here has no C++20 tzdb,
/// so the supported zones are scoped: "UTC", fixed offsets ("UTC+05:30",
/// "+01:00", "-08:00") and "Europe/London" with its statutory DST rule
/// (BST between 01:00 UTC on the last Sundays of March and October).
class TimeZone {
public:
    TimeZone() = default;

    static TimeZone utc();
    static TimeZone parse(const std::string& name);

    /// Seconds east of UTC in effect at the given instant.
    int offset_at(std::int64_t epoch_utc) const;

    CivilDateTime to_local(std::int64_t epoch_utc) const;
    CivilDate local_date(std::int64_t epoch_utc) const;
    double local_hour(std::int64_t epoch_utc) const;

    /// Local wall time -> UTC instant (two-pass offset resolution).
    std::int64_t from_local(const CivilDate& date, double hour) const;

    const std::string& name() const { return name_; }

private:
    enum class Rule { Fixed, London };
    Rule rule_ = Rule::Fixed;
    int fixed_offset_s_ = 0;
    std::string name_ = "UTC";
};

}  // namespace traitsense
