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
#include "traitsense/time.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace traitsense {
namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

int parse_int_field(std::string_view s, const char* what) {
    if (!all_digits(s)) throw std::runtime_error(std::string("unparseable ") + what + ": '" + std::string(s) + "'");
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static const int md[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return md[m - 1];
}

/// Last Sunday of the given month, as days since epoch.
std::int64_t last_sunday(int year, int month) {
    CivilDate last{year, month, days_in_month(year, month)};
    std::int64_t z = days_from_civil(last);
    // weekday_index: 0 = Monday ... 6 = Sunday
    int wd = weekday_index(last);
    int back = (wd == 6) ? 0 : wd + 1;
    return z - back;
}

}  // namespace

std::int64_t days_from_civil(const CivilDate& d) {
    // Howard Hinnant's algorithm.
    int y = d.year;
    const unsigned m = static_cast<unsigned>(d.month);
    const unsigned dd = static_cast<unsigned>(d.day);
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + dd - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

int weekday_index(const CivilDate& d) {
    std::int64_t z = days_from_civil(d);
    // 1970-01-01 was a Thursday (index 3).
    return static_cast<int>(((z % 7) + 7 + 3) % 7);
}

bool is_weekend(const CivilDate& d) {
    int w = weekday_index(d);
    return w == 5 || w == 6;
}

CivilDate parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        throw std::runtime_error("unparseable date: '" + std::string(s) + "'");
    CivilDate d;
    d.year = parse_int_field(s.substr(0, 4), "date year");
    d.month = parse_int_field(s.substr(5, 2), "date month");
    d.day = parse_int_field(s.substr(8, 2), "date day");
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month))
        throw std::runtime_error("unparseable date: '" + std::string(s) + "'");
    return d;
}

std::string format_date(const CivilDate& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

std::int64_t parse_timestamp(std::string_view s) {
    // YYYY-MM-DDTHH:MM:SS followed by 'Z' or +-HH:MM.
    if (s.size() < 20 || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' || s[16] != ':')
        throw std::runtime_error("unparseable timestamp: '" + std::string(s) + "'");
    CivilDate date = parse_date(s.substr(0, 10));
    int hh = parse_int_field(s.substr(11, 2), "timestamp hour");
    int mm = parse_int_field(s.substr(14, 2), "timestamp minute");
    int ss = parse_int_field(s.substr(17, 2), "timestamp second");
    if (hh > 23 || mm > 59 || ss > 60)
        throw std::runtime_error("unparseable timestamp: '" + std::string(s) + "'");

    std::string_view tail = s.substr(19);
    int offset_s = 0;
    if (tail == "Z" || tail == "z") {
        offset_s = 0;
    } else if ((tail[0] == '+' || tail[0] == '-') && tail.size() == 6 && tail[3] == ':') {
        int oh = parse_int_field(tail.substr(1, 2), "timestamp offset");
        int om = parse_int_field(tail.substr(4, 2), "timestamp offset");
        offset_s = oh * 3600 + om * 60;
        if (tail[0] == '-') offset_s = -offset_s;
    } else {
        throw std::runtime_error("unparseable timestamp: '" + std::string(s) + "' (missing UTC designator)");
    }
    return days_from_civil(date) * 86400 + hh * 3600 + mm * 60 + ss - offset_s;
}

std::string format_timestamp(std::int64_t epoch_utc) {
    std::int64_t z = epoch_utc / 86400;
    std::int64_t rem = epoch_utc % 86400;
    if (rem < 0) {
        rem += 86400;
        z -= 1;
    }
    CivilDate d = civil_from_days(z);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", d.year, d.month, d.day,
                  static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60));
    return buf;
}

TimeZone TimeZone::utc() {
    TimeZone tz;
    tz.rule_ = Rule::Fixed;
    tz.fixed_offset_s_ = 0;
    tz.name_ = "UTC";
    return tz;
}

TimeZone TimeZone::parse(const std::string& name) {
    if (name.empty() || name == "UTC" || name == "utc") return utc();
    if (name == "Europe/London") {
        TimeZone tz;
        tz.rule_ = Rule::London;
        tz.name_ = name;
        return tz;
    }
    std::string off = name;
    if (off.rfind("UTC", 0) == 0) off = off.substr(3);
    if (!off.empty() && (off[0] == '+' || off[0] == '-')) {
        int sign = off[0] == '-' ? -1 : 1;
        off = off.substr(1);
        int h = 0, m = 0;
        if (off.size() == 5 && off[2] == ':') {
            h = parse_int_field(off.substr(0, 2), "zone offset");
            m = parse_int_field(off.substr(3, 2), "zone offset");
        } else if (off.size() <= 2 && all_digits(off)) {
            h = parse_int_field(off, "zone offset");
        } else {
            throw std::runtime_error("unsupported time zone: '" + name + "'");
        }
        TimeZone tz;
        tz.rule_ = Rule::Fixed;
        tz.fixed_offset_s_ = sign * (h * 3600 + m * 60);
        tz.name_ = name;
        return tz;
    }
    throw std::runtime_error("unsupported time zone: '" + name +
                             "' (supported: UTC, Europe/London, fixed offsets like +01:00)");
}

int TimeZone::offset_at(std::int64_t epoch_utc) const {
    if (rule_ == Rule::Fixed) return fixed_offset_s_;
    // Europe/London: BST (UTC+1) from 01:00 UTC on the last Sunday of March
    // until 01:00 UTC on the last Sunday of October.
    CivilDate approx = civil_from_days(epoch_utc >= 0 ? epoch_utc / 86400 : (epoch_utc - 86399) / 86400);
    int year = approx.year;
    std::int64_t bst_start = last_sunday(year, 3) * 86400 + 3600;
    std::int64_t bst_end = last_sunday(year, 10) * 86400 + 3600;
    return (epoch_utc >= bst_start && epoch_utc < bst_end) ? 3600 : 0;
}

CivilDateTime TimeZone::to_local(std::int64_t epoch_utc) const {
    std::int64_t shifted = epoch_utc + offset_at(epoch_utc);
    std::int64_t z = shifted / 86400;
    std::int64_t rem = shifted % 86400;
    if (rem < 0) {
        rem += 86400;
        z -= 1;
    }
    CivilDateTime out;
    out.date = civil_from_days(z);
    out.hour = static_cast<int>(rem / 3600);
    out.minute = static_cast<int>((rem / 60) % 60);
    out.second = static_cast<double>(rem % 60);
    return out;
}

CivilDate TimeZone::local_date(std::int64_t epoch_utc) const {
    return to_local(epoch_utc).date;
}

double TimeZone::local_hour(std::int64_t epoch_utc) const {
    CivilDateTime l = to_local(epoch_utc);
    return l.hour + l.minute / 60.0 + l.second / 3600.0;
}

std::int64_t TimeZone::from_local(const CivilDate& date, double hour) const {
    std::int64_t as_utc = days_from_civil(date) * 86400 + static_cast<std::int64_t>(std::llround(hour * 3600.0));
    std::int64_t guess = as_utc - offset_at(as_utc);
    return as_utc - offset_at(guess);
}

}  // namespace traitsense
