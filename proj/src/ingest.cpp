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
#include "traitsense/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "traitsense/csv.hpp"
#include "traitsense/io.hpp"

namespace traitsense::ingest {
namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& msg) {
    throw std::runtime_error("line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& s, std::size_t line, const char* what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) fail_line(line, std::string("malformed ") + what + ": '" + s + "'");
    return v;
}

long parse_long(const std::string& s, std::size_t line, const char* what) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) fail_line(line, std::string("malformed ") + what + ": '" + s + "'");
    return v;
}

void expect_header(const csv::Row& row, const std::vector<std::string>& want, const char* what) {
    if (row.fields != want) {
        std::string msg = std::string("bad ") + what + " header, expected '";
        for (std::size_t i = 0; i < want.size(); ++i) msg += (i ? "," : "") + want[i];
        msg += "'";
        fail_line(row.line, msg);
    }
}

ActivityEvent event_from_fields(const std::string& user, const std::string& activity, const std::string& start,
                                const std::string& duration, std::size_t line) {
    ActivityEvent ev;
    if (user.empty()) fail_line(line, "empty user_id");
    ev.user_id = user;
    ev.kind = [&] {
        try {
            return parse_activity_kind(activity);
        } catch (const std::exception& e) {
            fail_line(line, e.what());
        }
    }();
    try {
        ev.start_utc = parse_timestamp(start);
    } catch (const std::exception& e) {
        fail_line(line, e.what());
    }
    ev.duration_s = parse_double(duration, line, "duration");
    if (ev.duration_s < 0) fail_line(line, "negative duration");
    return ev;
}

}  // namespace

ActivityKind parse_activity_kind(const std::string& s) {
    std::string k = lower(s);
    if (k == "stationary") return ActivityKind::Stationary;
    if (k == "walking") return ActivityKind::Walking;
    if (k == "running") return ActivityKind::Running;
    if (k == "cycling") return ActivityKind::Cycling;
    if (k == "automotive" || k == "driving") return ActivityKind::Automotive;
    throw std::runtime_error("unknown activity kind: " + s);
}

const char* activity_kind_name(ActivityKind k) {
    switch (k) {
        case ActivityKind::Stationary: return "stationary";
        case ActivityKind::Walking: return "walking";
        case ActivityKind::Running: return "running";
        case ActivityKind::Cycling: return "cycling";
        case ActivityKind::Automotive: return "automotive";
    }
    return "?";
}

std::vector<ActivityEvent> parse_events(std::istream& in, EventFormat format) {
    std::vector<ActivityEvent> out;
    if (format == EventFormat::Csv) {
        csv::Reader reader(in);
        auto header = reader.next();
        if (!header) throw std::runtime_error("empty events file");
        expect_header(*header, {"user_id", "activity", "start", "duration_s"}, "events");
        while (auto row = reader.next()) {
            if (row->fields.size() != 4) fail_line(row->line, "expected 4 fields, got " + std::to_string(row->fields.size()));
            out.push_back(event_from_fields(row->fields[0], row->fields[1], row->fields[2], row->fields[3], row->line));
        }
    } else {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) fail_line(line_no, "malformed JSON object");
            for (const char* key : {"user_id", "activity", "start", "duration_s"})
                if (!j.contains(key)) fail_line(line_no, std::string("missing key '") + key + "'");
            std::string dur = j["duration_s"].is_string() ? j["duration_s"].get<std::string>()
                                                          : nlohmann::json(j["duration_s"]).dump();
            out.push_back(event_from_fields(j["user_id"].get<std::string>(), j["activity"].get<std::string>(),
                                            j["start"].get<std::string>(), dur, line_no));
        }
    }
    if (out.empty()) throw std::runtime_error("empty events file");
    return out;
}

std::vector<DailyMetrics> parse_daily_metrics(std::istream& in) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw std::runtime_error("empty daily metrics file");
    expect_header(*header, {"user_id", "date", "distance_m", "floors_up", "floors_down", "steps", "longest_untouched_s"},
                  "daily metrics");
    std::vector<DailyMetrics> out;
    std::set<std::pair<std::string, CivilDate>> seen;
    while (auto row = reader.next()) {
        if (row->fields.size() != 7) fail_line(row->line, "expected 7 fields, got " + std::to_string(row->fields.size()));
        DailyMetrics m;
        m.user_id = row->fields[0];
        if (m.user_id.empty()) fail_line(row->line, "empty user_id");
        try {
            m.date = parse_date(row->fields[1]);
        } catch (const std::exception& e) {
            fail_line(row->line, e.what());
        }
        m.distance_m = parse_double(row->fields[2], row->line, "distance");
        if (m.distance_m < 0) fail_line(row->line, "negative distance");
        m.floors_ascended = static_cast<int>(parse_long(row->fields[3], row->line, "floors_up"));
        m.floors_descended = static_cast<int>(parse_long(row->fields[4], row->line, "floors_down"));
        m.steps = parse_long(row->fields[5], row->line, "steps");
        m.longest_untouched_s = parse_double(row->fields[6], row->line, "longest_untouched_s");
        if (m.floors_ascended < 0 || m.floors_descended < 0) fail_line(row->line, "negative floors count");
        if (m.steps < 0) fail_line(row->line, "negative steps");
        if (m.longest_untouched_s < 0) fail_line(row->line, "negative longest_untouched_s");
        if (m.longest_untouched_s > 86400) fail_line(row->line, "longest_untouched_s exceeds one day");
        if (!seen.insert({m.user_id, m.date}).second)
            fail_line(row->line, "duplicate daily record for " + m.user_id + " " + format_date(m.date));
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<BfiResponse> parse_bfi(std::istream& in) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw std::runtime_error("empty BFI file");
    std::vector<std::string> want = {"user_id"};
    for (int i = 1; i <= 50; ++i) want.push_back("q" + std::to_string(i));
    expect_header(*header, want, "BFI");
    std::vector<BfiResponse> out;
    std::set<std::string> seen;
    while (auto row = reader.next()) {
        if (row->fields.size() != 51)
            fail_line(row->line, "expected 50 items, got " + std::to_string(row->fields.size() - 1));
        BfiResponse r;
        r.user_id = row->fields[0];
        if (r.user_id.empty()) fail_line(row->line, "empty user_id");
        if (!seen.insert(r.user_id).second) fail_line(row->line, "duplicate BFI response for " + r.user_id);
        for (int i = 0; i < 50; ++i) {
            long v = parse_long(row->fields[i + 1], row->line, "item");
            if (v < 1 || v > 5) fail_line(row->line, "item q" + std::to_string(i + 1) + " out of range");
            r.items[static_cast<std::size_t>(i)] = static_cast<int>(v);
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_events(std::ostream& out, const std::vector<ActivityEvent>& events) {
    out << "user_id,activity,start,duration_s\n";
    for (const auto& e : events)
        out << csv::join({e.user_id, activity_kind_name(e.kind), format_timestamp(e.start_utc),
                          io::format_double(e.duration_s)})
            << "\n";
}

void write_daily_metrics(std::ostream& out, const std::vector<DailyMetrics>& metrics) {
    out << "user_id,date,distance_m,floors_up,floors_down,steps,longest_untouched_s\n";
    for (const auto& m : metrics) {
        out << csv::join({m.user_id, format_date(m.date), io::format_double(m.distance_m),
                          std::to_string(m.floors_ascended), std::to_string(m.floors_descended),
                          std::to_string(m.steps), io::format_double(m.longest_untouched_s)})
            << "\n";
    }
}

void write_bfi(std::ostream& out, const std::vector<BfiResponse>& responses) {
    out << "user_id";
    for (int i = 1; i <= 50; ++i) out << ",q" << i;
    out << "\n";
    for (const auto& r : responses) {
        out << csv::escape(r.user_id);
        for (int v : r.items) out << ',' << v;
        out << "\n";
    }
}

std::string ValidationReport::summary() const {
    return std::to_string(n_events) + " events, " + std::to_string(n_users_seen) + " users";
}

nlohmann::json ValidationReport::to_json() const {
    return nlohmann::json{{"n_events", n_events},   {"n_users_seen", n_users_seen}, {"n_modelable", n_modelable},
                          {"date_min", date_min},   {"date_max", date_max},         {"warnings", warnings},
                          {"summary", summary()}};
}

std::pair<CohortDataset, ValidationReport> validate_cohort(std::vector<ActivityEvent> events,
                                                           std::vector<DailyMetrics> metrics,
                                                           std::vector<BfiResponse> responses,
                                                           const ValidateOptions& opts) {
    ValidationReport report;
    report.n_events = events.size();

    std::set<std::string> users_seen;
    std::map<std::string, std::set<CivilDate>> event_days;
    std::int64_t tmin = 0, tmax = 0;
    bool any = false;
    for (const auto& e : events) {
        users_seen.insert(e.user_id);
        event_days[e.user_id].insert(opts.tz.local_date(e.start_utc));
        if (!any || e.start_utc < tmin) tmin = e.start_utc;
        if (!any || e.start_utc > tmax) tmax = e.start_utc;
        any = true;
    }
    for (const auto& m : metrics) users_seen.insert(m.user_id);
    report.n_users_seen = users_seen.size();
    if (any) {
        report.date_min = format_date(opts.tz.local_date(tmin));
        report.date_max = format_date(opts.tz.local_date(tmax));
    }

    std::set<std::string> with_bfi;
    for (const auto& r : responses) with_bfi.insert(r.user_id);

    CohortDataset cohort;
    for (const auto& u : users_seen) {
        if (!with_bfi.count(u)) {
            report.warnings.push_back("user " + u + " has no BFI response; excluded from modeling");
            continue;
        }
        auto it = event_days.find(u);
        std::size_t days = it == event_days.end() ? 0 : it->second.size();
        if (days < static_cast<std::size_t>(opts.min_days)) {
            report.warnings.push_back("user " + u + " has " + std::to_string(days) + " event days (< " +
                                      std::to_string(opts.min_days) + "); excluded from modeling");
            continue;
        }
        cohort.modelable_users.push_back(u);
    }

    // Overlapping events are tolerated; flag them so they are visible downstream.
    std::map<std::string, std::vector<std::pair<std::int64_t, double>>> per_user;
    for (const auto& e : events) per_user[e.user_id].push_back({e.start_utc, e.duration_s});
    for (auto& [user, spans] : per_user) {
        std::sort(spans.begin(), spans.end());
        std::size_t overlaps = 0;
        for (std::size_t i = 1; i < spans.size(); ++i)
            if (static_cast<double>(spans[i].first) < static_cast<double>(spans[i - 1].first) + spans[i - 1].second)
                ++overlaps;
        if (overlaps > 0)
            report.warnings.push_back("user " + user + " has " + std::to_string(overlaps) + " overlapping events");
    }

    report.n_modelable = cohort.modelable_users.size();
    if (cohort.modelable_users.empty()) throw std::runtime_error("no modelable users after validation");

    cohort.events = std::move(events);
    cohort.metrics = std::move(metrics);
    cohort.responses = std::move(responses);
    return {std::move(cohort), std::move(report)};
}

}  // namespace traitsense::ingest
