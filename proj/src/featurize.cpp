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
#include "traitsense/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace traitsense::featurize {
namespace {

constexpr int kMetricCount = 28;

// Per-day value of one catalog metric; nullopt when undefined on that day.
std::optional<double> metric_value(const DailySummary& d, int metric) {
    if (metric < kKindSlots) return d.duration_s[static_cast<std::size_t>(metric)];
    if (metric < 2 * kKindSlots) return static_cast<double>(d.count[static_cast<std::size_t>(metric - kKindSlots)]);
    switch (metric) {
        case 14: return d.distance_m;
        case 15: return d.floors_ascended ? std::optional<double>(*d.floors_ascended) : std::nullopt;
        case 16: return d.floors_descended ? std::optional<double>(*d.floors_descended) : std::nullopt;
        case 17: return d.steps ? std::optional<double>(static_cast<double>(*d.steps)) : std::nullopt;
        case 18: return d.sleep ? std::optional<double>(d.sleep->duration_h) : std::nullopt;
        case 19: return d.sleep ? std::optional<double>(d.sleep->asleep_hour) : std::nullopt;
        case 20: return d.sleep ? std::optional<double>(d.sleep->wake_hour) : std::nullopt;
        case 21: return d.longest_untouched_s;
        case 22: return static_cast<double>(d.total_event_count);
        case 23: return d.active_pace_mps;
        case 24: return d.cycling_duration_pct;
        case 25: return d.physical_duration_pct;
        case 26: return d.stationary_duration_pct;
        case 27: return d.walking_duration_pct;
    }
    throw std::logic_error("metric index out of range");
}

}  // namespace

SyntheticKind synthetic_kind(ActivityKind kind) {
    return (kind == ActivityKind::Running || kind == ActivityKind::Cycling) ? SyntheticKind::Physical
                                                                            : SyntheticKind::NonPhysical;
}

const char* kind_slot_name(int slot) {
    switch (slot) {
        case 0: return "stationary";
        case 1: return "walking";
        case 2: return "running";
        case 3: return "cycling";
        case 4: return "automotive";
        case kPhysicalSlot: return "physical";
        case kNonPhysicalSlot: return "nonphysical";
    }
    return "?";
}

const char* context_name(DayContext c) {
    switch (c) {
        case DayContext::Weekday: return "weekday";
        case DayContext::Weekend: return "weekend";
        case DayContext::Overall: return "overall";
    }
    return "?";
}

std::optional<SleepRecord> infer_sleep(std::span<const ActivityEvent> user_events, const TimeZone& tz,
                                       const NightWindow& window, const CivilDate& waking_day) {
    CivilDate evening = civil_from_days(days_from_civil(waking_day) - 1);
    const std::int64_t win_start = tz.from_local(evening, window.start_hour);
    const std::int64_t win_end = tz.from_local(waking_day, window.end_hour);
    if (win_end <= win_start) return std::nullopt;

    bool evidence = false;
    std::vector<std::pair<std::int64_t, std::int64_t>> covered;
    for (const auto& e : user_events) {
        if (e.start_utc >= win_start - 86400 && e.start_utc <= win_end + 86400) evidence = true;
        if (e.kind == ActivityKind::Stationary) continue;
        std::int64_t s = std::max(e.start_utc, win_start);
        std::int64_t t = std::min(e.start_utc + static_cast<std::int64_t>(std::llround(e.duration_s)), win_end);
        if (t > s) covered.push_back({s, t});
    }
    if (!evidence) return std::nullopt;

    std::sort(covered.begin(), covered.end());
    // Longest uncovered stretch; ties go to the earliest.
    std::int64_t cursor = win_start, best_start = win_start, best_len = 0;
    for (const auto& [s, t] : covered) {
        if (s > cursor && s - cursor > best_len) {
            best_len = s - cursor;
            best_start = cursor;
        }
        cursor = std::max(cursor, t);
    }
    if (win_end > cursor && win_end - cursor > best_len) {
        best_len = win_end - cursor;
        best_start = cursor;
    }

    SleepRecord rec;
    rec.date = waking_day;
    if (best_len == 0) {
        rec.asleep_hour = window.start_hour;
        rec.wake_hour = window.start_hour;
        rec.duration_h = 0.0;
        return rec;
    }
    rec.asleep_hour = tz.local_hour(best_start);
    rec.wake_hour = tz.local_hour(best_start + best_len);
    rec.duration_h = static_cast<double>(best_len) / 3600.0;
    return rec;
}

DailySummary aggregate_daily(std::span<const ActivityEvent> day_events, const DailyMetrics* metrics,
                             const std::string& user_id, const CivilDate& date, std::optional<SleepRecord> sleep) {
    DailySummary d;
    d.user_id = user_id;
    d.date = date;
    d.sleep = std::move(sleep);
    for (const auto& e : day_events) {
        auto slot = static_cast<std::size_t>(e.kind);
        d.duration_s[slot] += e.duration_s;
        d.count[slot] += 1;
        std::size_t synth = synthetic_kind(e.kind) == SyntheticKind::Physical ? kPhysicalSlot : kNonPhysicalSlot;
        d.duration_s[synth] += e.duration_s;
        d.count[synth] += 1;
        d.total_event_count += 1;
    }
    if (metrics) {
        d.distance_m = metrics->distance_m;
        d.floors_ascended = metrics->floors_ascended;
        d.floors_descended = metrics->floors_descended;
        d.steps = metrics->steps;
        d.longest_untouched_s = metrics->longest_untouched_s;
    }

    const double moving = d.duration_s[1] + d.duration_s[2] + d.duration_s[3];  // walking + running + cycling
    if (d.distance_m) d.active_pace_mps = moving > 0 ? *d.distance_m / moving : 0.0;

    const double total = d.duration_s[0] + d.duration_s[1] + d.duration_s[2] + d.duration_s[3] + d.duration_s[4];
    const double non_stationary = total - d.duration_s[0];
    d.cycling_duration_pct = non_stationary > 0 ? d.duration_s[3] / non_stationary : 0.0;
    d.physical_duration_pct = non_stationary > 0 ? d.duration_s[static_cast<std::size_t>(kPhysicalSlot)] / non_stationary : 0.0;
    d.walking_duration_pct = non_stationary > 0 ? d.duration_s[1] / non_stationary : 0.0;
    d.stationary_duration_pct = total > 0 ? d.duration_s[0] / total : 0.0;
    return d;
}

std::vector<DailySummary> summarize_days(std::span<const ActivityEvent> user_events,
                                         std::span<const DailyMetrics> user_metrics, const std::string& user_id,
                                         const TimeZone& tz, const NightWindow& window) {
    std::map<CivilDate, std::vector<ActivityEvent>> by_day;
    for (const auto& e : user_events)
        if (e.user_id == user_id) by_day[tz.local_date(e.start_utc)].push_back(e);
    std::map<CivilDate, const DailyMetrics*> metric_by_day;
    for (const auto& m : user_metrics)
        if (m.user_id == user_id) metric_by_day[m.date] = &m;

    std::set<CivilDate> days;
    for (const auto& [d, _] : by_day) days.insert(d);
    for (const auto& [d, _] : metric_by_day) days.insert(d);

    std::vector<ActivityEvent> own_events;
    for (const auto& e : user_events)
        if (e.user_id == user_id) own_events.push_back(e);

    std::vector<DailySummary> out;
    out.reserve(days.size());
    for (const auto& day : days) {
        auto ev_it = by_day.find(day);
        auto mt_it = metric_by_day.find(day);
        auto sleep = infer_sleep(own_events, tz, window, day);
        out.push_back(aggregate_daily(
            ev_it != by_day.end() ? std::span<const ActivityEvent>(ev_it->second) : std::span<const ActivityEvent>{},
            mt_it != metric_by_day.end() ? mt_it->second : nullptr, user_id, day, std::move(sleep)));
    }
    return out;
}

const std::vector<std::string>& metric_catalog() {
    static const std::vector<std::string> metrics = [] {
        std::vector<std::string> m;
        for (int slot = 0; slot < kKindSlots; ++slot) m.push_back(std::string(kind_slot_name(slot)) + "_duration");
        for (int slot = 0; slot < kKindSlots; ++slot) m.push_back(std::string(kind_slot_name(slot)) + "_count");
        m.insert(m.end(), {"distance", "floors_ascended", "floors_descended", "steps", "sleep_duration", "asleep_hour",
                           "wake_hour", "longest_untouched", "total_event_count", "active_pace", "cycling_duration_pct",
                           "physical_duration_pct", "stationary_duration_pct", "walking_duration_pct"});
        return m;
    }();
    return metrics;
}

const std::vector<std::string>& feature_catalog() {
    static const std::vector<std::string> features = [] {
        std::vector<std::string> f;
        for (const auto& metric : metric_catalog())
            for (DayContext c : kContexts) f.push_back(metric + "_" + context_name(c));
        return f;
    }();
    return features;
}

FeatureVector summarize_user(std::span<const DailySummary> days) {
    if (days.empty()) throw std::runtime_error("summarize_user: no daily summaries");
    FeatureVector out;
    out.user_id = days.front().user_id;
    out.values.assign(feature_catalog().size(), std::nullopt);

    for (int metric = 0; metric < kMetricCount; ++metric) {
        std::array<double, 3> sum{};
        std::array<int, 3> n{};
        for (const auto& d : days) {
            auto v = metric_value(d, metric);
            if (!v) continue;
            int ctx = is_weekend(d.date) ? 1 : 0;
            sum[static_cast<std::size_t>(ctx)] += *v;
            n[static_cast<std::size_t>(ctx)] += 1;
            sum[2] += *v;
            n[2] += 1;
        }
        for (int c = 0; c < 3; ++c)
            if (n[static_cast<std::size_t>(c)] > 0)
                out.values[static_cast<std::size_t>(metric * 3 + c)] =
                    sum[static_cast<std::size_t>(c)] / n[static_cast<std::size_t>(c)];
    }
    return out;
}

FeatureMatrix build_matrix(std::span<const FeatureVector> vectors) {
    if (vectors.size() < 2) throw std::runtime_error("build_matrix needs at least 2 users");
    const auto& catalog = feature_catalog();
    const std::size_t n = vectors.size();

    FeatureMatrix out;
    for (const auto& v : vectors) {
        if (v.values.size() != catalog.size()) throw std::runtime_error("feature vector does not match catalog");
        out.user_ids.push_back(v.user_id);
    }

    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < catalog.size(); ++j) {
        std::size_t missing = 0;
        for (const auto& v : vectors) missing += v.values[j] ? 0 : 1;
        if (missing * 2 > n) {
            out.dropped_columns.push_back(catalog[j]);
        } else {
            kept.push_back(j);
            out.column_names.push_back(catalog[j]);
        }
    }

    out.values = Matrix(n, kept.size());
    for (std::size_t jj = 0; jj < kept.size(); ++jj) {
        std::size_t j = kept[jj];
        double sum = 0.0;
        std::size_t cnt = 0;
        for (const auto& v : vectors)
            if (v.values[j]) {
                sum += *v.values[j];
                ++cnt;
            }
        double mean = cnt > 0 ? sum / static_cast<double>(cnt) : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (vectors[i].values[j]) {
                out.values.at(i, jj) = *vectors[i].values[j];
            } else {
                out.values.at(i, jj) = mean;
                out.imputed.push_back({i, jj});
            }
        }
    }
    return out;
}

std::vector<FeatureVector> featurize_cohort(const ingest::CohortDataset& cohort, const TimeZone& tz,
                                            const NightWindow& window, par::Exec exec) {
    std::vector<FeatureVector> out(cohort.modelable_users.size());
    par::for_each_index(
        cohort.modelable_users.size(),
        [&](std::size_t i) {
            const auto& user = cohort.modelable_users[i];
            auto days = summarize_days(cohort.events, cohort.metrics, user, tz, window);
            out[i] = summarize_user(days);
        },
        exec);
    return out;
}

}  // namespace traitsense::featurize
