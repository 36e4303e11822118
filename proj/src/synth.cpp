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
#include "traitsense/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "traitsense/rng.hpp"

namespace traitsense::synth {
namespace {

using featurize::DayContext;
using ingest::ActivityKind;

/// Base behavior rates at noise_scale 1: mean, per-user offset sd, per-day sd.
struct BaseRate {
    double mean, user_sd, day_sd;
};

const std::map<std::string, BaseRate>& base_rates() {
    static const std::map<std::string, BaseRate> rates = {
        {"stationary_duration", {30000.0, 360.0, 2160.0}},
        {"walking_duration", {3600.0, 400.0, 900.0}},
        {"running_duration", {600.0, 150.0, 300.0}},
        {"cycling_duration", {700.0, 75.0, 450.0}},
        {"automotive_duration", {1200.0, 300.0, 900.0}},
        {"stationary_count", {10.0, 1.0, 2.0}},
        {"walking_count", {8.0, 1.0, 2.0}},
        {"running_count", {1.2, 0.3, 0.8}},
        {"cycling_count", {1.2, 0.3, 0.8}},
        {"automotive_count", {2.0, 0.5, 1.0}},
        {"distance", {5000.0, 600.0, 1500.0}},
        {"floors_ascended", {12.0, 1.125, 6.75}},
        {"floors_descended", {12.0, 1.35, 8.1}},
        {"steps", {7000.0, 800.0, 2000.0}},
        {"longest_untouched", {28800.0, 1800.0, 3600.0}},
        {"wake_hour", {8.0, 0.0825, 0.495}},
        {"asleep_hour", {23.0, 0.08, 0.2}},
    };
    return rates;
}

bool context_matches(DayContext effect_ctx, bool weekend) {
    if (effect_ctx == DayContext::Overall) return true;
    return (effect_ctx == DayContext::Weekend) == weekend;
}

double round_seconds(double hours) { return std::round(hours * 3600.0) / 3600.0; }

/// Contributions c_j in [1,5] summing to the target score, filled greedily.
std::array<int, 10> contributions_for_score(int score) {
    std::array<int, 10> c{};
    c.fill(1);
    int rem = score - 10;
    for (auto& v : c) {
        int add = std::min(4, rem);
        v += add;
        rem -= add;
    }
    return c;
}

struct UserDayDraws {
    std::array<double, ingest::kBaseKinds> duration{};
    std::array<int, ingest::kBaseKinds> count{};
    double distance = 0.0;
    int floors_up = 0, floors_down = 0;
    long steps = 0;
    double longest_untouched = 0.0;
    double wake_hour = 8.0;
    double asleep_hour = 23.0;  // night following this day
};

class UserGenerator {
public:
    UserGenerator(const SynthConfig& cfg, const targets::TraitScores& truth, std::uint64_t seed)
        : cfg_(cfg), truth_(truth), rng_(make_rng(seed)) {
        for (const auto& [metric, rate] : base_rates())
            user_offset_[metric] = normal_(rng_) * rate.user_sd * cfg.noise_scale;
    }

    /// base + user offset + planted effects + day noise, truncated at lo.
    double draw(const std::string& metric, bool weekend, double lo, double hi) {
        const auto& rate = base_rates().at(metric);
        double v = rate.mean + user_offset_.at(metric) + normal_(rng_) * rate.day_sd * cfg_.noise_scale;
        for (const auto& e : cfg_.effects) {
            if (e.metric != metric || !context_matches(e.context, weekend)) continue;
            double trait_score = truth_.score[static_cast<std::size_t>(e.trait)];
            v += e.beta * (trait_score - 30.0);
            if (e.sigma_day > 0.0) v += normal_(rng_) * e.sigma_day * cfg_.noise_scale;
        }
        return std::clamp(v, lo, hi);
    }

    UserDayDraws draw_day(bool weekend) {
        UserDayDraws d;
        static const char* kKinds[ingest::kBaseKinds] = {"stationary", "walking", "running", "cycling", "automotive"};
        double total = 0.0;
        for (int k = 0; k < ingest::kBaseKinds; ++k) {
            double dur = std::round(draw(std::string(kKinds[k]) + "_duration", weekend, 0.0, 80000.0));
            int cnt = static_cast<int>(std::lround(draw(std::string(kKinds[k]) + "_count", weekend, 0.0, 40.0)));
            if (dur < 1.0) {
                dur = 0.0;
                cnt = 0;
            } else {
                cnt = std::max(cnt, 1);
            }
            d.duration[static_cast<std::size_t>(k)] = dur;
            d.count[static_cast<std::size_t>(k)] = cnt;
            total += dur;
        }
        if (total > 82800.0) {  // keep a day's events within 24h with room for the sleep-anchor walks
            for (auto& dur : d.duration) dur = std::round(dur * 82800.0 / total);
        }
        d.distance = std::round(draw("distance", weekend, 0.0, 60000.0));
        d.floors_up = static_cast<int>(std::lround(draw("floors_ascended", weekend, 0.0, 200.0)));
        d.floors_down = static_cast<int>(std::lround(draw("floors_descended", weekend, 0.0, 200.0)));
        d.steps = std::lround(draw("steps", weekend, 0.0, 60000.0));
        d.longest_untouched = std::round(draw("longest_untouched", weekend, 0.0, 86400.0));
        d.wake_hour = round_seconds(draw("wake_hour", weekend, 4.5, 9.7));
        d.asleep_hour = round_seconds(draw("asleep_hour", weekend, 22.2, 23.8));
        return d;
    }

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> u(lo, hi);
        return u(rng_);
    }

private:
    const SynthConfig& cfg_;
    const targets::TraitScores& truth_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_;
    std::map<std::string, double> user_offset_;
};

struct UserData {
    std::vector<ingest::ActivityEvent> events;
    std::vector<ingest::DailyMetrics> metrics;
    ingest::BfiResponse response;
    targets::TraitScores truth;
    std::vector<featurize::DailySummary> intended;
};

UserData generate_user(const SynthConfig& cfg, const TimeZone& tz, const targets::ScoringKey& key,
                       const std::string& user_id, std::uint64_t user_seed) {
    UserData out;
    auto rng = make_rng(derive_seed(user_seed, 0x7a1));
    std::normal_distribution<double> normal;

    out.truth.user_id = user_id;
    for (int t = 0; t < targets::kTraits; ++t) {
        const auto& dist = cfg.traits[static_cast<std::size_t>(t)];
        double raw = dist.mean + normal(rng) * dist.sd;
        out.truth.score[static_cast<std::size_t>(t)] = std::clamp(static_cast<int>(std::lround(raw)), 10, 50);
    }

    // Items are constructed so that scoring reproduces the drawn scores exactly.
    out.response.user_id = user_id;
    std::array<int, targets::kTraits> item_rank{};
    for (std::size_t i = 0; i < 50; ++i) {
        const auto& k = key.items[i];
        auto trait_idx = static_cast<std::size_t>(k.trait);
        auto contrib = contributions_for_score(out.truth.score[trait_idx]);
        int c = contrib[static_cast<std::size_t>(item_rank[trait_idx]++)];
        out.response.items[i] = k.polarity == 1 ? c : 6 - c;
    }

    UserGenerator gen(cfg, out.truth, derive_seed(user_seed, 0xd4a));

    double prev_asleep = 0.0;  // day 0 has no previous evening
    for (int day = 0; day < cfg.n_days; ++day) {
        CivilDate date = civil_from_days(days_from_civil(cfg.start_date) + day);
        bool weekend = is_weekend(date);
        auto draws = gen.draw_day(weekend);

        std::vector<ingest::ActivityEvent> day_events;
        auto add_event = [&](ActivityKind kind, double start_hour, double dur_s) {
            ingest::ActivityEvent e;
            e.user_id = user_id;
            e.kind = kind;
            e.start_utc = tz.from_local(date, start_hour);
            e.duration_s = std::round(dur_s);
            day_events.push_back(std::move(e));
        };

        // Sleep anchors: a walk ending right at sleep onset and a walk at
        // waking, so the night gap is exactly [asleep, wake]. A mid-morning
        // walk keeps later gaps shorter than the night's sleep.
        add_event(ActivityKind::Walking, round_seconds(draws.asleep_hour - 1.0 / 3.0), 1200.0);
        add_event(ActivityKind::Walking, draws.wake_hour, 720.0);
        bool filler = draws.wake_hour + 1.75 <= 9.9;
        if (filler) add_event(ActivityKind::Walking, round_seconds(draws.wake_hour + 1.5), 900.0);

        for (int k = 0; k < ingest::kBaseKinds; ++k) {
            auto kind = static_cast<ActivityKind>(k);
            double total = draws.duration[static_cast<std::size_t>(k)];
            int cnt = draws.count[static_cast<std::size_t>(k)];
            if (cnt == 0) continue;
            double each = std::floor(total / cnt);
            for (int i = 0; i < cnt; ++i) {
                double dur = i + 1 == cnt ? total - each * (cnt - 1) : each;
                double latest = kind == ActivityKind::Stationary ? 21.5 : 21.9 - dur / 3600.0;
                double start = round_seconds(gen.uniform(10.25, std::max(10.26, latest)));
                add_event(kind, start, dur);
            }
        }

        ingest::DailyMetrics m;
        m.user_id = user_id;
        m.date = date;
        m.distance_m = draws.distance;
        m.floors_ascended = draws.floors_up;
        m.floors_descended = draws.floors_down;
        m.steps = draws.steps;
        m.longest_untouched_s = draws.longest_untouched;
        out.metrics.push_back(m);

        // Intended daily summary, written from the generator's own arithmetic.
        featurize::DailySummary intended;
        intended.user_id = user_id;
        intended.date = date;
        for (const auto& e : day_events) {
            auto slot = static_cast<std::size_t>(e.kind);
            intended.duration_s[slot] += e.duration_s;
            intended.count[slot] += 1;
            std::size_t synth_slot = (e.kind == ActivityKind::Running || e.kind == ActivityKind::Cycling)
                                         ? featurize::kPhysicalSlot
                                         : featurize::kNonPhysicalSlot;
            intended.duration_s[synth_slot] += e.duration_s;
            intended.count[synth_slot] += 1;
            intended.total_event_count += 1;
        }
        intended.distance_m = m.distance_m;
        intended.floors_ascended = m.floors_ascended;
        intended.floors_descended = m.floors_descended;
        intended.steps = m.steps;
        intended.longest_untouched_s = m.longest_untouched_s;
        double asleep = day == 0 ? 22.0 : prev_asleep;
        featurize::SleepRecord sleep;
        sleep.date = date;
        sleep.asleep_hour = asleep;
        sleep.wake_hour = draws.wake_hour;
        // Epoch difference, not wall-clock arithmetic: a DST transition
        // inside the night changes the elapsed time.
        CivilDate evening = civil_from_days(days_from_civil(date) - 1);
        sleep.duration_h =
            static_cast<double>(tz.from_local(date, draws.wake_hour) - tz.from_local(evening, asleep)) / 3600.0;
        intended.sleep = sleep;
        double moving = intended.duration_s[1] + intended.duration_s[2] + intended.duration_s[3];
        intended.active_pace_mps = moving > 0 ? m.distance_m / moving : 0.0;
        double total_dur = 0.0;
        for (int k = 0; k < ingest::kBaseKinds; ++k) total_dur += intended.duration_s[static_cast<std::size_t>(k)];
        double non_stationary = total_dur - intended.duration_s[0];
        intended.cycling_duration_pct = non_stationary > 0 ? intended.duration_s[3] / non_stationary : 0.0;
        intended.physical_duration_pct =
            non_stationary > 0 ? intended.duration_s[featurize::kPhysicalSlot] / non_stationary : 0.0;
        intended.walking_duration_pct = non_stationary > 0 ? intended.duration_s[1] / non_stationary : 0.0;
        intended.stationary_duration_pct = total_dur > 0 ? intended.duration_s[0] / total_dur : 0.0;
        out.intended.push_back(std::move(intended));

        out.events.insert(out.events.end(), day_events.begin(), day_events.end());
        prev_asleep = draws.asleep_hour;
    }
    return out;
}

}  // namespace

nlohmann::json PlantedEffect::to_json() const {
    return nlohmann::json{{"trait", targets::trait_name(trait)},
                          {"metric", metric},
                          {"context", featurize::context_name(context)},
                          {"beta", beta},
                          {"sigma_day", sigma_day}};
}

void SynthConfig::validate() const {
    if (n_users < 10) throw std::runtime_error("synth: n_users must be >= 10");
    if (n_days < 14) throw std::runtime_error("synth: n_days must be >= 14");
    if (noise_scale < 0.0) throw std::runtime_error("synth: noise_scale must be >= 0");
    const auto& catalog = featurize::metric_catalog();
    for (const auto& e : effects) {
        if (std::find(catalog.begin(), catalog.end(), e.metric) == catalog.end())
            throw std::runtime_error("synth: effect metric '" + e.metric + "' not in catalog");
        if (!base_rates().count(e.metric))
            throw std::runtime_error("synth: effect metric '" + e.metric + "' is derived and cannot be planted");
        if (e.sigma_day < 0.0) throw std::runtime_error("synth: effect sigma_day must be >= 0");
    }
    for (const auto& t : traits)
        if (t.sd <= 0.0) throw std::runtime_error("synth: trait sd must be positive");
}

std::vector<PlantedEffect> SynthConfig::default_effects() {
    using targets::Trait;
    return {
        {Trait::EXT, "stationary_duration", DayContext::Overall, -240.0, 0.0},
        {Trait::AGR, "floors_ascended", DayContext::Overall, 0.9, 0.0},
        {Trait::CON, "wake_hour", DayContext::Overall, -0.055, 0.0},
        {Trait::NEU, "floors_descended", DayContext::Weekday, 0.9, 0.0},
        {Trait::OPE, "cycling_duration", DayContext::Weekend, 60.0, 0.0},
    };
}

SynthConfig SynthConfig::preset(const std::string& name, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    if (name == "low") {
        cfg.effects = default_effects();
        cfg.noise_scale = 0.5;
    } else if (name == "medium") {
        cfg.effects = default_effects();
        cfg.noise_scale = 2.5;
    } else if (name == "null") {
        cfg.effects.clear();
        cfg.noise_scale = 1.0;
    } else {
        throw std::runtime_error("unknown synth preset: " + name + " (expected low|medium|null)");
    }
    return cfg;
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
    SynthConfig c;
    if (j.contains("preset")) c = preset(j["preset"].get<std::string>(), c.seed);
    c.n_users = j.value("n_users", c.n_users);
    c.n_days = j.value("n_days", c.n_days);
    if (j.contains("start_date")) c.start_date = parse_date(j["start_date"].get<std::string>());
    c.tz_name = j.value("tz", c.tz_name);
    c.noise_scale = j.value("noise_scale", c.noise_scale);
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("traits")) {
        for (int t = 0; t < targets::kTraits; ++t) {
            const char* name = targets::trait_name(static_cast<targets::Trait>(t));
            if (!j["traits"].contains(name)) continue;
            c.traits[static_cast<std::size_t>(t)].mean = j["traits"][name].value("mean", c.traits[static_cast<std::size_t>(t)].mean);
            c.traits[static_cast<std::size_t>(t)].sd = j["traits"][name].value("sd", c.traits[static_cast<std::size_t>(t)].sd);
        }
    }
    if (j.contains("effects")) {
        c.effects.clear();
        for (const auto& je : j["effects"]) {
            PlantedEffect e;
            e.trait = targets::parse_trait(je.at("trait").get<std::string>());
            e.metric = je.at("metric").get<std::string>();
            std::string ctx = je.value("context", "overall");
            e.context = ctx == "weekday" ? DayContext::Weekday
                                         : (ctx == "weekend" ? DayContext::Weekend : DayContext::Overall);
            e.beta = je.at("beta").get<double>();
            e.sigma_day = je.value("sigma_day", 0.0);
            c.effects.push_back(std::move(e));
        }
    }
    return c;
}

SynthCohort gen_cohort(const SynthConfig& config, const targets::ScoringKey& key, par::Exec exec) {
    config.validate();
    TimeZone tz = TimeZone::parse(config.tz_name);

    int width = static_cast<int>(std::to_string(config.n_users).size());
    std::vector<UserData> users(static_cast<std::size_t>(config.n_users));
    par::for_each_index(
        static_cast<std::size_t>(config.n_users),
        [&](std::size_t i) {
            std::string id = std::to_string(i + 1);
            id = "u" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(id.size(), static_cast<std::size_t>(width)), '0') + id;
            users[i] = generate_user(config, tz, key, id, derive_seed(config.seed, i));
        },
        exec);

    SynthCohort out;
    nlohmann::json truth_json = nlohmann::json::array();
    for (auto& u : users) {
        out.events.insert(out.events.end(), u.events.begin(), u.events.end());
        out.metrics.insert(out.metrics.end(), u.metrics.begin(), u.metrics.end());
        out.responses.push_back(std::move(u.response));
        nlohmann::json scores = nlohmann::json::object();
        for (int t = 0; t < targets::kTraits; ++t)
            scores[targets::trait_name(static_cast<targets::Trait>(t))] = u.truth.score[static_cast<std::size_t>(t)];
        truth_json.push_back({{"user_id", u.truth.user_id}, {"scores", scores}});
        out.truth.push_back(std::move(u.truth));
        out.intended.insert(out.intended.end(), u.intended.begin(), u.intended.end());
    }

    nlohmann::json effects_json = nlohmann::json::array();
    for (const auto& e : config.effects) effects_json.push_back(e.to_json());
    out.manifest = nlohmann::json{{"generator_version", 1},
                                  {"seed", config.seed},
                                  {"n_users", config.n_users},
                                  {"n_days", config.n_days},
                                  {"start_date", format_date(config.start_date)},
                                  {"tz", config.tz_name},
                                  {"noise_scale", config.noise_scale},
                                  {"effects", effects_json},
                                  {"truth", truth_json}};
    return out;
}

bool score_roundtrip_check(const SynthCohort& cohort, const targets::ScoringKey& key,
                           std::vector<std::string>* mismatched) {
    if (cohort.responses.empty()) throw std::runtime_error("score_roundtrip_check: empty cohort");
    std::map<std::string, const targets::TraitScores*> truth;
    for (const auto& t : cohort.truth) truth[t.user_id] = &t;
    bool ok = true;
    for (const auto& r : cohort.responses) {
        auto scored = targets::score_bfi(r, key);
        auto it = truth.find(r.user_id);
        if (it == truth.end() || scored.score != it->second->score) {
            ok = false;
            if (mismatched) mismatched->push_back(r.user_id);
        }
    }
    return ok;
}

void write_cohort(const std::string& dir, const SynthCohort& cohort) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir + "/events.csv", std::ios::binary);
        ingest::write_events(f, cohort.events);
    }
    {
        std::ofstream f(dir + "/daily_metrics.csv", std::ios::binary);
        ingest::write_daily_metrics(f, cohort.metrics);
    }
    {
        std::ofstream f(dir + "/bfi.csv", std::ios::binary);
        ingest::write_bfi(f, cohort.responses);
    }
    {
        std::ofstream f(dir + "/manifest.json", std::ios::binary);
        f << cohort.manifest.dump(2) << "\n";
    }
}

}  // namespace traitsense::synth
