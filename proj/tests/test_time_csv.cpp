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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "traitsense/csv.hpp"
#include "traitsense/time.hpp"

using namespace traitsense;

TEST_CASE("civil date round trip") {
    CHECK(days_from_civil({1970, 1, 1}) == 0);
    CHECK(days_from_civil({2021, 3, 1}) == 18687);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::int64_t> day(-200000, 200000);
    for (int i = 0; i < 2000; ++i) {
        std::int64_t z = day(rng);
        CHECK(days_from_civil(civil_from_days(z)) == z);
    }
}

TEST_CASE("weekday and weekend") {
    CHECK(weekday_index({2021, 3, 1}) == 0);  // Monday
    CHECK(weekday_index({2021, 3, 7}) == 6);  // Sunday
    CHECK(is_weekend({2021, 3, 6}));
    CHECK(is_weekend({2021, 3, 7}));
    CHECK_FALSE(is_weekend({2021, 3, 8}));
}

TEST_CASE("date parse and format") {
    CHECK(parse_date("2021-03-01") == CivilDate{2021, 3, 1});
    CHECK(format_date({2021, 3, 1}) == "2021-03-01");
    CHECK_THROWS(parse_date("2021-3-1"));
    CHECK_THROWS(parse_date("2021-02-30"));
    CHECK_THROWS(parse_date("garbage"));
}

TEST_CASE("timestamp parse, offsets, canonical form") {
    std::int64_t t = parse_timestamp("2021-03-01T08:00:00Z");
    CHECK(t == 18687 * 86400 + 8 * 3600);
    CHECK(format_timestamp(t) == "2021-03-01T08:00:00Z");
    CHECK(parse_timestamp("2021-03-01T09:00:00+01:00") == t);
    CHECK(parse_timestamp("2021-03-01T03:30:00-04:30") == t);
    CHECK_THROWS(parse_timestamp("2021-03-01T08:00:00"));  // zone designator required
    CHECK_THROWS(parse_timestamp("2021-03-01 25:00:00Z"));
    CHECK_THROWS(parse_timestamp("nonsense"));
}

TEST_CASE("Europe/London DST rule") {
    TimeZone tz = TimeZone::parse("Europe/London");
    // 2021: BST from March 28 01:00 UTC to October 31 01:00 UTC.
    CHECK(tz.offset_at(parse_timestamp("2021-03-28T00:59:00Z")) == 0);
    CHECK(tz.offset_at(parse_timestamp("2021-03-28T01:00:00Z")) == 3600);
    CHECK(tz.offset_at(parse_timestamp("2021-07-01T12:00:00Z")) == 3600);
    CHECK(tz.offset_at(parse_timestamp("2021-10-31T00:59:00Z")) == 3600);
    CHECK(tz.offset_at(parse_timestamp("2021-10-31T01:00:00Z")) == 0);
    CHECK(tz.offset_at(parse_timestamp("2021-12-25T12:00:00Z")) == 0);

    CHECK(tz.local_hour(parse_timestamp("2021-04-01T08:00:00Z")) == doctest::Approx(9.0));
    CHECK(tz.local_date(parse_timestamp("2021-04-01T23:30:00Z")) == CivilDate{2021, 4, 2});

    // from_local inverts to_local away from the transition hour.
    std::int64_t epoch = tz.from_local({2021, 4, 2}, 7.5);
    CHECK(tz.local_hour(epoch) == doctest::Approx(7.5));
    CHECK(tz.local_date(epoch) == CivilDate{2021, 4, 2});
}

TEST_CASE("fixed-offset zones and rejection") {
    CHECK(TimeZone::parse("UTC").offset_at(0) == 0);
    CHECK(TimeZone::parse("+01:00").offset_at(0) == 3600);
    CHECK(TimeZone::parse("UTC+05:30").offset_at(123456) == 5 * 3600 + 1800);
    CHECK(TimeZone::parse("-08:00").offset_at(0) == -8 * 3600);
    CHECK_THROWS(TimeZone::parse("America/New_York"));
}

TEST_CASE("csv reader handles RFC-4180 quoting") {
    std::istringstream in("a,b,c\n\"x,y\",\"he said \"\"hi\"\"\",plain\r\n\"multi\nline\",2,3\n");
    csv::Reader reader(in);
    auto h = reader.next();
    REQUIRE(h);
    CHECK(h->fields == std::vector<std::string>{"a", "b", "c"});
    auto r1 = reader.next();
    REQUIRE(r1);
    CHECK(r1->fields == std::vector<std::string>{"x,y", "he said \"hi\"", "plain"});
    auto r2 = reader.next();
    REQUIRE(r2);
    CHECK(r2->fields == std::vector<std::string>{"multi\nline", "2", "3"});
    CHECK_FALSE(reader.next());
}

TEST_CASE("csv line numbers and errors") {
    std::istringstream in("h\nok\n\"unterminated");
    csv::Reader reader(in);
    reader.next();
    auto row = reader.next();
    REQUIRE(row);
    CHECK(row->line == 2);
    CHECK_THROWS_WITH_AS(reader.next(), doctest::Contains("line 3"), std::runtime_error);
}

TEST_CASE("csv escape round trip") {
    std::vector<std::string> fields = {"plain", "with,comma", "with\"quote", "with\nnewline", ""};
    std::istringstream in(csv::join(fields) + "\n");
    csv::Reader reader(in);
    auto row = reader.next();
    REQUIRE(row);
    CHECK(row->fields == fields);
}
