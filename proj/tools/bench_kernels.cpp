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

// Serial reference vs OpenMP timings for the data-parallel kernels: forest
// fitting, fold evaluation and cohort featurization.

#include <benchmark/benchmark.h>

#include <random>

#include "traitsense/ensemble.hpp"
#include "traitsense/featurize.hpp"
#include "traitsense/modelsel.hpp"
#include "traitsense/rng.hpp"
#include "traitsense/synth.hpp"

namespace {

using namespace traitsense;

Matrix blob_matrix(std::size_t n, std::size_t d, std::vector<int>& y, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> normal;
    Matrix X(n, d);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int cls = i % 2 == 0 ? 0 : 1;
        y[i] = cls;
        for (std::size_t j = 0; j < d; ++j) X.at(i, j) = normal(rng) + (cls == 1 && j < 3 ? 2.0 : 0.0);
    }
    return X;
}

void bench_fit_rf(benchmark::State& state, par::Exec exec) {
    std::vector<int> y;
    Matrix X = blob_matrix(144, 84, y, 7);
    ensemble::RFParams params;
    params.n_trees = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto model = ensemble::fit_rf(X, y, 2, params, 42, exec);
        benchmark::DoNotOptimize(model);
    }
}

void bench_cross_validate(benchmark::State& state, par::Exec exec) {
    std::vector<int> y;
    Matrix X = blob_matrix(144, 84, y, 7);
    modelsel::ModelSpec spec;
    spec.kind = ensemble::ModelKind::RF;
    spec.rf.n_trees = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto report = modelsel::cross_validate(spec, X, y, 2, 5, 42, modelsel::F1Averaging::Macro, exec);
        benchmark::DoNotOptimize(report);
    }
}

void bench_featurize(benchmark::State& state, par::Exec exec) {
    auto cfg = synth::SynthConfig::preset("low", 3);
    cfg.n_users = static_cast<int>(state.range(0));
    cfg.n_days = 30;
    auto cohort = synth::gen_cohort(cfg, targets::ScoringKey::builtin(), par::Exec::Serial);
    auto [dataset, report] = ingest::validate_cohort(cohort.events, cohort.metrics, cohort.responses,
                                                     {7, TimeZone::parse("Europe/London")});
    TimeZone tz = TimeZone::parse("Europe/London");
    for (auto _ : state) {
        auto vectors = featurize::featurize_cohort(dataset, tz, {}, exec);
        benchmark::DoNotOptimize(vectors);
    }
}

void bench_gen_cohort(benchmark::State& state, par::Exec exec) {
    auto cfg = synth::SynthConfig::preset("low", 3);
    cfg.n_users = static_cast<int>(state.range(0));
    cfg.n_days = 30;
    for (auto _ : state) {
        auto cohort = synth::gen_cohort(cfg, targets::ScoringKey::builtin(), exec);
        benchmark::DoNotOptimize(cohort);
    }
}

}  // namespace

BENCHMARK_CAPTURE(bench_fit_rf, serial, par::Exec::Serial)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_fit_rf, openmp, par::Exec::OpenMP)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_cross_validate, serial, par::Exec::Serial)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_cross_validate, openmp, par::Exec::OpenMP)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_featurize, serial, par::Exec::Serial)->Arg(60)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_featurize, openmp, par::Exec::OpenMP)->Arg(60)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_gen_cohort, serial, par::Exec::Serial)->Arg(60)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_gen_cohort, openmp, par::Exec::OpenMP)->Arg(60)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
