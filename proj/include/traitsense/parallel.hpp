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

#include <cstddef>
#include <exception>
#include <mutex>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace traitsense::par {

/// Execution policy for the data-parallel kernels (forest fitting, fold
/// evaluation, per-user featurization, candidate scans). Serial is the
/// reference path; OpenMP must produce bit-identical results, which the
/// kernels guarantee by deriving per-item seeds and writing each item's
/// output to its own pre-allocated slot.
enum class Exec { Serial, OpenMP };

inline Exec& default_exec() {
#ifdef _OPENMP
    static Exec mode = Exec::OpenMP;
#else
    static Exec mode = Exec::Serial;
#endif
    return mode;
}

/// threads == 1 selects the serial reference path; 0 keeps the runtime default.
inline void set_threads(int threads) {
    if (threads == 1) {
        default_exec() = Exec::Serial;
        return;
    }
#ifdef _OPENMP
    default_exec() = Exec::OpenMP;
    if (threads > 1) omp_set_num_threads(threads);
#else
    default_exec() = Exec::Serial;
#endif
}

/// Runs body(0..n-1). Exceptions thrown by items are captured and the first
/// one rethrown after the loop completes.
template <typename F>
void for_each_index(std::size_t n, F&& body, Exec mode) {
#ifdef _OPENMP
    if (mode == Exec::OpenMP && n > 1) {
        std::exception_ptr err;
        std::mutex err_mutex;
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            try {
                body(static_cast<std::size_t>(i));
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
        return;
    }
#else
    (void)mode;
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

template <typename F>
void for_each_index(std::size_t n, F&& body) {
    for_each_index(n, std::forward<F>(body), default_exec());
}

}  // namespace traitsense::par
