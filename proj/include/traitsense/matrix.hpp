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
#include <span>
#include <stdexcept>
#include <vector>

namespace traitsense {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }

    /// New matrix keeping only the given columns, in the given order.
    Matrix select_columns(std::span<const std::size_t> keep) const {
        Matrix out(rows, keep.size());
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < keep.size(); ++j) out.at(i, j) = at(i, keep[j]);
        return out;
    }

    /// New matrix keeping only the given rows, in the given order.
    Matrix select_rows(std::span<const std::size_t> keep) const {
        Matrix out(keep.size(), cols);
        for (std::size_t i = 0; i < keep.size(); ++i)
            for (std::size_t j = 0; j < cols; ++j) out.at(i, j) = at(keep[i], j);
        return out;
    }
};

}  // namespace traitsense
