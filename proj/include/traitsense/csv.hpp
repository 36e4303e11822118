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

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace traitsense::csv {

/// One parsed record plus the 1-based line number it started on.
struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

/// RFC-4180 reader: quoted fields, "" escapes, embedded newlines, CRLF.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Next record, or nullopt at end of input. Blank lines are skipped.
    std::optional<Row> next();

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

std::string escape(const std::string& field);
std::string join(const std::vector<std::string>& fields);

}  // namespace traitsense::csv
