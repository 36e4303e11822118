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
#include "traitsense/csv.hpp"

#include <stdexcept>

namespace traitsense::csv {

std::optional<Row> Reader::next() {
    int c = in_.get();
    while (c == '\n' || c == '\r') {  // skip blank lines
        if (c == '\n') ++line_;
        c = in_.get();
    }
    if (c == EOF) return std::nullopt;

    Row row;
    row.line = line_ + 1;
    std::string field;
    bool quoted = false;
    while (true) {
        if (quoted) {
            if (c == EOF) throw std::runtime_error("line " + std::to_string(row.line) + ": unterminated quoted field");
            if (c == '"') {
                int peek = in_.get();
                if (peek == '"') {
                    field.push_back('"');
                } else {
                    quoted = false;
                    in_.unget();
                    if (peek == EOF) in_.clear();
                }
            } else {
                if (c == '\n') ++line_;
                field.push_back(static_cast<char>(c));
            }
        } else {
            if (c == '"' && field.empty()) {
                quoted = true;
            } else if (c == ',') {
                row.fields.push_back(std::move(field));
                field.clear();
            } else if (c == '\r') {
                // swallow; newline handled next
            } else if (c == '\n' || c == EOF) {
                if (c == '\n') ++line_;
                row.fields.push_back(std::move(field));
                return row;
            } else {
                field.push_back(static_cast<char>(c));
            }
        }
        c = in_.get();
    }
}

std::string escape(const std::string& field) {
    bool needs = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    return out;
}

}  // namespace traitsense::csv
