/*
 * Copyright 2026 The Dropwatch Authors.
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

#ifndef DROPWATCH_CSV_H_
#define DROPWATCH_CSV_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dropwatch::csv {

// Minimal RFC 4180 reader. Quoted fields may contain commas, doubled quotes
// and newlines. A trailing '\r' before the newline is dropped.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Reads the next record into `fields`. Returns false at end of input.
  bool Next(std::vector<std::string>& fields);

  // 1-based line number of the record last returned.
  size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  size_t line_ = 0;
  size_t record_line_ = 0;
};

// Quotes `field` if it contains a separator, quote or newline.
std::string Escape(std::string_view field);

void WriteRow(std::ostream& out, const std::vector<std::string>& fields);

// Shortest decimal representation that round-trips to the same double.
std::string FormatDouble(double value);

std::optional<double> ParseDouble(std::string_view text);

}  // namespace dropwatch::csv

#endif  // DROPWATCH_CSV_H_
