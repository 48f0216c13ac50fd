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

#ifndef DROPWATCH_SVG_H_
#define DROPWATCH_SVG_H_

#include <string>
#include <vector>

namespace dropwatch::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Static SVG documents. Output depends only on the arguments.
std::string LineChart(const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series);
// Horizontal bars, one per label, drawn top to bottom.
std::string BarChart(const std::string& title, const std::vector<std::string>& labels,
                     const std::vector<double>& values, const std::string& value_label);

}  // namespace dropwatch::svg

#endif  // DROPWATCH_SVG_H_
