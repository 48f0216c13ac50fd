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

#include "dropwatch/splits.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "dropwatch/rng.h"

namespace dropwatch {

namespace {

// Round half to even under the default floating-point environment.
long RoundHalfEven(double v) { return std::lrint(v); }

SplitResult Assemble(size_t n, std::vector<bool> is_test, SplitStrategy strategy,
                     uint64_t seed, double parameter) {
  SplitResult out;
  out.strategy = strategy;
  out.seed = seed;
  out.parameter = parameter;
  for (size_t r = 0; r < n; ++r) (is_test[r] ? out.test_rows : out.train_rows).push_back(r);
  return out;
}

void CheckFraction(double f, const char* what) {
  if (!(f > 0.0 && f < 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie strictly between 0 and 1");
  }
}

}  // namespace

std::string_view SplitStrategyName(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::kGuidedRandom:
      return "guided_random";
    case SplitStrategy::kBySchools:
      return "by_schools";
    case SplitStrategy::kByYears:
      return "by_years";
  }
  return "?";
}

SplitStrategy ParseSplitStrategy(std::string_view name) {
  if (name == "guided_random") return SplitStrategy::kGuidedRandom;
  if (name == "by_schools") return SplitStrategy::kBySchools;
  if (name == "by_years") return SplitStrategy::kByYears;
  throw std::invalid_argument("unknown split strategy '" + std::string(name) +
                              "' (expected guided_random, by_schools or by_years)");
}

nlohmann::json SplitResult::ToJson() const {
  return {{"strategy", SplitStrategyName(strategy)},
          {"seed", seed},
          {"parameter", parameter},
          {"train_rows", train_rows},
          {"test_rows", test_rows}};
}

SplitResult SplitResult::FromJson(const nlohmann::json& j) {
  try {
    SplitResult s;
    s.strategy = ParseSplitStrategy(j.at("strategy").get<std::string>());
    s.seed = j.at("seed").get<uint64_t>();
    s.parameter = j.at("parameter").get<double>();
    s.train_rows = j.at("train_rows").get<std::vector<size_t>>();
    s.test_rows = j.at("test_rows").get<std::vector<size_t>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  }
}

void SplitResult::Validate(size_t n) const {
  if (train_rows.empty() || test_rows.empty()) throw DataError("split has an empty side");
  std::vector<int> seen(n, 0);
  for (const auto* side : {&train_rows, &test_rows}) {
    for (size_t r : *side) {
      if (r >= n) throw DataError("split row " + std::to_string(r) + " is out of range");
      if (seen[r]++) throw DataError("split row " + std::to_string(r) + " appears twice");
    }
  }
  if (train_rows.size() + test_rows.size() != n) {
    throw DataError("split covers " + std::to_string(train_rows.size() + test_rows.size()) +
                    " of " + std::to_string(n) + " rows");
  }
}

SplitResult GuidedRandomSplit(std::span<const RowProvenance> rows, double frac,
                              uint64_t seed) {
  CheckFraction(frac, "test fraction");
  std::map<int, std::vector<size_t>> by_year;
  for (size_t r = 0; r < rows.size(); ++r) by_year[rows[r].anchor_year.start_year()].push_back(r);
  if (by_year.empty()) throw std::invalid_argument("cannot split zero rows");
  std::vector<bool> is_test(rows.size(), false);
  for (auto& [year, members] : by_year) {
    const long n = static_cast<long>(members.size());
    if (n < 2) {
      throw DataError("anchor year " + AcademicYear(year).Label() +
                      " has fewer than 2 rows; guided random split needs 2 per year");
    }
    const long k = std::clamp(RoundHalfEven(frac * static_cast<double>(n)), 1L, n - 1);
    Rng rng(DeriveSeed(seed, static_cast<uint64_t>(year)));
    rng.Shuffle(members);
    for (long t = 0; t < k; ++t) is_test[members[t]] = true;
  }
  return Assemble(rows.size(), std::move(is_test), SplitStrategy::kGuidedRandom, seed, frac);
}

SplitResult SplitBySchools(std::span<const RowProvenance> rows, double test_fraction,
                           uint64_t seed) {
  CheckFraction(test_fraction, "school test fraction");
  std::set<std::string> distinct;
  for (const auto& p : rows) distinct.insert(p.school_id);
  if (distinct.size() < 2) throw DataError("school split needs at least 2 distinct schools");
  std::vector<std::string> schools(distinct.begin(), distinct.end());
  const long n = static_cast<long>(schools.size());
  const long k = std::clamp(RoundHalfEven(test_fraction * static_cast<double>(n)), 1L, n - 1);
  Rng rng(seed);
  rng.Shuffle(schools);
  std::set<std::string> test_schools(schools.begin(), schools.begin() + k);
  std::vector<bool> is_test(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) is_test[r] = test_schools.count(rows[r].school_id) > 0;
  return Assemble(rows.size(), std::move(is_test), SplitStrategy::kBySchools, seed,
                  test_fraction);
}

SplitResult SplitByYears(std::span<const RowProvenance> rows, int n_test_years) {
  if (n_test_years < 1) throw std::invalid_argument("n_test_years must be >= 1");
  std::set<int> years;
  for (const auto& p : rows) years.insert(p.anchor_year.start_year());
  if (static_cast<int>(years.size()) < n_test_years + 1) {
    throw DataError("year split needs at least " + std::to_string(n_test_years + 1) +
                    " distinct anchor years, found " + std::to_string(years.size()));
  }
  auto first_test = years.end();
  std::advance(first_test, -n_test_years);
  const int cutoff = *first_test;
  std::vector<bool> is_test(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) is_test[r] = rows[r].anchor_year.start_year() >= cutoff;
  return Assemble(rows.size(), std::move(is_test), SplitStrategy::kByYears, 0, n_test_years);
}

}  // namespace dropwatch
