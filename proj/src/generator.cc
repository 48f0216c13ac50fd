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

#include "dropwatch/generator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <stdexcept>

#include "dropwatch/rng.h"

namespace dropwatch::synth {

namespace {

using nlohmann::json;

constexpr int kPublishedFirstYear = 2015;
constexpr int kPublishedLastYear = 2020;

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double Clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

double Round2(double v) { return std::round(v * 100.0) / 100.0; }

// Zipf(s) over ranks 1..n, sampled by inverse CDF.
class ZipfSampler {
 public:
  ZipfSampler(int n, double exponent) : cdf_(n) {
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
      total += 1.0 / std::pow(k + 1.0, exponent);
      cdf_[k] = total;
    }
    for (double& c : cdf_) c /= total;
  }
  int Sample(Rng& rng) const {
    const double u = rng.Uniform01();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<int>(std::min<ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
  }

 private:
  std::vector<double> cdf_;
};

std::string Code(const char* prefix, int value, int width) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, value);
  return buf;
}

// Selects units with inclusion probabilities `probs` (each < 1) such that the
// number selected is floor or ceil of their sum: systematic sampling over a
// random permutation.
std::vector<char> SystematicSample(std::span<const double> probs, Rng& rng) {
  std::vector<size_t> order(probs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.Shuffle(order);
  const double u = rng.Uniform01();
  std::vector<char> selected(probs.size(), 0);
  double cum = 0.0;
  for (size_t i : order) {
    const double next = cum + probs[i];
    if (std::floor(next - u) > std::floor(cum - u)) selected[i] = 1;
    cum = next;
  }
  return selected;
}

// Draws outcomes for a set of units with a calibrated logistic model.
std::vector<char> CalibratedDraw(double rate, std::span<const double> scores,
                                 Rng& rng) {
  if (scores.empty()) return {};
  if (rate <= 0.0) return std::vector<char>(scores.size(), 0);
  if (rate >= 1.0) return std::vector<char>(scores.size(), 1);
  const double b = SolveIntercept(rate, scores);
  std::vector<double> probs(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) probs[i] = Sigmoid(b + scores[i]);
  return SystematicSample(probs, rng);
}

struct School {
  std::string id;
  Cycle cycle;
  int province;
  int city;  // vocabulary code
  int opened_years_before;
  bool boarding;
  bool internet;
  bool tayssir;
  double quality;
};

struct Student {
  std::string id;
  int level;
  int failures_at_level = 0;
  int age;
  double ability;
  double engagement;
  double ses;
  int gender;
  int nationality;
  int birthplace;  // vocabulary codes
  int disability;
  int preschool;
  int father;
  int mother;
  int province;
  int school = -1;
  bool active = true;
};

int ExpectedAge(int level) { return 5 + level; }

}  // namespace

json RiskModel::ToJson() const {
  return {{"grade", grade},
          {"absences", absences},
          {"failures", failures},
          {"age", age},
          {"shift_absence_factor", shift_absence_factor},
          {"shift_grade_factor", shift_grade_factor}};
}

RiskModel RiskModel::FromJson(const json& j) {
  RiskModel m;
  m.grade = j.value("grade", m.grade);
  m.absences = j.value("absences", m.absences);
  m.failures = j.value("failures", m.failures);
  m.age = j.value("age", m.age);
  m.shift_absence_factor = j.value("shift_absence_factor", m.shift_absence_factor);
  m.shift_grade_factor = j.value("shift_grade_factor", m.shift_grade_factor);
  return m;
}

const std::map<std::pair<int, int>, double>& PublishedLevelRates() {
  static const auto* table = [] {
    const double rows[12][6] = {
        {2.42, 2.93, 2.91, 3.08, 3.73, 5.87},
        {1.07, 1.07, 1.09, 1.12, 1.01, 1.45},
        {0.95, 1.11, 1.13, 1.08, 1.03, 1.95},
        {1.62, 1.43, 1.41, 1.13, 0.83, 1.01},
        {2.41, 2.45, 2.40, 1.75, 1.28, 1.55},
        {6.49, 6.28, 5.87, 3.68, 2.49, 2.24},
        {11.74, 13.52, 14.10, 13.88, 10.98, 15.32},
        {9.84, 11.46, 11.43, 10.51, 7.82, 11.11},
        {19.41, 18.96, 17.46, 16.10, 8.35, 14.01},
        {6.99, 8.23, 7.94, 7.41, 5.83, 6.37},
        {8.99, 8.47, 8.43, 7.67, 5.60, 6.28},
        {17.69, 17.49, 21.22, 20.32, 10.14, 11.10},
    };
    auto* m = new std::map<std::pair<int, int>, double>();
    for (int level = 1; level <= 12; ++level) {
      for (int y = 0; y < 6; ++y) {
        (*m)[{level, kPublishedFirstYear + y}] = rows[level - 1][y];
      }
    }
    return m;
  }();
  return *table;
}

const std::map<std::string, double>& PublishedMissingness() {
  static const auto* table = new std::map<std::string, double>{
      {"grade_avg", 2.27},           {"days_missed_auth", 1.68},
      {"classes_missed_auth", 30.38}, {"days_missed_unauth", 30.38},
      {"classes_missed_unauth", 30.38}, {"math_avg", 1.59},
      {"arabic_avg", 1.59},          {"french_avg", 1.59},
      {"gender", 1.59},              {"nationality", 17.84},
      {"birthplace", 36.92},         {"preschool", 35.81},
      {"father_profession", 47.08},  {"mother_profession", 63.58},
      {"school_age", 39.48},         {"school_city", 26.87},
  };
  return *table;
}

GeneratorConfig GeneratorConfig::Default() {
  GeneratorConfig c;
  for (int y = kPublishedFirstYear; y <= kPublishedLastYear; ++y) {
    c.years.emplace_back(y);
  }
  for (const auto& [key, percent] : PublishedLevelRates()) {
    c.level_year_dropout_rate[key] = percent / 100.0;
  }
  // No published failure rates; moderate repeat rates rising at cycle ends.
  for (int level = 1; level <= 12; ++level) {
    double rate = 0.06;
    if (level == 6) rate = 0.08;
    if (level >= 7) rate = 0.12;
    if (level == 9) rate = 0.15;
    if (level == 12) rate = 0.18;
    c.level_failure_rate[level] = rate;
  }
  for (const auto& [name, percent] : PublishedMissingness()) {
    c.missingness[name] = percent / 100.0;
  }
  c.shift_years = {2019, 2020};
  return c;
}

double GeneratorConfig::DropoutRate(LevelId level, AcademicYear year) const {
  auto it = level_year_dropout_rate.find({level.value(), year.start_year()});
  if (it == level_year_dropout_rate.end()) {
    throw std::invalid_argument("no dropout rate for level " +
                                std::to_string(level.value()) + " in " +
                                year.Label());
  }
  return it->second;
}

void GeneratorConfig::Validate() const {
  auto check_rate = [](double rate, const std::string& what) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
      throw std::invalid_argument(what + " must be in [0, 1], got " +
                                  std::to_string(rate));
    }
  };
  if (n_students < 1) throw std::invalid_argument("n_students must be >= 1");
  if (class_size < 1) throw std::invalid_argument("class_size must be >= 1");
  if (schools_per_cycle < 1) throw std::invalid_argument("schools_per_cycle must be >= 1");
  if (!(signal_strength >= 0.0)) {
    throw std::invalid_argument("signal_strength must be non-negative");
  }
  if (years.empty()) throw std::invalid_argument("years must be non-empty");
  for (size_t i = 1; i < years.size(); ++i) {
    if (years[i] - years[i - 1] != 1) {
      throw std::invalid_argument("years must be contiguous and ascending");
    }
  }
  for (const auto& [key, rate] : level_year_dropout_rate) {
    check_rate(rate, "dropout rate for level " + std::to_string(key.first));
  }
  for (const auto& [level, rate] : level_failure_rate) {
    check_rate(rate, "failure rate for level " + std::to_string(level));
  }
  for (const auto& [name, rate] : missingness) {
    check_rate(rate, "missingness of '" + name + "'");
    if (!StandardSchema().IndexOf(name)) {
      throw std::invalid_argument("missingness given for unknown feature '" + name + "'");
    }
  }
  for (int level = 1; level <= 12; ++level) {
    auto fit = level_failure_rate.find(level);
    const double failure = fit == level_failure_rate.end() ? 0.0 : fit->second;
    for (const auto& year : years) {
      const double dropout = DropoutRate(LevelId(level), year);
      if (dropout + failure > 1.0) {
        throw std::invalid_argument(
            "infeasible rates for level " + std::to_string(level) + " in " +
            year.Label() + ": dropout + failure exceeds 1");
      }
    }
  }
}

json GeneratorConfig::ToJson() const {
  json j;
  j["n_students"] = n_students;
  std::vector<int> ys;
  for (const auto& y : years) ys.push_back(y.start_year());
  j["years"] = ys;
  json rates = json::object();
  for (const auto& [key, rate] : level_year_dropout_rate) {
    rates[std::to_string(key.first)][std::to_string(key.second)] = rate;
  }
  j["dropout_rates"] = rates;
  json failures = json::object();
  for (const auto& [level, rate] : level_failure_rate) {
    failures[std::to_string(level)] = rate;
  }
  j["failure_rates"] = failures;
  j["missingness"] = missingness;
  j["signal_strength"] = signal_strength;
  j["shift_years"] = std::vector<int>(shift_years.begin(), shift_years.end());
  j["seed"] = seed;
  j["risk"] = risk.ToJson();
  j["schools_per_cycle"] = schools_per_cycle;
  j["class_size"] = class_size;
  return j;
}

GeneratorConfig GeneratorConfig::FromJson(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("generator config must be a JSON object");
  GeneratorConfig c = Default();
  c.n_students = j.value("n_students", c.n_students);
  c.signal_strength = j.value("signal_strength", c.signal_strength);
  c.seed = j.value("seed", c.seed);
  c.schools_per_cycle = j.value("schools_per_cycle", c.schools_per_cycle);
  c.class_size = j.value("class_size", c.class_size);
  if (j.contains("risk")) c.risk = RiskModel::FromJson(j.at("risk"));
  if (j.contains("years")) {
    c.years.clear();
    for (int y : j.at("years").get<std::vector<int>>()) c.years.emplace_back(y);
    // Years outside the published table take the nearest published column.
    for (const auto& year : c.years) {
      const int src = std::clamp(year.start_year(), kPublishedFirstYear, kPublishedLastYear);
      for (int level = 1; level <= 12; ++level) {
        c.level_year_dropout_rate.try_emplace(
            {level, year.start_year()},
            PublishedLevelRates().at({level, src}) / 100.0);
      }
    }
  }
  if (j.contains("shift_years")) {
    c.shift_years.clear();
    for (int y : j.at("shift_years").get<std::vector<int>>()) c.shift_years.insert(y);
  }
  if (j.contains("dropout_rates")) {
    for (const auto& [level, by_year] : j.at("dropout_rates").items()) {
      for (const auto& [year, rate] : by_year.items()) {
        c.level_year_dropout_rate[{std::stoi(level), std::stoi(year)}] =
            rate.get<double>();
      }
    }
  }
  if (j.contains("failure_rates")) {
    for (const auto& [level, rate] : j.at("failure_rates").items()) {
      c.level_failure_rate[std::stoi(level)] = rate.get<double>();
    }
  }
  if (j.contains("missingness")) {
    for (const auto& [name, rate] : j.at("missingness").items()) {
      c.missingness[name] = rate.get<double>();
    }
  }
  return c;
}

double SolveIntercept(double target_rate, std::span<const double> risk_scores) {
  if (!(target_rate > 0.0 && target_rate < 1.0)) {
    throw std::invalid_argument("target rate must be in (0, 1)");
  }
  if (risk_scores.empty()) throw std::invalid_argument("risk scores must be non-empty");
  double lo_s = std::numeric_limits<double>::infinity();
  double hi_s = -lo_s;
  for (double s : risk_scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("risk scores must be finite");
    lo_s = std::min(lo_s, s);
    hi_s = std::max(hi_s, s);
  }
  const double logit = std::log(target_rate / (1.0 - target_rate));
  auto mean_prob = [&](double b) {
    double sum = 0.0;
    for (double s : risk_scores) sum += Sigmoid(b + s);
    return sum / static_cast<double>(risk_scores.size());
  };
  // sigmoid(b + s) <= target for all s when b = logit - max(s), and >= target
  // for all s when b = logit - min(s).
  double lo = logit - hi_s;
  double hi = logit - lo_s;
  if (lo == hi) return lo;
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mean_prob(mid) < target_rate) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Cohort Generate(const GeneratorConfig& config) {
  config.Validate();
  Rng rng(config.seed);
  const Schema& std_schema = StandardSchema();
  auto schema = std::make_shared<const Schema>(std_schema);

  std::vector<std::shared_ptr<Vocabulary>> vocab(schema->size());
  for (size_t f = 0; f < schema->size(); ++f) {
    if (schema->at(f).kind == FeatureKind::kCategorical) {
      vocab[f] = std::make_shared<Vocabulary>();
    }
  }
  auto fidx = [&](const char* name) { return schema->RequireIndex(name); };
  const size_t f_birthplace = fidx("birthplace");
  const size_t f_disability = fidx("disability");
  const size_t f_preschool = fidx("preschool");
  const size_t f_father = fidx("father_profession");
  const size_t f_mother = fidx("mother_profession");
  const size_t f_province = fidx("province");
  const size_t f_city = fidx("school_city");

  const ZipfSampler birthplace_zipf(std_schema.at(f_birthplace).cardinality, 1.05);
  const ZipfSampler father_zipf(std_schema.at(f_father).cardinality, 1.1);
  const ZipfSampler mother_zipf(std_schema.at(f_mother).cardinality, 1.1);
  const ZipfSampler city_zipf(std_schema.at(f_city).cardinality, 1.0);
  static const char* kDisability[] = {"none", "motor", "visual", "hearing", "mental", "other"};
  static const char* kPreschool[] = {"none", "traditional", "modern"};
  constexpr int kProvinces = 9;

  // Schools: one pool per cycle, provinces assigned round-robin.
  std::vector<School> schools;
  std::vector<std::vector<std::vector<int>>> schools_by(3, std::vector<std::vector<int>>(kProvinces));
  const char* cycle_tag[] = {"SP", "SM", "SH"};
  for (int c = 0; c < 3; ++c) {
    for (int s = 0; s < config.schools_per_cycle; ++s) {
      School school;
      school.id = Code(cycle_tag[c], s + 1, 3);
      school.cycle = static_cast<Cycle>(c);
      school.province = s % kProvinces;
      school.city = vocab[f_city]->Intern(Code("CITY-", city_zipf.Sample(rng) + 1, 4));
      school.opened_years_before = 2 + static_cast<int>(rng.UniformIndex(69));
      school.boarding = c != 0 && rng.Bernoulli(0.15);
      school.internet = rng.Bernoulli(0.6);
      school.tayssir = c == 0 && rng.Bernoulli(0.5);
      school.quality = rng.Normal();
      schools_by[c][school.province].push_back(static_cast<int>(schools.size()));
      schools.push_back(std::move(school));
    }
  }
  std::vector<int> province_codes(kProvinces);
  for (int p = 0; p < kProvinces; ++p) {
    province_codes[p] = vocab[f_province]->Intern(Code("PROVINCE-", p + 1, 1));
  }

  std::vector<Student> students;
  auto new_student = [&](int level, bool initial) {
    Student st;
    st.id = Code("ST", static_cast<int>(students.size()) + 1, 7);
    st.level = level;
    st.ability = rng.Normal();
    st.engagement = 0.4 * st.ability + std::sqrt(1.0 - 0.16) * rng.Normal();
    st.ses = 0.3 * st.ability + std::sqrt(1.0 - 0.09) * rng.Normal();
    int repeats = 0;
    if (initial) {
      const double u = rng.Uniform01();
      repeats = u < 0.85 ? 0 : (u < 0.97 ? 1 : 2);
      st.failures_at_level = rng.Bernoulli(0.08) ? 1 : 0;
      repeats = std::max(repeats, st.failures_at_level);
    }
    const int late = rng.Bernoulli(0.1) ? 1 : 0;
    st.age = ExpectedAge(level) + repeats + late;
    st.gender = rng.Bernoulli(0.49) ? 1 : 0;
    st.nationality = rng.Bernoulli(0.985) ? 1 : 0;
    st.birthplace = vocab[f_birthplace]->Intern(Code("BP-", birthplace_zipf.Sample(rng) + 1, 6));
    st.disability = vocab[f_disability]->Intern(
        rng.Bernoulli(0.97) ? kDisability[0] : kDisability[1 + rng.UniformIndex(5)]);
    const double pre = rng.Uniform01() + 0.15 * st.ses;
    st.preschool = vocab[f_preschool]->Intern(
        kPreschool[pre < 0.3 ? 0 : (pre < 0.7 ? 1 : 2)]);
    st.father = vocab[f_father]->Intern(Code("FP-", father_zipf.Sample(rng) + 1, 5));
    st.mother = vocab[f_mother]->Intern(Code("MP-", mother_zipf.Sample(rng) + 1, 4));
    st.province = static_cast<int>(rng.UniformIndex(kProvinces));
    students.push_back(std::move(st));
  };

  // First-year enrollment: slightly thinner in the upper cycles.
  {
    double weights[13] = {0};
    double total = 0.0;
    for (int level = 1; level <= 12; ++level) {
      weights[level] = level <= 6 ? 1.0 : (level <= 9 ? 0.9 : 0.75);
      total += weights[level];
    }
    int assigned = 0;
    for (int level = 1; level <= 12; ++level) {
      int count = level == 12 ? config.n_students - assigned
                              : static_cast<int>(std::llround(config.n_students * weights[level] / total));
      count = std::max(0, std::min(count, config.n_students - assigned));
      for (int i = 0; i < count; ++i) new_student(level, true);
      assigned += count;
    }
  }
  const int entrants_per_year = static_cast<int>(std::count_if(
      students.begin(), students.end(), [](const Student& s) { return s.level == 1; }));

  std::vector<double> miss_rate(schema->size(), 0.0);
  for (const auto& [name, rate] : config.missingness) miss_rate[schema->RequireIndex(name)] = rate;

  std::vector<StudentYearRecord> records;
  std::vector<StudentStatus> outcomes;

  for (size_t yi = 0; yi < config.years.size(); ++yi) {
    const AcademicYear year = config.years[yi];
    const bool shifted = config.shift_years.count(year.start_year()) > 0;
    if (yi > 0) {
      for (int i = 0; i < entrants_per_year; ++i) new_student(1, false);
    }

    std::vector<int> active;
    for (int s = 0; s < static_cast<int>(students.size()); ++s) {
      if (students[s].active) active.push_back(s);
    }

    // Schools change when a student enters a new cycle.
    for (int s : active) {
      Student& st = students[s];
      const int cycle = static_cast<int>(LevelId(st.level).cycle());
      if (st.school < 0 || static_cast<int>(schools[st.school].cycle) != cycle) {
        const auto& pool = schools_by[cycle][st.province];
        if (!pool.empty()) {
          st.school = pool[rng.UniformIndex(pool.size())];
        } else {
          st.school = cycle * config.schools_per_cycle +
                      static_cast<int>(rng.UniformIndex(config.schools_per_cycle));
        }
      }
    }

    // Classes: sections of at most class_size per (school, level).
    std::map<std::pair<int, int>, std::vector<int>> groups;
    for (int s : active) groups[{students[s].school, students[s].level}].push_back(s);
    std::vector<std::string> class_of(students.size());
    for (auto& [key, members] : groups) {
      rng.Shuffle(members);
      const int sections = static_cast<int>((members.size() + config.class_size - 1) / config.class_size);
      for (size_t p = 0; p < members.size(); ++p) {
        const int section = static_cast<int>(p % sections);
        class_of[members[p]] = schools[key.first].id + "-L" +
                               (key.second < 10 ? "0" : "") + std::to_string(key.second) +
                               "-" + static_cast<char>('A' + section % 26) +
                               (section >= 26 ? std::to_string(section / 26) : "");
      }
    }

    // True (unmasked) feature values.
    const size_t first_record = records.size();
    std::vector<double> true_grade;
    std::vector<double> score;
    std::vector<int> student_of;
    for (int s : active) {
      Student& st = students[s];
      const School& school = schools[st.school];
      StudentYearRecord rec;
      rec.student_id = st.id;
      rec.year = year;
      rec.level = LevelId(st.level);
      rec.school_id = school.id;
      rec.class_id = class_of[s];
      rec.features.assign(schema->size(), std::nullopt);
      auto set = [&](const char* name, double v) { rec.features[schema->RequireIndex(name)] = v; };

      const double grade = Clamp(Round2(10.5 + 2.6 * st.ability - 0.5 * st.failures_at_level +
                                        0.4 * school.quality + 1.2 * rng.Normal()),
                                 0.0, 20.0);
      const double math = Clamp(Round2(grade + 1.8 * rng.Normal()), 0.0, 20.0);
      const double arabic = Clamp(Round2(grade + 1.5 * rng.Normal()), 0.0, 20.0);
      const double french = Clamp(Round2(grade - 0.5 + 1.8 * rng.Normal()), 0.0, 20.0);
      const double science = Clamp(Round2(0.5 * (math + grade) + 0.8 * rng.Normal()), 0.0, 20.0);
      const double literary = Clamp(Round2(0.5 * (arabic + french) + 0.8 * rng.Normal()), 0.0, 20.0);
      const double unauth_boost = shifted ? 1.6 : 1.0;
      const double days_auth = Clamp(std::round(std::exp(1.0 - 0.6 * st.engagement + 0.5 * rng.Normal())), 0, 120);
      const double days_unauth = Clamp(
          std::round(unauth_boost * (std::exp(0.6 - 0.9 * st.engagement + 0.6 * rng.Normal()) - 1.0)), 0, 388);
      const double classes_auth = Clamp(std::round(days_auth * (3.0 + 2.0 * rng.Uniform01())), 0, 828);
      const double classes_unauth = Clamp(std::round(days_unauth * (1.0 + rng.Uniform01())), 0, 101);

      set("cartable", (st.level <= 6 && st.ses < -0.3 && rng.Bernoulli(0.8)) ? 1 : 0);
      set("tayssir", (school.tayssir && st.ses < -0.6) ? 1 : 0);
      set("grade_avg", grade);
      set("days_missed_auth", days_auth);
      set("classes_missed_auth", classes_auth);
      set("days_missed_unauth", days_unauth);
      set("classes_missed_unauth", classes_unauth);
      set("failures_at_level", std::min(st.failures_at_level, 3));
      set("math_avg", math);
      set("arabic_avg", arabic);
      set("french_avg", french);
      set("science_avg", science);
      set("literary_avg", literary);
      set("gender", st.gender);
      set("nationality", st.nationality);
      rec.features[f_birthplace] = st.birthplace;
      rec.features[f_disability] = st.disability;
      rec.features[f_preschool] = st.preschool;
      rec.features[f_father] = st.father;
      rec.features[f_mother] = st.mother;
      set("age", Clamp(st.age, 6, 23));
      set("school_age", std::min(88, school.opened_years_before + static_cast<int>(yi)));
      rec.features[f_province] = province_codes[school.province];
      set("boarding", school.boarding ? 1 : 0);
      set("internet", school.internet ? 1 : 0);
      rec.features[f_city] = school.city;
      set("school_tayssir", school.tayssir ? 1 : 0);

      const RiskModel& rm = config.risk;
      const double z_grade = (grade - 10.5) / 3.0;
      const double z_abs = (std::log1p(days_auth + days_unauth) - 1.6) / 0.8;
      const double grade_coef = rm.grade * (shifted ? rm.shift_grade_factor : 1.0);
      const double abs_coef = rm.absences * (shifted ? rm.shift_absence_factor : 1.0);
      const double s_val = config.signal_strength *
                           (grade_coef * z_grade + abs_coef * z_abs +
                            rm.failures * st.failures_at_level +
                            rm.age * (st.age - ExpectedAge(st.level)));
      true_grade.push_back(grade);
      score.push_back(s_val);
      student_of.push_back(s);
      records.push_back(std::move(rec));
    }

    // Class rank by grade within each class (1 = best, capped at 50).
    {
      std::map<std::string, std::vector<size_t>> by_class;
      for (size_t i = 0; i < student_of.size(); ++i) {
        by_class[records[first_record + i].class_id].push_back(i);
      }
      const size_t f_rank = schema->RequireIndex("class_rank");
      for (auto& [cls, members] : by_class) {
        std::stable_sort(members.begin(), members.end(), [&](size_t a, size_t b) {
          return true_grade[a] > true_grade[b];
        });
        for (size_t p = 0; p < members.size(); ++p) {
          records[first_record + members[p]].features[f_rank] =
              static_cast<double>(std::min<size_t>(p + 1, 50));
        }
      }
    }

    // Outcomes per level: calibrated dropout draw, then failures among the
    // remaining students.
    std::vector<StudentStatus> year_outcomes(student_of.size(), StudentStatus::kSuccess);
    for (int level = 1; level <= 12; ++level) {
      std::vector<size_t> members;
      for (size_t i = 0; i < student_of.size(); ++i) {
        if (students[student_of[i]].level == level) members.push_back(i);
      }
      if (members.empty()) continue;
      const double dropout_rate = config.DropoutRate(LevelId(level), year);
      std::vector<double> s(members.size());
      for (size_t m = 0; m < members.size(); ++m) s[m] = score[members[m]];
      const auto dropped = CalibratedDraw(dropout_rate, s, rng);
      std::vector<size_t> remaining;
      for (size_t m = 0; m < members.size(); ++m) {
        if (dropped[m]) {
          year_outcomes[members[m]] = StudentStatus::kDropout;
        } else {
          remaining.push_back(members[m]);
        }
      }
      auto fit = config.level_failure_rate.find(level);
      const double failure_rate = fit == config.level_failure_rate.end() ? 0.0 : fit->second;
      if (remaining.empty() || failure_rate <= 0.0) continue;
      const double conditional = std::min(1.0, failure_rate / (1.0 - dropout_rate));
      std::vector<double> fs(remaining.size());
      for (size_t m = 0; m < remaining.size(); ++m) {
        fs[m] = -1.5 * (true_grade[remaining[m]] - 10.5) / 3.0;
      }
      const auto failed = CalibratedDraw(conditional, fs, rng);
      for (size_t m = 0; m < remaining.size(); ++m) {
        if (failed[m]) year_outcomes[remaining[m]] = StudentStatus::kFailure;
      }
    }

    // Missingness masks; true values above already drove the outcomes.
    for (size_t i = 0; i < student_of.size(); ++i) {
      auto& features = records[first_record + i].features;
      for (size_t f = 0; f < features.size(); ++f) {
        if (miss_rate[f] > 0.0 && rng.Bernoulli(miss_rate[f])) features[f].reset();
      }
    }

    for (size_t i = 0; i < student_of.size(); ++i) {
      Student& st = students[student_of[i]];
      outcomes.push_back(year_outcomes[i]);
      ++st.age;
      switch (year_outcomes[i]) {
        case StudentStatus::kDropout:
          st.active = false;
          break;
        case StudentStatus::kFailure:
          ++st.failures_at_level;
          break;
        case StudentStatus::kSuccess:
          if (st.level == LevelId::kMax) {
            st.active = false;
          } else {
            ++st.level;
            st.failures_at_level = 0;
          }
          break;
      }
    }
  }

  std::vector<std::shared_ptr<const Vocabulary>> frozen(vocab.begin(), vocab.end());
  return Cohort(std::move(schema), std::move(frozen), std::move(records), std::move(outcomes));
}

}  // namespace dropwatch::synth
