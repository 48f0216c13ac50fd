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

#include "dropwatch/svg.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace dropwatch::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string Num(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

void Header(std::ostringstream& os, int w, int h, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << Escape(title) << "</text>\n";
}

}  // namespace

std::string LineChart(const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series) {
  const int w = 640;
  const int h = 400;
  const double left = 64;
  const double right = 150;
  const double top = 40;
  const double bottom = 56;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("series x and y differ in length");
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        any = true;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (x1 == x0) x1 = x0 + 1;
  y0 = std::min(y0, 0.0);
  if (y1 <= y0) y1 = y0 + 1;
  const double pw = w - left - right;
  const double ph = h - top - bottom;
  auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + (1.0 - (v - y0) / (y1 - y0)) * ph; };

  std::ostringstream os;
  Header(os, w, h, title);
  os << "<g stroke=\"#999\">\n<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\""
     << left + pw << "\" y2=\"" << top + ph << "\"/>\n<line x1=\"" << left << "\" y1=\"" << top
     << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\"/>\n</g>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = y0 + (y1 - y0) * t / 4.0;
    os << "<text x=\"" << left - 6 << "\" y=\"" << Num(py(v) + 4)
       << "\" text-anchor=\"end\">" << Num(v) << "</text>\n";
    const double u = x0 + (x1 - x0) * t / 4.0;
    os << "<text x=\"" << Num(px(u)) << "\" y=\"" << top + ph + 18
       << "\" text-anchor=\"middle\">" << Num(u) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">"
     << Escape(x_label) << "</text>\n"
     << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << top + ph / 2 << ")\">" << Escape(y_label) << "</text>\n";
  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      os << (i ? " " : "") << Num(px(s.x[i])) << ',' << Num(py(s.y[i]));
    }
    os << "\"/>\n";
    for (size_t i = 0; i < s.x.size(); ++i) {
      os << "<circle cx=\"" << Num(px(s.x[i])) << "\" cy=\"" << Num(py(s.y[i]))
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    os << "<rect x=\"" << w - right + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"4\" fill=\""
       << color << "\"/>\n<text x=\"" << w - right + 30 << "\" y=\"" << ly << "\">"
       << Escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string BarChart(const std::string& title, const std::vector<std::string>& labels,
                     const std::vector<double>& values, const std::string& value_label) {
  if (labels.size() != values.size()) {
    throw std::invalid_argument("bar labels and values differ in length");
  }
  const int w = 640;
  const double left = 200;
  const double right = 80;
  const double top = 40;
  const double bar = 22;
  const double gap = 8;
  const int h = static_cast<int>(top + (bar + gap) * static_cast<double>(labels.size()) + 48);
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  if (vmax <= 0.0) vmax = 1.0;
  const double pw = w - left - right;

  std::ostringstream os;
  Header(os, w, h, title);
  for (size_t i = 0; i < labels.size(); ++i) {
    const double y = top + (bar + gap) * static_cast<double>(i);
    const double len = std::max(0.0, values[i]) / vmax * pw;
    os << "<text x=\"" << left - 8 << "\" y=\"" << Num(y + bar * 0.7)
       << "\" text-anchor=\"end\">" << Escape(labels[i]) << "</text>\n"
       << "<rect x=\"" << left << "\" y=\"" << Num(y) << "\" width=\"" << Num(len)
       << "\" height=\"" << bar << "\" fill=\"" << kPalette[0] << "\"/>\n"
       << "<text x=\"" << Num(left + len + 6) << "\" y=\"" << Num(y + bar * 0.7) << "\">"
       << std::setprecision(3) << values[i] << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 14 << "\" text-anchor=\"middle\">"
     << Escape(value_label) << "</text>\n</svg>\n";
  return os.str();
}

}  // namespace dropwatch::svg
