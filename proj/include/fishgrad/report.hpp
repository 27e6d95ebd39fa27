// Copyright 2026 The fishgrad Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// CSV and SVG renderings of grids and grid comparisons.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "fishgrad/error.hpp"
#include "fishgrad/grid.hpp"

namespace fishgrad {

inline std::string format4(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

/// Shortest text that reads back to the same double.
inline std::string shortest(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Sparsity fraction as a percentage label, e.g. 0.025 -> "2.5%".
inline std::string percent_label(double fraction) {
  std::ostringstream os;
  os.precision(6);
  os << fraction * 100.0 << '%';
  return os.str();
}

inline std::string comparison_csv(const CellComparison& cmp) {
  std::ostringstream os;
  os << "sparsity,n_samples,baseline,candidate,verdict\n";
  for (const auto& c : cmp.cells) {
    os << shortest(c.sparsity) << ',' << c.n_samples << ',' << format4(c.baseline) << ',' << format4(c.candidate) << ','
       << to_string(c.verdict) << '\n';
  }
  return os.str();
}

inline std::string grid_csv(const GridResult& grid) {
  std::ostringstream os;
  os << "sparsity,n_samples,seed,score,status\n";
  for (const auto& c : grid.cells) {
    os << shortest(c.sparsity) << ',' << c.n_samples << ',' << c.seed << ',' << shortest(c.score) << ','
       << c.status << '\n';
  }
  return os.str();
}

struct Rgb {
  int r, g, b;
};

inline constexpr Rgb kLightGreen{146, 208, 80};
inline constexpr Rgb kDarkGreen{0, 176, 80};
inline constexpr Rgb kGrey{217, 217, 217};

/// Linear blend from light (t = 0) to dark green (t = 1).
inline Rgb green_shade(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto mix = [t](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
  return {mix(kLightGreen.r, kDarkGreen.r), mix(kLightGreen.g, kDarkGreen.g), mix(kLightGreen.b, kDarkGreen.b)};
}

inline std::string hex_color(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

struct HeatmapStyle {
  int cell_width = 84;
  int cell_height = 40;
  int margin_left = 70;
  int margin_top = 20;
  int margin_bottom = 40;
};

/// Renders the mean score matrix of `grid`. Columns are sample counts
/// ascending left to right, rows sparsities ascending top to bottom, so the
/// starting configuration sits in the lower right. When `comparison` is
/// given (with `grid` as its candidate) cells carry up/down glyphs.
inline std::string render_heatmap(const GridResult& grid, const CellComparison* comparison = nullptr,
                                  const HeatmapStyle& style = {}) {
  const std::size_t ns = grid.sparsity_axis.size();
  const std::size_t nn = grid.sample_axis.size();
  require(ns >= 1 && nn >= 1, "render_heatmap: empty grid");
  const auto means = cell_means(grid);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [key, v] : means) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const long long best = std::isfinite(hi) ? round4(hi) : std::numeric_limits<long long>::min();

  std::map<std::pair<std::size_t, std::size_t>, Verdict> verdicts;
  if (comparison) {
    for (const auto& c : comparison->cells) {
      const std::size_t i = detail::axis_index(grid.sparsity_axis, c.sparsity);
      const auto jt = std::find(grid.sample_axis.begin(), grid.sample_axis.end(), c.n_samples);
      if (i < ns && jt != grid.sample_axis.end()) {
        verdicts[{i, static_cast<std::size_t>(jt - grid.sample_axis.begin())}] = c.verdict;
      }
    }
  }

  const int width = style.margin_left + static_cast<int>(nn) * style.cell_width + 10;
  const int height = style.margin_top + static_cast<int>(ns) * style.cell_height + style.margin_bottom;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";

  // Cells in row-major display order, top-left first.
  for (std::size_t row = 0; row < ns; ++row) {
    const std::size_t i = ns - 1 - row;
    for (std::size_t col = 0; col < nn; ++col) {
      const std::size_t j = nn - 1 - col;
      const int x = style.margin_left + static_cast<int>(col) * style.cell_width;
      const int y = style.margin_top + static_cast<int>(row) * style.cell_height;
      const auto it = means.find({i, j});
      const bool explored = it != means.end() && std::isfinite(it->second);
      Rgb fill = kGrey;
      bool is_best = false;
      if (explored) {
        fill = green_shade(hi > lo ? (it->second - lo) / (hi - lo) : 1.0);
        is_best = round4(it->second) == best;
      }
      os << "  <rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << style.cell_width
         << "\" height=\"" << style.cell_height << "\" fill=\"" << hex_color(fill) << "\" stroke=\""
         << (is_best ? "#ff0000" : "#ffffff") << "\" stroke-width=\"" << (is_best ? 3 : 1) << "\"/>\n";
      if (it == means.end()) continue;
      std::string text = explored ? format4(it->second) : "n/a";
      if (const auto v = verdicts.find({i, j}); v != verdicts.end()) {
        if (v->second == Verdict::up) text += " ▲";
        if (v->second == Verdict::down) text += " ▼";
      }
      os << "  <text class=\"label\" x=\"" << x + style.cell_width / 2 << "\" y=\""
         << y + style.cell_height / 2 + 4 << "\" text-anchor=\"middle\">" << text << "</text>\n";
    }
  }
  for (std::size_t row = 0; row < ns; ++row) {
    const int y = style.margin_top + static_cast<int>(row) * style.cell_height + style.cell_height / 2 + 4;
    os << "  <text class=\"axis\" x=\"" << style.margin_left - 6 << "\" y=\"" << y << "\" text-anchor=\"end\">"
       << percent_label(grid.sparsity_axis[ns - 1 - row]) << "</text>\n";
  }
  for (std::size_t col = 0; col < nn; ++col) {
    const int x = style.margin_left + static_cast<int>(col) * style.cell_width + style.cell_width / 2;
    const int y = style.margin_top + static_cast<int>(ns) * style.cell_height + 16;
    os << "  <text class=\"axis\" x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"middle\">"
       << grid.sample_axis[nn - 1 - col] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace fishgrad
