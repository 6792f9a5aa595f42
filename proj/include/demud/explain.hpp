// Copyright 2026 The demud Authors.
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

// Explanations of selections: the expected part (model reconstruction) and
// the novel part (residual), rendered as images in pixel space or summarized
// as top-attributed features otherwise.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "demud/error.hpp"
#include "demud/io.hpp"
#include "demud/pixels.hpp"
#include "demud/selection.hpp"

namespace demud {

struct FeatureSpace {
  enum class Kind { Pixel, Generic };
  Kind kind = Kind::Generic;
  std::size_t width = 0;   // pixel spaces only
  std::size_t height = 0;
  std::size_t dim = 0;     // 0 for a generic space of unspecified size

  static FeatureSpace pixel(std::size_t width, std::size_t height) {
    return {Kind::Pixel, width, height, 3 * width * height};
  }
  static FeatureSpace generic(std::size_t dim = 0) { return {Kind::Generic, 0, 0, dim}; }

  bool is_pixel() const { return kind == Kind::Pixel; }
  bool accepts(std::size_t d) const { return dim == 0 ? kind == Kind::Generic : d == dim; }
};

/// `pixel:WxH`, `generic` or `generic:D`.
inline FeatureSpace parse_space(const std::string& s) {
  const auto number = [&](std::string_view text) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || v == 0)
      throw ConfigError("bad feature space '" + s + "'");
    return v;
  };
  if (s == "generic") return FeatureSpace::generic();
  if (s.rfind("generic:", 0) == 0) return FeatureSpace::generic(number(std::string_view(s).substr(8)));
  if (s.rfind("pixel:", 0) == 0) {
    const std::string_view dims = std::string_view(s).substr(6);
    const auto x = dims.find('x');
    if (x == std::string_view::npos) throw ConfigError("bad feature space '" + s + "'");
    return FeatureSpace::pixel(number(dims.substr(0, x)), number(dims.substr(x + 1)));
  }
  throw ConfigError("bad feature space '" + s + "' (expected pixel:WxH or generic)");
}

struct Explanation {
  std::string item_id;
  Eigen::VectorXd expected;
  Eigen::VectorXd novel;
  FeatureSpace space;

  Eigen::VectorXd original() const { return expected + novel; }
};

inline Explanation build_explanation(const SelectionRecord& record, const FeatureSpace& space) {
  if (!record.has_vectors())
    throw DimensionError("record for '" + record.item_id + "' carries no vectors");
  const auto d = static_cast<std::size_t>(record.reconstruction.size());
  if (static_cast<std::size_t>(record.residual.size()) != d)
    throw DimensionError("reconstruction and residual differ in size");
  if (!space.accepts(d))
    throw DimensionError("record dimension " + std::to_string(d) +
                         " does not match feature space of dimension " + std::to_string(space.dim));
  Explanation e{record.item_id, record.reconstruction, record.residual, space};
  if (e.space.dim == 0) e.space.dim = d;
  return e;
}

enum class Part { Expected, Novel };

/// 8-bit value for expected content: clamp to [0, 1], scale, round.
inline unsigned char quantize_expected(double v) {
  return static_cast<unsigned char>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
}

/// Diverging map for residuals: 0 -> 128, +scale -> 255, -scale -> 0.
inline unsigned char quantize_novel(double v, double scale) {
  if (!(scale > 0.0)) return 128;
  const double p = 127.5 + 127.5 * (v / scale);
  return static_cast<unsigned char>(std::clamp(std::floor(p + 0.5), 0.0, 255.0));
}

/// Writes one part of a pixel-space explanation as an 8-bit RGB PNG. The
/// novel part is scaled by max|e|, which is written to `<path>.norm.txt` and
/// returned; the expected part returns 1.
inline double render_pixel(const Explanation& expl, Part which, const std::filesystem::path& path) {
  if (!expl.space.is_pixel()) throw ConfigError("render_pixel needs a pixel feature space");
  const std::size_t n = expl.space.dim;
  if (static_cast<std::size_t>(expl.expected.size()) != n)
    throw DimensionError("explanation size does not match its pixel space");
  std::vector<unsigned char> rgb(n);
  double scale = 1.0;
  if (which == Part::Expected) {
    for (std::size_t i = 0; i < n; ++i) rgb[i] = quantize_expected(expl.expected[static_cast<Eigen::Index>(i)]);
  } else {
    scale = n == 0 ? 0.0 : expl.novel.cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < n; ++i) rgb[i] = quantize_novel(expl.novel[static_cast<Eigen::Index>(i)], scale);
  }
  write_png(path, expl.space.width, expl.space.height, rgb);
  if (which == Part::Novel) {
    auto out = io::detail::open_out(path.string() + ".norm.txt");
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, scale);
    out << std::string_view(buf, static_cast<std::size_t>(ptr - buf)) << '\n';
    if (!out) throw Error("write failed for '" + path.string() + ".norm.txt'");
  }
  return scale;
}

struct FeatureAttribution {
  std::size_t index = 0;
  double value = 0.0;

  friend bool operator==(const FeatureAttribution&, const FeatureAttribution&) = default;
};

/// The m residual entries of largest magnitude, ties in index order.
/// m larger than d is truncated to d.
inline std::vector<FeatureAttribution> top_features(const Explanation& expl, std::size_t m) {
  if (m < 1) throw ConfigError("top_features: count must be at least 1");
  const auto& e = expl.novel;
  std::vector<std::size_t> order(static_cast<std::size_t>(e.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  m = std::min(m, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double fa = std::abs(e[static_cast<Eigen::Index>(a)]);
                      const double fb = std::abs(e[static_cast<Eigen::Index>(b)]);
                      if (fa != fb) return fa > fb;
                      return a < b;
                    });
  std::vector<FeatureAttribution> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back({order[i], e[static_cast<Eigen::Index>(order[i])]});
  return out;
}

/// `rank<TAB>feature_index<TAB>value`, header first, rank 1-based.
inline void write_top_features_tsv(const std::vector<FeatureAttribution>& features,
                                   const std::filesystem::path& path) {
  auto out = io::detail::open_out(path);
  out << "rank\tfeature_index\tvalue\n";
  char buf[64];
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, features[i].value);
    out << (i + 1) << '\t' << features[i].index << '\t'
        << std::string_view(buf, static_cast<std::size_t>(ptr - buf)) << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

/// Expected and novel vectors as a two-row FMX1 file.
inline void write_explanation_vectors(const Explanation& expl, const std::filesystem::path& path) {
  RowMatrix data(2, expl.expected.size());
  data.row(0) = expl.expected.transpose();
  data.row(1) = expl.novel.transpose();
  io::save_binary(FeatureMatrix({"expected", "novel"}, std::move(data)), path);
}

}  // namespace demud
