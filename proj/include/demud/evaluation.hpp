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

// Class-discovery evaluation: discovery curves, normalized area under the
// curve, averaged random baselines, and CSV/SVG export.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "demud/error.hpp"
#include "demud/feature_matrix.hpp"
#include "demud/io.hpp"
#include "demud/random.hpp"
#include "demud/selection.hpp"

namespace demud {

/// C[i-1] = distinct classes among the first i selections; k = classes in the
/// data set. Values are real so that averaged curves share the type.
struct DiscoveryCurve {
  std::vector<double> counts;
  std::size_t classes = 0;
  /// Per-point sample standard deviation; empty for a single run.
  std::vector<double> stddev;

  std::size_t horizon() const { return counts.size(); }

  /// Throws ConfigError if the invariants of a discovery curve do not hold.
  void validate() const {
    if (classes < 1) throw ConfigError("discovery curve needs at least one class");
    if (counts.empty()) throw ConfigError("discovery curve is empty");
    if (counts.front() != 1.0) throw ConfigError("discovery curve must start at 1");
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double bound = static_cast<double>(std::min(i + 1, classes));
      if (!(counts[i] >= 1.0) || counts[i] > bound)
        throw ConfigError("discovery curve value out of range at i=" + std::to_string(i + 1));
      if (i > 0 && counts[i] < counts[i - 1])
        throw ConfigError("discovery curve decreases at i=" + std::to_string(i + 1));
    }
  }
};

/// Area under the perfect-discovery curve up to t; for t < k the oracle is
/// still climbing, giving t(t+1)/2.
inline double oracle_area(std::size_t classes, std::size_t horizon) {
  const double k = static_cast<double>(classes);
  const double t = static_cast<double>(horizon);
  if (horizon < classes) return t * (t + 1.0) / 2.0;
  return k * (k + 1.0) / 2.0 + (t - k) * k;
}

/// 100 * sum(C_i) / oracle area.
inline double nauc(const DiscoveryCurve& curve) {
  curve.validate();
  const double area = std::accumulate(curve.counts.begin(), curve.counts.end(), 0.0);
  return 100.0 * area / oracle_area(curve.classes, curve.horizon());
}

/// Curve of an ordered id list.
inline DiscoveryCurve discovery_curve(const std::vector<std::string>& ordered_ids,
                                      const LabelMap& labels, std::size_t classes,
                                      std::size_t horizon) {
  if (horizon > ordered_ids.size())
    throw ConfigError("horizon " + std::to_string(horizon) + " exceeds " +
                      std::to_string(ordered_ids.size()) + " selections");
  DiscoveryCurve curve;
  curve.classes = classes;
  curve.counts.reserve(horizon);
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < horizon; ++i) {
    seen.insert(labels.at(ordered_ids[i]));
    curve.counts.push_back(static_cast<double>(seen.size()));
  }
  return curve;
}

inline DiscoveryCurve discovery_curve(const RunResult& run, const LabelMap& labels,
                                      std::size_t classes, std::size_t horizon) {
  return discovery_curve(run.item_ids(), labels, classes, horizon);
}

/// Class count taken from the label map.
inline DiscoveryCurve discovery_curve(const RunResult& run, const LabelMap& labels,
                                      std::size_t horizon) {
  return discovery_curve(run, labels, labels.classes().size(), horizon);
}

/// Distinct classes among the items of `fm`.
inline std::size_t count_classes(const FeatureMatrix& fm, const LabelMap& labels) {
  std::set<std::string> classes;
  for (const auto& id : fm.ids()) classes.insert(labels.at(id));
  return classes.size();
}

struct BaselineResult {
  DiscoveryCurve mean;            // pointwise mean, with stddev
  double nauc = 0.0;              // nAUC of the mean curve
  std::vector<double> trial_nauc; // per-trial nAUC, in trial order
};

/// Average discovery curve of `trials` uniform permutations; trial j uses
/// seed + j. Counts are integers, so the pointwise sums are exact and the
/// result does not depend on how trials are split across workers.
inline BaselineResult random_baseline(const FeatureMatrix& fm, const LabelMap& labels,
                                      std::size_t horizon, std::size_t trials,
                                      std::uint64_t seed, std::size_t workers = 0) {
  if (trials < 1) throw ConfigError("random baseline needs at least one trial");
  if (fm.rows() == 0) throw Error("random baseline: empty feature matrix");
  if (horizon < 1 || horizon > fm.rows())
    throw ConfigError("horizon must be in [1, " + std::to_string(fm.rows()) + "]");

  // Class index per row; k counts classes present among the items.
  std::vector<std::size_t> class_of(fm.rows());
  {
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < fm.rows(); ++r) index.emplace(labels.at(fm.id(r)), 0);
    std::size_t next = 0;
    for (auto& [name, idx] : index) idx = next++;
    for (std::size_t r = 0; r < fm.rows(); ++r) class_of[r] = index.at(labels.at(fm.id(r)));
  }
  std::size_t classes = 0;
  for (auto c : class_of) classes = std::max(classes, c + 1);

  std::vector<std::vector<double>> curves(trials);
  const auto run_trial = [&](std::size_t trial) {
    const auto perm = random_permutation(fm.rows(), seed + trial);
    std::vector<char> seen(classes, 0);
    std::vector<double> c(horizon);
    double found = 0.0;
    for (std::size_t i = 0; i < horizon; ++i) {
      auto& s = seen[class_of[perm[i]]];
      if (!s) {
        s = 1;
        found += 1.0;
      }
      c[i] = found;
    }
    curves[trial] = std::move(c);
  };
  const std::size_t w = std::min(resolve_workers(workers), trials);
  if (w <= 1) {
    for (std::size_t t = 0; t < trials; ++t) run_trial(t);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t k = 0; k < w; ++k)
      threads.emplace_back([&, k] {
        for (std::size_t t = trials * k / w; t < trials * (k + 1) / w; ++t) run_trial(t);
      });
    for (auto& th : threads) th.join();
  }

  BaselineResult out;
  out.mean.classes = classes;
  out.mean.counts.assign(horizon, 0.0);
  out.mean.stddev.assign(horizon, 0.0);
  std::vector<double> sumsq(horizon, 0.0);
  out.trial_nauc.reserve(trials);
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < horizon; ++i) {
      out.mean.counts[i] += c[i];
      sumsq[i] += c[i] * c[i];
    }
    out.trial_nauc.push_back(nauc(DiscoveryCurve{c, classes, {}}));
  }
  const double n = static_cast<double>(trials);
  for (std::size_t i = 0; i < horizon; ++i) {
    const double mean = out.mean.counts[i] / n;
    out.mean.counts[i] = mean;
    out.mean.stddev[i] =
        trials > 1 ? std::sqrt(std::max(0.0, (sumsq[i] - n * mean * mean) / (n - 1.0))) : 0.0;
  }
  out.nauc = nauc(out.mean);
  return out;
}

struct KSweepReport {
  std::vector<std::size_t> ks;
  std::vector<double> naucs;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

/// DEMUD nAUC at each K over the same data and horizon.
inline KSweepReport k_sensitivity(const FeatureMatrix& fm, const LabelMap& labels,
                                  const std::vector<std::size_t>& ks, std::size_t horizon,
                                  RunConfig base = {}) {
  KSweepReport rep;
  const std::size_t classes = count_classes(fm, labels);
  for (auto k : ks) {
    RunConfig cfg = base;
    cfg.k_max = k;
    cfg.n_selections = horizon;
    const auto run = demud_rank(fm, cfg);
    rep.ks.push_back(k);
    rep.naucs.push_back(nauc(discovery_curve(run, labels, classes, horizon)));
  }
  const double n = static_cast<double>(rep.naucs.size());
  rep.mean = std::accumulate(rep.naucs.begin(), rep.naucs.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : rep.naucs) ss += (v - rep.mean) * (v - rep.mean);
  rep.stddev = rep.naucs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return rep;
}

// --- export -----------------------------------------------------------------

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string fixed2(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

}  // namespace detail

/// `i,C_i[,stddev]` with a header line.
inline void write_curve_csv(const DiscoveryCurve& curve, const std::filesystem::path& path) {
  auto out = io::detail::open_out(path);
  const bool sd = !curve.stddev.empty();
  out << (sd ? "i,C_i,stddev\n" : "i,C_i\n");
  for (std::size_t i = 0; i < curve.counts.size(); ++i) {
    out << (i + 1) << ',' << detail::format_number(curve.counts[i]);
    if (sd) out << ',' << detail::format_number(curve.stddev[i]);
    out << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

struct NamedCurve {
  std::string name;
  DiscoveryCurve curve;
};

/// Minimal SVG line chart of discovery curves with the oracle line dashed.
inline std::string curves_svg(const std::vector<NamedCurve>& curves, std::size_t width = 640,
                              std::size_t height = 420) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::size_t horizon = 1, classes = 1;
  for (const auto& nc : curves) {
    horizon = std::max(horizon, nc.curve.horizon());
    classes = std::max(classes, nc.curve.classes);
  }
  const double left = 50, right = 150, top = 20, bottom = 40;
  const double pw = static_cast<double>(width) - left - right;
  const double ph = static_cast<double>(height) - top - bottom;
  const auto px = [&](double i) { return left + pw * (i - 1.0) / std::max(1.0, double(horizon) - 1.0); };
  const auto py = [&](double c) { return top + ph * (1.0 - c / double(classes)); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 8
     << "\" text-anchor=\"middle\">Number of selections</text>\n";
  os << "<text x=\"14\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 14 " << top + ph / 2
     << ")\" text-anchor=\"middle\">Classes discovered</text>\n";
  os << "<text x=\"" << left << "\" y=\"" << top + ph + 14 << "\" text-anchor=\"middle\">1</text>\n";
  os << "<text x=\"" << left + pw << "\" y=\"" << top + ph + 14 << "\" text-anchor=\"middle\">"
     << horizon << "</text>\n";
  os << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << classes
     << "</text>\n";

  // Oracle.
  os << "<polyline fill=\"none\" stroke=\"#000\" stroke-dasharray=\"4 3\" points=\"";
  for (std::size_t i = 1; i <= horizon; ++i)
    os << px(double(i)) << ',' << py(double(std::min(i, classes))) << ' ';
  os << "\"/>\n";
  os << "<text x=\"" << left + pw + 8 << "\" y=\"" << top + 12 << "\">Oracle</text>\n";

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kColors[c % (sizeof kColors / sizeof *kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const auto& counts = curves[c].curve.counts;
    for (std::size_t i = 0; i < counts.size(); ++i)
      os << px(double(i + 1)) << ',' << py(counts[i]) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << left + pw + 8 << "\" y=\"" << top + 28 + 16.0 * double(c)
       << "\" fill=\"" << color << "\">" << curves[c].name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void write_curves_svg(const std::vector<NamedCurve>& curves,
                             const std::filesystem::path& path) {
  auto out = io::detail::open_out(path);
  out << curves_svg(curves);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

/// nAUC table: one row per feature set, one column per method/data set.
struct NaucTable {
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
};

inline void write_nauc_table_csv(const NaucTable& table, const std::filesystem::path& path) {
  auto out = io::detail::open_out(path);
  out << "features";
  for (const auto& c : table.columns) out << ',' << c;
  out << '\n';
  for (const auto& [name, values] : table.rows) {
    if (values.size() != table.columns.size())
      throw DimensionError("nAUC table row '" + name + "' has wrong width");
    out << name;
    for (double v : values) out << ',' << detail::fixed2(v);
    out << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace demud
