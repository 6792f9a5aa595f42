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

// Command-line front end. Exit codes: 0 ok, 1 other failure, 2 input/parse
// error, 3 configuration error, 4 unlabeled item.

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "demud/error.hpp"
#include "demud/evaluation.hpp"
#include "demud/explain.hpp"
#include "demud/feature_matrix.hpp"
#include "demud/io.hpp"
#include "demud/pixels.hpp"
#include "demud/run_io.hpp"
#include "demud/selection.hpp"
#include "demud/subsample.hpp"
#include "demud/synthetic.hpp"

namespace demud::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kParse = 2, kConfig = 3, kLabel = 4 };

namespace fs = std::filesystem;

namespace detail {

inline void require_input(const fs::path& p) {
  if (!fs::exists(p)) throw ParseError(p.string(), 0, "", "no such file or directory");
}

inline void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw Error("cannot create directory '" + p.string() + "'");
}

/// Features, with labels attached from a TSV when one is given.
inline FeatureMatrix load_with_labels(const fs::path& features, const std::string& labels) {
  require_input(features);
  FeatureMatrix fm = io::load_features(features);
  if (!labels.empty()) {
    require_input(labels);
    fm = fm.with_labels(io::restrict_labels(io::load_labels_tsv(labels), fm));
  }
  return fm;
}

inline std::string fixed2(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

}  // namespace detail

struct Streams {
  std::ostream& out;
  std::ostream& err;
  bool quiet = false;

  std::ostream& info() {
    static std::ostream null(nullptr);
    return quiet ? null : out;
  }
};

// --- ingest -----------------------------------------------------------------

struct IngestArgs {
  std::string csv, images, labels, out;
  std::size_t side = 227;
  bool standardize = false;
};

inline int cmd_ingest(const IngestArgs& a, Streams& s) {
  if (a.csv.empty() == a.images.empty()) throw ConfigError("give exactly one of --csv or --images");
  std::optional<FeatureMatrix> fm;
  if (!a.csv.empty()) {
    detail::require_input(a.csv);
    fm = io::load_csv(a.csv);
  } else {
    detail::require_input(a.images);
    auto ingest = pixels_from_images(a.images, a.side, s.quiet ? nullptr : &s.err);
    fm = std::move(ingest.features);
    if (!ingest.skipped.empty())
      s.info() << "skipped=" << ingest.skipped.size() << '\n';
  }
  if (!a.labels.empty()) {
    detail::require_input(a.labels);
    fm = fm->with_labels(io::restrict_labels(io::load_labels_tsv(a.labels), *fm));
  }
  if (a.standardize) fm = standardize(*fm);
  io::save_binary(*fm, a.out);
  s.info() << "n=" << fm->rows() << " d=" << fm->dim() << '\n';
  return kOk;
}

// --- subsample --------------------------------------------------------------

struct SubsampleArgs {
  std::string in, labels, out;
  std::size_t majority = 10, minority = 10, per_majority = 50, per_minority = 1;
  std::uint64_t seed = 0;
};

inline int cmd_subsample(const SubsampleArgs& a, Streams& s) {
  const FeatureMatrix fm = detail::load_with_labels(a.in, a.labels);
  const FeatureMatrix sub =
      make_unbalanced(fm, a.majority, a.minority, a.per_majority, a.per_minority, a.seed);
  io::save_binary(sub, a.out);
  s.info() << "n=" << sub.rows() << " d=" << sub.dim() << '\n';
  return kOk;
}

// --- run --------------------------------------------------------------------

struct RunArgs {
  std::string features, out, name = "run", method = "demud", engine = "exact-refit";
  std::size_t k = 50, selections = 300, retained_rank = 0, workers = 0;
  std::uint64_t seed = 0;
};

inline int cmd_run(const RunArgs& a, Streams& s) {
  const Method method = parse_method(a.method);
  RunConfig cfg;
  cfg.k_max = a.k;
  cfg.n_selections = a.selections;
  cfg.engine = parse_engine(a.engine);
  cfg.retained_rank = a.retained_rank;
  cfg.seed = a.seed;
  cfg.workers = a.workers;
  if (cfg.n_selections < 1) throw ConfigError("--selections must be at least 1");
  if (cfg.k_max < 1) throw ConfigError("--k must be at least 1");

  detail::require_input(a.features);
  const FeatureMatrix fm = io::load_features(a.features);
  cfg.validate(fm.rows());

  RunResult result;
  switch (method) {
    case Method::Demud:
      result = demud_rank(fm, cfg);
      break;
    case Method::Svd:
      result = svd_baseline_rank(fm, cfg.k_max, cfg.n_selections, cfg.workers);
      result.records.resize(cfg.n_selections);
      break;
    case Method::Random:
      result = random_rank(fm, cfg.seed);
      result.records.resize(cfg.n_selections);
      break;
  }
  result.config = cfg;
  if (method != Method::Demud) result.config.engine = SvdEngine::ExactRefit;

  detail::ensure_dir(a.out);
  RunDocument doc{std::move(result), a.features, fm.rows(), {}};
  const fs::path json = fs::path(a.out) / (a.name + ".json");
  save_run(std::move(doc), json);
  s.info() << "records=" << cfg.n_selections << " -> " << json.string() << '\n';
  return kOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string run, labels, out, features, name = "curve";
  std::size_t horizon = 0, classes = 0, trials = 0, workers = 0;
  std::optional<std::uint64_t> seed;
  bool svg = false;
};

inline int cmd_eval(const EvalArgs& a, Streams& s) {
  detail::require_input(a.run);
  detail::require_input(a.labels);
  const RunDocument doc = load_run(a.run);
  const LabelMap labels = io::load_labels_tsv(a.labels);
  const std::size_t t = a.horizon == 0 ? doc.result.records.size() : a.horizon;
  if (t < 1 || t > doc.result.records.size())
    throw ConfigError("--t must be in [1, " + std::to_string(doc.result.records.size()) + "]");

  DiscoveryCurve curve;
  double score = 0.0;
  if (doc.result.method == Method::Random && a.trials > 0) {
    fs::path features = a.features.empty() ? fs::path(doc.features) : fs::path(a.features);
    if (features.is_relative() && !fs::exists(features))
      features = fs::path(a.run).parent_path() / features;
    detail::require_input(features);
    const FeatureMatrix fm = io::load_features(features);
    const auto base =
        random_baseline(fm, labels, t, a.trials, a.seed.value_or(doc.result.config.seed), a.workers);
    curve = base.mean;
    if (a.classes != 0 && a.classes != curve.classes)
      throw ConfigError("--classes disagrees with the classes present in the features");
    score = base.nauc;
  } else {
    const std::size_t k = a.classes == 0 ? labels.classes().size() : a.classes;
    curve = discovery_curve(doc.result, labels, k, t);
    score = nauc(curve);
  }
  s.out << "nAUC=" << detail::fixed2(score) << '\n';
  if (!a.out.empty()) {
    detail::ensure_dir(a.out);
    write_curve_csv(curve, fs::path(a.out) / (a.name + ".csv"));
    if (a.svg)
      write_curves_svg({{to_string(doc.result.method), curve}}, fs::path(a.out) / (a.name + ".svg"));
  }
  return kOk;
}

// --- explain ----------------------------------------------------------------

struct ExplainArgs {
  std::string run, out, space = "generic";
  std::vector<std::size_t> ranks;
  std::size_t top = 20;
};

inline int cmd_explain(const ExplainArgs& a, Streams& s) {
  detail::require_input(a.run);
  const FeatureSpace space = parse_space(a.space);
  const RunDocument doc = load_run(a.run, true);
  if (a.ranks.empty()) throw ConfigError("give at least one --rank");
  detail::ensure_dir(a.out);
  for (const std::size_t rank : a.ranks) {
    if (rank < 1 || rank > doc.result.records.size())
      throw ConfigError("rank " + std::to_string(rank) + " out of range [1, " +
                        std::to_string(doc.result.records.size()) + "]");
    const auto& rec = doc.result.records[rank - 1];
    if (!rec.has_vectors())
      throw ConfigError("rank " + std::to_string(rank) + " has no stored vectors");
    const Explanation expl = build_explanation(rec, space);
    const std::string stem = "rank" + std::to_string(rank);
    const fs::path dir(a.out);
    if (space.is_pixel()) {
      render_pixel(expl, Part::Expected, dir / (stem + ".expected.png"));
      render_pixel(expl, Part::Novel, dir / (stem + ".novel.png"));
    }
    write_top_features_tsv(top_features(expl, a.top), dir / (stem + ".top.tsv"));
    write_explanation_vectors(expl, dir / (stem + ".fmx"));
    s.info() << "rank " << rank << " (" << rec.item_id << ") -> " << (dir / stem).string() << ".*\n";
  }
  return kOk;
}

// --- ksweep -----------------------------------------------------------------

struct KSweepArgs {
  std::string features, labels;
  std::vector<std::size_t> ks = {10, 25, 50, 75, 100};
  std::size_t horizon = 300;
  std::string engine = "exact-refit";
};

inline int cmd_ksweep(const KSweepArgs& a, Streams& s) {
  const FeatureMatrix fm = detail::load_with_labels(a.features, a.labels);
  if (!fm.has_labels()) throw ConfigError("ksweep needs labels (--labels or labeled features)");
  RunConfig base;
  base.engine = parse_engine(a.engine);
  if (a.horizon < 1 || a.horizon > fm.rows()) throw ConfigError("--t out of range");
  const auto rep = k_sensitivity(fm, *fm.labels(), a.ks, a.horizon, base);
  for (std::size_t i = 0; i < rep.ks.size(); ++i)
    s.out << "K=" << rep.ks[i] << " nAUC=" << detail::fixed2(rep.naucs[i]) << '\n';
  s.out << "mean=" << detail::fixed2(rep.mean) << " stddev=" << detail::fixed2(rep.stddev) << '\n';
  return kOk;
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string out, labels_out;
  std::size_t classes = 20, per_class = 50, dim = 32;
  double separation = 5.0;
  std::uint64_t seed = 0;
};

inline int cmd_synth(const SynthArgs& a, Streams& s) {
  ClusterSpec spec;
  spec.sizes.assign(a.classes, a.per_class);
  spec.dim = a.dim;
  spec.separation = a.separation;
  spec.seed = a.seed;
  const FeatureMatrix fm = gaussian_clusters(spec);
  io::save_binary(fm, a.out);
  if (!a.labels_out.empty()) io::save_labels_tsv(*fm.labels(), a.labels_out);
  s.info() << "n=" << fm.rows() << " d=" << fm.dim() << '\n';
  return kOk;
}

// --- entry point ------------------------------------------------------------

/// Parses `args` (args[0] is the program name) and runs one subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Class discovery by novelty ranking with explanations", "demud"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress informational output");

  IngestArgs ingest;
  auto* ci = app.add_subcommand("ingest", "Convert CSV or an image directory to FMX1");
  ci->add_option("--csv", ingest.csv, "CSV feature file");
  ci->add_option("--images,--pixels", ingest.images, "Directory of images");
  ci->add_option("--side", ingest.side, "Square side for image features")->capture_default_str();
  ci->add_option("--labels", ingest.labels, "Labels TSV to embed");
  ci->add_flag("--standardize", ingest.standardize, "Per-feature z-score");
  ci->add_option("--out", ingest.out, "Output FMX1 file")->required();
  ci->add_flag("-q,--quiet", quiet);

  SubsampleArgs sub;
  auto* cs = app.add_subcommand("subsample", "Class-imbalanced subsample");
  cs->add_option("--in", sub.in, "Input features")->required();
  cs->add_option("--labels", sub.labels, "Labels TSV");
  cs->add_option("--majority", sub.majority)->capture_default_str();
  cs->add_option("--minority", sub.minority)->capture_default_str();
  cs->add_option("--per-majority", sub.per_majority)->capture_default_str();
  cs->add_option("--per-minority", sub.per_minority)->capture_default_str();
  cs->add_option("--seed", sub.seed)->capture_default_str();
  cs->add_option("--out", sub.out, "Output FMX1 file")->required();
  cs->add_flag("-q,--quiet", quiet);

  RunArgs run_args;
  auto* cr = app.add_subcommand("run", "Rank items by novelty");
  cr->add_option("--features", run_args.features, "FMX1 or CSV features")->required();
  cr->add_option("--method", run_args.method, "demud | svd | random")->capture_default_str();
  cr->add_option("--k", run_args.k, "Rank cap K")->capture_default_str();
  cr->add_option("--selections", run_args.selections, "Number of selections t")->capture_default_str();
  cr->add_option("--seed", run_args.seed, "Seed (random method)")->capture_default_str();
  cr->add_option("--engine", run_args.engine, "exact-refit | incremental")->capture_default_str();
  cr->add_option("--retained-rank", run_args.retained_rank, "Incremental rank cap (0 = none)");
  cr->add_option("--workers", run_args.workers, "Scoring threads (0 = DEMUD_WORKERS or all cores)");
  cr->add_option("--name", run_args.name, "Output file stem")->capture_default_str();
  cr->add_option("--out", run_args.out, "Output directory")->required();
  cr->add_flag("-q,--quiet", quiet);

  EvalArgs eval;
  std::uint64_t eval_seed = 0;
  auto* ce = app.add_subcommand("eval", "Discovery curve and nAUC of a run");
  ce->add_option("--run", eval.run, "Run JSON")->required();
  ce->add_option("--labels", eval.labels, "Labels TSV")->required();
  ce->add_option("--t", eval.horizon, "Horizon (default: all records)");
  ce->add_option("--classes", eval.classes, "Class count k (default: from labels)");
  ce->add_option("--trials", eval.trials, "Average this many random orders (random runs)");
  auto* seed_opt = ce->add_option("--seed", eval_seed, "First trial seed (default: the run's)");
  ce->add_option("--features", eval.features, "Features for random trials (default: the run's)");
  ce->add_option("--workers", eval.workers);
  ce->add_option("--out", eval.out, "Directory for the curve CSV");
  ce->add_option("--name", eval.name, "Curve file stem")->capture_default_str();
  ce->add_flag("--svg", eval.svg, "Also write an SVG chart");
  ce->add_flag("-q,--quiet", quiet);

  ExplainArgs ex;
  auto* cx = app.add_subcommand("explain", "Expected/novel content of selections");
  cx->add_option("--run", ex.run, "Run JSON")->required();
  cx->add_option("--rank", ex.ranks, "Selection rank(s), 1-based")->required();
  cx->add_option("--space", ex.space, "pixel:WxH | generic")->capture_default_str();
  cx->add_option("--top", ex.top, "Top residual features to list")->capture_default_str();
  cx->add_option("--out", ex.out, "Output directory")->required();
  cx->add_flag("-q,--quiet", quiet);

  KSweepArgs ks;
  auto* ck = app.add_subcommand("ksweep", "nAUC sensitivity to K");
  ck->add_option("--features", ks.features, "Features")->required();
  ck->add_option("--labels", ks.labels, "Labels TSV");
  ck->add_option("--ks", ks.ks, "K values")->delimiter(',')->capture_default_str();
  ck->add_option("--t", ks.horizon, "Horizon")->capture_default_str();
  ck->add_option("--engine", ks.engine)->capture_default_str();
  ck->add_flag("-q,--quiet", quiet);

  SynthArgs sy;
  auto* cy = app.add_subcommand("synth", "Generate Gaussian-cluster test data");
  cy->add_option("--classes", sy.classes)->capture_default_str();
  cy->add_option("--per-class", sy.per_class)->capture_default_str();
  cy->add_option("--dim", sy.dim)->capture_default_str();
  cy->add_option("--separation", sy.separation, "Center spacing in sigmas")->capture_default_str();
  cy->add_option("--seed", sy.seed)->capture_default_str();
  cy->add_option("--out", sy.out, "Output FMX1 file")->required();
  cy->add_option("--labels-out", sy.labels_out, "Also write labels TSV");
  cy->add_flag("-q,--quiet", quiet);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  }

  Streams s{out, err, quiet};
  try {
    if (*ci) return cmd_ingest(ingest, s);
    if (*cs) return cmd_subsample(sub, s);
    if (*cr) return cmd_run(run_args, s);
    if (*ce) {
      if (seed_opt->count() > 0) eval.seed = eval_seed;
      return cmd_eval(eval, s);
    }
    if (*cx) return cmd_explain(ex, s);
    if (*ck) return cmd_ksweep(ks, s);
    if (*cy) return cmd_synth(sy, s);
  } catch (const LabelError& e) {
    err << "error: " << e.what() << '\n';
    return kLabel;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace demud::cli
