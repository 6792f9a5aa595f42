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

// Acceptance suite. Prints one line per criterion:
//   PASS|FAIL|SKIP  <name>  <details>  (<seconds> s, limit <seconds> s)
// With `--criterion NAME` only that criterion runs; the exit status is 0 on
// PASS, 1 on FAIL and 77 on SKIP.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "demud/cli.hpp"
#include "demud/demud.hpp"
#include "test_support.hpp"

namespace {

using namespace demud;
namespace fs = std::filesystem;

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

struct Criterion {
  std::string name;
  double limit_seconds;  // 0 means no runtime bound
  std::function<Outcome()> check;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Status::Pass : Status::Fail, std::move(detail)};
}

// --- criteria ----------------------------------------------------------------

Outcome oracle_identity() {
  ClusterSpec spec;
  spec.sizes.assign(6, 10);
  spec.dim = 8;
  spec.seed = 1;
  const FeatureMatrix fm = gaussian_clusters(spec);
  // Round-robin over classes: every class appears before any repeats.
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < fm.rows(); ++r) by_class[fm.labels()->at(fm.id(r))].push_back(r);
  RunResult run;
  for (std::size_t j = 0; j < 10; ++j)
    for (const auto& [cls, rows] : by_class) {
      SelectionRecord rec;
      rec.rank = run.records.size() + 1;
      rec.row = rows[j];
      rec.item_id = fm.id(rows[j]);
      run.records.push_back(rec);
    }
  const double v = nauc(discovery_curve(run, *fm.labels(), 6, fm.rows()));
  const std::string text = cli::detail::fixed2(v);
  return verdict(v == 100.0 && text == "100.00", "nAUC=" + text);
}

Outcome three_step_fixture() {
  const double v = nauc(DiscoveryCurve{{1, 1, 2}, 2, {}});
  const std::string text = cli::detail::fixed2(v);
  return verdict(v == 80.0 && text == "80.00", "nAUC=" + text);
}

Outcome residual_orthogonality() {
  Rng rng(20240601);
  double worst_ratio = 0.0;
  std::size_t ortho_fail = 0, exact_pairs = 0, components = 0, inexact = 0, inexact_in_exact_region = 0;
  double worst_sum_error = 0.0;
  for (int pair = 0; pair < 1000; ++pair) {
    const std::size_t d = 1 + uniform_below(rng, 128);
    const std::size_t k = 1 + uniform_below(rng, 20);
    const std::size_t n = 1 + uniform_below(rng, 40);
    const SvdModel m = fit_batch(testing::random_matrix(n, d, rng()), k);
    const Eigen::VectorXd x = testing::random_matrix(1, d, rng()).row(0).transpose();
    const Eigen::VectorXd xhat = reconstruct(m, x);
    const Eigen::VectorXd e = residual(m, x);
    const double ratio = (m.basis.transpose() * e).norm() / x.norm();
    worst_ratio = std::max(worst_ratio, ratio);
    if (!(ratio <= 1e-8)) ++ortho_fail;
    bool all = true;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      ++components;
      const double sum = xhat(i) + e(i);
      if (sum == x(i)) continue;
      all = false;
      ++inexact;
      worst_sum_error = std::max(worst_sum_error, std::abs(sum - x(i)) / std::abs(x(i)));
      const bool representable =
          x(i) == 0.0 || xhat(i) == 0.0 ||
          (std::signbit(x(i)) == std::signbit(xhat(i)) && std::abs(xhat(i)) >= 0.5 * std::abs(x(i)) &&
           std::abs(xhat(i)) <= 2.0 * std::abs(x(i)));
      if (representable) ++inexact_in_exact_region;
    }
    if (all) ++exact_pairs;
  }
  std::ostringstream os;
  os << "orthogonality " << (ortho_fail == 0 ? "ok" : "FAILED") << " (max ||U^T e||/||x|| = "
     << fmt("%.2e", worst_ratio) << "); exact x_hat + e = x in " << exact_pairs
     << "/1000 pairs, " << inexact << "/" << components << " components off by rounding (max rel "
     << fmt("%.1e", worst_sum_error) << ", " << inexact_in_exact_region
     << " where the split is representable)";
  return verdict(ortho_fail == 0 && exact_pairs == 1000, os.str());
}

Outcome engine_equivalence() {
  double worst = 0.0;
  std::size_t mismatched_orders = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FeatureMatrix fm = testing::matrix_with_ids(testing::random_matrix(50, 64, 1000 + seed));
    RunConfig cfg;
    cfg.k_max = 50;
    cfg.n_selections = 50;
    cfg.workers = 1;
    cfg.keep_score_trajectory = true;
    cfg.engine = SvdEngine::ExactRefit;
    const RunResult exact = demud_rank(fm, cfg);
    cfg.engine = SvdEngine::Incremental;
    const RunResult inc = demud_rank(fm, cfg);
    if (exact.item_ids() != inc.item_ids()) ++mismatched_orders;
    for (std::size_t step = 0; step < 50; ++step)
      for (std::size_t i = 0; i < 50; ++i) {
        const double a = exact.score_trajectory[step][i];
        const double b = inc.score_trajectory[step][i];
        if (std::isnan(a) && std::isnan(b)) continue;
        const double rel = a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b));
        worst = std::max(worst, std::isnan(rel) ? std::numeric_limits<double>::infinity() : rel);
      }
  }
  return verdict(worst <= 1e-6 && mismatched_orders == 0,
                 "max relative error difference " + fmt("%.2e", worst) + " over 20 seeds x 50 steps, " +
                     std::to_string(mismatched_orders) + " differing selection orders");
}

Outcome tiny_run_oracle() {
  RowMatrix x(4, 2);
  x << 10, 0, 9, 0, 0, 8, 0, 7;
  const FeatureMatrix fm = testing::matrix_with_ids(x);
  RunConfig cfg;
  cfg.k_max = 1;
  cfg.n_selections = 2;
  const RunResult r = demud_rank(fm, cfg);
  const auto replay = testing::oracle_replay(x, 1, 2);
  bool ok = r.records[0].row == 0 && r.records[1].row == 2;
  for (std::size_t i = 0; i < 2; ++i)
    ok = ok && r.records[i].row == replay[i].row &&
         std::abs(r.records[i].score - replay[i].score) <= 1e-12 * replay[i].score;
  ok = ok && r.records[0].score == 10.0 && std::abs(r.records[1].score - std::sqrt(164.0)) <= 1e-12;
  return verdict(ok, "order row " + std::to_string(r.records[0].row) + " (score " +
                         fmt("%.3f", r.records[0].score) + ") then row " + std::to_string(r.records[1].row) +
                         " (score " + fmt("%.3f", r.records[1].score) + ")");
}

Outcome imbalance_advantage() {
  std::size_t wins = 0;
  double tightest = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ClusterSpec spec;
    spec.sizes.assign(10, 50);
    spec.sizes.insert(spec.sizes.end(), 10, 1);
    spec.dim = 32;
    spec.separation = 5.0;
    spec.seed = seed;
    const FeatureMatrix fm = gaussian_clusters(spec);
    RunConfig cfg;
    cfg.k_max = 50;
    cfg.n_selections = 60;
    const double d = nauc(discovery_curve(demud_rank(fm, cfg), *fm.labels(), 20, 60));
    const double r = random_baseline(fm, *fm.labels(), 60, 200, seed * 1000).nauc;
    if (d > r) ++wins;
    tightest = std::min(tightest, d - r);
  }
  return verdict(wins >= 19, "DEMUD ahead of random in " + std::to_string(wins) +
                                 "/20 seeds (smallest margin " + fmt("%.2f", tightest) + " nAUC points)");
}

Outcome determinism() {
  testing::TempDir dir;
  ClusterSpec spec;
  spec.sizes.assign(8, 40);
  spec.dim = 32;
  spec.seed = 3;
  io::save_binary(gaussian_clusters(spec), dir / "f.fmx");
  std::ostringstream sink;
  const auto run = [&](const std::string& name, const std::string& workers) {
    return cli::run({"demud", "run", "--features", (dir / "f.fmx").string(), "--k", "50", "--selections", "100",
                     "--workers", workers, "--out", (dir / name).string()},
                    sink, sink);
  };
  if (run("a", "1") != 0 || run("b", "1") != 0 || run("c", "8") != 0) return {Status::Fail, "run failed"};
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const bool same_json = slurp(dir / "a" / "run.json") == slurp(dir / "b" / "run.json");
  const bool same_vectors = slurp(dir / "a" / "run.vectors.fmx") == slurp(dir / "b" / "run.vectors.fmx");
  const bool same_parallel = slurp(dir / "a" / "run.json") == slurp(dir / "c" / "run.json");
  return verdict(same_json && same_vectors && same_parallel,
                 std::string("run.json ") + (same_json ? "identical" : "differs") + ", vectors " +
                     (same_vectors ? "identical" : "differ") + ", 8 workers vs 1 " +
                     (same_parallel ? "identical" : "differs"));
}

Outcome reference_datasets() {
  const char* root = std::getenv("DEMUD_REFERENCE_DATA");
  if (!root || !*root) return {Status::Skip, "DEMUD_REFERENCE_DATA not set"};
  struct Target {
    std::string set, features;
    double expected, tolerance;
  };
  const std::vector<Target> targets{{"imagenet-balanced", "fc8", 98.55, 1.0},
                                    {"imagenet-balanced", "fc7", 97.11, 1.0},
                                    {"imagenet-balanced", "fc6", 96.27, 1.0},
                                    {"imagenet-balanced", "pixel", 93.43, 1.0},
                                    {"mars", "fc7", 92.75, 1.5}};
  std::ostringstream os;
  bool ok = true, any = false;
  for (const auto& t : targets) {
    const fs::path dir = fs::path(root) / t.set;
    const fs::path features = dir / (t.features + ".fmx");
    if (!fs::exists(features) || !fs::exists(dir / "labels.tsv")) {
      os << t.set << "/" << t.features << " missing; ";
      continue;
    }
    any = true;
    FeatureMatrix fm = io::load_features(features);
    const LabelMap labels = io::restrict_labels(io::load_labels_tsv(dir / "labels.tsv"), fm);
    RunConfig cfg;
    cfg.k_max = 50;
    cfg.n_selections = std::min<std::size_t>(300, fm.rows());
    const double v = nauc(discovery_curve(demud_rank(fm, cfg), labels, count_classes(fm, labels),
                                          cfg.n_selections));
    const bool hit = std::abs(v - t.expected) <= t.tolerance;
    ok = ok && hit;
    os << t.set << "/" << t.features << " " << fmt("%.2f", v) << " vs " << fmt("%.2f", t.expected)
       << (hit ? "" : " (out of tolerance)") << "; ";
  }
  if (!any) return {Status::Skip, "no feature files under DEMUD_REFERENCE_DATA"};
  return verdict(ok, os.str());
}

Outcome k_sensitivity_report() {
  ClusterSpec spec;
  spec.sizes.assign(20, 50);
  spec.dim = 32;
  spec.seed = 0;
  const FeatureMatrix fm = gaussian_clusters(spec);
  const KSweepReport rep = k_sensitivity(fm, *fm.labels(), {10, 25, 50, 75, 100}, 300);
  std::ostringstream os;
  for (std::size_t i = 0; i < rep.ks.size(); ++i) os << "K=" << rep.ks[i] << ":" << fmt("%.2f", rep.naucs[i]) << " ";
  os << "stddev=" << fmt("%.3f", rep.stddev);
  return verdict(rep.naucs.size() == 5 && std::isfinite(rep.stddev), os.str());
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"oracle_identity", 1.0, oracle_identity},
      {"three_step_fixture", 1.0, three_step_fixture},
      {"residual_orthogonality", 5.0, residual_orthogonality},
      {"engine_equivalence", 10.0, engine_equivalence},
      {"tiny_run_oracle", 1.0, tiny_run_oracle},
      {"imbalance_advantage", 60.0, imbalance_advantage},
      {"determinism", 10.0, determinism},
      {"reference_datasets", 0.0, reference_datasets},
      {"k_sensitivity_report", 0.0, k_sensitivity_report},
  };
  return all;
}

Status run_one(const Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.check();
  } catch (const std::exception& e) {
    o = {Status::Fail, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (o.status == Status::Pass && c.limit_seconds > 0.0 && secs > c.limit_seconds) {
    o.status = Status::Fail;
    o.detail += "; runtime over limit";
  }
  const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
  std::cout << tag << "  " << c.name << "  " << o.detail << "  (" << fmt("%.2f", secs) << " s";
  if (c.limit_seconds > 0.0) std::cout << ", limit " << fmt("%g", c.limit_seconds) << " s";
  std::cout << ")" << std::endl;
  return o.status;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.size() == 2 && args[0] == "--criterion") {
    for (const auto& c : criteria())
      if (c.name == args[1]) {
        const Status s = run_one(c);
        return s == Status::Pass ? 0 : s == Status::Skip ? 77 : 1;
      }
    std::cerr << "unknown criterion '" << args[1] << "'\n";
    return 2;
  }
  if (args.size() == 1 && args[0] == "--list") {
    for (const auto& c : criteria()) std::cout << c.name << '\n';
    return 0;
  }
  if (!args.empty()) {
    std::cerr << "usage: acceptance [--list | --criterion NAME]\n";
    return 2;
  }
  bool failed = false;
  for (const auto& c : criteria()) failed = run_one(c) == Status::Fail || failed;
  return failed ? 1 : 0;
}
