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

// Novelty ranking: the iterative DEMUD selection loop and the two comparator
// rankers (one-shot batch SVD and uniform random order).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "demud/error.hpp"
#include "demud/feature_matrix.hpp"
#include "demud/lowrank.hpp"
#include "demud/random.hpp"

namespace demud {

enum class Method { Demud, Svd, Random };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Demud: return "demud";
    case Method::Svd: return "svd";
    case Method::Random: return "random";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "demud") return Method::Demud;
  if (s == "svd") return Method::Svd;
  if (s == "random") return Method::Random;
  throw ConfigError("unknown method '" + s + "' (expected demud, svd or random)");
}

struct RunConfig {
  std::size_t k_max = 50;
  std::size_t n_selections = 0;
  SvdEngine engine = SvdEngine::ExactRefit;
  /// Incremental engine only; 0 keeps every direction the data supports.
  std::size_t retained_rank = 0;
  std::uint64_t seed = 0;
  /// Scoring threads; 0 reads DEMUD_WORKERS, falling back to the hardware count.
  std::size_t workers = 0;
  bool keep_score_trajectory = false;
  bool keep_snapshots = false;

  void validate(std::size_t n_items) const {
    if (k_max < 1) throw ConfigError("K must be at least 1");
    if (n_selections < 1) throw ConfigError("number of selections must be at least 1");
    if (n_selections > n_items)
      throw ConfigError("requested " + std::to_string(n_selections) + " selections from " +
                        std::to_string(n_items) + " items");
    if (retained_rank != 0 && retained_rank < k_max)
      throw ConfigError("retained rank must be 0 or at least K");
  }
};

struct SelectionRecord {
  std::size_t rank = 0;  // 1-based
  std::string item_id;
  std::size_t row = 0;   // row index in the input matrix
  double score = 0.0;
  Eigen::VectorXd reconstruction;  // empty when not captured
  Eigen::VectorXd residual;

  bool has_vectors() const { return reconstruction.size() > 0; }
};

struct RunResult {
  Method method = Method::Demud;
  RunConfig config;
  std::vector<SelectionRecord> records;
  /// Per iteration, the score of every row (NaN for rows already selected).
  std::vector<std::vector<double>> score_trajectory;
  /// Model after each incorporation.
  std::vector<SvdModel> snapshots;

  std::vector<std::string> item_ids() const {
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.item_id);
    return out;
  }
};

inline std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DEMUD_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Best (score, row) candidate; higher score wins, lower row breaks ties.
struct Candidate {
  double score = -std::numeric_limits<double>::infinity();
  std::size_t row = std::numeric_limits<std::size_t>::max();

  bool beats(const Candidate& other) const {
    if (score != other.score) return score > other.score;
    return row < other.row;
  }
};

/// Scores rows against a model in fixed blocks of consecutive rows. Block
/// boundaries depend only on row indices, so every row is evaluated by the
/// same arithmetic no matter how blocks are spread across workers.
class BlockScorer {
 public:
  static constexpr Eigen::Index kBlock = 32;

  BlockScorer(const RowMatrix& data, std::size_t workers)
      : data_(data), workers_(std::max<std::size_t>(1, workers)) {}

  /// Writes scores for rows with active[row] set; others are left untouched.
  void score(const SvdModel& model, const std::vector<char>& active,
             std::vector<double>& out) const {
    const Eigen::Index n = data_.rows();
    const Eigen::Index blocks = (n + kBlock - 1) / kBlock;
    const auto run = [&](Eigen::Index first, Eigen::Index last) {
      for (Eigen::Index b = first; b < last; ++b) score_block(model, b, active, out);
    };
    const auto w = static_cast<Eigen::Index>(std::min<std::size_t>(
        workers_, static_cast<std::size_t>(std::max<Eigen::Index>(blocks, 1))));
    if (w <= 1) {
      run(0, blocks);
      return;
    }
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(w));
    for (Eigen::Index t = 0; t < w; ++t) {
      const Eigen::Index first = blocks * t / w;
      const Eigen::Index last = blocks * (t + 1) / w;
      threads.emplace_back(run, first, last);
    }
    for (auto& th : threads) th.join();
  }

  /// Argmax over active rows, split across workers and reduced in order.
  Candidate argmax(const std::vector<double>& scores, const std::vector<char>& active) const {
    const std::size_t n = scores.size();
    const std::size_t w = std::min(workers_, std::max<std::size_t>(n, 1));
    std::vector<Candidate> partial(w);
    const auto run = [&](std::size_t t) {
      Candidate best;
      for (std::size_t i = n * t / w; i < n * (t + 1) / w; ++i)
        if (active[i]) {
          const Candidate c{scores[i], i};
          if (c.beats(best)) best = c;
        }
      partial[t] = best;
    };
    if (w <= 1) {
      run(0);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t t = 0; t < w; ++t) threads.emplace_back(run, t);
      for (auto& th : threads) th.join();
    }
    Candidate best;
    for (const auto& c : partial)
      if (c.beats(best)) best = c;
    return best;
  }

 private:
  void score_block(const SvdModel& model, Eigen::Index b, const std::vector<char>& active,
                   std::vector<double>& out) const {
    const Eigen::Index first = b * kBlock;
    const Eigen::Index len = std::min(kBlock, data_.rows() - first);
    bool any = false;
    for (Eigen::Index i = first; i < first + len; ++i) any = any || active[i];
    if (!any) return;
    const auto x = data_.middleRows(first, len);
    RowMatrix centered = x.rowwise() - model.mean.transpose();
    if (model.rank() > 0) {
      const Eigen::MatrixXd coords = centered * model.basis;
      RowMatrix recon = coords * model.basis.transpose();
      recon.rowwise() += model.mean.transpose();
      centered = x - recon;
    }
    const double mean_norm = model.mean.norm();
    for (Eigen::Index i = 0; i < len; ++i)
      if (active[first + i])
        out[first + i] = detail::snap_score(centered.row(i).norm(), x.row(i).norm(), mean_norm);
  }

  const RowMatrix& data_;
  std::size_t workers_;
};

namespace detail {

inline SelectionRecord make_record(const FeatureMatrix& fm, const SvdModel& model,
                                   std::size_t rank, std::size_t row, double score) {
  SelectionRecord rec;
  rec.rank = rank;
  rec.row = row;
  rec.item_id = fm.id(row);
  const auto x = fm.row(row);
  rec.reconstruction = reconstruct(model, x);
  rec.residual = x.transpose() - rec.reconstruction;
  rec.score = score;
  return rec;
}

}  // namespace detail

/// Iterative novelty selection. Each step scores every remaining row by
/// reconstruction error against the model of the rows selected so far,
/// takes the argmax (ties to the lowest row), records its reconstruction and
/// residual under that model, then incorporates it. Labels are never read.
inline RunResult demud_rank(const FeatureMatrix& fm, const RunConfig& cfg) {
  if (fm.rows() == 0) throw Error("demud_rank: empty feature matrix");
  cfg.validate(fm.rows());
  RunResult result;
  result.method = Method::Demud;
  result.config = cfg;
  result.records.reserve(cfg.n_selections);

  const std::size_t n = fm.rows();
  SvdTracker tracker(fm.dim(), cfg.k_max, cfg.engine, cfg.retained_rank);
  const BlockScorer scorer(fm.data(), resolve_workers(cfg.workers));
  std::vector<char> active(n, 1);
  std::vector<double> scores(n, 0.0);

  for (std::size_t step = 1; step <= cfg.n_selections; ++step) {
    const SvdModel& model = tracker.model();
    scorer.score(model, active, scores);
    const Candidate best = scorer.argmax(scores, active);
    if (cfg.keep_score_trajectory) {
      std::vector<double> snapshot(n, std::numeric_limits<double>::quiet_NaN());
      for (std::size_t i = 0; i < n; ++i)
        if (active[i]) snapshot[i] = scores[i];
      result.score_trajectory.push_back(std::move(snapshot));
    }
    result.records.push_back(detail::make_record(fm, model, step, best.row, best.score));
    active[best.row] = 0;
    tracker.add(fm.row(best.row));
    if (cfg.keep_snapshots) result.snapshots.push_back(tracker.model());
  }
  return result;
}

/// One model fit on all rows; rows ranked once by descending reconstruction
/// error, ties to the lowest row. Vectors are kept for the first
/// `vector_limit` records.
inline RunResult svd_baseline_rank(const FeatureMatrix& fm, std::size_t k_max,
                                   std::size_t vector_limit = std::numeric_limits<std::size_t>::max(),
                                   std::size_t workers = 0) {
  if (fm.rows() == 0) throw Error("svd_baseline_rank: empty feature matrix");
  if (k_max < 1) throw ConfigError("K must be at least 1");
  RunResult result;
  result.method = Method::Svd;
  result.config.k_max = k_max;
  result.config.n_selections = fm.rows();
  result.config.workers = workers;

  const SvdModel model = fit_batch(fm, k_max);
  const std::size_t n = fm.rows();
  const BlockScorer scorer(fm.data(), resolve_workers(workers));
  std::vector<char> active(n, 1);
  std::vector<double> scores(n, 0.0);
  scorer.score(model, active, scores);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  result.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < vector_limit) {
      result.records.push_back(detail::make_record(fm, model, i + 1, order[i], scores[order[i]]));
    } else {
      SelectionRecord rec;
      rec.rank = i + 1;
      rec.row = order[i];
      rec.item_id = fm.id(order[i]);
      rec.score = scores[order[i]];
      result.records.push_back(std::move(rec));
    }
  }
  return result;
}

/// Uniform random order from mt19937_64(seed); scores are 0.
inline RunResult random_rank(const FeatureMatrix& fm, std::uint64_t seed) {
  if (fm.rows() == 0) throw Error("random_rank: empty feature matrix");
  RunResult result;
  result.method = Method::Random;
  result.config.n_selections = fm.rows();
  result.config.seed = seed;
  const auto perm = random_permutation(fm.rows(), seed);
  result.records.reserve(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    SelectionRecord rec;
    rec.rank = i + 1;
    rec.row = perm[i];
    rec.item_id = fm.id(perm[i]);
    result.records.push_back(std::move(rec));
  }
  return result;
}

}  // namespace demud
