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

// Truncated SVD model of a set of items: mean, orthonormal basis and
// singular values of the mean-centered data. Provides reconstruction,
// residual and reconstruction error against the affine subspace
// mean + span(basis), a batch fit, a rank-one incremental update and a
// tracker that switches between exact refitting and incremental updates.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "demud/error.hpp"
#include "demud/feature_matrix.hpp"
#include "demud/io.hpp"

namespace demud {

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kRankTolerance = 1e-12;

struct SvdModel {
  Eigen::MatrixXd basis;          // d x k, orthonormal columns
  Eigen::VectorXd singular_values;  // k, descending
  Eigen::VectorXd mean;           // d
  std::size_t count = 0;          // items incorporated
  std::size_t k_max = 1;

  /// Model with nothing incorporated: zero mean, empty basis.
  static SvdModel empty(std::size_t dim, std::size_t k_max) {
    SvdModel m;
    m.basis.resize(static_cast<Eigen::Index>(dim), 0);
    m.singular_values.resize(0);
    m.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    m.count = 0;
    m.k_max = k_max;
    return m;
  }

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t rank() const { return static_cast<std::size_t>(basis.cols()); }

  /// Copy keeping only the leading `k` components.
  SvdModel truncated(std::size_t k) const {
    SvdModel m = *this;
    const auto keep = static_cast<Eigen::Index>(std::min(k, rank()));
    m.basis = basis.leftCols(keep);
    m.singular_values = singular_values.head(keep);
    m.k_max = k;
    return m;
  }
};

namespace detail {

inline void check_dim(const SvdModel& model, Eigen::Index size) {
  if (size != model.mean.size())
    throw DimensionError("vector has dimension " + std::to_string(size) +
                         ", model expects " + std::to_string(model.mean.size()));
}

/// Flips each column so that its largest-magnitude entry is nonnegative;
/// among equal magnitudes the lowest index decides.
inline void canonicalize_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < basis.rows(); ++r) {
      const double a = std::abs(basis(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (basis.rows() > 0 && basis(best, c) < 0.0) basis.col(c) = -basis.col(c);
  }
}

/// Number of leading values to keep: above tolerance and at most k_max.
inline Eigen::Index effective_rank(const Eigen::VectorXd& sigma, std::size_t k_max) {
  if (sigma.size() == 0 || !(sigma(0) > 0.0)) return 0;
  const double floor = kRankTolerance * sigma(0);
  Eigen::Index k = 0;
  while (k < sigma.size() && sigma(k) > floor) ++k;
  if (k_max < static_cast<std::size_t>(k)) k = static_cast<Eigen::Index>(k_max);
  return k;
}

/// Residual norms at or below kRankTolerance * (||x|| + ||mean||) are
/// rounding noise from the projection and are reported as exactly 0.
inline double snap_score(double norm, double x_norm, double mean_norm) {
  return norm <= kRankTolerance * (x_norm + mean_norm) ? 0.0 : norm;
}

/// Copies a row or column vector expression into a column vector.
template <typename Derived>
Eigen::VectorXd as_column(const Eigen::MatrixBase<Derived>& x) {
  return x.template cast<double>().reshaped();
}

}  // namespace detail

/// Fits mean and top-k_max left singular vectors of the centered rows.
template <typename Derived>
SvdModel fit_batch(const Eigen::MatrixBase<Derived>& rows, std::size_t k_max) {
  if (rows.rows() == 0) throw Error("fit_batch: no rows");
  if (k_max < 1) throw ConfigError("fit_batch: k_max must be at least 1");
  SvdModel model;
  model.k_max = k_max;
  model.count = static_cast<std::size_t>(rows.rows());
  model.mean = rows.colwise().mean().transpose();
  if (rows.rows() == 1) {
    model.basis.resize(rows.cols(), 0);
    model.singular_values.resize(0);
    return model;
  }
  // d x m, items as columns.
  const Eigen::MatrixXd centered =
      (rows.template cast<double>().rowwise() - model.mean.transpose()).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd, Eigen::ColPivHouseholderQRPreconditioner> svd(
      centered, Eigen::ComputeThinU);
  const Eigen::Index k = detail::effective_rank(svd.singularValues(), k_max);
  model.basis = svd.matrixU().leftCols(k);
  model.singular_values = svd.singularValues().head(k);
  detail::canonicalize_signs(model.basis);
  return model;
}

inline SvdModel fit_batch(const FeatureMatrix& fm, std::size_t k_max) {
  return fit_batch(fm.data(), k_max);
}

/// x_hat = U U^T (x - mean) + mean.
template <typename Derived>
Eigen::VectorXd reconstruct(const SvdModel& model, const Eigen::MatrixBase<Derived>& x) {
  detail::check_dim(model, x.size());
  const Eigen::VectorXd centered = detail::as_column(x) - model.mean;
  if (model.rank() == 0) return model.mean;
  const Eigen::VectorXd coords = model.basis.transpose() * centered;
  return model.basis * coords + model.mean;
}

/// e = x - reconstruct(x).
template <typename Derived>
Eigen::VectorXd residual(const SvdModel& model, const Eigen::MatrixBase<Derived>& x) {
  Eigen::VectorXd e = reconstruct(model, x);
  e = detail::as_column(x) - e;
  return e;
}

/// ||x - reconstruct(x)||_2, with rounding-level values reported as 0.
template <typename Derived>
double reconstruction_error(const SvdModel& model, const Eigen::MatrixBase<Derived>& x) {
  return detail::snap_score(residual(model, x).norm(), x.norm(), model.mean.norm());
}

/// Rank-one update with mean shift. Folding x into a model of n items adds
/// sqrt(n/(n+1)) * (x - mean) as a new column of the centered factorization;
/// the (k+1)x(k+1) core is re-diagonalized and truncated to model.k_max.
template <typename Derived>
SvdModel update(const SvdModel& model, const Eigen::MatrixBase<Derived>& x_in) {
  detail::check_dim(model, x_in.size());
  const Eigen::VectorXd x = detail::as_column(x_in);
  SvdModel next;
  next.k_max = model.k_max;
  next.count = model.count + 1;
  if (model.count == 0) {
    next.mean = x;
    next.basis.resize(x.size(), 0);
    next.singular_values.resize(0);
    return next;
  }

  const double n = static_cast<double>(model.count);
  const Eigen::VectorXd centered = x - model.mean;
  next.mean = model.mean + centered / (n + 1.0);
  const Eigen::VectorXd b = std::sqrt(n / (n + 1.0)) * centered;

  const Eigen::Index k = model.basis.cols();
  const auto& U = model.basis;
  // Two passes of Gram-Schmidt against the current basis.
  Eigen::VectorXd p = U.transpose() * b;
  Eigen::VectorXd r = b - U * p;
  if (k > 0) {
    const Eigen::VectorXd p2 = U.transpose() * r;
    r -= U * p2;
    p += p2;
  }
  double rho = r.norm();
  const double scale =
      std::sqrt(model.singular_values.squaredNorm() + b.squaredNorm());
  if (!(rho > kRankTolerance * scale)) rho = 0.0;

  Eigen::MatrixXd core = Eigen::MatrixXd::Zero(k + 1, k + 1);
  core.topLeftCorner(k, k) = model.singular_values.asDiagonal();
  core.topRightCorner(k, 1) = p;
  core(k, k) = rho;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(core, Eigen::ComputeFullU);

  const Eigen::Index keep = detail::effective_rank(svd.singularValues(), model.k_max);
  Eigen::MatrixXd rotated = U * svd.matrixU().topLeftCorner(k, keep);
  if (rho > 0.0) rotated.noalias() += (r / rho) * svd.matrixU().block(k, 0, 1, keep);
  next.basis = std::move(rotated);
  next.singular_values = svd.singularValues().head(keep);

  // Pull the basis back onto the Stiefel manifold if rounding has drifted.
  if (keep > 0) {
    const Eigen::MatrixXd gram = next.basis.transpose() * next.basis;
    const double drift =
        (gram - Eigen::MatrixXd::Identity(keep, keep)).cwiseAbs().maxCoeff();
    if (drift > 1e-13) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(next.basis);
      Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(next.basis.rows(), keep);
      // Keep each column's orientation.
      const Eigen::MatrixXd rr = qr.matrixQR().topLeftCorner(keep, keep);
      for (Eigen::Index c = 0; c < keep; ++c)
        if (rr(c, c) < 0.0) q.col(c) = -q.col(c);
      next.basis = std::move(q);
    }
  }
  detail::canonicalize_signs(next.basis);
  return next;
}

enum class SvdEngine { ExactRefit, Incremental };

inline const char* to_string(SvdEngine e) {
  return e == SvdEngine::ExactRefit ? "exact-refit" : "incremental";
}

inline SvdEngine parse_engine(const std::string& s) {
  if (s == "exact-refit" || s == "exact") return SvdEngine::ExactRefit;
  if (s == "incremental") return SvdEngine::Incremental;
  throw ConfigError("unknown svd engine '" + s + "'");
}

/// Maintains the model of a growing item set.
///
/// ExactRefit keeps every incorporated row and refits from scratch.
/// Incremental applies update() to an internal factorization whose rank is
/// capped at `retained_rank` (0 means no cap beyond the data) and exposes
/// its leading k_max components; with no cap it agrees with ExactRefit up to
/// rounding.
class SvdTracker {
 public:
  SvdTracker(std::size_t dim, std::size_t k_max, SvdEngine engine,
             std::size_t retained_rank = 0)
      : engine_(engine), k_max_(k_max), dim_(dim) {
    if (k_max < 1) throw ConfigError("k_max must be at least 1");
    if (retained_rank != 0 && retained_rank < k_max)
      throw ConfigError("retained rank must be 0 or at least k_max");
    const std::size_t cap =
        retained_rank == 0 ? std::numeric_limits<std::size_t>::max() : retained_rank;
    state_ = SvdModel::empty(dim, engine == SvdEngine::Incremental ? cap : k_max);
    model_ = SvdModel::empty(dim, k_max);
  }

  template <typename Derived>
  void add(const Eigen::MatrixBase<Derived>& x) {
    if (static_cast<std::size_t>(x.size()) != dim_)
      throw DimensionError("tracker: vector has dimension " + std::to_string(x.size()) +
                           ", expected " + std::to_string(dim_));
    if (engine_ == SvdEngine::ExactRefit) {
      rows_.conservativeResize(rows_.rows() + 1, static_cast<Eigen::Index>(dim_));
      rows_.row(rows_.rows() - 1) = detail::as_column(x).transpose();
      model_ = fit_batch(rows_, k_max_);
    } else {
      state_ = update(state_, x);
      model_ = state_.truncated(k_max_);
    }
  }

  const SvdModel& model() const { return model_; }
  SvdEngine engine() const { return engine_; }
  std::size_t count() const { return model_.count; }

 private:
  SvdEngine engine_;
  std::size_t k_max_;
  std::size_t dim_;
  RowMatrix rows_;
  SvdModel state_;
  SvdModel model_;
};

// Model snapshot container ("SVM1"), laid out like FMX1:
//   "SVM1", u32 d, u32 k, u64 count, u64 k_max,
//   k f64 singular values, d f64 mean, d*k f64 basis (column-major).

inline constexpr std::array<char, 4> kModelMagic = {'S', 'V', 'M', '1'};

inline void save_model(const SvdModel& model, const std::filesystem::path& path) {
  auto out = io::detail::open_out(path, std::ios::out | std::ios::binary);
  out.write(kModelMagic.data(), 4);
  io::detail::put_u32(out, static_cast<std::uint32_t>(model.dim()));
  io::detail::put_u32(out, static_cast<std::uint32_t>(model.rank()));
  io::detail::put_u64(out, model.count);
  io::detail::put_u64(out, model.k_max);
  io::detail::put_f64s(out, model.singular_values.data(), model.rank());
  io::detail::put_f64s(out, model.mean.data(), model.dim());
  io::detail::put_f64s(out, model.basis.data(), model.dim() * model.rank());
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline SvdModel load_model(const std::filesystem::path& path) {
  auto in = io::detail::open_in(path, std::ios::in | std::ios::binary);
  const std::string p = path.string();
  io::detail::Reader rd(in, std::filesystem::file_size(path), p);
  char magic[4] = {};
  rd.read(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kModelMagic.begin()))
    throw FormatError(p + ": bad magic (expected SVM1)");
  const std::uint64_t d = rd.u32("dimension");
  const std::uint64_t k = rd.u32("rank");
  SvdModel m;
  m.count = rd.u64("count");
  m.k_max = rd.u64("k_max");
  if (k > d && d > 0) throw FormatError(p + ": rank exceeds dimension");
  if (d * k + d + k > rd.remaining() / sizeof(double))
    throw FormatError(p + ": truncated payload");
  m.singular_values.resize(static_cast<Eigen::Index>(k));
  m.mean.resize(static_cast<Eigen::Index>(d));
  m.basis.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
  rd.f64s(m.singular_values.data(), k, "singular values");
  rd.f64s(m.mean.data(), d, "mean");
  rd.f64s(m.basis.data(), d * k, "basis");
  if (rd.remaining() != 0) throw FormatError(p + ": trailing bytes after payload");
  return m;
}

}  // namespace demud
