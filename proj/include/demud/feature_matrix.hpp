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

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "demud/error.hpp"

namespace demud {

/// Row-major storage so that an item is a contiguous row.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Item id -> class name.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::map<std::string, std::string> entries)
      : entries_(std::move(entries)) {}

  void set(const std::string& id, const std::string& cls) { entries_[id] = cls; }

  const std::string* find(const std::string& id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const std::string& at(const std::string& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw LabelError(id);
    return it->second;
  }

  bool contains(const std::string& id) const { return entries_.count(id) > 0; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Distinct class names, lexicographic.
  std::set<std::string> classes() const {
    std::set<std::string> out;
    for (const auto& [id, cls] : entries_) out.insert(cls);
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return entries_; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::map<std::string, std::string> entries_;
};

/// n items x d features with unique ids and optional labels. Immutable once
/// constructed; the constructor enforces every invariant.
class FeatureMatrix {
 public:
  FeatureMatrix(std::vector<std::string> ids, RowMatrix data,
                std::optional<LabelMap> labels = std::nullopt)
      : ids_(std::move(ids)), data_(std::move(data)), labels_(std::move(labels)) {
    validate();
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
  }

  std::size_t rows() const { return ids_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(data_.cols()); }

  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(std::size_t row) const { return ids_.at(row); }
  const RowMatrix& data() const { return data_; }
  auto row(std::size_t i) const { return data_.row(static_cast<Eigen::Index>(i)); }

  bool has_labels() const { return labels_.has_value(); }
  const std::optional<LabelMap>& labels() const { return labels_; }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Copy with the given label map attached (replacing any existing one).
  FeatureMatrix with_labels(LabelMap labels) const {
    return FeatureMatrix(ids_, data_, std::move(labels));
  }

  /// Rows `picked` in the given order.
  FeatureMatrix subset(const std::vector<std::size_t>& picked) const {
    std::vector<std::string> ids;
    ids.reserve(picked.size());
    RowMatrix data(static_cast<Eigen::Index>(picked.size()), data_.cols());
    std::optional<LabelMap> labels;
    if (labels_) labels.emplace();
    for (std::size_t r = 0; r < picked.size(); ++r) {
      const std::size_t src = picked[r];
      ids.push_back(ids_.at(src));
      data.row(static_cast<Eigen::Index>(r)) =
          data_.row(static_cast<Eigen::Index>(src));
      if (labels_) labels->set(ids_[src], labels_->at(ids_[src]));
    }
    return FeatureMatrix(std::move(ids), std::move(data), std::move(labels));
  }

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.ids_ == b.ids_ && a.data_.rows() == b.data_.rows() &&
           a.data_.cols() == b.data_.cols() && a.data_ == b.data_ &&
           a.labels_ == b.labels_;
  }

 private:
  void validate() const {
    if (static_cast<std::size_t>(data_.rows()) != ids_.size())
      throw DimensionError("feature matrix has " + std::to_string(data_.rows()) +
                           " rows but " + std::to_string(ids_.size()) + " ids");
    if (!ids_.empty() && data_.cols() < 1)
      throw DimensionError("feature matrix must have at least one column");
    std::unordered_set<std::string> seen;
    seen.reserve(ids_.size());
    for (const auto& id : ids_)
      if (!seen.insert(id).second) throw Error("duplicate item id '" + id + "'");
    for (Eigen::Index r = 0; r < data_.rows(); ++r)
      for (Eigen::Index c = 0; c < data_.cols(); ++c)
        if (!std::isfinite(data_(r, c)))
          throw Error("non-finite value for item '" + ids_[r] + "' at feature " +
                      std::to_string(c));
    if (labels_) {
      for (const auto& id : ids_)
        if (!labels_->contains(id)) throw LabelError(id);
      for (const auto& [id, cls] : labels_->entries())
        if (!seen.count(id))
          throw Error("label refers to unknown item '" + id + "'");
    }
  }

  std::vector<std::string> ids_;
  RowMatrix data_;
  std::optional<LabelMap> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Per-feature z-score. Constant features are centered but left unscaled.
/// Not applied anywhere by default.
inline FeatureMatrix standardize(const FeatureMatrix& fm) {
  RowMatrix data = fm.data();
  const auto n = data.rows();
  if (n == 0) return fm;
  const Eigen::RowVectorXd mean = data.colwise().mean();
  data.rowwise() -= mean;
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double sd = std::sqrt(data.col(c).squaredNorm() / static_cast<double>(n));
    if (sd > 0.0) data.col(c) /= sd;
  }
  return FeatureMatrix(fm.ids(), std::move(data), fm.labels());
}

}  // namespace demud
