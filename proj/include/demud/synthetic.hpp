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
#include <cstdint>
#include <string>
#include <vector>

#include "demud/error.hpp"
#include "demud/feature_matrix.hpp"
#include "demud/random.hpp"

namespace demud {

/// Isotropic Gaussian clusters. Class c is centered on
/// (separation * sigma / sqrt(2)) * e_c, so every pair of centers is exactly
/// separation * sigma apart. Requires sizes.size() <= dim.
struct ClusterSpec {
  std::vector<std::size_t> sizes;
  std::size_t dim = 32;
  double separation = 5.0;  // in units of sigma
  double sigma = 1.0;
  std::uint64_t seed = 0;
  bool shuffle_rows = true;
};

inline FeatureMatrix gaussian_clusters(const ClusterSpec& spec) {
  if (spec.sizes.size() > spec.dim)
    throw ConfigError("gaussian_clusters: more classes than dimensions");
  std::size_t n = 0;
  for (auto s : spec.sizes) n += s;
  if (n == 0) throw ConfigError("gaussian_clusters: no items");

  Rng rng(spec.seed);
  NormalSampler normal;
  const double offset = spec.separation * spec.sigma / std::sqrt(2.0);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (spec.shuffle_rows) shuffle(order, rng);

  std::vector<std::string> ids(n);
  RowMatrix data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.dim));
  LabelMap labels;
  std::size_t item = 0;
  for (std::size_t c = 0; c < spec.sizes.size(); ++c) {
    const std::string cls = "class" + std::string(c < 10 ? "0" : "") + std::to_string(c);
    for (std::size_t j = 0; j < spec.sizes[c]; ++j, ++item) {
      const auto row = static_cast<Eigen::Index>(order[item]);
      for (Eigen::Index f = 0; f < data.cols(); ++f) data(row, f) = spec.sigma * normal(rng);
      data(row, static_cast<Eigen::Index>(c)) += offset;
      ids[order[item]] = cls + "_" + std::to_string(j);
      labels.set(ids[order[item]], cls);
    }
  }
  return FeatureMatrix(std::move(ids), std::move(data), std::move(labels));
}

}  // namespace demud
