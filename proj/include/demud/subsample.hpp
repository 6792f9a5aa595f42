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

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "demud/error.hpp"
#include "demud/feature_matrix.hpp"
#include "demud/random.hpp"

namespace demud {

/// Class-imbalanced subsample. Classes are taken in lexicographic order: the
/// first `majority` classes contribute `per_majority` items each, the next
/// `minority` classes `per_minority` each. Items within a class are drawn
/// uniformly with the seeded generator; output keeps the input row order.
inline FeatureMatrix make_unbalanced(const FeatureMatrix& fm, std::size_t majority,
                                     std::size_t minority, std::size_t per_majority,
                                     std::size_t per_minority, std::uint64_t seed) {
  if (!fm.has_labels()) throw ConfigError("make_unbalanced: features carry no labels");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < fm.rows(); ++r)
    by_class[fm.labels()->at(fm.id(r))].push_back(r);
  if (majority + minority > by_class.size())
    throw ConfigError("make_unbalanced: requested " + std::to_string(majority + minority) +
                      " classes but data has " + std::to_string(by_class.size()));

  Rng rng(seed);
  std::vector<std::size_t> picked;
  std::size_t index = 0;
  for (auto& [cls, rows] : by_class) {
    if (index >= majority + minority) break;
    const std::size_t want = index < majority ? per_majority : per_minority;
    if (rows.size() < want)
      throw ConfigError("make_unbalanced: class '" + cls + "' has " +
                        std::to_string(rows.size()) + " items, " + std::to_string(want) +
                        " requested");
    shuffle(rows, rng);
    picked.insert(picked.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(want));
    ++index;
  }
  std::sort(picked.begin(), picked.end());
  return fm.subset(picked);
}

}  // namespace demud
