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

// Ranks a synthetic class-imbalanced data set three ways and prints the
// nAUC of each, then writes the discovery curves as SVG.

#include <iomanip>
#include <iostream>
#include <vector>

#include "demud/demud.hpp"

int main(int argc, char** argv) {
  const std::string svg = argc > 1 ? argv[1] : "discovery.svg";

  demud::ClusterSpec spec;
  spec.sizes.assign(10, 50);
  spec.sizes.resize(20, 1);
  spec.dim = 32;
  spec.seed = 7;
  const demud::FeatureMatrix fm = demud::gaussian_clusters(spec);
  const demud::LabelMap& labels = *fm.labels();
  const std::size_t t = 60;
  const std::size_t k = demud::count_classes(fm, labels);

  demud::RunConfig cfg;
  cfg.k_max = 50;
  cfg.n_selections = t;
  const auto demud_run = demud::demud_rank(fm, cfg);
  const auto svd_run = demud::svd_baseline_rank(fm, cfg.k_max, 0);
  const auto random = demud::random_baseline(fm, labels, t, 200, 1);

  const std::vector<demud::NamedCurve> curves = {
      {"DEMUD", demud::discovery_curve(demud_run, labels, k, t)},
      {"SVD", demud::discovery_curve(svd_run, labels, k, t)},
      {"Random", random.mean},
  };
  std::cout << "n=" << fm.rows() << " d=" << fm.dim() << " classes=" << k << " t=" << t << '\n';
  for (const auto& c : curves)
    std::cout << std::left << std::setw(8) << c.name << std::fixed << std::setprecision(2)
              << demud::nauc(c.curve) << '\n';
  demud::write_curves_svg(curves, svg);
  return 0;
}
