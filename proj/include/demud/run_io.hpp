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

// RunResult persistence. Metadata goes to a JSON document; the per-record
// reconstruction and residual vectors go to an FMX1 sidecar whose rows come
// in pairs `expected/<rank>`, `novel/<rank>`, each labeled with the item id.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "demud/error.hpp"
#include "demud/feature_matrix.hpp"
#include "demud/io.hpp"
#include "demud/selection.hpp"

namespace demud {

struct RunDocument {
  RunResult result;
  std::string features;     // path of the ranked feature file, as given
  std::size_t n_items = 0;  // rows in that file
  std::string vectors;      // sidecar path relative to the JSON, empty if none
};

inline nlohmann::ordered_json to_json(const RunDocument& doc) {
  const auto& r = doc.result;
  nlohmann::ordered_json j;
  j["format"] = "demud-run/1";
  j["method"] = to_string(r.method);
  j["features"] = doc.features;
  j["n_items"] = doc.n_items;
  nlohmann::ordered_json cfg;
  cfg["k"] = r.config.k_max;
  cfg["selections"] = r.config.n_selections;
  cfg["svd_engine"] = to_string(r.config.engine);
  cfg["retained_rank"] = r.config.retained_rank;
  cfg["tie_break"] = "lowest-index";
  cfg["seed"] = r.config.seed;
  j["config"] = std::move(cfg);
  auto records = nlohmann::ordered_json::array();
  for (const auto& rec : r.records) {
    nlohmann::ordered_json o;
    o["rank"] = rec.rank;
    o["item_id"] = rec.item_id;
    o["score"] = rec.score;
    records.push_back(std::move(o));
  }
  j["records"] = std::move(records);
  if (doc.vectors.empty())
    j["vectors"] = nullptr;
  else
    j["vectors"] = doc.vectors;
  return j;
}

/// Sidecar matrix for all records that carry vectors.
inline FeatureMatrix vectors_matrix(const RunResult& r) {
  std::size_t count = 0;
  Eigen::Index d = 0;
  for (const auto& rec : r.records)
    if (rec.has_vectors()) {
      ++count;
      d = rec.reconstruction.size();
    }
  std::vector<std::string> ids;
  RowMatrix data(static_cast<Eigen::Index>(2 * count), d);
  LabelMap labels;
  Eigen::Index row = 0;
  for (const auto& rec : r.records) {
    if (!rec.has_vectors()) continue;
    const std::string rk = std::to_string(rec.rank);
    ids.push_back("expected/" + rk);
    ids.push_back("novel/" + rk);
    labels.set(ids[ids.size() - 2], rec.item_id);
    labels.set(ids.back(), rec.item_id);
    data.row(row++) = rec.reconstruction.transpose();
    data.row(row++) = rec.residual.transpose();
  }
  return FeatureMatrix(std::move(ids), std::move(data), std::move(labels));
}

/// Writes `json_path` and, when any record carries vectors, a sidecar next
/// to it named `<stem>.vectors.fmx`.
inline void save_run(RunDocument doc, const std::filesystem::path& json_path) {
  bool any_vectors = false;
  for (const auto& rec : doc.result.records) any_vectors = any_vectors || rec.has_vectors();
  if (any_vectors) {
    const auto name = json_path.stem().string() + ".vectors.fmx";
    io::save_binary(vectors_matrix(doc.result), json_path.parent_path() / name);
    doc.vectors = name;
  } else {
    doc.vectors.clear();
  }
  auto out = io::detail::open_out(json_path);
  out << to_json(doc).dump(2) << '\n';
  if (!out) throw Error("write failed for '" + json_path.string() + "'");
}

/// Reads run metadata; vectors are attached from the sidecar when
/// `with_vectors` is set and the document names one.
inline RunDocument load_run(const std::filesystem::path& json_path, bool with_vectors = false) {
  auto in = io::detail::open_in(json_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(json_path.string(), 0, "", e.what());
  }
  RunDocument doc;
  try {
    auto& r = doc.result;
    r.method = parse_method(j.at("method").get<std::string>());
    doc.features = j.value("features", std::string());
    doc.n_items = j.value("n_items", std::size_t{0});
    const auto& cfg = j.at("config");
    r.config.k_max = cfg.at("k").get<std::size_t>();
    r.config.n_selections = cfg.at("selections").get<std::size_t>();
    r.config.engine = parse_engine(cfg.at("svd_engine").get<std::string>());
    r.config.retained_rank = cfg.value("retained_rank", std::size_t{0});
    r.config.seed = cfg.value("seed", std::uint64_t{0});
    for (const auto& o : j.at("records")) {
      SelectionRecord rec;
      rec.rank = o.at("rank").get<std::size_t>();
      rec.item_id = o.at("item_id").get<std::string>();
      rec.score = o.at("score").get<double>();
      r.records.push_back(std::move(rec));
    }
    if (j.contains("vectors") && j["vectors"].is_string())
      doc.vectors = j["vectors"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(json_path.string(), 0, "", std::string("malformed run document: ") + e.what());
  }
  for (std::size_t i = 0; i < doc.result.records.size(); ++i)
    if (doc.result.records[i].rank != i + 1)
      throw ParseError(json_path.string(), 0, "rank", "records not ordered by rank");

  if (with_vectors && !doc.vectors.empty()) {
    const auto vec = io::load_binary(json_path.parent_path() / doc.vectors);
    for (auto& rec : doc.result.records) {
      const std::string rk = std::to_string(rec.rank);
      const auto e = vec.find("expected/" + rk);
      const auto v = vec.find("novel/" + rk);
      if (!e || !v) continue;
      rec.reconstruction = vec.row(*e).transpose();
      rec.residual = vec.row(*v).transpose();
    }
  }
  return doc;
}

}  // namespace demud
