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

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <opencv2/imgcodecs.hpp>

#include "demud/cli.hpp"
#include "test_support.hpp"

namespace demud {
namespace {

using testing::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "demud");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Saves a run whose records follow `ids` and a labels TSV mapping id -> class.
void ordered_run(const TempDir& dir, const std::vector<std::string>& ids,
                 const std::vector<std::string>& classes) {
  RunDocument doc;
  doc.result.method = Method::Demud;
  doc.result.config.k_max = 1;
  doc.result.config.n_selections = ids.size();
  std::string tsv;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    SelectionRecord r;
    r.rank = i + 1;
    r.item_id = ids[i];
    doc.result.records.push_back(r);
    tsv += ids[i] + "\t" + classes[i] + "\n";
  }
  doc.n_items = ids.size();
  save_run(doc, dir / "run.json");
  write_text(dir / "labels.tsv", tsv);
}

void write_demo_csv(const TempDir& dir, std::size_t n, std::size_t d) {
  const RowMatrix x = testing::random_matrix(n, d, 31);
  std::ostringstream csv;
  csv << "id";
  for (std::size_t c = 0; c < d; ++c) csv << ",f" << c;
  csv << '\n';
  std::ostringstream labels;
  for (std::size_t r = 0; r < n; ++r) {
    csv << "item" << r;
    for (std::size_t c = 0; c < d; ++c) csv << ',' << x(r, c);
    csv << '\n';
    labels << "item" << r << "\tc" << (r % 3) << '\n';
  }
  write_text(dir / "f.csv", csv.str());
  write_text(dir / "labels.tsv", labels.str());
}

TEST(CliIngest, CsvPrintsShape) {
  TempDir dir;
  write_demo_csv(dir, 12, 5);
  const auto r = invoke({"ingest", "--csv", (dir / "f.csv").string(), "--out", (dir / "f.fmx").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "n=12 d=5\n");
  EXPECT_EQ(io::load_binary(dir / "f.fmx"), io::load_csv(dir / "f.csv"));
}

TEST(CliIngest, ImagesGivePixelDimension) {
  TempDir dir;
  std::filesystem::create_directories(dir / "imgs");
  cv::imwrite((dir / "imgs" / "a.png").string(), cv::Mat(30, 40, CV_8UC3, cv::Scalar(1, 2, 3)));
  const auto r = invoke({"ingest", "--images", (dir / "imgs").string(), "--side", "227", "--out",
                         (dir / "px.fmx").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "n=1 d=154587\n");
}

TEST(CliIngest, MissingInputIsExit2) {
  TempDir dir;
  EXPECT_EQ(invoke({"ingest", "--csv", (dir / "none.csv").string(), "--out", (dir / "x.fmx").string()}).code, 2);
  write_text(dir / "bad.csv", "id,f0\na,abc\n");
  const auto r = invoke({"ingest", "--csv", (dir / "bad.csv").string(), "--out", (dir / "x.fmx").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(":2"), std::string::npos);
  EXPECT_NE(r.err.find("f0"), std::string::npos);
}

TEST(CliIngest, QuietSuppressesInfo) {
  TempDir dir;
  write_demo_csv(dir, 3, 2);
  const auto r =
      invoke({"ingest", "--quiet", "--csv", (dir / "f.csv").string(), "--out", (dir / "f.fmx").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "");
}

TEST(CliRun, ZeroSelectionsIsConfigError) {
  TempDir dir;
  write_demo_csv(dir, 5, 3);
  const auto r = invoke({"run", "--features", (dir / "f.csv").string(), "--selections", "0", "--out",
                         (dir / "out").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(invoke({"run", "--features", (dir / "f.csv").string(), "--method", "magic", "--out",
                    (dir / "out").string()})
                .code,
            3);
  EXPECT_EQ(invoke({"run", "--bogus"}).code, 3);
}

TEST(CliRun, DemudIsByteIdenticalAcrossRuns) {
  TempDir dir;
  write_demo_csv(dir, 40, 6);
  ASSERT_EQ(invoke({"ingest", "--csv", (dir / "f.csv").string(), "--out", (dir / "f.fmx").string()}).code, 0);
  const std::vector<std::string> base{"run", "--features", (dir / "f.fmx").string(), "--k", "3",
                                      "--selections", "15", "--out", (dir / "out").string()};
  auto a = base;
  a.insert(a.end(), {"--name", "a", "--workers", "1"});
  auto b = base;
  b.insert(b.end(), {"--name", "b", "--workers", "4"});
  ASSERT_EQ(invoke(a).code, 0);
  ASSERT_EQ(invoke(b).code, 0);
  std::string ja = slurp(dir / "out" / "a.json");
  std::string jb = slurp(dir / "out" / "b.json");
  // The sidecar reference carries the file stem.
  const auto pos = jb.find("b.vectors.fmx");
  ASSERT_NE(pos, std::string::npos);
  jb.replace(pos, 1, "a");
  EXPECT_EQ(ja, jb);
  EXPECT_EQ(slurp(dir / "out" / "a.vectors.fmx"), slurp(dir / "out" / "b.vectors.fmx"));

  const RunDocument doc = load_run(dir / "out" / "a.json", true);
  EXPECT_EQ(doc.result.records.size(), 15u);
  EXPECT_TRUE(doc.result.records[0].has_vectors());
}

TEST(CliRun, SvdAndRandomMethods) {
  TempDir dir;
  write_demo_csv(dir, 10, 4);
  ASSERT_EQ(invoke({"run", "--features", (dir / "f.csv").string(), "--method", "svd", "--k", "2",
                    "--selections", "10", "--out", (dir / "o").string(), "--name", "svd"})
                .code,
            0);
  ASSERT_EQ(invoke({"run", "--features", (dir / "f.csv").string(), "--method", "random", "--seed", "5",
                    "--selections", "10", "--out", (dir / "o").string(), "--name", "rnd"})
                .code,
            0);
  EXPECT_EQ(load_run(dir / "o" / "svd.json").result.records.size(), 10u);
  const RunDocument rnd = load_run(dir / "o" / "rnd.json");
  EXPECT_TRUE(rnd.vectors.empty());
  EXPECT_FALSE(std::filesystem::exists(dir / "o" / "rnd.vectors.fmx"));
}

TEST(CliEval, OracleOrderIsHundred) {
  TempDir dir;
  ordered_run(dir, {"a", "b", "c", "d", "e"}, {"x", "y", "z", "x", "y"});
  const auto r = invoke({"eval", "--run", (dir / "run.json").string(), "--labels", (dir / "labels.tsv").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "nAUC=100.00\n");
}

TEST(CliEval, HandFixtureIsEighty) {
  TempDir dir;
  ordered_run(dir, {"a", "b", "c"}, {"x", "x", "y"});
  const auto r = invoke({"eval", "--run", (dir / "run.json").string(), "--labels", (dir / "labels.tsv").string(),
                         "--t", "3", "--out", (dir / "curves").string(), "--svg"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "nAUC=80.00\n");
  EXPECT_EQ(slurp(dir / "curves" / "curve.csv"), "i,C_i\n1,1\n2,1\n3,2\n");
  EXPECT_TRUE(std::filesystem::exists(dir / "curves" / "curve.svg"));
}

TEST(CliEval, UnlabeledIdIsExit4) {
  TempDir dir;
  ordered_run(dir, {"a", "b"}, {"x", "y"});
  write_text(dir / "labels.tsv", "a\tx\n");
  const auto r = invoke({"eval", "--run", (dir / "run.json").string(), "--labels", (dir / "labels.tsv").string()});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("'b'"), std::string::npos);
}

TEST(CliEval, RandomTrialsAverage) {
  TempDir dir;
  write_demo_csv(dir, 30, 3);
  ASSERT_EQ(invoke({"run", "--features", (dir / "f.csv").string(), "--method", "random", "--selections", "30",
                    "--out", (dir / "o").string(), "--name", "rnd"})
                .code,
            0);
  const auto r = invoke({"eval", "--run", (dir / "o" / "rnd.json").string(), "--labels",
                         (dir / "labels.tsv").string(), "--t", "10", "--trials", "200"});
  EXPECT_EQ(r.code, 0) << r.err;
  const FeatureMatrix fm = io::load_csv(dir / "f.csv");
  const auto expected = random_baseline(fm, io::load_labels_tsv(dir / "labels.tsv"), 10, 200, 0);
  EXPECT_EQ(r.out, "nAUC=" + cli::detail::fixed2(expected.nauc) + "\n");
}

TEST(CliExplain, WritesArtifactsAndRejectsBadRank) {
  TempDir dir;
  write_demo_csv(dir, 8, 12);
  ASSERT_EQ(invoke({"run", "--features", (dir / "f.csv").string(), "--k", "2", "--selections", "4", "--out",
                    (dir / "o").string()})
                .code,
            0);
  const auto r = invoke({"explain", "--run", (dir / "o" / "run.json").string(), "--rank", "2", "--space",
                         "pixel:2x2", "--top", "3", "--out", (dir / "x").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  for (const char* f : {"rank2.expected.png", "rank2.novel.png", "rank2.novel.png.norm.txt", "rank2.top.tsv",
                        "rank2.fmx"})
    EXPECT_TRUE(std::filesystem::exists(dir / "x" / f)) << f;

  const auto bad = invoke({"explain", "--run", (dir / "o" / "run.json").string(), "--rank", "9", "--out",
                           (dir / "x").string()});
  EXPECT_EQ(bad.code, 3);
  const auto space = invoke({"explain", "--run", (dir / "o" / "run.json").string(), "--rank", "1", "--space",
                             "pixel:3x3", "--out", (dir / "x").string()});
  EXPECT_NE(space.code, 0);
}

TEST(CliSynthAndSweep, EndToEnd) {
  TempDir dir;
  const auto s = invoke({"synth", "--classes", "3", "--per-class", "6", "--dim", "5", "--seed", "2", "--out",
                         (dir / "s.fmx").string(), "--labels-out", (dir / "s.tsv").string()});
  EXPECT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(s.out, "n=18 d=5\n");
  const auto k = invoke({"ksweep", "--features", (dir / "s.fmx").string(), "--labels", (dir / "s.tsv").string(),
                         "--ks", "1,2", "--t", "10"});
  EXPECT_EQ(k.code, 0) << k.err;
  EXPECT_NE(k.out.find("K=2 nAUC="), std::string::npos);
  EXPECT_NE(k.out.find("stddev="), std::string::npos);
}

TEST(CliSubsample, ClassTooSmallIsConfigError) {
  TempDir dir;
  ASSERT_EQ(invoke({"synth", "--classes", "2", "--per-class", "4", "--dim", "3", "--out", (dir / "s.fmx").string()})
                .code,
            0);
  const auto ok = invoke({"subsample", "--in", (dir / "s.fmx").string(), "--majority", "1", "--minority", "1",
                          "--per-majority", "3", "--per-minority", "1", "--out", (dir / "u.fmx").string()});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(ok.out, "n=4 d=3\n");
  const auto bad = invoke({"subsample", "--in", (dir / "s.fmx").string(), "--majority", "1", "--minority", "1",
                           "--per-majority", "5", "--out", (dir / "u.fmx").string()});
  EXPECT_EQ(bad.code, 3);
}

}  // namespace
}  // namespace demud
