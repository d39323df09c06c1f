#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "thrnn/split_io.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliResult {
  int status = 0;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] == '{') out.push_back(json::parse(line));
  return out;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "thrnn_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "spec.json") << R"({
      "num_users": 30, "sessions_per_user": 12, "max_session_length": 5,
      "items": {"type": "banded", "num_items": 12, "successor_probs": [0.6, 0.2]},
      "gap_mixture": [{"weight": 0.5, "dist": "constant", "days": 1.0},
                      {"weight": 0.5, "dist": "constant", "days": 3.0}]})";
    std::ofstream(dir_ / "config.json") << R"({
      "profile": "synthetic",
      "model": {"item_embedding_dim": 6, "hidden_dim_inter": 8, "hidden_dim_intra": 8, "batch_size": 10},
      "quadrature": {"num_points": 256},
      "training": {"epochs": 2, "seed": 3}})";
    ASSERT_EQ(run("synth --spec " + (dir_ / "spec.json").string() + " --output " + (dir_ / "split.jsonl").string() +
                  " --seed 4")
                  .status,
              0);
  }

  static CliResult run(const std::string& args) {
    static int counter = 0;
    const auto out = dir_ / ("out" + std::to_string(counter) + ".txt");
    const auto err = dir_ / ("err" + std::to_string(counter++) + ".txt");
    const std::string cmd = std::string(THRNN_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int rc = std::system(cmd.c_str());
    return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, slurp(out), slurp(err)};
  }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static std::string config() { return " --config " + path("config.json"); }

  static fs::path dir_;
};

fs::path Cli::dir_;

TEST_F(Cli, TrainLogsOneParseableLinePerEpoch) {
  const auto r = run("train --split " + path("split.jsonl") + " --output " + path("a.bin") + config());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto lines = json_lines(r.out);
  ASSERT_EQ(lines.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(lines[i]["epoch"], i + 1);
    for (const char* key : {"train_loss", "val_recall5", "val_mae_days"}) EXPECT_TRUE(lines[i].contains(key)) << key;
  }
}

TEST_F(Cli, SameConfigAndSeedGiveTheSameDigest) {
  const auto a = run("train --split " + path("split.jsonl") + " --output " + path("d1.bin") + config());
  const auto b = run("train --split " + path("split.jsonl") + " --output " + path("d2.bin") + config());
  ASSERT_EQ(a.status, 0);
  ASSERT_EQ(b.status, 0);
  const auto digest = [](const std::string& err) { return err.substr(err.rfind("digest ") + 7, 16); };
  EXPECT_EQ(digest(a.err), digest(b.err));
  EXPECT_EQ(slurp(path("d1.bin")), slurp(path("d2.bin")));
  const auto c = run("train --split " + path("split.jsonl") + " --output " + path("d3.bin") + config() + " --seed 9");
  EXPECT_NE(digest(a.err), digest(c.err));
}

TEST_F(Cli, ResumeContinuesEpochNumbering) {
  ASSERT_EQ(run("train --split " + path("split.jsonl") + " --output " + path("r1.bin") + config()).status, 0);
  const auto r = run("train --split " + path("split.jsonl") + " --output " + path("r2.bin") + config() +
                     " --epochs 1 --resume " + path("r1.bin"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto lines = json_lines(r.out);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0]["epoch"], 3);
}

TEST_F(Cli, AlphaSweepValuesAreAcceptedAndOutOfRangeRejected) {
  for (const char* a : {"0.3", "1.0"}) {
    const auto r = run("train --split " + path("split.jsonl") + " --output " + path("alpha.bin") + config() +
                       " --epochs 1 --alpha-exp " + a);
    EXPECT_EQ(r.status, 0) << r.err;
  }
  const auto bad = run("train --split " + path("split.jsonl") + " --output " + path("alpha.bin") + config() +
                       " --alpha-exp 1.5");
  EXPECT_NE(bad.status, 0);
  EXPECT_NE(bad.err.find("alpha_exp"), std::string::npos);
  EXPECT_EQ(json_lines(bad.out).size(), 0u);
}

TEST_F(Cli, EvaluateWritesReportsForEveryModel) {
  ASSERT_EQ(run("train --split " + path("split.jsonl") + " --output " + path("e.bin") + config()).status, 0);
  const auto r = run("evaluate --split " + path("split.jsonl") + " --checkpoint " + path("e.bin") +
                     " --output-dir " + path("eval") + config());
  ASSERT_EQ(r.status, 0) << r.err;
  for (const char* m : {"thrnn", "hawkes_short", "hawkes_long", "mean_gap", "popularity"})
    EXPECT_TRUE(fs::exists(dir_ / "eval" / (std::string(m) + ".report.jsonl"))) << m;
  const auto report = json_lines(slurp(dir_ / "eval" / "thrnn.report.jsonl"));
  std::vector<int> ks;
  for (const auto& l : report)
    if (l["type"] == "rank") ks.push_back(l["k"]);
  EXPECT_EQ(ks, (std::vector<int>{5, 10, 20}));
  EXPECT_TRUE(fs::exists(dir_ / "eval" / "thrnn.plot.tsv"));
  EXPECT_FALSE(fs::exists(dir_ / "eval" / "popularity.plot.tsv"));
}

TEST_F(Cli, MeanGapBaselineMatchesTheClosedForm) {
  const auto r = run("evaluate --split " + path("split.jsonl") + " --baselines mean_gap --output-dir " +
                     path("mg") + config());
  ASSERT_EQ(r.status, 0) << r.err;
  // Gaps are exactly 1 or 3 days: the predictor is the train mean m and the
  // MAE is (n1 |1 - m| + n3 |3 - m|) / (n1 + n3) over test gaps.
  const auto split = thrnn::load_split(path("split.jsonl"));
  double train_sum = 0.0, n_train = 0.0, n1 = 0.0, n3 = 0.0;
  for (std::size_t u = 0; u < split.train.size(); ++u) {
    const auto& tr = split.train[u].sessions;
    for (std::size_t j = 1; j < tr.size(); ++j) {
      train_sum += tr[j].gap_before / 86400.0;
      n_train += 1.0;
    }
    for (const auto& s : split.test[u].sessions) (s.gap_before == 86400 ? n1 : n3) += 1.0;
  }
  const double m = train_sum / n_train;
  const double want = (n1 * std::abs(1.0 - m) + n3 * std::abs(3.0 - m)) / (n1 + n3);
  double got = -1.0;
  for (const auto& l : json_lines(slurp(dir_ / "mg" / "mean_gap.report.jsonl")))
    if (l["type"] == "mae_overall") got = l["mae_days"];
  EXPECT_NEAR(got, want, 1e-12);
  EXPECT_NEAR(got, 1.0, 0.05);
}

TEST_F(Cli, PredictReturnsKItemsAndBothTimeUnits) {
  ASSERT_EQ(run("train --split " + path("split.jsonl") + " --output " + path("p.bin") + config()).status, 0);
  std::ofstream(dir_ / "history.json") << R"({"user": "u3",
    "sessions": [{"start": 0, "end": 120, "items": ["i1", "i2", "i3"]},
                 {"start": 90000, "end": 90060, "items": ["i5", "i6"]}],
    "current": ["i7"]})";
  const std::string args = "predict --checkpoint " + path("p.bin") + " --history " + path("history.json") + " -k 5";
  const auto a = run(args);
  const auto b = run(args);
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto j = json::parse(a.out);
  EXPECT_EQ(j["items"].size(), 5u);
  EXPECT_NEAR(j["return_time_days"].get<double>(), j["return_time_seconds"].get<double>() / 86400.0, 1e-12);
  EXPECT_GT(j["return_time_seconds"].get<double>(), 0.0);
}

TEST_F(Cli, PredictListsUnknownItems) {
  ASSERT_EQ(run("train --split " + path("split.jsonl") + " --output " + path("u.bin") + config()).status, 0);
  std::ofstream(dir_ / "unknown.json") << R"({"user": "u1",
    "sessions": [{"start": 0, "end": 10, "items": ["i1", "nope"]}], "current": ["zzz"]})";
  const auto r = run("predict --checkpoint " + path("u.bin") + " --history " + path("unknown.json"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("nope"), std::string::npos);
  EXPECT_NE(r.err.find("zzz"), std::string::npos);
}

TEST_F(Cli, PreprocessRedditCsvAndDiagnoseEmptyInput) {
  std::ofstream csv(dir_ / "reddit.csv");
  csv << "author,subreddit,utc\n";
  for (int u = 0; u < 3; ++u)
    for (int i = 0; i < 12; ++i) csv << "user" << u << ",sub" << (i % 4) << "," << 1000000 + i * 7200 << "\n";
  csv.close();
  const auto r = run("preprocess --dataset reddit --input " + path("reddit.csv") + " --output " +
                     path("reddit.jsonl") + " --profile reddit");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto stats = json::parse(r.out);
  EXPECT_EQ(stats["users"], 3);
  EXPECT_EQ(stats["sessions"], 36);
  EXPECT_EQ(stats["items"], 4);
  EXPECT_EQ(stats["malformed_rows"], 0);

  std::ofstream(dir_ / "empty.csv").close();
  const auto e = run("preprocess --dataset reddit --input " + path("empty.csv") + " --output " + path("x.jsonl"));
  EXPECT_NE(e.status, 0);
  EXPECT_NE(e.err.find("zero"), std::string::npos);
}

TEST_F(Cli, PreprocessSyntheticSpecMatchesNominalCounts) {
  const auto r = run("preprocess --dataset synthetic --input " + path("spec.json") + " --output " +
                     path("syn.jsonl") + " --seed 4");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto stats = json::parse(r.out);
  EXPECT_EQ(stats["users"], 30);
  EXPECT_EQ(stats["sessions"], 30 * 12);
}

TEST_F(Cli, UnknownConfigKeysAreRejected) {
  std::ofstream(dir_ / "bad.json") << R"({"model": {"hidden": 3}})";
  const auto r = run("train --split " + path("split.jsonl") + " --output " + path("bad.bin") + " --config " +
                     path("bad.json"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("model.hidden"), std::string::npos);
}

}  // namespace
