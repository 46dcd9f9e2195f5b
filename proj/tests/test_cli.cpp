#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

#include "cli/app.hpp"
#include "cli/commands.hpp"
#include "cli/record.hpp"
#include "rlab/io.hpp"

namespace fs = std::filesystem;
using namespace rlab::cli;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("rlab_cli_" + std::to_string(::getpid()) + "_" +
                                         ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  struct Result {
    int code;
    std::string out;
    std::string err;
    fs::path run_dir;
  };

  /// Runs the CLI with --out pointing at a fresh subdirectory `tag`.
  Result run(std::vector<std::string> args, const std::string& tag = "out") {
    const fs::path out_dir = root_ / tag;
    args.push_back("--out");
    args.push_back(out_dir.string());
    std::ostringstream out, err;
    Result r{run_cli(args, out, err), out.str(), err.str(), {}};
    if (r.code == 0) {
      for (const auto& e : fs::directory_iterator(out_dir)) r.run_dir = e.path();
    }
    return r;
  }

  static json record(const Result& r) { return json::parse(slurp(r.run_dir / "record.json")); }

  fs::path root_;
};

}  // namespace

TEST_F(CliTest, CriticalReportsConstantsAndIsRepeatable) {
  const auto a = run({"critical"}, "a");
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run({"critical"}, "b");
  const json ra = record(a), rb = record(b);
  EXPECT_NEAR(ra["metrics"]["p0"].get<double>(), 0.2855, 2e-3);
  EXPECT_NEAR(ra["metrics"]["h0"].get<double>(), 0.8145, 1e-3);
  EXPECT_EQ(ra["run_id"], rb["run_id"]);
  EXPECT_EQ(ra["metrics"], rb["metrics"]);
  EXPECT_NE(a.out.find("p0 = 0.28"), std::string::npos);
}

TEST_F(CliTest, BoundExamples) {
  const auto d1 = run({"bound", "--kraus", "1", "--p", "0.5"}, "d1");
  ASSERT_EQ(d1.code, 0) << d1.err;
  EXPECT_EQ(record(d1)["metrics"]["lemma1_bound"].get<double>(), 0.0);

  const auto d2 = run({"bound", "--kraus", "2", "--p", "0.5"}, "d2");
  ASSERT_EQ(d2.code, 0) << d2.err;
  const json m = record(d2)["metrics"];
  EXPECT_NEAR(m["lemma1_bound"].get<double>(), 1.0695999934791407, 1e-12);
  EXPECT_NEAR(m["deltaS"].get<double>(), 0.10765059749671852, 1e-12);
}

TEST_F(CliTest, BoundRejectsOrderOutsideUnitInterval) {
  const auto r = run({"bound", "--kraus", "2", "--p", "1.5"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--p"), std::string::npos);
  EXPECT_EQ(run({"bound", "--p", "0.5"}, "missing").code, kExitUsage);
  EXPECT_EQ(run({"bound", "--kraus", "0", "--p", "0.5"}, "zero").code, kExitUsage);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({"no-such-command"}).code, kExitUsage);
  EXPECT_EQ(run({"violation-search", "--dim", "65"}, "big").code, kExitUsage);
  EXPECT_EQ(run({"concentration", "--kraus", "3", "--dims", "3,8"}, "dims").code, kExitUsage);
  EXPECT_EQ(run({"concentration", "--lambdas", "1,x"}, "lam").code, kExitUsage);
  EXPECT_EQ(run({"minimize", "--starts", "0"}, "starts").code, kExitUsage);
  EXPECT_EQ(run({"minimize", "--channel", (root_ / "absent.json").string()}, "absent").code, kExitUsage);
  std::ofstream(root_ / "bad.json") << "{ not json";
  EXPECT_EQ(run({"minimize", "--channel", (root_ / "bad.json").string()}, "bad").code, kExitUsage);
  EXPECT_EQ(run({"bound", "--config", (root_ / "absent.json").string()}, "cfg").code, kExitUsage);
}

TEST_F(CliTest, ConfigFileSuppliesFlagsAndExplicitFlagsWin) {
  std::ofstream(root_ / "cfg.json") << R"({"kraus": 2, "p": 0.9})";
  const auto from_file = run({"bound", "--config", (root_ / "cfg.json").string()}, "file");
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_EQ(record(from_file)["parameters"]["p"].get<double>(), 0.9);
  const auto overridden = run({"bound", "--config", (root_ / "cfg.json").string(), "--p", "0.5"}, "override");
  ASSERT_EQ(overridden.code, 0) << overridden.err;
  EXPECT_EQ(record(overridden)["parameters"]["p"].get<double>(), 0.5);
  EXPECT_EQ(record(overridden)["parameters"]["kraus"].get<int>(), 2);
}

TEST_F(CliTest, ResultsDirectoryLayoutAndRecordFields) {
  const auto r = run({"sample-channel", "--kraus", "2", "--dim", "3", "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"record.json", "rows.jsonl", "export.csv", "channel.json"}) EXPECT_TRUE(fs::exists(r.run_dir / f)) << f;
  const json rec = record(r);
  for (const char* k : {"run_id", "command", "parameters", "master_seed", "metrics", "artifact_paths", "timestamp"})
    EXPECT_TRUE(rec.contains(k)) << k;
  EXPECT_EQ(rec["run_id"].get<std::string>(), r.run_dir.filename().string());
  EXPECT_EQ(rec["run_id"].get<std::string>().size(), 16u);
  EXPECT_EQ(rec["command"], "sample-channel");
  EXPECT_EQ(rec["master_seed"].get<std::uint64_t>(), 5u);
  EXPECT_TRUE(std::regex_match(rec["timestamp"].get<std::string>(), std::regex(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\dZ)")));
  const auto ch = rlab::io::channel_from_json(json::parse(slurp(r.run_dir / "channel.json")));
  EXPECT_EQ(ch.kraus_count(), 2);
  EXPECT_EQ(ch.dim(), 3);
}

TEST(RunId, PureFunctionOfCommandParametersAndSeed) {
  const json p = {{"kraus", 2}, {"p", 0.5}};
  EXPECT_EQ(compute_run_id("bound", p, 3), compute_run_id("bound", p, 3));
  EXPECT_NE(compute_run_id("bound", p, 3), compute_run_id("bound", p, 4));
  EXPECT_NE(compute_run_id("bound", p, 3), compute_run_id("scan", p, 3));
  EXPECT_NE(compute_run_id("bound", p, 3), compute_run_id("bound", json{{"kraus", 3}, {"p", 0.5}}, 3));
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(CliTest, JsonlRowsFollowSchema) {
  const auto r = run({"concentration", "--kraus", "2", "--dims", "8,16", "--trials", "5", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(r.run_dir / "rows.jsonl"));
  std::string line;
  std::int64_t expected_trial = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    ASSERT_TRUE(j.is_object());
    EXPECT_EQ(j.size(), 2u);
    ASSERT_TRUE(j["trial"].is_number_integer());
    EXPECT_EQ(j["trial"].get<std::int64_t>(), expected_trial++);
    ASSERT_TRUE(j["metrics"].is_object());
    for (const auto& [k, v] : j["metrics"].items()) EXPECT_TRUE(v.is_number()) << k;
  }
  EXPECT_EQ(expected_trial, 10);
}

TEST_F(CliTest, CsvExportRoundTripsTheRows) {
  const auto r = run({"q-lambda", "--kraus", "3", "--dim", "16", "--channels", "4", "--trials", "10", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv_rows = rows_from_csv(slurp(r.run_dir / "export.csv"));
  std::istringstream in(slurp(r.run_dir / "rows.jsonl"));
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    ASSERT_LT(i, csv_rows.size());
    EXPECT_EQ(csv_rows[i].trial, j["trial"].get<std::int64_t>());
    for (const auto& [k, v] : csv_rows[i].metrics) EXPECT_EQ(v, j["metrics"][k].get<double>()) << k;
    ++i;
  }
  EXPECT_EQ(i, csv_rows.size());
}

TEST(Csv, RoundTripsAwkwardDoubles) {
  std::vector<Row> rows;
  const std::vector<double> values{0.1, 1.0 / 3.0, 1e-300, -2.5e300, 6.02214076e23, 0.0, -0.0, 4.9e-324, 0.30000000000000004};
  for (std::size_t i = 0; i < values.size(); ++i) rows.push_back(Row{static_cast<std::int64_t>(i), {}}.add("x", values[i]).add("y", -values[i]));
  const auto back = rows_from_csv(rows_to_csv(rows));
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].trial, rows[i].trial);
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_EQ(back[i].metrics[k].first, rows[i].metrics[k].first);
      EXPECT_EQ(back[i].metrics[k].second, rows[i].metrics[k].second);
    }
  }
}

TEST_F(CliTest, SampledSingleUnitaryChannelMinimizesToZero) {
  const std::string file = (root_ / "ch.json").string();
  const auto s = run({"sample-channel", "--kraus", "1", "--dim", "4", "--seed", "3", "--save", file}, "s");
  ASSERT_EQ(s.code, 0) << s.err;
  const auto m = run({"minimize", "--channel", file, "--p", "0.5", "--starts", "4"}, "m");
  ASSERT_EQ(m.code, 0) << m.err;
  EXPECT_NEAR(record(m)["metrics"]["value"].get<double>(), 0.0, 1e-8);
  EXPECT_TRUE(fs::exists(m.run_dir / "witness.json"));
}

TEST_F(CliTest, ViolationSearchSingleUnitaryHasZeroGaps) {
  const auto r = run({"violation-search", "--kraus", "1", "--dim", "3", "--channels", "3", "--starts", "2", "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(r.run_dir / "rows.jsonl"));
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_NEAR(json::parse(line)["metrics"]["gap"].get<double>(), 0.0, 1e-8);
    ++rows;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_NE(r.out.find("summary:"), std::string::npos);
}

TEST_F(CliTest, ViolationSearchRowsRespectCandidateInclusions) {
  const auto r = run({"violation-search", "--kraus", "3", "--dim", "3", "--p", "0.15", "--channels", "3", "--starts", "3", "--seed", "6"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(r.run_dir / "rows.jsonl"));
  std::string line;
  while (std::getline(in, line)) {
    const json m = json::parse(line)["metrics"];
    const double h1 = m["H1"], h2 = m["H2"], hphi = m["H_phi"];
    EXPECT_LE(h2, hphi + 1e-9);
    EXPECT_LE(h2, 2.0 * h1 + 1e-9);
    EXPECT_LE(hphi, m["mixture_bound"].get<double>() + 1e-9);
  }
}

TEST_F(CliTest, ScanEmitsBoundColumn) {
  const auto r = run({"scan", "--kraus", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = rows_from_csv(slurp(r.run_dir / "export.csv"));
  ASSERT_EQ(rows.size(), 19u);
  EXPECT_EQ(rows.front().metrics[1].first, "lemma1_bound");
}

TEST_F(CliTest, NearEventWritesReport) {
  const auto r = run({"near-event", "--kraus", "2", "--dim", "16", "--trials", "12", "--starts", "2", "--seed", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(slurp(r.run_dir / "report.json"));
  EXPECT_EQ(rep["fitted_y"].size(), 12u);
  EXPECT_EQ(rep["residuals"].size(), 12u);
}

// Every subcommand, run twice with the same flags and seed, writes byte-identical rows.
TEST_F(CliTest, EverySubcommandIsDeterministic) {
  const std::vector<std::vector<std::string>> commands{
      {"critical"},
      {"bound", "--kraus", "3", "--p", "0.2"},
      {"violation-search", "--kraus", "2", "--dim", "3", "--channels", "2", "--starts", "2", "--seed", "9"},
      {"concentration", "--kraus", "2", "--dims", "8,16", "--trials", "6", "--seed", "9"},
      {"q-lambda", "--kraus", "2", "--dim", "8", "--channels", "3", "--trials", "5", "--seed", "9"},
      {"near-event", "--kraus", "2", "--dim", "8", "--trials", "5", "--starts", "2", "--seed", "9"},
      {"scan", "--kraus", "2"},
      {"sample-channel", "--kraus", "2", "--dim", "3", "--seed", "9"},
      {"minimize", "--kraus", "2", "--dim", "3", "--starts", "3", "--seed", "9"},
  };
  int k = 0;
  for (const auto& cmd : commands) {
    const auto a = run(cmd, "a" + std::to_string(k));
    ::setenv("RLAB_THREADS", "3", 1);
    const auto b = run(cmd, "b" + std::to_string(k));
    ::unsetenv("RLAB_THREADS");
    ++k;
    ASSERT_EQ(a.code, 0) << cmd[0] << ": " << a.err;
    ASSERT_EQ(b.code, 0) << cmd[0] << ": " << b.err;
    EXPECT_EQ(slurp(a.run_dir / "rows.jsonl"), slurp(b.run_dir / "rows.jsonl")) << cmd[0];
    EXPECT_EQ(record(a)["metrics"], record(b)["metrics"]) << cmd[0];
    EXPECT_EQ(a.run_dir.filename(), b.run_dir.filename()) << cmd[0];
  }
}
