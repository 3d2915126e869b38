#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "deeptrade/market_data.hpp"
#include "deeptrade/synthetic.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace deeptrade;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const testutil::TempDir& dir, const std::string& args) {
  const fs::path out_file = dir.file("stdout.txt");
  const fs::path err_file = dir.file("stderr.txt");
  const std::string cmd = std::string(DEEPTRADE_CLI_PATH) + " " + args + " > " +
                          out_file.string() + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testutil::read_file(out_file);
  r.err = testutil::read_file(err_file);
  return r;
}

/// One short synthetic ticker under <dir>/data.
void write_data(const testutil::TempDir& dir, const std::string& ticker,
                std::uint64_t seed = 1) {
  fs::create_directories(dir.file("data"));
  SyntheticSpec spec;
  spec.ticker = ticker;
  spec.start = Date{2018, 1, 1};
  spec.days = 160;
  spec.base_price = 60.0;
  spec.daily_drift = 0.002;
  spec.ripple_amplitude = 0.01;
  spec.noise_level = 0.01;
  spec.noise_seed = seed;
  save_csv(make_synthetic_series(spec), dir.file("data") / (ticker + ".csv"));
}

const std::string kQuickRanges =
    " --train-start 2018-01-01 --train-end 2018-05-31"
    " --test-start 2018-06-01 --test-end 2018-08-10"
    " --episodes 3 --hidden1 12 --hidden2 6";

}  // namespace

TEST_CASE("usage errors exit 1") {
  testutil::TempDir dir;
  CHECK(run_cli(dir, "--no-such-flag").exit_code == 1);
  CHECK(run_cli(dir, "").exit_code == 1);  // a subcommand is required
  CHECK(run_cli(dir, "--help").exit_code == 0);
}

TEST_CASE("ingest-check") {
  testutil::TempDir dir;
  write_data(dir, "AAA");
  write_data(dir, "BBB", 2);

  const auto ok = run_cli(dir, "ingest-check --data-dir " + dir.file("data").string());
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("AAA") != std::string::npos);
  CHECK(ok.out.find("BBB") != std::string::npos);
  CHECK(ok.out.find("OK") != std::string::npos);

  testutil::write_file(dir.file("data") / "BAD.csv", "not,a,header\n");
  const auto bad = run_cli(dir, "ingest-check --data-dir " + dir.file("data").string());
  CHECK(bad.exit_code == 2);
}

TEST_CASE("indicators subcommand") {
  testutil::TempDir dir;
  write_data(dir, "AAA");
  const std::string base = "indicators --data-dir " + dir.file("data").string() +
                           " --ticker AAA --out " + dir.file("out").string();

  const auto first = run_cli(dir, base);
  CHECK(first.exit_code == 0);
  const fs::path csv = dir.file("out") / "AAA_indicators.csv";
  REQUIRE(fs::exists(csv));
  const std::string text = testutil::read_file(csv);
  CHECK(text.rfind("date,macd,rsi,cci,adx\n", 0) == 0);
  // 160 bars, 27 consumed by warm-up, plus one header line
  CHECK(std::count(text.begin(), text.end(), '\n') == 160 - 27 + 1);

  const auto second = run_cli(dir, base);
  CHECK(second.exit_code == 0);
  CHECK(testutil::read_file(csv) == text);

  const auto missing = run_cli(dir, "indicators --data-dir " + dir.file("data").string() +
                                        " --ticker NOPE --out " + dir.file("out").string());
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("NOPE") != std::string::npos);
}

TEST_CASE("train subcommand") {
  testutil::TempDir dir;
  write_data(dir, "AAA");
  const std::string cmd = "train --data-dir " + dir.file("data").string() + " --ticker AAA" +
                          " --algo qlearn --seed 7 --out " + dir.file("out").string() +
                          kQuickRanges;

  const auto first = run_cli(dir, cmd);
  CHECK(first.exit_code == 0);
  CHECK(first.out.find("test profit") != std::string::npos);
  const fs::path ckpt = dir.file("out") / "AAA_qlearn_seed7.ckpt";
  const fs::path curve = dir.file("out") / "AAA_qlearn_seed7_curve.csv";
  const fs::path traj = dir.file("out") / "AAA_qlearn_seed7_test_trajectory.csv";
  REQUIRE(fs::exists(ckpt));
  REQUIRE(fs::exists(curve));
  REQUIRE(fs::exists(traj));
  CHECK(fs::exists(dir.file("out") / "manifest.txt"));
  CHECK(testutil::read_file(ckpt).rfind("mlp identity", 0) == 0);

  const std::string ckpt_bytes = testutil::read_file(ckpt);
  const std::string curve_bytes = testutil::read_file(curve);
  const auto second = run_cli(dir, cmd);
  CHECK(second.exit_code == 0);
  CHECK(testutil::read_file(ckpt) == ckpt_bytes);
  CHECK(testutil::read_file(curve) == curve_bytes);

  // the policy-gradient head is a softmax; value heads are raw q outputs
  const auto pg = run_cli(dir, "train --data-dir " + dir.file("data").string() +
                                   " --ticker AAA --algo pg --seed 7 --out " +
                                   dir.file("out").string() + kQuickRanges);
  CHECK(pg.exit_code == 0);
  CHECK(testutil::read_file(dir.file("out") / "AAA_pg_seed7.ckpt").rfind("mlp softmax", 0) ==
        0);
}

TEST_CASE("backtest subcommand") {
  testutil::TempDir dir;
  write_data(dir, "AAA", 1);
  write_data(dir, "BBB", 2);
  const std::string cmd = "backtest --data-dir " + dir.file("data").string() +
                          " --ticker AAA --ticker BBB --algo sarsa --reps 2 --seed 3" +
                          " --out " + dir.file("out").string() + kQuickRanges;

  const auto run = run_cli(dir, cmd);
  CHECK(run.exit_code == 0);
  CHECK(run.out.find("Deep SARSA") != std::string::npos);
  CHECK(run.out.find("Total") != std::string::npos);
  REQUIRE(fs::exists(dir.file("out") / "report.txt"));
  REQUIRE(fs::exists(dir.file("out") / "trials.csv"));
  REQUIRE(fs::exists(dir.file("out") / "percentiles.csv"));
  CHECK(fs::exists(dir.file("out") / "curves" / "AAA_seed3.csv"));
  CHECK(fs::exists(dir.file("out") / "curves" / "BBB_seed6.csv"));

  const auto missing = run_cli(dir, "backtest --data-dir " + dir.file("data").string() +
                                        " --ticker AAA --ticker GONE --reps 1 --seed 3" +
                                        " --out " + dir.file("out2").string() + kQuickRanges);
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("GONE") != std::string::npos);
  // failed runs leave no partial report behind
  CHECK(!fs::exists(dir.file("out2") / "report.txt"));
}

TEST_CASE("config file values are applied and flags win") {
  testutil::TempDir dir;
  write_data(dir, "AAA");
  testutil::write_file(dir.file("run.cfg"),
                       "data-dir=" + dir.file("data").string() + "\n" +
                           "out=" + dir.file("out").string() + "\n" +
                           "ticker=AAA\n");

  const auto run = run_cli(dir, "indicators --config " + dir.file("run.cfg").string());
  CHECK(run.exit_code == 0);
  CHECK(fs::exists(dir.file("out") / "AAA_indicators.csv"));

  // flag overrides the config's out directory
  const auto over = run_cli(dir, "indicators --config " + dir.file("run.cfg").string() +
                                     " --out " + dir.file("out_flag").string());
  CHECK(over.exit_code == 0);
  CHECK(fs::exists(dir.file("out_flag") / "AAA_indicators.csv"));
}
