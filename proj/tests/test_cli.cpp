#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "tmar/io.hpp"

using namespace tmar;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "tmar_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path simulate_ar1(const fs::path& dir, std::size_t n, std::uint64_t seed) {
  const auto r = run_cli({"simulate", "--preset", "ar1", "--n", std::to_string(n), "--seed",
                          std::to_string(seed), "--output", dir.string()});
  EXPECT_EQ(r.code, cli::kOk) << r.err;
  return dir / "series.txt";
}

double ls_ar1(const std::vector<double>& y) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 1; t < y.size(); ++t) {
    num += y[t] * y[t - 1];
    den += y[t - 1] * y[t - 1];
  }
  return num / den;
}

}  // namespace

TEST(CliSimulate, SameSeedSameBytes) {
  const auto a = fresh_dir("sim_a");
  const auto b = fresh_dir("sim_b");
  for (const auto& dir : {a, b}) {
    const auto r = run_cli({"simulate", "--preset", "paper-sec4", "--n", "300", "--seed", "11",
                            "--output", dir.string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
  }
  EXPECT_EQ(slurp(a / "series.txt"), slurp(b / "series.txt"));
  const auto truth = load_key_values(a / "truth.txt");
  EXPECT_EQ(truth.at("orders"), "2, 1, 1");
  EXPECT_EQ(truth.at("seed"), "11");
  EXPECT_EQ(load_series(a / "series.txt").n(), 300u);
}

TEST(CliSimulate, UsageErrors) {
  const auto dir = fresh_dir("sim_bad");
  EXPECT_EQ(run_cli({"simulate", "--preset", "ar1", "--n", "0", "--seed", "1", "--output", dir.string()}).code,
            cli::kUsage);
  EXPECT_EQ(run_cli({"simulate", "--preset", "ar1", "--n", "50", "--output", dir.string()}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"simulate", "--preset", "ar1", "--n", "50", "--seed", "1", "--bogus", "3"}).code,
            cli::kUsage);
  EXPECT_EQ(run_cli({"simulate", "--preset", "nope", "--n", "50", "--seed", "1", "--output", dir.string()}).code,
            cli::kUsage);
  EXPECT_EQ(run_cli({}).code, cli::kUsage);
}

TEST(CliSimulate, Ar1ResidualsAreWhite) {
  const auto dir = fresh_dir("sim_white");
  const auto y = load_series(simulate_ar1(dir, 4000, 5)).values;
  std::vector<double> e;
  for (std::size_t t = 1; t < y.size(); ++t) e.push_back(y[t] - 0.6 * y[t - 1]);
  double mean = 0.0;
  for (double v : e) mean += v;
  mean /= static_cast<double>(e.size());
  double c0 = 0.0;
  for (double v : e) c0 += (v - mean) * (v - mean);
  const double bound = 4.0 / std::sqrt(static_cast<double>(e.size()));
  for (std::size_t lag = 1; lag <= 5; ++lag) {
    double c = 0.0;
    for (std::size_t t = lag; t < e.size(); ++t) c += (e[t] - mean) * (e[t - lag] - mean);
    EXPECT_LT(std::abs(c / c0), bound) << "lag " << lag;
  }
  EXPECT_NEAR(c0 / static_cast<double>(e.size()), 1.0, 0.1);
}

TEST(CliFit, RejectsShortChains) {
  const auto dir = fresh_dir("fit_short");
  const auto series = simulate_ar1(dir, 200, 3);
  const auto r = run_cli({"fit", "--data", series.string(), "--orders", "1", "--iterations", "100",
                          "--burnin", "100", "--seed", "1", "--output", dir.string()});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_EQ(run_cli({"fit", "--data", (dir / "missing.txt").string(), "--orders", "1", "--seed", "1"}).code,
            cli::kData);
}

TEST(CliFit, Ar1PosteriorAgreesWithLeastSquares) {
  const auto dir = fresh_dir("fit_ar1");
  const auto series = simulate_ar1(dir, 500, 21);
  const auto r = run_cli({"fit", "--data", series.string(), "--orders", "1", "--iterations", "4000",
                          "--burnin", "500", "--seed", "2", "--output", dir.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto summary = load_key_values(dir / "summary.txt");
  double mean = 0.0;
  double sd = 0.0;
  ASSERT_TRUE(parse_double(summary.at("phi_1_1.mean"), mean));
  ASSERT_TRUE(parse_double(summary.at("phi_1_1.sd"), sd));
  EXPECT_LT(std::abs(mean - ls_ar1(load_series(series).values)), 3.0 * sd);
  EXPECT_EQ(summary.at("draws"), "3500");
  EXPECT_EQ(read_trace(dir / "trace.csv").rows(), 3500u);
}

TEST(CliFit, SameSeedSameTrace) {
  const auto dir = fresh_dir("fit_det");
  const auto series = simulate_ar1(dir, 200, 4);
  for (const char* sub : {"a", "b"}) {
    const auto r = run_cli({"fit", "--data", series.string(), "--orders", "2,1", "--iterations", "400",
                            "--burnin", "100", "--seed", "9", "--output", (dir / sub).string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
  }
  EXPECT_EQ(slurp(dir / "a" / "trace.csv"), slurp(dir / "b" / "trace.csv"));
  EXPECT_EQ(slurp(dir / "a" / "summary.txt"), slurp(dir / "b" / "summary.txt"));
}

TEST(CliConfig, FlagsOverrideTheFile) {
  const auto dir = fresh_dir("config");
  const auto series = simulate_ar1(dir, 200, 6);
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "# fit settings\ndata = " << series.string() << "\norders = 1\niterations = 300\n"
        << "burnin = 50\nseed = 3\noutput = " << (dir / "from_file").string() << "\n";
  }
  ASSERT_EQ(run_cli({"fit", "--config", (dir / "run.cfg").string()}).code, cli::kOk);
  ASSERT_EQ(run_cli({"fit", "--config", (dir / "run.cfg").string(), "--iterations", "200", "--output",
                     (dir / "override").string()})
                .code,
            cli::kOk);
  EXPECT_EQ(load_key_values(dir / "from_file" / "summary.txt").at("draws"), "250");
  EXPECT_EQ(load_key_values(dir / "override" / "summary.txt").at("draws"), "150");

  std::ofstream bad(dir / "bad.cfg");
  bad << "iteratoins = 5\n";
  bad.close();
  EXPECT_EQ(run_cli({"fit", "--config", (dir / "bad.cfg").string()}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"fit", "--config", (dir / "absent.cfg").string()}).code, cli::kUsage);
}

TEST(CliReport, WritesTracesAndHistograms) {
  const auto dir = fresh_dir("report");
  const auto series = simulate_ar1(dir, 200, 7);
  ASSERT_EQ(run_cli({"fit", "--data", series.string(), "--orders", "1", "--iterations", "300", "--burnin",
                     "50", "--seed", "4", "--output", dir.string()})
                .code,
            cli::kOk);
  const auto plots = dir / "plots";
  const auto r = run_cli({"report", "--trace", (dir / "trace.csv").string(), "--bins", "15", "--output",
                          plots.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto names = read_trace(dir / "trace.csv").names;
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(plots)) {
    (void)entry;
    ++files;
  }
  EXPECT_EQ(files, 2 * names.size());

  const auto count_rows = [](const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    return rows - 1;
  };
  EXPECT_EQ(count_rows(plots / "hist_nu_1.csv"), 28u);
  EXPECT_EQ(count_rows(plots / "hist_mu_1.csv"), 15u);
  EXPECT_EQ(count_rows(plots / "trace_phi_1_1.csv"), 250u);

  std::ofstream(dir / "empty.csv") << "pi_1,mu_1\n";
  EXPECT_EQ(run_cli({"report", "--trace", (dir / "empty.csv").string(), "--output", plots.string()}).code,
            cli::kData);
  EXPECT_EQ(run_cli({"report", "--output", plots.string()}).code, cli::kUsage);
}

TEST(CliSelect, CountsEveryVisit) {
  const auto dir = fresh_dir("select");
  const auto series = simulate_ar1(dir, 150, 8);
  const auto r = run_cli({"select", "--data", series.string(), "--g", "1", "--p-max", "2", "--rj-iterations",
                          "1", "--rj-burnin", "0", "--sweeps-per-move", "1", "--seed", "5", "--output",
                          dir.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  std::ifstream in(dir / "select_g1.csv");
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "orders,count,share");
  EXPECT_NE(row.find(",1,1"), std::string::npos) << row;
  EXPECT_EQ(run_cli({"select", "--data", series.string(), "--rj-iterations", "0", "--seed", "5", "--output",
                     dir.string()})
                .code,
            cli::kUsage);
}

TEST(CliEvidence, SingleComponentVerdict) {
  const auto dir = fresh_dir("evidence");
  const auto series = simulate_ar1(dir, 200, 9);
  const auto r = run_cli({"evidence", "--data", series.string(), "--g", "1", "--orders", "1", "--p-max", "1",
                          "--iterations", "1500", "--burnin", "300", "--reduced-length", "500",
                          "--reduced-burnin", "100", "--seed", "6", "--output", dir.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  std::ifstream in(dir / "verdict.txt");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0].rfind("1. tMAR(1;1)", 0), 0u) << lines[0];
  const auto kv = load_key_values(dir / "evidence_g1.txt");
  EXPECT_EQ(kv.at("valid"), "true");
  double m = 0.0;
  ASSERT_TRUE(parse_double(kv.at("marginal_log_likelihood"), m));
  EXPECT_TRUE(std::isfinite(m));

  EXPECT_EQ(run_cli({"evidence", "--data", series.string(), "--g", "1,2", "--orders", "1", "--seed", "6",
                     "--output", dir.string()})
                .code,
            cli::kUsage);
}
