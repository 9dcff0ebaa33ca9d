#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

#include "concent/metrics.hpp"
#include "concent/simulators.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace concent;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() /
                       ("concent_cli_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "_stdout.txt";
  const fs::path err = dir / "_stderr.txt";
  const std::string cmd = std::string(CONCENT_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

std::string to_csv(const MatrixX<double>& m) {
  std::string body;
  char buf[40];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      body += buf;
      body += j + 1 < m.cols() ? "," : "\n";
    }
  }
  return body;
}

// data rows of a CSV body, skipping '#' comments and the header line
std::vector<std::string> data_rows(const std::string& body) {
  std::vector<std::string> rows;
  std::istringstream in(body);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    rows.push_back(line);
  }
  return rows;
}

}  // namespace

TEST_CASE("recover on a zero matrix yields a zero recovery") {
  const fs::path dir = fresh_dir("zero");
  write_file(dir / "zero.csv", "0,0,0\n0,0,0\n0,0,0\n0,0,0\n");
  const CliResult r = run_cli(
      "recover " + (dir / "zero.csv").string() + " --output-dir " +
          (dir / "out").string(),
      dir);
  CHECK(r.exit_code == 0);
  const auto json = nlohmann::json::parse(slurp(dir / "out" / "recover.json"));
  for (const auto& v : json.at("recovered")) CHECK(v.get<double>() == 0.0);
  CHECK(json.at("manifest").at("subcommand") == "recover");
  CHECK(json.at("iterates").size() == 10);
}

TEST_CASE("recover round-trips a synthesized linear spectrum") {
  const fs::path dir = fresh_dir("roundtrip");
  const Index n = 60, p = 60;
  const Spectrum truth = generate_spectrum(LinearShape{0.0, 10.0}, p);
  RngStream rng(8, 0);
  write_file(dir / "data.csv", to_csv(synthesize_data(truth, n, rng)));

  const CliResult r = run_cli(
      "recover " + (dir / "data.csv").string() + " --seed 5 --curves "
          "--output-dir " + (dir / "out").string(),
      dir);
  REQUIRE(r.exit_code == 0);
  const auto json = nlohmann::json::parse(slurp(dir / "out" / "recover.json"));

  VectorX<double> sample(p), recovered(p);
  for (Index j = 0; j < p; ++j) {
    sample(j) = json.at("sample_spectrum").at(j).get<double>();
    recovered(j) = json.at("recovered").at(j).get<double>();
  }
  const double err_sample =
      *spectrum_error(validate_spectrum(sample), truth).rel_l2;
  const double err_concent =
      *spectrum_error(validate_spectrum(recovered), truth).rel_l2;
  CHECK(err_concent < err_sample);

  const auto curves = data_rows(slurp(dir / "out" / "recover_curves.csv"));
  CHECK(curves.size() == static_cast<std::size_t>(p));
}

TEST_CASE("recover supports a header row") {
  const fs::path dir = fresh_dir("header");
  write_file(dir / "h.csv", "a,b\r\n1,0\r\n0,1\r\n");
  const CliResult r = run_cli(
      "recover " + (dir / "h.csv").string() + " --header --output-dir " +
          (dir / "out").string(),
      dir);
  CHECK(r.exit_code == 0);
  const auto json = nlohmann::json::parse(slurp(dir / "out" / "recover.json"));
  CHECK(json.at("manifest").at("config").at("n") == 2);
  CHECK(json.at("manifest").at("config").at("p") == 2);
}

TEST_CASE("ragged and non-numeric CSVs exit with code 2 naming the row") {
  const fs::path dir = fresh_dir("badcsv");
  write_file(dir / "ragged.csv", "1,2\n3\n4,5\n");
  CliResult r = run_cli("recover " + (dir / "ragged.csv").string(), dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("row 2") != std::string::npos);

  write_file(dir / "nonnum.csv", "1,2\n3,frog\n");
  r = run_cli("recover " + (dir / "nonnum.csv").string(), dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("row 2") != std::string::npos);
  CHECK(r.err.find("frog") != std::string::npos);

  write_file(dir / "empty.csv", "");
  r = run_cli("recover " + (dir / "empty.csv").string(), dir);
  CHECK(r.exit_code == 2);

  write_file(dir / "onlyheader.csv", "a,b\n");
  r = run_cli("recover " + (dir / "onlyheader.csv").string() + " --header", dir);
  CHECK(r.exit_code == 2);

  r = run_cli("recover " + (dir / "missing.csv").string(), dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("bad flags and shapes exit with code 2") {
  const fs::path dir = fresh_dir("badflags");
  CliResult r = run_cli("recover", dir);
  CHECK(r.exit_code == 2);
  r = run_cli("simulate --shape bogus:1 --n 10 --p 4", dir);
  CHECK(r.exit_code == 2);
  r = run_cli("simulate --shape step:2x0.4,1x0.4 --n 10 --p 4 --output-dir " +
                  (dir / "o").string(),
              dir);
  CHECK(r.exit_code == 2);  // fractions must sum to 1
  r = run_cli("frobnicate", dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("simulate emits one summary row per seed plus curves") {
  const fs::path dir = fresh_dir("simulate");
  const CliResult r = run_cli(
      "simulate --shape linear:0,10 --n 30 --p 10 --seeds 3 --loops 3 "
      "--avg-k 3 --output-dir " + (dir / "out").string(),
      dir);
  REQUIRE(r.exit_code == 0);
  const auto rows = data_rows(slurp(dir / "out" / "simulate_summary.csv"));
  CHECK(rows.size() == 3);
  for (int s = 0; s < 3; ++s) {
    const fs::path curves =
        dir / "out" / ("simulate_curves_seed" + std::to_string(s) + ".csv");
    CHECK(fs::exists(curves));
    CHECK(data_rows(slurp(curves)).size() == 10);
  }
}

TEST_CASE("simulate recovers a constant spectrum at large n") {
  const fs::path dir = fresh_dir("simbig");
  const CliResult r = run_cli(
      "simulate --shape constant:1 --n 10000 --p 5 --output-dir " +
          (dir / "out").string(),
      dir);
  REQUIRE(r.exit_code == 0);
  const auto rows = data_rows(slurp(dir / "out" / "simulate_summary.csv"));
  REQUIRE(rows.size() == 1);
  const auto last_comma = rows[0].rfind(',');
  const double err_concent = std::strtod(rows[0].c_str() + last_comma + 1, nullptr);
  CHECK(err_concent < 0.1);
}

TEST_CASE("concentration writes per-index stats and per-rep deviations") {
  const fs::path dir = fresh_dir("conc");
  const CliResult r = run_cli(
      "concentration --shape constant:1 --n 40 --p 17 --reps 8 --output-dir " +
          (dir / "out").string(),
      dir);
  REQUIRE(r.exit_code == 0);
  const std::string stats = slurp(dir / "out" / "concentration_stats.csv");
  const auto srows = data_rows(stats);
  CHECK(srows.size() == 17);
  CHECK(stats.find("index,mean,std,mp_density") != std::string::npos);
  const auto drows = data_rows(slurp(dir / "out" / "concentration_deviation.csv"));
  CHECK(drows.size() == 8);
}

TEST_CASE("concentration of the zero spectrum reports zero stats") {
  const fs::path dir = fresh_dir("conczero");
  const CliResult r = run_cli(
      "concentration --shape constant:0 --n 20 --p 4 --reps 5 --output-dir " +
          (dir / "out").string(),
      dir);
  REQUIRE(r.exit_code == 0);
  for (const auto& row : data_rows(slurp(dir / "out" / "concentration_stats.csv"))) {
    double idx, mean, stddev;
    CHECK(std::sscanf(row.c_str(), "%lf,%lf,%lf", &idx, &mean, &stddev) == 3);
    CHECK(mean == 0.0);
    CHECK(stddev == 0.0);
  }
}
