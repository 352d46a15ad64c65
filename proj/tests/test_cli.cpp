#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli_runner.hpp"

using testing::cli_run;
using testing::CliResult;

namespace {

std::string kv(const std::string& out, const std::string& key) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  return {};
}

}  // namespace

TEST_CASE("every subcommand is byte-identical across runs") {
  const auto dir = testing::cli_scratch();
  for (const auto& args : testing::determinism_commands(dir)) {
    const CliResult a = cli_run(args);
    const CliResult b = cli_run(args);
    INFO(args);
    CHECK(a.status == 0);
    CHECK(!a.out.empty());
    CHECK(a.out == b.out);
  }
}

TEST_CASE("help for each subcommand") {
  for (const char* s : testing::kSubcommands) {
    const auto r = cli_run(std::string(s) + " --help");
    INFO(s);
    CHECK(r.status == 0);
    CHECK(r.out.find("Usage") != std::string::npos);
  }
  CHECK(cli_run("--version").status == 0);
}

TEST_CASE("exit codes") {
  CHECK(cli_run("").status == 2);
  CHECK(cli_run("no-such-command").status == 2);
  CHECK(cli_run("density --c-ens abc --c-single 1").status == 2);
  CHECK(cli_run("enhance --a 1").status == 2);
  CHECK(cli_run("odmr-fit --in /nonexistent/spectrum.txt").status == 1);
  CHECK(cli_run("enhance --a 1 --b 0").status == 1);
  const auto dir = testing::cli_scratch();
  const auto bad = (dir / "bad.txt").string();
  std::ofstream(bad) << "# decay v1 kind=fid\n0 1\n0.1 zz\n";
  CHECK(cli_run("decay-fit --in " + bad).status == 1);
  const auto ini = (dir / "bad.ini").string();
  std::ofstream(ini) << "[enhance]\nq = 1\n";
  CHECK(cli_run("enhance --a 2 --b 1 --config " + ini).status == 2);
}

TEST_CASE("reference outputs") {
  auto r = cli_run("sensitivity --preset single --format kv");
  REQUIRE(r.status == 0);
  CHECK(std::stod(kv(r.out, "eta_dc")) == doctest::Approx(174.9).epsilon(0.01));
  CHECK(std::stod(kv(r.out, "eta_ac")) == doctest::Approx(10.4).epsilon(0.01));

  r = cli_run("odmr-sim --b 0,0,0 --nuclei none --format kv");
  REQUIRE(r.status == 0);
  CHECK(std::stod(kv(r.out, "line.0.center")) == doctest::Approx(2870.0).epsilon(1e-9));
  CHECK(std::stod(kv(r.out, "line.1.center")) == doctest::Approx(2870.0).epsilon(1e-9));

  r = cli_run("density --c-ens 9.28e6 --c-single 7.7e3 --format kv");
  REQUIRE(r.status == 0);
  CHECK(std::stod(kv(r.out, "gaussian.ppb")) == doctest::Approx(14.0).epsilon(0.03));

  const auto dir = testing::cli_scratch();
  const auto ini = (dir / "good.ini").string();
  std::ofstream(ini) << "[enhance]\na = 10\nb = 2\n";
  r = cli_run("enhance --config " + ini + " --format kv");
  REQUIRE(r.status == 0);
  CHECK(std::stod(kv(r.out, "ratio")) == doctest::Approx(5.0));
  r = cli_run("enhance --config " + ini + " --b 5 --format kv");
  CHECK(std::stod(kv(r.out, "ratio")) == doctest::Approx(2.0));
}

TEST_CASE("scratch cleanup") { std::filesystem::remove_all(testing::cli_scratch()); }
