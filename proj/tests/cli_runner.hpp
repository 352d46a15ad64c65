#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#ifndef NVKIT_CLI_PATH
#error NVKIT_CLI_PATH must point at the CLI executable
#endif

namespace testing {

struct CliResult {
  int status = -1;
  std::string out;
};

inline const char* const kSubcommands[] = {"odmr-sim", "odmr-fit",  "seq-sim", "decay-fit",
                                           "freq-extract", "g2-fit", "sat-fit", "density",
                                           "enhance", "sensitivity", "map-slice"};

inline std::filesystem::path cli_scratch() {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("nvkit_cli_" + std::to_string(static_cast<long>(::getpid())));
  std::filesystem::create_directories(dir);
  return dir;
}

// stdout only; stderr is discarded.
inline CliResult cli_run(const std::string& args) {
  const auto out = cli_scratch() / "stdout.txt";
  const std::string cmd = std::string("\"") + NVKIT_CLI_PATH + "\" " + args + " > \"" +
                          out.string() + "\" 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(out, std::ios::binary);
  r.out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return r;
}

// 2D map with a Gaussian spot of FWHM 0.45 at x = -0.2.
inline std::string write_spot_map(const std::filesystem::path& dir) {
  const auto path = (dir / "spot.txt").string();
  std::ofstream f(path);
  f << "# plmap v1 dims=2 power_mW=0.3\n";
  for (const char* name : {"x", "y"}) {
    f << "# axis " << name << ": 41";
    for (int i = 0; i < 41; ++i) f << " " << -1 + 0.05 * i;
    f << "\n";
  }
  for (int i = 0; i < 41; ++i) {
    const double x = -1 + 0.05 * i;
    for (int j = 0; j < 41; ++j) {
      const double y = -1 + 0.05 * j;
      const double r2 = (x + 0.2) * (x + 0.2) + y * y;
      f << (j ? " " : "") << 100 + 7700 * std::exp(-4 * std::log(2.0) * r2 / (0.45 * 0.45));
    }
    f << "\n";
  }
  return path;
}

// Inputs are produced by the CLI itself, then every subcommand is listed once.
inline std::vector<std::string> determinism_commands(const std::filesystem::path& dir) {
  const auto p = [&](const char* n) { return "\"" + (dir / n).string() + "\""; };
  const auto spec = p("spec.txt"), fid = p("fid.txt"), g2 = p("g2.txt"), sat = p("sat.txt");
  cli_run("odmr-sim --ensemble --b 0,0,0 --nuclei none --xi 2.5 --delta 4.1 --f-start 2820 "
          "--f-stop 2925 --f-step 0.5 --noise gaussian --noise-sigma 0.005 --seed 4 --out " + spec);
  cli_run("seq-sim --curve fid --t-stop 6 --t-step 0.01 --noise-sigma 0.01 --seed 3 --out " + fid);
  cli_run("g2-fit --synthetic --seed 2 --out " + g2);
  {
    std::ofstream f((dir / "sat.txt").string());
    f << "0.1 3000\n0.3 7700\n0.6 12500\n1.1 17900\n2.0 23200\n4.0 28300\n";
  }
  const std::string map = "\"" + write_spot_map(dir) + "\"";
  return {
      "odmr-sim --ensemble --xi 2.5 --delta 4.1 --noise gaussian --noise-sigma 0.005 --seed 9",
      "odmr-fit --in " + spec + " --n-dips 2",
      "seq-sim --curve rabi --t-stop 2 --t-step 0.01 --noise-sigma 0.01 --seed 5",
      "seq-sim --sequence \"laser:1;pulse:2868,5,0,0.1;wait:0.5;readout:0.3\"",
      "decay-fit --in " + fid + " --model osc",
      "freq-extract --in " + fid + " --max 3",
      "g2-fit --in " + g2,
      "g2-fit --synthetic --seed 7",
      "sat-fit --in " + sat,
      "density --c-ens 14.46e6 --c-single 7.7e3 --method both",
      "enhance --a 1.449e7 --b 16.1e3",
      "sensitivity --preset ensemble",
      "map-slice --in " + map + " --axis x",
  };
}

}  // namespace testing
