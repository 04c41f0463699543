#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "pdml/matrix.hpp"
#include "pdml/rng.hpp"

namespace pdml::test {

inline std::filesystem::path make_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("pdml_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

#ifdef PDML_CLI_PATH
inline CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(PDML_CLI_PATH) + " " + args + " 2>&1";
  CliResult result;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return result;
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), pipe)) result.output += buf;
  const int status = ::pclose(pipe);
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  return result;
}
#endif

inline void fill_uniform(Matrix& m, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : m.data) v = dist(rng);
}

inline std::vector<double> random_vector(std::size_t dim, Rng& rng, double lo,
                                         double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(dim);
  for (double& x : v) x = dist(rng);
  return v;
}

/** Central finite difference of f() w.r.t. one scalar slot, restoring it. */
template <typename F>
double central_diff(F&& f, double& slot, double h = 1e-5) {
  const double orig = slot;
  slot = orig + h;
  const double up = f();
  slot = orig - h;
  const double down = f();
  slot = orig;
  return (up - down) / (2.0 * h);
}

/** Relative gradient error with the unit floor used throughout the checks. */
inline double grad_rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max(1.0, std::abs(analytic));
}

}  // namespace pdml::test
