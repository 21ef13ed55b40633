#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "quadopt/persist.hpp"
#include "quadopt/pqs.hpp"

namespace quadopt::testing {

/// A run small enough for unit tests: 80 simulations on synth-hga.
inline RunConfig small_config(const std::string& method, std::uint64_t seed = 1) {
  RunConfig c;
  c.method = method;
  c.oracle = "synth-hga";
  c.budget = 80;
  c.initial_size = 30;
  c.select_size = 10;
  c.seed = seed;
  c.search.max_steps = 1500;
  c.search.refine_steps = 20;
  c.probe_size = 20;
  c.pixel_pool = 300;
  c.baseline.pool = 300;
  c.baseline.population = 20;
  return c;
}

/// Logs as written to consistency.csv; compares NaN taus as equal.
inline std::vector<std::string> log_rows(const std::vector<IterationLog>& log) {
  std::vector<std::string> rows;
  for (const auto& row : log) rows.push_back(consistency_row(row));
  return rows;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() /
              ("quadopt-test-" + name + "-" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace quadopt::testing
