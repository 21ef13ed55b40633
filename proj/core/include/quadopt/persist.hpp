#pragma once

// Run artifacts. A run directory holds
//
//   manifest.json      config, oracle, status and best record
//   evaluations.csv    one row per simulated design, in simulation order
//   consistency.csv    one row per loop iteration
//   timing.json        wall-clock seconds (kept apart so logs are reproducible)
//
// Numbers are written with 17 significant digits so they read back exactly.

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quadopt/pqs.hpp"

namespace quadopt {

std::string format_double(double value);
double parse_double(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename.
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Splits one CSV line; fields may be double-quoted.
std::vector<std::string> split_csv_line(std::string_view line);

std::string run_config_to_json(const RunConfig& config);
/// Strict: unknown keys and wrong types throw ConfigError naming the field.
RunConfig run_config_from_json(std::string_view text);

std::string evaluations_header(std::size_t criteria);
std::string evaluation_row(const RunConfig& config, const EvaluationRecord& record);
std::string consistency_header();
std::string consistency_row(const IterationLog& row);

/// Streams a run's artifacts to disk, flushing after every call.
class RunWriter {
 public:
  RunWriter(std::filesystem::path dir, const RunConfig& config, const Oracle& oracle);

  void append_records(std::span<const EvaluationRecord> records);
  void append_iteration(const IterationLog& row);
  void finish(const RunResult& result);

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  void write_manifest(const RunResult* result) const;

  std::filesystem::path dir_;
  RunConfig config_;
  std::string oracle_name_;
  GridDims dims_;
  std::size_t criteria_;
  std::ofstream evaluations_;
  std::ofstream consistency_;
};

struct PersistedRun {
  RunConfig config;
  std::string oracle_name;
  bool complete = false;
  std::vector<EvaluationRecord> records;
  std::vector<IterationLog> log;
};

/// Reads a run directory back. Throws ConsistencyError if the files disagree
/// (seed or method mismatch, malformed rows).
PersistedRun load_run(const std::filesystem::path& dir);

}  // namespace quadopt
