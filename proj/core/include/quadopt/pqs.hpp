#pragma once

// The outer optimization loop: simulate an initial dataset, then repeat
// train -> tree search -> consistency-weighted selection -> simulate until the
// evaluation budget is spent.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "quadopt/oracle.hpp"
#include "quadopt/predictor.hpp"
#include "quadopt/search.hpp"

namespace quadopt {

enum class SelectionMode { kConsistency, kTopKOnly, kRandomOnly };
enum class CandidateSource { kTreeSearch, kPixelPool };

/// Parameters of the non-PQS methods.
struct BaselineConfig {
  std::size_t pool = 20000;  // M: random candidates per surrogate-RS round
  std::size_t top_k = 10;    // K: simulations per round
  std::size_t population = 50;
  std::size_t tournament = 2;
  double crossover = 0.9;
  /// Per-bit flip probability; negative means 1 / (cells per design).
  double mutation = -1.0;
  int generations = 1;  // GA generations between simulation rounds

  void validate() const;
};

struct RunConfig {
  /// pqs | pqs-topk-only | pqs-random-only | pqs-no-qss | rs | surrogate-rs | surrogate-ga
  std::string method = "pqs";
  std::string oracle = "synth-hga";
  double latency_ms = 0.0;
  std::int64_t budget = 1000;       // T_max
  std::int64_t initial_size = 300;  // |D_0|
  std::size_t select_size = 10;     // R
  std::uint64_t seed = 0;
  SearchConfig search;  // leaf_cap and seed are set per iteration
  TrainConfig train;
  CapSchedule cap;
  std::size_t ensemble_size = 5;  // bootstrap members for the first tau
  std::size_t probe_size = 100;   // fixed candidates added to every tau comparison
  std::size_t pixel_pool = 20000;  // candidates per iteration when QSS is off
  BaselineConfig baseline;
  unsigned jobs = 1;  // concurrent simulator calls
  /// Stop after this many loop iterations (simulates an interruption).
  std::optional<int> stop_after;

  void validate() const;
  bool is_pqs_family() const;
  SelectionMode selection_mode() const;
  CandidateSource candidate_source() const;
};

/// Known method ids in a fixed order.
const std::vector<std::string>& method_ids();

struct IterationLog {
  int iteration = 0;
  std::size_t cap = 0;  // leaf cap (0 for methods without one)
  std::size_t n = 0;    // candidates compared for tau
  double tau = 0.0;     // NaN when not computed
  double tau_plus = 0.0;
  std::size_t predictor_picks = 0;
  std::size_t random_picks = 0;
  double best = 0.0;       // best aggregate after this iteration
  std::int64_t used = 0;   // simulations spent after this iteration

  bool operator==(const IterationLog&) const = default;
};

struct RunResult {
  std::string method;
  std::uint64_t seed = 0;
  std::int64_t budget = 0;
  EvaluationRecord best;
  Dataset dataset;
  std::vector<IterationLog> log;
  double wall_seconds = 0.0;
  bool complete = false;
};

/// Runs any method id in `config.method`. With `run_dir`, the manifest,
/// evaluations.csv and consistency.csv are written as the run progresses so
/// it can be resumed. `trainer` overrides the ridge trainer built from
/// `config.train`.
RunResult run_method(const RunConfig& config, const Oracle& oracle,
                     const std::filesystem::path* run_dir = nullptr,
                     const Trainer* trainer = nullptr);

/// The PQS family only (pqs, pqs-topk-only, pqs-random-only, pqs-no-qss).
RunResult run_pqs(const RunConfig& config, const Oracle& oracle,
                  const std::filesystem::path* run_dir = nullptr,
                  const Trainer* trainer = nullptr);

/// Continues a persisted PQS-family run to its budget. Rows of a partially
/// written iteration are discarded and recomputed; a complete run is returned
/// as stored. Throws ConsistencyError on inconsistent files.
RunResult resume_pqs(const std::filesystem::path& run_dir, const Oracle& oracle,
                     const Trainer* trainer = nullptr);

/// Number of loop iterations a PQS run performs: ceil((T_max - |D_0|) / R).
int planned_iterations(const RunConfig& config);

/// Simulates `config.initial_size` distinct designs from random quadtree
/// growth at the first leaf cap (stream "initial"). Shared by every surrogate
/// method so runs with the same seed start from the same data.
std::vector<EvaluationRequest> initial_requests(const RunConfig& config, GridDims dims);

}  // namespace quadopt
