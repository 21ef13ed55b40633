#pragma once

// Experiment protocols built on the library: the masked-pool selection
// efficiency study, the leaf-cap vs. predictor-ranking study, and per-method
// result summaries.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quadopt/oracle.hpp"
#include "quadopt/pqs.hpp"
#include "quadopt/predictor.hpp"

namespace quadopt {

enum class SelectStrategy { kConsistency, kTopK, kRandom };

std::string to_string(SelectStrategy strategy);  // "css", "topk", "random"
SelectStrategy parse_strategy(std::string_view name);

struct SelectionExperimentConfig {
  std::size_t pool = 1000;  // simulated once; half trains, half is masked
  std::size_t batch = 20;   // picks per round
  int repeats = 20;
  std::uint64_t seed = 0;
  TrainConfig train;
  std::size_t ensemble_size = 5;
  /// Pool designs come from random quadtree growth at this leaf cap; 0 draws
  /// uniform pixel designs instead.
  std::size_t pool_cap = 32;
  /// Replaces the measured tau of the consistency strategy.
  std::optional<double> forced_tau;
  std::vector<SelectStrategy> strategies = {SelectStrategy::kConsistency, SelectStrategy::kTopK,
                                            SelectStrategy::kRandom};

  void validate() const;
};

struct SelectionExperimentResult {
  std::vector<SelectStrategy> strategies;
  std::vector<std::vector<int>> rounds;  // [strategy][repeat]
};

/// Each repeat splits the pool at random (shared by all strategies), trains on
/// one half and lets every strategy pick `batch` masked designs per round,
/// unmasking and retraining, until the best masked design is picked. Reports
/// the number of rounds that took.
SelectionExperimentResult selection_efficiency_experiment(
    const Oracle& oracle, const SelectionExperimentConfig& config,
    const Trainer* trainer = nullptr);

/// Expected rounds for uniformly random picks: the optimum's position among
/// `masked` designs is uniform and `batch` are revealed per round.
double expected_random_rounds(std::size_t masked, std::size_t batch);

struct NmaxStudyConfig {
  std::vector<std::size_t> caps = {16, 32, 64};
  std::size_t samples = 1000;
  int trials = 10;
  std::uint64_t seed = 0;
  std::vector<double> lambdas = {0.01, 0.1, 1.0, 10.0, 100.0};
  double train_fraction = 0.6;
  double validation_fraction = 0.2;

  void validate() const;
};

struct NmaxTrial {
  double lambda = 0.0;  // chosen on the validation split
  double tau = 0.0;     // predicted vs. true aggregate on the test split
  std::vector<double> predicted;
  std::vector<double> truth;
};

struct NmaxTauRow {
  std::size_t cap = 0;
  std::vector<NmaxTrial> trials;
  double mean = 0.0;
  double stddev = 0.0;
};

/// For each cap, simulates `samples` distinct designs from random quadtree
/// growth at that cap, then per trial reshuffles them into train, validation
/// and test splits, picks the ridge strength with the best validation tau
/// and records the test tau.
std::vector<NmaxTauRow> nmax_tau_study(const Oracle& oracle, const NmaxStudyConfig& config);

struct MethodSummary {
  std::string method;
  std::size_t runs = 0;
  // median, mean, sample std over runs
  double agg_median = 0, agg_mean = 0, agg_std = 0;
  std::vector<double> criterion_median, criterion_mean, criterion_std;  // of the best design
  double sims_median = 0, sims_mean = 0, sims_std = 0;
};

/// Groups results by method (first-appearance order) and summarizes the best
/// record of each run.
std::vector<MethodSummary> summarize(std::span<const RunResult> results);

}  // namespace quadopt
