#pragma once

// Consistency-based sample selection: Kendall's tau between two predictors'
// scores on the same candidates, and the tau-weighted split of a simulation
// batch between the predictor's favourites and fresh random designs.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "quadopt/oracle.hpp"
#include "quadopt/predictor.hpp"
#include "quadopt/search.hpp"

namespace quadopt {

struct ConsistencyReport {
  double tau = 0.0;
  std::size_t n = 0;
  double tau_plus = 0.0;  // max(tau, 0)
};

/// tau = (2 / (n (n-1))) * sum_{i<j} sign(prev_i - prev_j) * sign(next_i - next_j)
/// with sign(0) = 0, so tied pairs contribute nothing. Runs in O(n log n)
/// (Knight's merge-sort pair counting). Throws DimensionMismatchError on
/// length mismatch or n < 2, NonFiniteError on NaN/inf scores.
ConsistencyReport kendall_tau(std::span<const double> prev_scores,
                              std::span<const double> next_scores);

struct SelectionPlan {
  std::size_t total = 0;      // R
  std::size_t predictor = 0;  // R_p
  std::size_t random = 0;     // R_r

  /// R_p = floor(clamp(tau, 0, 1) * R + 0.5), R_r = R - R_p.
  static SelectionPlan from_tau(double tau, std::size_t total);
};

/// Draws one fresh random candidate (its score is ignored).
using CandidateSampler = std::function<ScoredLayout(Rng&)>;

/// Picks `plan.predictor` highest-scored unevaluated candidates from `ranked`
/// (ties keep their input order), then `plan.random` fresh unevaluated designs
/// from `sampler`. All picks are distinct and absent from `dataset`; predictor
/// picks come first in the result. Throws PoolExhaustedError when either part
/// cannot be filled (at most `attempts_per_pick` sampler draws per random pick).
std::vector<ScoredLayout> mixed_select(std::span<const ScoredLayout> ranked,
                                       const SelectionPlan& plan,
                                       const CandidateSampler& sampler, Rng& rng,
                                       const Dataset& dataset,
                                       std::size_t attempts_per_pick = 1000);

/// Convenience overload computing the plan from tau and R.
std::vector<ScoredLayout> mixed_select(std::span<const ScoredLayout> ranked, double tau,
                                       std::size_t total, const CandidateSampler& sampler,
                                       Rng& rng, const Dataset& dataset);

/// Mean Kendall tau over all member pairs i < j. Each entry holds one
/// member's scores on the same candidates.
ConsistencyReport mean_pairwise_tau(std::span<const std::vector<double>> member_scores);

/// Consistency estimate before any successive models exist: train a bootstrap
/// ensemble on `records`, score `probe` with every member and return the mean
/// pairwise tau.
ConsistencyReport initial_tau(std::span<const EvaluationRecord> records,
                              const TrainConfig& config, std::span<const DesignMatrix> probe,
                              std::size_t ensemble_size = 5);
ConsistencyReport initial_tau(std::span<const EvaluationRecord> records,
                              const TrainConfig& config, std::span<const DesignMatrix> probe,
                              std::span<const std::uint64_t> member_seeds);

}  // namespace quadopt
