#pragma once

// Comparison optimizers on the same oracle, predictor and budget plumbing as
// the PQS loop. All of them log through RunWriter in the same formats.

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "quadopt/pqs.hpp"

namespace quadopt {

/// Draws `config.budget` uniform pixel designs (with replacement; repeated
/// designs are cache hits and cost nothing) and keeps the best. The first
/// `initial_size` draws are logged as iteration -1, the rest in batches of
/// `select_size`. Stream: "rs".
RunResult random_search(const RunConfig& config, const Oracle& oracle,
                        const std::filesystem::path* run_dir = nullptr);

/// Starts from the shared initial dataset; each round trains the predictor,
/// scores `baseline.pool` fresh pixel designs (stream "surrogate-rs-pool",
/// index = round) and simulates the `baseline.top_k` best unevaluated ones.
RunResult surrogate_rs(const RunConfig& config, const Oracle& oracle,
                       const std::filesystem::path* run_dir = nullptr,
                       const Trainer* trainer = nullptr);

/// Starts from the shared initial dataset; the population is seeded with its
/// best designs. Each round trains the predictor, evolves
/// `baseline.generations` generations with the predicted aggregate as fitness
/// and simulates the `baseline.top_k` best unevaluated offspring.
RunResult surrogate_ga(const RunConfig& config, const Oracle& oracle,
                       const std::filesystem::path* run_dir = nullptr,
                       const Trainer* trainer = nullptr);

struct GaParams {
  std::size_t tournament = 2;
  double crossover = 0.9;
  double mutation = -1.0;  // negative: 1 / genome length
  std::size_t elitism = 1;
};

/// One generation of the same size as `population`: the `elitism` fittest
/// parents are copied unchanged, the rest are children of two tournament
/// winners (uniform crossover with probability `crossover`, else a copy of
/// the first parent) followed by per-bit flips.
std::vector<DesignMatrix> ga_generation(std::span<const DesignMatrix> population,
                                        std::span<const double> fitness,
                                        const GaParams& params, Rng& rng);

struct GaOutcome {
  DesignMatrix best;
  double best_fitness = 0.0;
};

/// Plain GA for `generations` generations; returns the fittest genome seen.
GaOutcome ga_evolve(std::vector<DesignMatrix> population,
                    const std::function<double(const DesignMatrix&)>& fitness,
                    const GaParams& params, int generations, Rng& rng);

}  // namespace quadopt
