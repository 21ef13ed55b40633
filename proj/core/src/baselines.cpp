#include "quadopt/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "quadopt/errors.hpp"
#include "quadopt/persist.hpp"
#include "quadopt/sampling.hpp"

namespace quadopt {

namespace {

using Clock = std::chrono::steady_clock;

struct Run {
  const RunConfig& config;
  const Oracle& oracle;
  BudgetLedger ledger;
  Dataset dataset;
  std::vector<IterationLog> log;
  std::unique_ptr<RunWriter> writer;
  Clock::time_point start = Clock::now();

  Run(const RunConfig& c, const Oracle& o, const std::filesystem::path* dir)
      : config(c), oracle(o), ledger(c.budget) {
    config.validate();
    if (dir) writer = std::make_unique<RunWriter>(*dir, config, oracle);
  }

  void simulate(std::span<const EvaluationRequest> requests, int iteration) {
    const std::size_t before = dataset.size();
    evaluate_batch(oracle, requests, ledger, dataset, iteration, config.jobs);
    if (writer) writer->append_records(dataset.records().subspan(before));
  }

  void log_row(int iteration, std::size_t picks) {
    IterationLog row;
    row.iteration = iteration;
    row.tau = std::numeric_limits<double>::quiet_NaN();
    row.tau_plus = row.tau;
    row.predictor_picks = picks;
    row.best = dataset.best().aggregate;
    row.used = ledger.used();
    log.push_back(row);
    if (writer) writer->append_iteration(row);
  }

  RunResult finish(bool complete) {
    RunResult result;
    result.method = config.method;
    result.seed = config.seed;
    result.budget = config.budget;
    result.best = dataset.best();
    result.dataset = std::move(dataset);
    result.log = std::move(log);
    result.complete = complete;
    result.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (writer) writer->finish(result);
    return result;
  }
};

std::size_t round_size(const Run& run, std::size_t want) {
  return static_cast<std::size_t>(
      std::min<std::int64_t>(static_cast<std::int64_t>(want), run.ledger.remaining()));
}

GaParams ga_params(const RunConfig& config) {
  GaParams p;
  p.tournament = config.baseline.tournament;
  p.crossover = config.baseline.crossover;
  p.mutation = config.baseline.mutation;
  return p;
}

}  // namespace

RunResult random_search(const RunConfig& config, const Oracle& oracle,
                        const std::filesystem::path* run_dir) {
  Run run(config, oracle, run_dir);
  const GridDims dims = oracle.dims();
  Rng rng = make_rng(config.seed, "rs");
  std::int64_t drawn = 0;
  int t = -1;
  while (drawn < config.budget) {
    const std::int64_t want = t < 0 ? config.initial_size : static_cast<std::int64_t>(config.select_size);
    const std::int64_t n = std::min(want, config.budget - drawn);
    std::vector<EvaluationRequest> batch;
    for (std::int64_t i = 0; i < n; ++i) batch.push_back({sample_pixel_uniform(dims, rng), ""});
    drawn += n;
    run.simulate(batch, t);
    if (t >= 0) run.log_row(t, 0);
    ++t;
  }
  return run.finish(true);
}

RunResult surrogate_rs(const RunConfig& config, const Oracle& oracle,
                       const std::filesystem::path* run_dir, const Trainer* trainer) {
  Run run(config, oracle, run_dir);
  const RidgeTrainer ridge(config.train);
  const Trainer& fit = trainer ? *trainer : ridge;
  const GridDims dims = oracle.dims();
  run.simulate(initial_requests(config, dims), -1);

  std::vector<std::uint8_t> zeros(static_cast<std::size_t>(dims.layers), 0);
  const LayoutStack placeholder = LayoutStack::root_only(dims, zeros);
  for (int t = 0; run.ledger.remaining() > 0; ++t) {
    const auto theta =
        fit.train(run.dataset, derive_seed(config.seed, "train", static_cast<std::uint64_t>(t)));
    Rng rng = make_rng(config.seed, "surrogate-rs-pool", static_cast<std::uint64_t>(t));
    TopKList top(round_size(run, config.baseline.top_k));
    for (std::size_t i = 0; i < config.baseline.pool; ++i) {
      DesignMatrix d = sample_pixel_uniform(dims, rng);
      const double score = theta->predict_aggregate(d);
      if (top.admits(score) && !run.dataset.contains(d)) top.offer({placeholder, std::move(d), score});
    }
    if (top.empty()) return run.finish(false);
    std::vector<EvaluationRequest> batch;
    for (const auto& e : top.entries()) batch.push_back({e.design, ""});
    run.simulate(batch, t);
    run.log_row(t, batch.size());
  }
  return run.finish(true);
}

RunResult surrogate_ga(const RunConfig& config, const Oracle& oracle,
                       const std::filesystem::path* run_dir, const Trainer* trainer) {
  Run run(config, oracle, run_dir);
  const RidgeTrainer ridge(config.train);
  const Trainer& fit = trainer ? *trainer : ridge;
  const GridDims dims = oracle.dims();
  run.simulate(initial_requests(config, dims), -1);

  // Seed population: best initial designs by true aggregate.
  std::vector<const EvaluationRecord*> ranked;
  for (const auto& r : run.dataset) ranked.push_back(&r);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto* a, const auto* b) { return a->aggregate > b->aggregate; });
  std::vector<DesignMatrix> population;
  Rng rng = make_rng(config.seed, "surrogate-ga");
  for (std::size_t i = 0; i < config.baseline.population; ++i) {
    population.push_back(i < ranked.size() ? ranked[i]->design : sample_pixel_uniform(dims, rng));
  }

  const GaParams params = ga_params(config);
  std::vector<std::uint8_t> zeros(static_cast<std::size_t>(dims.layers), 0);
  const LayoutStack placeholder = LayoutStack::root_only(dims, zeros);
  for (int t = 0; run.ledger.remaining() > 0; ++t) {
    const auto theta =
        fit.train(run.dataset, derive_seed(config.seed, "train", static_cast<std::uint64_t>(t)));
    TopKList top(round_size(run, config.baseline.top_k));
    std::vector<double> fitness(population.size());
    for (int g = 0; g < config.baseline.generations; ++g) {
      for (std::size_t i = 0; i < population.size(); ++i) {
        fitness[i] = theta->predict_aggregate(population[i]);
      }
      population = ga_generation(population, fitness, params, rng);
      for (const auto& d : population) {
        const double score = theta->predict_aggregate(d);
        if (top.admits(score) && !run.dataset.contains(d)) top.offer({placeholder, d, score});
      }
    }
    if (top.empty()) return run.finish(false);
    std::vector<EvaluationRequest> batch;
    for (const auto& e : top.entries()) batch.push_back({e.design, ""});
    run.simulate(batch, t);
    run.log_row(t, batch.size());
  }
  return run.finish(true);
}

std::vector<DesignMatrix> ga_generation(std::span<const DesignMatrix> population,
                                        std::span<const double> fitness,
                                        const GaParams& params, Rng& rng) {
  if (population.size() < 2) throw ConfigError("GA population must be >= 2");
  if (fitness.size() != population.size()) {
    throw DimensionMismatchError("one fitness value per individual");
  }
  const std::size_t n = population.size();
  const std::size_t genome = population.front().cells().size();
  const double flip = params.mutation < 0 ? 1.0 / static_cast<double>(genome) : params.mutation;
  std::bernoulli_distribution mutate(flip);
  std::bernoulli_distribution cross(params.crossover);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });

  auto tournament = [&]() {
    std::size_t best = uniform_index(rng, n);
    for (std::size_t k = 1; k < params.tournament; ++k) {
      const std::size_t c = uniform_index(rng, n);
      if (fitness[c] > fitness[best]) best = c;
    }
    return best;
  };

  std::vector<DesignMatrix> next;
  next.reserve(n);
  for (std::size_t e = 0; e < std::min(params.elitism, n); ++e) next.push_back(population[order[e]]);
  while (next.size() < n) {
    const DesignMatrix& a = population[tournament()];
    const DesignMatrix& b = population[tournament()];
    DesignMatrix child = a;
    auto cells = child.mutable_cells();
    if (cross(rng)) {
      const auto other = b.cells();
      for (std::size_t i = 0; i < genome; ++i) {
        if (coin(rng)) cells[i] = other[i];
      }
    }
    if (flip > 0) {
      for (auto& c : cells) {
        if (mutate(rng)) c ^= 1;
      }
    }
    next.push_back(std::move(child));
  }
  return next;
}

GaOutcome ga_evolve(std::vector<DesignMatrix> population,
                    const std::function<double(const DesignMatrix&)>& fitness,
                    const GaParams& params, int generations, Rng& rng) {
  GaOutcome out;
  out.best_fitness = -std::numeric_limits<double>::infinity();
  std::vector<double> f(population.size());
  for (int g = 0;; ++g) {
    for (std::size_t i = 0; i < population.size(); ++i) {
      f[i] = fitness(population[i]);
      if (f[i] > out.best_fitness) {
        out.best_fitness = f[i];
        out.best = population[i];
      }
    }
    if (g == generations) break;
    population = ga_generation(population, f, params, rng);
  }
  return out;
}

RunResult run_method(const RunConfig& config, const Oracle& oracle,
                     const std::filesystem::path* run_dir, const Trainer* trainer) {
  config.validate();
  if (config.is_pqs_family()) return run_pqs(config, oracle, run_dir, trainer);
  if (config.method == "rs") return random_search(config, oracle, run_dir);
  if (config.method == "surrogate-rs") return surrogate_rs(config, oracle, run_dir, trainer);
  return surrogate_ga(config, oracle, run_dir, trainer);
}

}  // namespace quadopt
