#include "quadopt/experiments.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_set>

#include "quadopt/errors.hpp"
#include "quadopt/sampling.hpp"
#include "quadopt/selection.hpp"
#include "quadopt/stats.hpp"

namespace quadopt {

std::string to_string(SelectStrategy strategy) {
  switch (strategy) {
    case SelectStrategy::kConsistency: return "css";
    case SelectStrategy::kTopK: return "topk";
    case SelectStrategy::kRandom: return "random";
  }
  return "unknown";
}

SelectStrategy parse_strategy(std::string_view name) {
  if (name == "css") return SelectStrategy::kConsistency;
  if (name == "topk") return SelectStrategy::kTopK;
  if (name == "random") return SelectStrategy::kRandom;
  throw ConfigError("strategies: unknown strategy '" + std::string(name) + "'");
}

void SelectionExperimentConfig::validate() const {
  if (pool < 4 || pool % 2 != 0) throw ConfigError("pool must be even and >= 4");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (ensemble_size < 2) throw ConfigError("ensemble_size must be >= 2");
  if (strategies.empty()) throw ConfigError("strategies must not be empty");
  train.validate();
}

double expected_random_rounds(std::size_t masked, std::size_t batch) {
  double sum = 0.0;
  for (std::size_t pos = 0; pos < masked; ++pos) sum += static_cast<double>(pos / batch + 1);
  return sum / static_cast<double>(masked);
}

namespace {

std::vector<EvaluationRecord> simulate_distinct(const Oracle& oracle, std::size_t count,
                                                std::size_t cap, Rng& rng) {
  const GridDims dims = oracle.dims();
  const std::size_t leaf_cap = std::max(cap, static_cast<std::size_t>(dims.layers));
  std::vector<EvaluationRecord> out;
  std::unordered_set<DesignMatrix, DesignHash> seen;
  for (std::size_t attempt = 0; out.size() < count; ++attempt) {
    if (attempt > 1000 * count) {
      throw PoolExhaustedError("could not draw " + std::to_string(count) + " distinct designs");
    }
    DesignMatrix d = cap == 0 ? sample_pixel_uniform(dims, rng)
                              : reconstruct(sample_tree_growth(dims, leaf_cap, rng));
    if (!seen.insert(d).second) continue;
    EvaluationRecord r;
    r.criteria = oracle.criteria(d);
    r.aggregate = aggregate_objective(r.criteria);
    r.design = std::move(d);
    r.sequence = static_cast<std::int64_t>(out.size()) + 1;
    out.push_back(std::move(r));
  }
  return out;
}

Dataset to_dataset(const std::vector<EvaluationRecord>& records,
                   const std::vector<std::size_t>& idx) {
  Dataset d;
  for (std::size_t i : idx) d.append(records[i]);
  return d;
}

int rounds_to_optimum(SelectStrategy strategy, const SelectionExperimentConfig& config,
                      const Trainer& trainer, const std::vector<EvaluationRecord>& pool,
                      std::vector<std::size_t> known, std::vector<std::size_t> masked,
                      std::size_t optimum, int repeat) {
  Rng rng = make_rng(config.seed, "select-exp-" + to_string(strategy),
                     static_cast<std::uint64_t>(repeat));
  const std::uint64_t train_seed = derive_seed(config.seed, "select-exp-train",
                                               static_cast<std::uint64_t>(repeat));
  auto model = trainer.train(to_dataset(pool, known), train_seed);
  std::shared_ptr<const Predictor> previous;

  for (int round = 1;; ++round) {
    const std::size_t take = std::min(config.batch, masked.size());
    std::vector<double> scores(masked.size());
    for (std::size_t i = 0; i < masked.size(); ++i) {
      scores[i] = model->predict_aggregate(pool[masked[i]].design);
    }
    std::vector<std::size_t> order(masked.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::size_t exploit = 0;
    if (strategy == SelectStrategy::kTopK) exploit = take;
    if (strategy == SelectStrategy::kConsistency) {
      double tau = 0.0;
      if (config.forced_tau) {
        tau = *config.forced_tau;
      } else if (!previous) {
        std::vector<EvaluationRecord> records;
        for (std::size_t i : known) records.push_back(pool[i]);
        std::vector<DesignMatrix> probe;
        for (std::size_t i : masked) probe.push_back(pool[i].design);
        TrainConfig cfg = config.train;
        cfg.seed = derive_seed(config.seed, "select-exp-ensemble",
                               static_cast<std::uint64_t>(repeat));
        tau = masked.size() >= 2 ? initial_tau(records, cfg, probe, config.ensemble_size).tau : 1.0;
      } else if (masked.size() >= 2) {
        std::vector<double> prev(masked.size());
        for (std::size_t i = 0; i < masked.size(); ++i) {
          prev[i] = previous->predict_aggregate(pool[masked[i]].design);
        }
        tau = kendall_tau(prev, scores).tau;
      }
      exploit = SelectionPlan::from_tau(tau, take).predictor;
    }

    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<long>(exploit));
    std::vector<std::size_t> rest(order.begin() + static_cast<long>(exploit), order.end());
    for (std::size_t k = exploit; k < take; ++k) {
      const std::size_t j = k - exploit + uniform_index(rng, rest.size() - (k - exploit));
      std::swap(rest[k - exploit], rest[j]);
      chosen.push_back(rest[k - exploit]);
    }

    std::vector<bool> picked(masked.size(), false);
    for (std::size_t c : chosen) {
      if (masked[c] == optimum) return round;
      picked[c] = true;
    }
    std::vector<std::size_t> still;
    for (std::size_t i = 0; i < masked.size(); ++i) {
      (picked[i] ? known : still).push_back(masked[i]);
    }
    masked = std::move(still);
    previous = model;
    model = trainer.train(to_dataset(pool, known), train_seed);
  }
}

}  // namespace

SelectionExperimentResult selection_efficiency_experiment(
    const Oracle& oracle, const SelectionExperimentConfig& config, const Trainer* trainer) {
  config.validate();
  const RidgeTrainer ridge(config.train);
  const Trainer& fit = trainer ? *trainer : ridge;

  Rng pool_rng = make_rng(config.seed, "select-exp-pool");
  const auto pool = simulate_distinct(oracle, config.pool, config.pool_cap, pool_rng);

  SelectionExperimentResult result;
  result.strategies = config.strategies;
  result.rounds.assign(config.strategies.size(), {});
  for (int r = 0; r < config.repeats; ++r) {
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng split = make_rng(config.seed, "select-exp-split", static_cast<std::uint64_t>(r));
    std::shuffle(idx.begin(), idx.end(), split);
    const std::size_t half = pool.size() / 2;
    const std::vector<std::size_t> known(idx.begin(), idx.begin() + static_cast<long>(half));
    const std::vector<std::size_t> masked(idx.begin() + static_cast<long>(half), idx.end());
    std::size_t optimum = masked.front();
    for (std::size_t i : masked) {
      if (pool[i].aggregate > pool[optimum].aggregate) optimum = i;
    }
    for (std::size_t s = 0; s < config.strategies.size(); ++s) {
      result.rounds[s].push_back(
          rounds_to_optimum(config.strategies[s], config, fit, pool, known, masked, optimum, r));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Leaf-cap study

void NmaxStudyConfig::validate() const {
  if (caps.empty()) throw ConfigError("caps must not be empty");
  if (samples < 10) throw ConfigError("samples must be >= 10");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (lambdas.empty()) throw ConfigError("lambdas must not be empty");
  if (!(train_fraction > 0 && validation_fraction > 0 &&
        train_fraction + validation_fraction < 1)) {
    throw ConfigError("train and validation fractions must be positive and sum below 1");
  }
}

namespace {

double ranking_tau(const RidgePredictor& model, const std::vector<EvaluationRecord>& records,
                   std::span<const std::size_t> idx, std::vector<double>* predicted,
                   std::vector<double>* truth) {
  std::vector<double> p, t;
  for (std::size_t i : idx) {
    p.push_back(model.predict_aggregate(records[i].design));
    t.push_back(records[i].aggregate);
  }
  const double tau = kendall_tau(p, t).tau;
  if (predicted) *predicted = std::move(p);
  if (truth) *truth = std::move(t);
  return tau;
}

}  // namespace

std::vector<NmaxTauRow> nmax_tau_study(const Oracle& oracle, const NmaxStudyConfig& config) {
  config.validate();
  std::vector<NmaxTauRow> rows;
  for (std::size_t cap : config.caps) {
    Rng rng = make_rng(config.seed, "nmax-samples", cap);
    const auto records = simulate_distinct(oracle, config.samples, cap, rng);
    const auto n_train = static_cast<std::size_t>(config.train_fraction * records.size());
    const auto n_val = static_cast<std::size_t>(config.validation_fraction * records.size());

    NmaxTauRow row;
    row.cap = cap;
    std::vector<double> taus;
    for (int trial = 0; trial < config.trials; ++trial) {
      std::vector<std::size_t> idx(records.size());
      std::iota(idx.begin(), idx.end(), 0);
      Rng split = make_rng(config.seed, "nmax-split-" + std::to_string(cap),
                           static_cast<std::uint64_t>(trial));
      std::shuffle(idx.begin(), idx.end(), split);
      const std::span<const std::size_t> all(idx);
      const auto train_idx = all.first(n_train);
      const auto val_idx = all.subspan(n_train, n_val);
      const auto test_idx = all.subspan(n_train + n_val);

      std::vector<EvaluationRecord> train;
      for (std::size_t i : train_idx) train.push_back(records[i]);

      NmaxTrial best;
      double best_val = -2.0;
      for (double lambda : config.lambdas) {
        TrainConfig cfg;
        cfg.lambda = lambda;
        const RidgePredictor model = train_ridge(train, cfg);
        const double val = ranking_tau(model, records, val_idx, nullptr, nullptr);
        if (val > best_val) {
          best_val = val;
          best.lambda = lambda;
          best.tau = ranking_tau(model, records, test_idx, &best.predicted, &best.truth);
        }
      }
      taus.push_back(best.tau);
      row.trials.push_back(std::move(best));
    }
    row.mean = mean(taus);
    row.stddev = stddev(taus);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Summaries

std::vector<MethodSummary> summarize(std::span<const RunResult> results) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunResult*>> groups;
  for (const auto& r : results) {
    if (!groups.contains(r.method)) order.push_back(r.method);
    groups[r.method].push_back(&r);
  }
  std::vector<MethodSummary> out;
  for (const auto& method : order) {
    const auto& runs = groups[method];
    MethodSummary s;
    s.method = method;
    s.runs = runs.size();
    std::vector<double> agg, sims;
    const std::size_t k = runs.front()->best.criteria.size();
    std::vector<std::vector<double>> crit(k);
    for (const auto* r : runs) {
      agg.push_back(r->best.aggregate);
      sims.push_back(static_cast<double>(r->dataset.size()));
      for (std::size_t c = 0; c < k && c < r->best.criteria.size(); ++c) {
        crit[c].push_back(r->best.criteria[c]);
      }
    }
    s.agg_median = median(agg);
    s.agg_mean = mean(agg);
    s.agg_std = stddev(agg);
    s.sims_median = median(sims);
    s.sims_mean = mean(sims);
    s.sims_std = stddev(sims);
    for (const auto& c : crit) {
      s.criterion_median.push_back(median(c));
      s.criterion_mean.push_back(mean(c));
      s.criterion_std.push_back(stddev(c));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace quadopt
