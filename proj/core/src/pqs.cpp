#include "quadopt/pqs.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_set>

#include "quadopt/errors.hpp"
#include "quadopt/persist.hpp"
#include "quadopt/sampling.hpp"
#include "quadopt/selection.hpp"

namespace quadopt {

void BaselineConfig::validate() const {
  if (pool < 1) throw ConfigError("baseline.pool must be >= 1");
  if (top_k < 1) throw ConfigError("baseline.top_k must be >= 1");
  if (population < 2) throw ConfigError("baseline.population must be >= 2");
  if (tournament < 1) throw ConfigError("baseline.tournament must be >= 1");
  if (!(crossover >= 0.0 && crossover <= 1.0)) {
    throw ConfigError("baseline.crossover must be in [0, 1]");
  }
  if (mutation > 1.0) throw ConfigError("baseline.mutation must be <= 1");
  if (generations < 1) throw ConfigError("baseline.generations must be >= 1");
}

const std::vector<std::string>& method_ids() {
  static const std::vector<std::string> ids = {
      "pqs", "pqs-topk-only", "pqs-random-only", "pqs-no-qss", "rs", "surrogate-rs",
      "surrogate-ga"};
  return ids;
}

bool RunConfig::is_pqs_family() const { return method.rfind("pqs", 0) == 0; }

SelectionMode RunConfig::selection_mode() const {
  if (method == "pqs-topk-only") return SelectionMode::kTopKOnly;
  if (method == "pqs-random-only") return SelectionMode::kRandomOnly;
  return SelectionMode::kConsistency;
}

CandidateSource RunConfig::candidate_source() const {
  return method == "pqs-no-qss" ? CandidateSource::kPixelPool : CandidateSource::kTreeSearch;
}

void RunConfig::validate() const {
  const auto& ids = method_ids();
  if (std::find(ids.begin(), ids.end(), method) == ids.end()) {
    throw ConfigError("method: unknown method id '" + method + "'");
  }
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (initial_size < 0 || initial_size > budget) {
    throw ConfigError("initial_size must be in [0, budget]");
  }
  if (method != "rs" && initial_size < 2) {
    throw ConfigError("initial_size must be >= 2 to train a predictor");
  }
  if (select_size < 1) throw ConfigError("select_size must be >= 1");
  if (ensemble_size < 2) throw ConfigError("consistency.ensemble_size must be >= 2");
  if (probe_size < 2) throw ConfigError("consistency.probe_size must be >= 2");
  if (pixel_pool < 1) throw ConfigError("pixel_pool must be >= 1");
  if (latency_ms < 0) throw ConfigError("latency_ms must be >= 0");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (stop_after && *stop_after < 0) throw ConfigError("stop_after must be >= 0");
  search.validate();
  cap.validate();
  train.validate();
  baseline.validate();
}

int planned_iterations(const RunConfig& config) {
  const std::int64_t rest = config.budget - config.initial_size;
  const auto r = static_cast<std::int64_t>(config.select_size);
  return static_cast<int>((rest + r - 1) / r);
}

namespace {

using Clock = std::chrono::steady_clock;

std::size_t cap_at(const RunConfig& config, GridDims dims, int iteration) {
  return std::max(grow_cap(config.cap, iteration), static_cast<std::size_t>(dims.layers));
}

ScoredLayout sample_candidate(GridDims dims, std::size_t cap, CandidateSource source, Rng& rng) {
  if (source == CandidateSource::kTreeSearch) {
    LayoutStack stack = sample_tree_growth(dims, cap, rng);
    DesignMatrix design = reconstruct(stack);
    return {std::move(stack), std::move(design), 0.0};
  }
  // Pixel designs carry a placeholder layout; they are logged without one.
  std::vector<std::uint8_t> zeros(static_cast<std::size_t>(dims.layers), 0);
  return {LayoutStack::root_only(dims, zeros), sample_pixel_uniform(dims, rng), 0.0};
}

struct LoopState {
  Dataset dataset;
  std::vector<IterationLog> log;
  std::shared_ptr<const Predictor> previous;
};

RunResult finish(const RunConfig& config, LoopState& state, bool complete,
                 Clock::time_point start, RunWriter* writer) {
  RunResult result;
  result.method = config.method;
  result.seed = config.seed;
  result.budget = config.budget;
  result.best = state.dataset.best();
  result.dataset = std::move(state.dataset);
  result.log = std::move(state.log);
  result.complete = complete;
  result.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (writer) writer->finish(result);
  return result;
}

// Best-predicted candidates of one iteration, sorted by non-increasing score.
std::vector<ScoredLayout> propose(const RunConfig& config, const Predictor& predictor,
                                  GridDims dims, std::size_t cap, int t,
                                  const Dataset& dataset) {
  std::vector<ScoredLayout> out;
  if (config.candidate_source() == CandidateSource::kPixelPool) {
    Rng rng = make_rng(config.seed, "pool", static_cast<std::uint64_t>(t));
    TopKList top(config.search.top_k);
    std::vector<std::uint8_t> zeros(static_cast<std::size_t>(dims.layers), 0);
    const LayoutStack placeholder = LayoutStack::root_only(dims, zeros);
    for (std::size_t i = 0; i < config.pixel_pool; ++i) {
      DesignMatrix d = sample_pixel_uniform(dims, rng);
      const double score = predictor.predict_aggregate(d);
      if (top.admits(score) && !dataset.contains(d)) top.offer({placeholder, std::move(d), score});
    }
    out.assign(top.entries().begin(), top.entries().end());
    return out;
  }

  SearchConfig search = config.search;
  search.leaf_cap = cap;
  search.seed = derive_seed(config.seed, "search", static_cast<std::uint64_t>(t));
  const SearchResult found = tree_search(predictor, search, dims, &dataset);

  Rng rng = make_rng(config.seed, "refine", static_cast<std::uint64_t>(t));
  std::unordered_set<DesignMatrix, DesignHash> taken;
  for (const auto& entry : found.top.entries()) {
    ScoredLayout refined = importance_assignment(entry, predictor, config.search.refine_steps, rng);
    if (dataset.contains(refined.design) || taken.contains(refined.design)) refined = entry;
    if (taken.insert(refined.design).second) out.push_back(std::move(refined));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredLayout& a, const ScoredLayout& b) { return a.score > b.score; });
  return out;
}

void run_loop(const RunConfig& config, const Oracle& oracle, const Trainer& trainer,
              LoopState& state, BudgetLedger& ledger, RunWriter* writer) {
  const GridDims dims = oracle.dims();
  const CandidateSource source = config.candidate_source();
  const bool tree = source == CandidateSource::kTreeSearch;

  std::vector<DesignMatrix> probe;
  {
    Rng rng = make_rng(config.seed, "probe");
    const std::size_t cap = std::max(config.cap.max, static_cast<std::size_t>(dims.layers));
    for (std::size_t i = 0; i < config.probe_size; ++i) {
      probe.push_back(sample_candidate(dims, cap, source, rng).design);
    }
  }

  int t = static_cast<int>(state.log.size());
  while (ledger.remaining() > 0) {
    if (config.stop_after && static_cast<int>(state.log.size()) >= *config.stop_after) return;
    const std::size_t cap = cap_at(config, dims, t);
    const auto theta =
        trainer.train(state.dataset, derive_seed(config.seed, "train", static_cast<std::uint64_t>(t)));
    const auto top = propose(config, *theta, dims, cap, t, state.dataset);

    std::vector<DesignMatrix> compared;
    for (const auto& c : top) compared.push_back(c.design);
    compared.insert(compared.end(), probe.begin(), probe.end());
    ConsistencyReport report;
    if (!state.previous) {
      TrainConfig ensemble = config.train;
      ensemble.seed = derive_seed(config.seed, "ensemble");
      report = initial_tau(state.dataset.records(), ensemble, compared, config.ensemble_size);
    } else {
      std::vector<double> prev_scores, next_scores;
      for (const auto& d : compared) {
        prev_scores.push_back(state.previous->predict_aggregate(d));
        next_scores.push_back(theta->predict_aggregate(d));
      }
      report = kendall_tau(prev_scores, next_scores);
    }

    double effective = report.tau;
    if (config.selection_mode() == SelectionMode::kTopKOnly) effective = 1.0;
    if (config.selection_mode() == SelectionMode::kRandomOnly) effective = 0.0;
    const auto total = static_cast<std::size_t>(
        std::min<std::int64_t>(static_cast<std::int64_t>(config.select_size), ledger.remaining()));
    SelectionPlan plan = SelectionPlan::from_tau(effective, total);
    if (plan.predictor > top.size()) {
      plan.random += plan.predictor - top.size();
      plan.predictor = top.size();
    }

    Rng rng = make_rng(config.seed, "select", static_cast<std::uint64_t>(t));
    const CandidateSampler sampler = [&](Rng& r) { return sample_candidate(dims, cap, source, r); };
    const auto picks = mixed_select(top, plan, sampler, rng, state.dataset);

    std::vector<EvaluationRequest> requests;
    for (const auto& p : picks) requests.push_back({p.design, tree ? serialize(p.layout) : ""});
    const std::size_t before = state.dataset.size();
    evaluate_batch(oracle, requests, ledger, state.dataset, t, config.jobs);

    IterationLog row;
    row.iteration = t;
    row.cap = cap;
    row.n = report.n;
    row.tau = report.tau;
    row.tau_plus = report.tau_plus;
    row.predictor_picks = plan.predictor;
    row.random_picks = plan.random;
    row.best = state.dataset.best().aggregate;
    row.used = ledger.used();
    state.log.push_back(row);
    if (writer) {
      writer->append_records(state.dataset.records().subspan(before));
      writer->append_iteration(row);
    }
    state.previous = theta;
    ++t;
  }
}

}  // namespace

std::vector<EvaluationRequest> initial_requests(const RunConfig& config, GridDims dims) {
  Rng rng = make_rng(config.seed, "initial");
  const std::size_t cap = cap_at(config, dims, 0);
  const auto want = static_cast<std::size_t>(config.initial_size);
  std::vector<EvaluationRequest> out;
  std::unordered_set<DesignMatrix, DesignHash> seen;
  for (std::size_t attempt = 0; out.size() < want; ++attempt) {
    if (attempt > 1000 * want) {
      throw PoolExhaustedError("only " + std::to_string(out.size()) +
                               " distinct initial designs exist at leaf cap " +
                               std::to_string(cap));
    }
    LayoutStack stack = sample_tree_growth(dims, cap, rng);
    DesignMatrix design = reconstruct(stack);
    if (!seen.insert(design).second) continue;
    out.push_back({std::move(design), serialize(stack)});
  }
  return out;
}

RunResult run_pqs(const RunConfig& config, const Oracle& oracle,
                  const std::filesystem::path* run_dir, const Trainer* trainer) {
  config.validate();
  if (!config.is_pqs_family()) throw ConfigError("run_pqs: '" + config.method + "' is not PQS");
  const auto start = Clock::now();
  const RidgeTrainer ridge(config.train);
  const Trainer& fit = trainer ? *trainer : ridge;

  std::unique_ptr<RunWriter> writer;
  if (run_dir) writer = std::make_unique<RunWriter>(*run_dir, config, oracle);

  LoopState state;
  BudgetLedger ledger(config.budget);
  const auto initial = initial_requests(config, oracle.dims());
  evaluate_batch(oracle, initial, ledger, state.dataset, -1, config.jobs);
  if (writer) writer->append_records(state.dataset.records());

  run_loop(config, oracle, fit, state, ledger, writer.get());
  return finish(config, state, ledger.remaining() == 0, start, writer.get());
}

RunResult resume_pqs(const std::filesystem::path& run_dir, const Oracle& oracle,
                     const Trainer* trainer) {
  const auto start = Clock::now();
  PersistedRun saved = load_run(run_dir);
  RunConfig config = saved.config;
  if (!config.is_pqs_family()) {
    throw ConsistencyError("resume supports PQS runs only, found '" + config.method + "'");
  }
  if (saved.oracle_name != oracle.name()) {
    throw ConsistencyError("run was recorded with oracle '" + saved.oracle_name + "', not '" +
                           oracle.name() + "'");
  }
  config.stop_after.reset();

  const std::size_t k = saved.log.size();
  for (std::size_t i = 0; i < k; ++i) {
    if (saved.log[i].iteration != static_cast<int>(i)) {
      throw ConsistencyError("consistency.csv iterations are not contiguous");
    }
  }

  LoopState state;
  for (const auto& r : saved.records) {
    if (r.iteration >= static_cast<int>(k)) continue;  // partially logged iteration
    if (r.sequence != static_cast<std::int64_t>(state.dataset.size()) + 1) {
      throw ConsistencyError("evaluations.csv sequence numbers are not contiguous");
    }
    try {
      state.dataset.append(r);
    } catch (const ConsistencyError&) {
      throw ConsistencyError("evaluations.csv repeats a design");
    }
  }
  if (k > 0 && saved.log.back().used != static_cast<std::int64_t>(state.dataset.size())) {
    throw ConsistencyError("consistency.csv budget count disagrees with evaluations.csv");
  }

  if (saved.complete && k == static_cast<std::size_t>(planned_iterations(config))) {
    RunResult result;
    result.method = config.method;
    result.seed = config.seed;
    result.budget = config.budget;
    result.best = state.dataset.best();
    result.dataset = std::move(state.dataset);
    result.log = std::move(saved.log);
    result.complete = true;
    return result;
  }
  if (k == 0) return run_pqs(config, oracle, &run_dir, trainer);

  const std::int64_t initial = std::count_if(saved.records.begin(), saved.records.end(),
                                             [](const auto& r) { return r.iteration < 0; });
  if (initial != config.initial_size) {
    throw ConsistencyError("evaluations.csv holds " + std::to_string(initial) +
                           " initial designs, manifest says " +
                           std::to_string(config.initial_size));
  }

  const RidgeTrainer ridge(config.train);
  const Trainer& fit = trainer ? *trainer : ridge;
  {
    Dataset earlier;
    for (const auto& r : state.dataset) {
      if (r.iteration < static_cast<int>(k) - 1) earlier.append(r);
    }
    state.previous = fit.train(earlier, derive_seed(config.seed, "train", k - 1));
  }
  state.log = std::move(saved.log);

  RunWriter writer(run_dir, config, oracle);
  writer.append_records(state.dataset.records());
  for (const auto& row : state.log) writer.append_iteration(row);

  BudgetLedger ledger(config.budget, static_cast<std::int64_t>(state.dataset.size()));
  run_loop(config, oracle, fit, state, ledger, &writer);
  return finish(config, state, ledger.remaining() == 0, start, &writer);
}

}  // namespace quadopt
