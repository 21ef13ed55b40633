#include "quadopt/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "quadopt/errors.hpp"

namespace quadopt {

namespace {

std::int64_t tied_pairs(std::size_t run) {
  const auto t = static_cast<std::int64_t>(run);
  return t * (t - 1) / 2;
}

// Stable merge sort of `idx` by y, returning the number of inversions
// (pairs i < j with y[idx_i] > y[idx_j]).
std::int64_t sort_count_inversions(std::vector<std::size_t>& idx, std::span<const double> y) {
  std::vector<std::size_t> buf(idx.size());
  std::int64_t swaps = 0;
  for (std::size_t width = 1; width < idx.size(); width *= 2) {
    for (std::size_t lo = 0; lo < idx.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, idx.size());
      const std::size_t hi = std::min(lo + 2 * width, idx.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (y[idx[j]] < y[idx[i]]) {
          swaps += static_cast<std::int64_t>(mid - i);
          buf[k++] = idx[j++];
        } else {
          buf[k++] = idx[i++];
        }
      }
      while (i < mid) buf[k++] = idx[i++];
      while (j < hi) buf[k++] = idx[j++];
    }
    idx.swap(buf);
  }
  return swaps;
}

}  // namespace

ConsistencyReport kendall_tau(std::span<const double> prev_scores,
                              std::span<const double> next_scores) {
  if (prev_scores.size() != next_scores.size()) {
    throw DimensionMismatchError("kendall_tau: score lists differ in length");
  }
  const std::size_t n = prev_scores.size();
  if (n < 2) throw DimensionMismatchError("kendall_tau needs at least 2 candidates");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(prev_scores[i]) || !std::isfinite(next_scores[i])) {
      throw NonFiniteError("kendall_tau: non-finite score");
    }
  }
  const auto& x = prev_scores;
  const auto& y = next_scores;

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  std::int64_t ties_x = 0;
  std::int64_t ties_xy = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && x[idx[j]] == x[idx[i]]) ++j;
    ties_x += tied_pairs(j - i);
    for (std::size_t a = i; a < j;) {
      std::size_t b = a;
      while (b < j && y[idx[b]] == y[idx[a]]) ++b;
      ties_xy += tied_pairs(b - a);
      a = b;
    }
    i = j;
  }

  const std::int64_t discordant = sort_count_inversions(idx, y);

  std::int64_t ties_y = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && y[idx[j]] == y[idx[i]]) ++j;
    ties_y += tied_pairs(j - i);
    i = j;
  }

  const std::int64_t pairs = tied_pairs(n);
  const std::int64_t numerator = pairs - ties_x - ties_y + ties_xy - 2 * discordant;
  ConsistencyReport report;
  report.n = n;
  report.tau = static_cast<double>(numerator) / static_cast<double>(pairs);
  report.tau_plus = std::max(report.tau, 0.0);
  return report;
}

SelectionPlan SelectionPlan::from_tau(double tau, std::size_t total) {
  const double clamped = std::isfinite(tau) ? std::clamp(tau, 0.0, 1.0) : 0.0;
  SelectionPlan plan;
  plan.total = total;
  plan.predictor = std::min(
      total, static_cast<std::size_t>(std::floor(clamped * static_cast<double>(total) + 0.5)));
  plan.random = total - plan.predictor;
  return plan;
}

std::vector<ScoredLayout> mixed_select(std::span<const ScoredLayout> ranked,
                                       const SelectionPlan& plan,
                                       const CandidateSampler& sampler, Rng& rng,
                                       const Dataset& dataset,
                                       std::size_t attempts_per_pick) {
  std::vector<const ScoredLayout*> order;
  order.reserve(ranked.size());
  for (const auto& c : ranked) order.push_back(&c);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->score > b->score; });

  std::vector<ScoredLayout> picks;
  std::unordered_set<DesignMatrix, DesignHash> chosen;
  for (const auto* c : order) {
    if (picks.size() == plan.predictor) break;
    if (dataset.contains(c->design) || chosen.contains(c->design)) continue;
    chosen.insert(c->design);
    picks.push_back(*c);
  }
  if (picks.size() < plan.predictor) {
    throw PoolExhaustedError("only " + std::to_string(picks.size()) +
                             " unevaluated predictor candidates for " +
                             std::to_string(plan.predictor) + " picks");
  }

  for (std::size_t r = 0; r < plan.random; ++r) {
    bool found = false;
    for (std::size_t attempt = 0; attempt < attempts_per_pick; ++attempt) {
      ScoredLayout c = sampler(rng);
      if (dataset.contains(c.design) || chosen.contains(c.design)) continue;
      chosen.insert(c.design);
      picks.push_back(std::move(c));
      found = true;
      break;
    }
    if (!found) {
      throw PoolExhaustedError("random sampler produced no new design after " +
                               std::to_string(attempts_per_pick) + " attempts");
    }
  }
  return picks;
}

std::vector<ScoredLayout> mixed_select(std::span<const ScoredLayout> ranked, double tau,
                                       std::size_t total, const CandidateSampler& sampler,
                                       Rng& rng, const Dataset& dataset) {
  return mixed_select(ranked, SelectionPlan::from_tau(tau, total), sampler, rng, dataset);
}

ConsistencyReport mean_pairwise_tau(std::span<const std::vector<double>> member_scores) {
  if (member_scores.size() < 2) throw ConfigError("mean_pairwise_tau needs >= 2 members");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < member_scores.size(); ++i) {
    for (std::size_t j = i + 1; j < member_scores.size(); ++j) {
      sum += kendall_tau(member_scores[i], member_scores[j]).tau;
      ++count;
    }
  }
  ConsistencyReport report;
  report.n = member_scores.front().size();
  report.tau = sum / static_cast<double>(count);
  report.tau_plus = std::max(report.tau, 0.0);
  return report;
}

namespace {

ConsistencyReport score_ensemble(const std::vector<RidgePredictor>& members,
                                 std::span<const DesignMatrix> probe) {
  std::vector<std::vector<double>> scores;
  for (const auto& m : members) {
    std::vector<double> s;
    s.reserve(probe.size());
    for (const auto& d : probe) s.push_back(m.predict_aggregate(d));
    scores.push_back(std::move(s));
  }
  return mean_pairwise_tau(scores);
}

}  // namespace

ConsistencyReport initial_tau(std::span<const EvaluationRecord> records,
                              const TrainConfig& config, std::span<const DesignMatrix> probe,
                              std::size_t ensemble_size) {
  return score_ensemble(bootstrap_ensemble(records, config, ensemble_size), probe);
}

ConsistencyReport initial_tau(std::span<const EvaluationRecord> records,
                              const TrainConfig& config, std::span<const DesignMatrix> probe,
                              std::span<const std::uint64_t> member_seeds) {
  return score_ensemble(bootstrap_ensemble(records, config, member_seeds), probe);
}

}  // namespace quadopt
