#include "quadopt/search.hpp"

#include <algorithm>

#include "quadopt/errors.hpp"
#include "quadopt/sampling.hpp"

namespace quadopt {

void SearchConfig::validate() const {
  if (leaf_cap < 1) throw ConfigError("search.leaf_cap must be >= 1");
  if (max_steps < 1) throw ConfigError("search.max_steps must be >= 1");
  if (top_k < 1) throw ConfigError("search.top_k must be >= 1");
  if (refine_steps < 0) throw ConfigError("search.refine_steps must be >= 0");
}

// ---------------------------------------------------------------------------
// TopKList

TopKList::TopKList(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("Top-K capacity must be >= 1");
  entries_.reserve(capacity);
}

bool TopKList::admits(double score) const noexcept {
  return entries_.size() < capacity_ || score > entries_.back().score;
}

bool TopKList::contains(const DesignMatrix& design) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const ScoredLayout& e) { return e.design == design; });
}

bool TopKList::offer(ScoredLayout candidate) {
  if (!admits(candidate.score) || contains(candidate.design)) return false;
  if (entries_.size() == capacity_) entries_.pop_back();
  auto pos = std::upper_bound(
      entries_.begin(), entries_.end(), candidate.score,
      [](double score, const ScoredLayout& e) { return score > e.score; });
  entries_.insert(pos, std::move(candidate));
  return true;
}

TopKList TopKList::merge(std::span<const TopKList> lists, std::size_t capacity) {
  struct Keyed {
    const ScoredLayout* entry;
    std::string key;
  };
  std::vector<Keyed> all;
  for (const auto& list : lists) {
    for (const auto& e : list.entries()) all.push_back({&e, serialize(e.layout) + '|' + e.design.bits()});
  }
  std::sort(all.begin(), all.end(), [](const Keyed& a, const Keyed& b) {
    if (a.entry->score != b.entry->score) return a.entry->score > b.entry->score;
    return a.key < b.key;
  });
  TopKList out(capacity);
  for (const auto& k : all) {
    if (out.size() == capacity) break;
    if (!out.contains(k.entry->design)) out.entries_.push_back(*k.entry);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tree search

std::string to_string(SearchAction action) {
  switch (action) {
    case SearchAction::kResample: return "resample";
    case SearchAction::kSplit: return "split";
    case SearchAction::kForcedResample: return "forced-resample";
  }
  return "unknown";
}

namespace {

LayoutStack fresh_root(GridDims dims, Rng& rng) {
  std::vector<std::uint8_t> states(static_cast<std::size_t>(dims.layers));
  for (auto& s : states) s = coin(rng) ? 1 : 0;
  return LayoutStack::root_only(dims, states);
}

}  // namespace

SearchResult tree_search(const Predictor& predictor, const SearchConfig& config, GridDims dims,
                         const Dataset* exclude, const SearchTraceFn& trace) {
  config.validate();
  if (config.leaf_cap < static_cast<std::size_t>(dims.layers)) {
    throw ConfigError("search.leaf_cap must be at least the number of layers");
  }
  if (predictor.dims() != dims) {
    throw DimensionMismatchError("predictor dimensions " + to_string(predictor.dims()) +
                                 " do not match search grid " + to_string(dims));
  }

  Rng rng(config.seed);
  SearchResult result{TopKList(config.top_k), {}};
  SearchStats& stats = result.stats;
  DesignMatrix design(dims);
  double best = 0.0;

  LayoutStack stack = fresh_root(dims, rng);
  stats.episodes = 1;
  for (std::int64_t step = 0; step < config.max_steps; ++step) {
    const std::size_t k = uniform_index(rng, stack.layer_count());
    QuadtreeLayout& layer = stack.mutable_layer(k);
    const auto leaf_ids = layer.leaf_ids();
    const NodeId leaf = leaf_ids[uniform_index(rng, leaf_ids.size())];

    SearchAction action = SearchAction::kResample;
    if (coin(rng)) {
      const int growth = split_growth(layer.node(leaf).region);
      if (growth > 0 && stack.leaf_count() + static_cast<std::size_t>(growth) <= config.leaf_cap) {
        action = SearchAction::kSplit;
      } else {
        action = SearchAction::kForcedResample;
      }
    }
    if (action == SearchAction::kSplit) {
      layer = split_leaf(std::move(layer), leaf, rng);
      ++stats.splits;
    } else {
      layer = resample_leaf(std::move(layer), leaf, rng);
      ++(action == SearchAction::kResample ? stats.resamples : stats.forced_resamples);
    }
    ++stats.steps;

    reconstruct_into(stack, design);
    const double score = predictor.predict_aggregate(design);
    if (result.top.admits(score) && !(exclude && exclude->contains(design))) {
      result.top.offer({stack, design, score});
    }
    if (!result.top.empty()) best = result.top[0].score;
    if (trace) trace({step, action, stack.leaf_count(), score, best});

    if (!can_grow(stack, config.leaf_cap) && step + 1 < config.max_steps) {
      stack = fresh_root(dims, rng);
      ++stats.episodes;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Importance assignment

ScoredLayout importance_assignment(ScoredLayout entry, const Predictor& predictor, int steps,
                                   Rng& rng) {
  std::vector<std::vector<NodeId>> internal(entry.layout.layer_count());
  std::vector<std::size_t> layers_with_nodes;
  for (std::size_t k = 0; k < internal.size(); ++k) {
    internal[k] = entry.layout.layer(k).internal_ids();
    if (!internal[k].empty()) layers_with_nodes.push_back(k);
  }
  if (layers_with_nodes.empty()) return entry;

  DesignMatrix design = entry.design;
  for (int s = 0; s < steps; ++s) {
    const std::size_t k = layers_with_nodes[uniform_index(rng, layers_with_nodes.size())];
    const NodeId node = internal[k][uniform_index(rng, internal[k].size())];
    const SplitKind kind = entry.layout.layer(k).node(node).kind;
    Axis axis = kind == SplitKind::kRows ? Axis::kRow : Axis::kCol;
    if (kind == SplitKind::kQuad) axis = coin(rng) ? Axis::kRow : Axis::kCol;
    const int delta = coin(rng) ? 1 : -1;

    auto moved = move_split(entry.layout.layer(k), node, axis, delta);
    if (!moved) continue;
    reconstruct_into(*moved, design.mutable_layer(static_cast<int>(k)));
    const double score = predictor.predict_aggregate(design);
    if (score > entry.score) {
      entry.layout.mutable_layer(k) = std::move(*moved);
      entry.score = score;
      entry.design = design;
    } else {
      design = entry.design;
    }
  }
  return entry;
}

// ---------------------------------------------------------------------------
// Leaf-cap schedule

void CapSchedule::validate() const {
  if (max < 1) throw ConfigError("cap.max must be >= 1");
  if (kind == Kind::kGeometric && initial < 1) throw ConfigError("cap.initial must be >= 1");
  if (kind == Kind::kGeometric && initial > max) throw ConfigError("cap.initial must be <= cap.max");
}

std::size_t grow_cap(const CapSchedule& schedule, int outer_iteration) {
  if (schedule.kind == CapSchedule::Kind::kConstant) return schedule.max;
  std::size_t cap = std::min(schedule.initial, schedule.max);
  for (int t = 0; t < outer_iteration && cap < schedule.max; ++t) {
    cap = std::min(schedule.max, cap * 2);
  }
  return cap;
}

}  // namespace quadopt
