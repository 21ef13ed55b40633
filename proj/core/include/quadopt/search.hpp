#pragma once

// Predictor-guided progressive tree search over quadtree layouts, the Top-K
// list it maintains, split-line refinement of the survivors, and the leaf-cap
// schedule of the outer loop.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "quadopt/layout.hpp"
#include "quadopt/oracle.hpp"
#include "quadopt/predictor.hpp"

namespace quadopt {

struct SearchConfig {
  std::size_t leaf_cap = 32;      // N_max: total leaves across layers
  std::int64_t max_steps = 100000;  // M: action steps over all episodes
  std::size_t top_k = 10;         // K
  std::uint64_t seed = 0;
  int refine_steps = 200;  // proposals per Top-K entry in importance_assignment

  void validate() const;
};

struct ScoredLayout {
  LayoutStack layout;
  DesignMatrix design;
  double score = 0.0;
};

/// Up to K distinct designs, sorted by non-increasing score. A newcomer must
/// strictly beat the current K-th score once the list is full; equal scores
/// never displace incumbents and are placed after them.
class TopKList {
 public:
  explicit TopKList(std::size_t capacity);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::span<const ScoredLayout> entries() const noexcept { return entries_; }
  const ScoredLayout& operator[](std::size_t i) const { return entries_.at(i); }

  /// Whether a design with this score would currently qualify (before the
  /// duplicate check).
  bool admits(double score) const noexcept;
  bool contains(const DesignMatrix& design) const;

  /// Inserts the candidate if it qualifies and is not already listed.
  bool offer(ScoredLayout candidate);

  /// Deterministic merge: by score, then by canonical serialization.
  static TopKList merge(std::span<const TopKList> lists, std::size_t capacity);

 private:
  std::size_t capacity_;
  std::vector<ScoredLayout> entries_;
};

enum class SearchAction : std::uint8_t { kResample, kSplit, kForcedResample };

struct SearchTraceRow {
  std::int64_t step;
  SearchAction action;
  std::size_t leaves;
  double score;
  double best;
};

using SearchTraceFn = std::function<void(const SearchTraceRow&)>;

struct SearchStats {
  std::int64_t steps = 0;
  std::int64_t resamples = 0;
  std::int64_t splits = 0;
  std::int64_t forced_resamples = 0;
  std::int64_t episodes = 0;
};

struct SearchResult {
  TopKList top;
  SearchStats stats;
};

/// Progressive tree search. Each episode starts from a root-only layout with
/// fair-coin states. A step picks a layer, then a leaf, uniformly; with
/// probability 1/2 the leaf is split (if it is not 1x1 and the split keeps the
/// total leaf count within `leaf_cap`, otherwise it is resampled), else its
/// state is resampled. The reconstructed design is scored with the
/// predictor's aggregate and offered to the Top-K list. An episode ends once
/// no split fits under the cap; episodes restart until `max_steps` steps have
/// been taken. Designs contained in `exclude` never enter the list.
SearchResult tree_search(const Predictor& predictor, const SearchConfig& config, GridDims dims,
                         const Dataset* exclude = nullptr, const SearchTraceFn& trace = {});

/// Hill climbing over split-line positions: each proposal picks a layer with
/// internal nodes, one of its internal nodes, a split axis and a direction,
/// and moves that line one cell (see move_split). Proposals are accepted only
/// if the predicted aggregate strictly improves.
ScoredLayout importance_assignment(ScoredLayout entry, const Predictor& predictor, int steps,
                                   Rng& rng);

struct CapSchedule {
  enum class Kind { kGeometric, kConstant };
  Kind kind = Kind::kGeometric;
  std::size_t initial = 8;
  std::size_t max = 32;

  void validate() const;
};

/// Geometric: min(max, initial * 2^t). Constant: max.
std::size_t grow_cap(const CapSchedule& schedule, int outer_iteration);

std::string to_string(SearchAction action);

}  // namespace quadopt
