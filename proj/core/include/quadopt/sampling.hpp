#pragma once

#include <cstddef>

#include "quadopt/layout.hpp"

namespace quadopt {

/// True when some leaf of `stack` can split without the total leaf count
/// exceeding `cap`.
bool can_grow(const LayoutStack& stack, std::size_t cap);

/// Random quadtree growth: fair-coin root states, then repeatedly pick a layer
/// uniformly (among layers that can still grow) and a leaf uniformly within
/// it, and split, until no split fits under `cap` leaves in total.
LayoutStack sample_tree_growth(GridDims dims, std::size_t cap, Rng& rng);

/// Every cell an independent fair coin.
DesignMatrix sample_pixel_uniform(GridDims dims, Rng& rng);

}  // namespace quadopt
