#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "quadopt/layout.hpp"

namespace quadopt {

/// Multi-scale mean-pooled block features of a design.
///
/// Per layer there are four levels: the full grid, its midpoint halves (the
/// children of a quadtree root split), the quarters (children of those), and
/// the individual cells. Block boundaries follow the quadtree midpoint rule, so
/// a 15x20 layer pools over 8+7 rows at the second level and 4+4+4+3 at the
/// third. Every feature is the fraction of ones inside its block.
class FeatureMap {
 public:
  static constexpr std::string_view kId = "multiscale-pool-v1";
  static constexpr int kLevels = 4;

  struct Block {
    int layer;
    int level;
    Region region;
  };

  explicit FeatureMap(GridDims dims);

  const GridDims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return blocks_.size(); }
  std::span<const Block> blocks() const noexcept { return blocks_; }

  std::vector<double> compute(const DesignMatrix& design) const;
  void compute_into(const DesignMatrix& design, std::span<double> out) const;

  /// Per-cell coefficients c such that
  ///   sum_f weights[f] * phi_f(x) == sum_cell x_cell * c[cell]
  /// for every design x.
  std::vector<double> fold(std::span<const double> weights) const;

  /// Index of the feature of `level` that contains cell (layer, i, j).
  std::size_t feature_of(int layer, int i, int j, int level) const;

 private:
  GridDims dims_;
  std::vector<Block> blocks_;
  // For every cell, the feature index at each level.
  std::vector<std::array<std::uint32_t, kLevels>> cell_features_;
  std::vector<double> inv_area_;
};

}  // namespace quadopt
