#pragma once

// Quadtree representation of binary grid layouts.
//
// A layout partitions an m x n grid into rectangular leaves, each holding one
// binary state. Internal nodes split their region at a row and/or column
// line; by default that line is the floor midpoint of the region, but the
// refinement pass may move it. Mutating operations take the layout by value
// and return the new one, so callers can `std::move` a working copy through
// a sequence of edits without reallocating.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quadopt/seeds.hpp"

namespace quadopt {

/// Inclusive cell bounds [r_start, r_end] x [c_start, c_end].
struct Region {
  int r_start = 0;
  int r_end = 0;
  int c_start = 0;
  int c_end = 0;

  int rows() const noexcept { return r_end - r_start + 1; }
  int cols() const noexcept { return c_end - c_start + 1; }
  int area() const noexcept { return rows() * cols(); }
  bool contains(int i, int j) const noexcept {
    return r_start <= i && i <= r_end && c_start <= j && j <= c_end;
  }
  bool operator==(const Region&) const = default;
};

/// How an internal node divides its region.
enum class SplitKind : std::uint8_t {
  kQuad,  // UL, UR, LL, LR
  kRows,  // top, bottom (regions one column wide)
  kCols,  // left, right (regions one row high)
};

enum class Axis : std::uint8_t { kRow, kCol };

/// Number of extra leaves produced by splitting `region`: 3, 1, or 0 for 1x1.
int split_growth(const Region& region) noexcept;

/// The split kind used for a fresh split of `region`. Throws
/// DegenerateRegionError for 1x1 regions.
SplitKind natural_split_kind(const Region& region);

/// Children of `region` split at the floor midpoints, in the order
/// UL, UR, LL, LR (or top/bottom, left/right for one-wide regions).
std::vector<Region> split_region(const Region& region);

/// Children of `region` for an explicit split. `split_row` is the last row of
/// the upper part and `split_col` the last column of the left part; the
/// unused coordinate is ignored for two-way kinds.
std::vector<Region> split_region_at(const Region& region, SplitKind kind,
                                    int split_row, int split_col);

using NodeId = std::int32_t;

struct QuadNode {
  Region region;
  std::uint8_t state = 0;  // meaningful for leaves only
  SplitKind kind = SplitKind::kQuad;
  int split_row = -1;
  int split_col = -1;
  NodeId first_child = -1;
  std::uint8_t child_count = 0;

  bool is_leaf() const noexcept { return child_count == 0; }
};

struct LeafInfo {
  NodeId id;
  Region region;
  std::uint8_t state;
};

class QuadtreeLayout {
 public:
  /// Root-only layout covering a rows x cols grid.
  QuadtreeLayout(int rows, int cols, std::uint8_t root_state = 0);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  NodeId root() const noexcept { return 0; }

  std::size_t leaf_count() const noexcept { return leaves_.size(); }
  /// Leaf ids in pre-order (UL, UR, LL, LR recursively).
  std::span<const NodeId> leaf_ids() const noexcept { return leaves_; }
  std::vector<LeafInfo> leaves() const;

  const QuadNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::span<const QuadNode> nodes() const noexcept { return nodes_; }
  bool is_leaf(NodeId id) const noexcept;

  /// Ids of internal nodes in pre-order.
  std::vector<NodeId> internal_ids() const;

  /// Structural equality: same dimensions, splits and leaf states.
  friend bool operator==(const QuadtreeLayout& a, const QuadtreeLayout& b);

 private:
  friend QuadtreeLayout split_leaf(QuadtreeLayout, NodeId, Rng&);
  friend QuadtreeLayout split_leaf_with_states(QuadtreeLayout, NodeId,
                                               std::span<const std::uint8_t>);
  friend QuadtreeLayout resample_leaf(QuadtreeLayout, NodeId, Rng&);
  friend QuadtreeLayout set_leaf_state(QuadtreeLayout, NodeId, std::uint8_t);
  friend std::optional<QuadtreeLayout> move_split(QuadtreeLayout, NodeId, Axis,
                                                  int);
  friend class LayoutParser;

  QuadtreeLayout() = default;
  void require_leaf(NodeId id) const;
  NodeId append_children(NodeId parent, SplitKind kind, int split_row,
                         int split_col);
  void rebuild_leaf_order();
  bool reassign_regions(NodeId id, const Region& region);

  int rows_ = 0;
  int cols_ = 0;
  std::vector<QuadNode> nodes_;
  std::vector<NodeId> leaves_;
};

/// Splits a leaf at its midpoints; every child gets an independent fair-coin
/// state. Throws UnknownLeafError or DegenerateRegionError.
QuadtreeLayout split_leaf(QuadtreeLayout layout, NodeId leaf, Rng& rng);

/// Deterministic variant of split_leaf with the child states given.
QuadtreeLayout split_leaf_with_states(QuadtreeLayout layout, NodeId leaf,
                                      std::span<const std::uint8_t> states);

/// Replaces a leaf's state with a fresh fair-coin draw.
QuadtreeLayout resample_leaf(QuadtreeLayout layout, NodeId leaf, Rng& rng);

QuadtreeLayout set_leaf_state(QuadtreeLayout layout, NodeId leaf,
                              std::uint8_t state);

/// Shifts an internal node's split line by `delta` cells along `axis`.
/// Descendant split lines keep their absolute position, clamped into their
/// new regions. Returns nullopt when the move is illegal: the node does not
/// split along `axis`, the line leaves its region, or some descendant can no
/// longer hold its split.
std::optional<QuadtreeLayout> move_split(QuadtreeLayout layout, NodeId node,
                                         Axis axis, int delta);

/// Dense grid dimensions, `layers` binary planes of rows x cols cells.
struct GridDims {
  int rows = 0;
  int cols = 0;
  int layers = 1;

  int cells_per_layer() const noexcept { return rows * cols; }
  int cells() const noexcept { return rows * cols * layers; }
  bool operator==(const GridDims&) const = default;
};

std::string to_string(const GridDims& dims);

/// Binary design matrix, row-major per layer, layers stacked.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  explicit DesignMatrix(GridDims dims);

  const GridDims& dims() const noexcept { return dims_; }
  std::uint8_t at(int layer, int i, int j) const;
  void set(int layer, int i, int j, std::uint8_t value);

  std::span<const std::uint8_t> cells() const noexcept { return cells_; }
  std::span<std::uint8_t> mutable_cells() noexcept { return cells_; }
  std::span<const std::uint8_t> layer(int k) const;
  std::span<std::uint8_t> mutable_layer(int k);

  std::size_t count_ones() const noexcept;

  /// '0'/'1' characters row-major, layers separated by '/'.
  std::string bits() const;
  static DesignMatrix from_bits(GridDims dims, std::string_view bits);

  bool operator==(const DesignMatrix&) const = default;
  std::strong_ordering operator<=>(const DesignMatrix& other) const;

 private:
  GridDims dims_;
  std::vector<std::uint8_t> cells_;
};

struct DesignHash {
  std::size_t operator()(const DesignMatrix& design) const noexcept;
};

/// Writes one CSV per layer at `<prefix>_layer<K>.csv`, K starting at 0.
std::vector<std::filesystem::path> write_design_csv(
    const DesignMatrix& design, const std::filesystem::path& prefix);

/// x(i, j) = state of the unique leaf covering (i, j).
DesignMatrix reconstruct(const QuadtreeLayout& layout);

/// Writes the reconstruction of `layout` into a rows*cols buffer.
void reconstruct_into(const QuadtreeLayout& layout,
                      std::span<std::uint8_t> cells);

/// Canonical compact text form:
///
///   layout := ROWS 'x' COLS ':' node
///   node   := '0' | '1'
///           | 'Q' [ '@' ROW ',' COL ] '(' node node node node ')'
///           | 'R' [ '@' ROW ] '(' node node ')'
///           | 'C' [ '@' COL ] '(' node node ')'
///
/// The '@' annotation appears only when the split line differs from the
/// floor midpoint of the node's region.
std::string serialize(const QuadtreeLayout& layout);
QuadtreeLayout deserialize(std::string_view text);

/// One independent quadtree per layer, all with the same grid dimensions.
class LayoutStack {
 public:
  LayoutStack() = default;
  explicit LayoutStack(std::vector<QuadtreeLayout> layers);
  /// Root-only layers with the given states (one per layer).
  static LayoutStack root_only(GridDims dims,
                               std::span<const std::uint8_t> states);

  GridDims dims() const noexcept;
  std::size_t layer_count() const noexcept { return layers_.size(); }
  const QuadtreeLayout& layer(std::size_t k) const { return layers_.at(k); }
  QuadtreeLayout& mutable_layer(std::size_t k) { return layers_.at(k); }
  std::span<const QuadtreeLayout> layers() const noexcept { return layers_; }

  std::size_t leaf_count() const noexcept;

  friend bool operator==(const LayoutStack&, const LayoutStack&) = default;

 private:
  std::vector<QuadtreeLayout> layers_;
};

DesignMatrix reconstruct(const LayoutStack& stack);
void reconstruct_into(const LayoutStack& stack, DesignMatrix& out);

/// Layers serialized with `serialize` and joined by '|'.
std::string serialize(const LayoutStack& stack);
LayoutStack deserialize_stack(std::string_view text);

}  // namespace quadopt
