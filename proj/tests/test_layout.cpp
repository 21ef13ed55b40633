#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "quadopt/errors.hpp"
#include "quadopt/layout.hpp"
#include "quadopt/sampling.hpp"

namespace quadopt {
namespace {

QuadtreeLayout random_layout(int rows, int cols, int splits, Rng& rng) {
  QuadtreeLayout layout(rows, cols, coin(rng) ? 1 : 0);
  for (int s = 0; s < splits; ++s) {
    std::vector<NodeId> splittable;
    for (const auto& leaf : layout.leaves()) {
      if (leaf.region.area() > 1) splittable.push_back(leaf.id);
    }
    if (splittable.empty()) break;
    layout = split_leaf(std::move(layout), splittable[uniform_index(rng, splittable.size())], rng);
  }
  return layout;
}

TEST(Region, MidpointSplits) {
  const auto quad = split_region({0, 11, 0, 11});
  ASSERT_EQ(quad.size(), 4U);
  EXPECT_EQ(quad[0], (Region{0, 5, 0, 5}));
  EXPECT_EQ(quad[3], (Region{6, 11, 6, 11}));

  const auto cells = split_region({0, 1, 0, 1});
  ASSERT_EQ(cells.size(), 4U);
  for (const auto& r : cells) EXPECT_EQ(r.area(), 1);

  const auto row = split_region({0, 0, 0, 3});
  ASSERT_EQ(row.size(), 2U);
  EXPECT_EQ(row[0], (Region{0, 0, 0, 1}));
  EXPECT_EQ(row[1], (Region{0, 0, 2, 3}));
  EXPECT_EQ(natural_split_kind({0, 0, 0, 3}), SplitKind::kCols);
  EXPECT_EQ(natural_split_kind({0, 3, 2, 2}), SplitKind::kRows);
  EXPECT_THROW(natural_split_kind({2, 2, 3, 3}), DegenerateRegionError);
}

TEST(Region, ChildrenPartitionParent) {
  for (int rows = 1; rows <= 7; ++rows) {
    for (int cols = 1; cols <= 7; ++cols) {
      const Region parent{1, rows, 2, cols + 1};
      if (parent.area() == 1) continue;
      const auto children = split_region(parent);
      EXPECT_EQ(static_cast<int>(children.size()), split_growth(parent) + 1);
      for (int i = parent.r_start; i <= parent.r_end; ++i) {
        for (int j = parent.c_start; j <= parent.c_end; ++j) {
          int covering = 0;
          for (const auto& c : children) covering += c.contains(i, j);
          EXPECT_EQ(covering, 1);
        }
      }
      int area = 0;
      for (const auto& c : children) area += c.area();
      EXPECT_EQ(area, parent.area());
    }
  }
}

TEST(Layout, SplitGrowsLeafCount) {
  Rng rng(1);
  QuadtreeLayout a(4, 4);
  a = split_leaf(std::move(a), a.root(), rng);
  EXPECT_EQ(a.leaf_count(), 4U);

  QuadtreeLayout b(1, 2);
  b = split_leaf(std::move(b), b.root(), rng);
  EXPECT_EQ(b.leaf_count(), 2U);

  QuadtreeLayout single(1, 1);
  EXPECT_THROW(split_leaf(single, single.root(), rng), DegenerateRegionError);
  EXPECT_THROW(split_leaf(a, a.root(), rng), UnknownLeafError);
}

TEST(Layout, SplitIsDeterministicPerSeed) {
  Rng r1(42), r2(42);
  QuadtreeLayout a = split_leaf(QuadtreeLayout(8, 8), 0, r1);
  QuadtreeLayout b = split_leaf(QuadtreeLayout(8, 8), 0, r2);
  EXPECT_EQ(a, b);
}

TEST(Layout, FourWaySplitsCount) {
  Rng rng(3);
  QuadtreeLayout layout(16, 16);
  for (int k = 1; k <= 20; ++k) {
    NodeId target = -1;
    for (const auto& leaf : layout.leaves()) {
      if (leaf.region.rows() > 1 && leaf.region.cols() > 1) {
        target = leaf.id;
        break;
      }
    }
    ASSERT_NE(target, -1);
    layout = split_leaf(std::move(layout), target, rng);
    std::size_t leaves = 0;
    for (const auto& n : layout.nodes()) leaves += n.is_leaf();
    EXPECT_EQ(leaves, static_cast<std::size_t>(1 + 3 * k));
    EXPECT_EQ(layout.leaf_count(), leaves);
  }
}

TEST(Layout, LeafOrderStable) {
  Rng rng(5);
  const auto layout = random_layout(8, 8, 10, rng);
  const std::vector<NodeId> first(layout.leaf_ids().begin(), layout.leaf_ids().end());
  const std::vector<NodeId> second(layout.leaf_ids().begin(), layout.leaf_ids().end());
  EXPECT_EQ(first, second);
  EXPECT_EQ(layout.leaves().size(), layout.leaf_count());
}

TEST(Layout, ResampleKeepsTopologyAndIsFair) {
  Rng rng(7);
  QuadtreeLayout base = random_layout(6, 6, 4, rng);
  const NodeId leaf = base.leaf_ids()[0];
  int ones = 0;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    QuadtreeLayout next = resample_leaf(base, leaf, rng);
    ASSERT_EQ(next.nodes().size(), base.nodes().size());
    for (std::size_t n = 0; n < next.nodes().size(); ++n) {
      EXPECT_EQ(next.nodes()[n].region, base.nodes()[n].region);
    }
    ones += next.node(leaf).state;
  }
  EXPECT_NEAR(static_cast<double>(ones) / draws, 0.5, 0.02);

  Rng a(9), b(9);
  EXPECT_EQ(resample_leaf(base, leaf, a), resample_leaf(base, leaf, b));
}

TEST(Layout, ReconstructSmallCases) {
  QuadtreeLayout ones(3, 3, 1);
  const DesignMatrix all = reconstruct(ones);
  EXPECT_EQ(all.count_ones(), 9U);

  const std::uint8_t states[] = {1, 0, 0, 1};
  const auto diag = split_leaf_with_states(QuadtreeLayout(2, 2), 0, states);
  EXPECT_EQ(reconstruct(diag).bits(), "1001");
}

TEST(Layout, ReconstructMatchesTreeWalk) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto layout = random_layout(8, 8, static_cast<int>(uniform_index(rng, 25)), rng);
    const DesignMatrix d = reconstruct(layout);
    const auto expected = testing::walk_grid(layout);
    ASSERT_TRUE(std::equal(expected.begin(), expected.end(), d.cells().begin()));
  }
}

TEST(Layout, SerializeGoldenAndRoundTrip) {
  EXPECT_EQ(serialize(QuadtreeLayout(4, 4)), "4x4:0");
  const std::uint8_t states[] = {1, 0, 0, 1};
  EXPECT_EQ(serialize(split_leaf_with_states(QuadtreeLayout(2, 2), 0, states)), "2x2:Q(1001)");

  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    auto layout = random_layout(1 + static_cast<int>(uniform_index(rng, 12)),
                                1 + static_cast<int>(uniform_index(rng, 12)), 12, rng);
    const auto internal = layout.internal_ids();
    if (!internal.empty()) {
      const NodeId n = internal[uniform_index(rng, internal.size())];
      if (auto moved = move_split(layout, n, coin(rng) ? Axis::kRow : Axis::kCol, coin(rng) ? 1 : -1)) {
        layout = std::move(*moved);
      }
    }
    EXPECT_EQ(deserialize(serialize(layout)), layout);
  }
}

TEST(Layout, ParseErrorsCarryOffset) {
  try {
    deserialize("4x4:Q(10");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 8U);
  }
  EXPECT_THROW(deserialize("4x4:2"), ParseError);
  EXPECT_THROW(deserialize("4x4:0 "), ParseError);
  EXPECT_THROW(deserialize("1x1:Q(0000)"), ParseError);
}

TEST(Layout, MoveSplitShiftsLine) {
  Rng rng(17);
  QuadtreeLayout layout = split_leaf(QuadtreeLayout(12, 12), 0, rng);
  EXPECT_EQ(layout.node(0).split_row, 5);
  auto moved = move_split(layout, 0, Axis::kRow, 1);
  ASSERT_TRUE(moved.has_value());
  EXPECT_EQ(moved->node(0).split_row, 6);
  EXPECT_EQ(serialize(*moved).substr(0, 11), "12x12:Q@6,5");
  EXPECT_EQ(deserialize(serialize(*moved)), *moved);

  QuadtreeLayout rows = split_leaf(QuadtreeLayout(4, 1), 0, rng);
  EXPECT_FALSE(move_split(rows, 0, Axis::kCol, 1).has_value());
  EXPECT_FALSE(move_split(rows, 0, Axis::kRow, 2).has_value());
}

TEST(LayoutStack, RoundTripAndReconstruct) {
  Rng rng(19);
  const auto stack = sample_tree_growth({6, 5, 2}, 12, rng);
  EXPECT_LE(stack.leaf_count(), 12U);
  EXPECT_EQ(deserialize_stack(serialize(stack)), stack);
  const DesignMatrix d = reconstruct(stack);
  for (int k = 0; k < 2; ++k) {
    const auto expected = testing::walk_grid(stack.layer(static_cast<std::size_t>(k)));
    const auto layer = d.layer(k);
    EXPECT_TRUE(std::equal(expected.begin(), expected.end(), layer.begin()));
  }
}

TEST(DesignMatrix, BitsRoundTrip) {
  Rng rng(23);
  const GridDims dims{3, 4, 2};
  const DesignMatrix d = sample_pixel_uniform(dims, rng);
  EXPECT_EQ(DesignMatrix::from_bits(dims, d.bits()), d);
  EXPECT_EQ(d.bits().size(), 25U);
}

TEST(Sampling, TreeGrowthFillsCap) {
  Rng rng(29);
  for (int t = 0; t < 50; ++t) {
    const auto stack = sample_tree_growth({15, 20, 1}, 32, rng);
    EXPECT_LE(stack.leaf_count(), 32U);
    EXPECT_FALSE(can_grow(stack, 32));
  }
}

}  // namespace
}  // namespace quadopt
