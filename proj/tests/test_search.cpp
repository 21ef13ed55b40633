#include <gtest/gtest.h>

#include "quadopt/errors.hpp"
#include "quadopt/sampling.hpp"
#include "quadopt/search.hpp"

namespace quadopt {
namespace {

// Scores a design with an arbitrary function of its cells.
class FnPredictor : public Predictor {
 public:
  FnPredictor(GridDims dims, std::function<double(const DesignMatrix&)> fn)
      : dims_(dims), fn_(std::move(fn)) {}
  GridDims dims() const override { return dims_; }
  std::size_t criterion_count() const override { return 1; }
  CriterionVector predict(const DesignMatrix& d) const override { return {fn_(d)}; }

 private:
  GridDims dims_;
  std::function<double(const DesignMatrix&)> fn_;
};

ScoredLayout scored(const std::string& bits, double score) {
  const GridDims dims{1, static_cast<int>(bits.size()), 1};
  const DesignMatrix d = DesignMatrix::from_bits(dims, bits);
  const std::uint8_t s = 0;
  return {LayoutStack::root_only(dims, std::span(&s, 1)), d, score};
}

TEST(TopK, KeepsBestDistinct) {
  TopKList top(3);
  EXPECT_TRUE(top.offer(scored("000", 1.0)));
  EXPECT_TRUE(top.offer(scored("001", 3.0)));
  EXPECT_FALSE(top.offer(scored("001", 5.0)));
  EXPECT_TRUE(top.offer(scored("010", 2.0)));
  EXPECT_FALSE(top.admits(1.0));
  EXPECT_FALSE(top.offer(scored("011", 1.0)));
  EXPECT_TRUE(top.offer(scored("100", 2.0)));
  ASSERT_EQ(top.size(), 3U);
  EXPECT_EQ(top[0].score, 3.0);
  EXPECT_EQ(top[1].design.bits(), "010");
  EXPECT_EQ(top[2].design.bits(), "100");
  EXPECT_FALSE(top.contains(DesignMatrix::from_bits({1, 3, 1}, "000")));
}

TEST(TopK, MergeIsOrderFree) {
  TopKList a(2), b(2);
  a.offer(scored("000", 1.0));
  a.offer(scored("001", 4.0));
  b.offer(scored("010", 4.0));
  b.offer(scored("011", 2.0));
  const TopKList ab[] = {a, b};
  const TopKList ba[] = {b, a};
  const auto m1 = TopKList::merge(ab, 3);
  const auto m2 = TopKList::merge(ba, 3);
  ASSERT_EQ(m1.size(), 3U);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(m1[i].design, m2[i].design);
}

TEST(TreeSearch, CapOneOnlyResamples) {
  const GridDims dims{4, 4, 1};
  FnPredictor p(dims, [](const DesignMatrix& d) { return static_cast<double>(d.count_ones()); });
  SearchConfig cfg;
  cfg.leaf_cap = 1;
  cfg.max_steps = 500;
  cfg.top_k = 5;
  const auto result = tree_search(p, cfg, dims);
  EXPECT_EQ(result.stats.splits, 0);
  EXPECT_LE(result.top.size(), 2U);
  for (const auto& e : result.top.entries()) {
    const auto ones = e.design.count_ones();
    EXPECT_TRUE(ones == 0 || ones == 16);
  }
}

TEST(TreeSearch, RespectsCapAndExclusion) {
  const auto oracle = make_oracle("synth-hga");
  FnPredictor p(oracle->dims(), [&](const DesignMatrix& d) {
    return aggregate_objective(oracle->criteria(d));
  });
  SearchConfig cfg;
  cfg.leaf_cap = 16;
  cfg.max_steps = 3000;
  cfg.seed = 5;
  const auto first = tree_search(p, cfg, oracle->dims());
  Dataset exclude;
  for (const auto& e : first.top.entries()) {
    EXPECT_LE(e.layout.leaf_count(), 16U);
    EXPECT_EQ(reconstruct(e.layout), e.design);
    exclude.append({e.design, "", {e.score}, e.score, 0, 0});
  }
  EXPECT_EQ(first.stats.steps, 3000);
  const auto second = tree_search(p, cfg, oracle->dims(), &exclude);
  for (const auto& e : second.top.entries()) EXPECT_FALSE(exclude.contains(e.design));

  const auto again = tree_search(p, cfg, oracle->dims());
  ASSERT_EQ(again.top.size(), first.top.size());
  for (std::size_t i = 0; i < again.top.size(); ++i) {
    EXPECT_EQ(again.top[i].design, first.top[i].design);
  }
}

TEST(TreeSearch, FindsAllOnesOnCountOnes) {
  const GridDims dims{4, 4, 1};
  FnPredictor p(dims, [](const DesignMatrix& d) { return static_cast<double>(d.count_ones()); });
  SearchConfig cfg;
  cfg.leaf_cap = 16;
  cfg.max_steps = 100000;
  int hits = 0;
  for (int run = 0; run < 100; ++run) {
    cfg.seed = derive_seed(2024, "count-ones", static_cast<std::uint64_t>(run));
    const auto result = tree_search(p, cfg, dims);
    hits += result.top[0].score == 16.0;
  }
  EXPECT_GE(hits, 95);
}

TEST(Refine, RootOnlyUnchanged) {
  const GridDims dims{6, 6, 1};
  FnPredictor p(dims, [](const DesignMatrix& d) { return static_cast<double>(d.count_ones()); });
  const std::uint8_t s = 1;
  ScoredLayout entry{LayoutStack::root_only(dims, std::span(&s, 1)), DesignMatrix(dims), 0.0};
  entry.design = reconstruct(entry.layout);
  entry.score = p.predict_aggregate(entry.design);
  Rng rng(1);
  const auto out = importance_assignment(entry, p, 200, rng);
  EXPECT_EQ(out.layout, entry.layout);
  EXPECT_EQ(out.score, entry.score);
}

TEST(Refine, NeverWorse) {
  const auto oracle = make_oracle("synth-hga");
  FnPredictor p(oracle->dims(), [&](const DesignMatrix& d) {
    return aggregate_objective(oracle->criteria(d));
  });
  Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    ScoredLayout entry;
    entry.layout = sample_tree_growth(oracle->dims(), 32, rng);
    entry.design = reconstruct(entry.layout);
    entry.score = p.predict_aggregate(entry.design);
    const auto out = importance_assignment(entry, p, 50, rng);
    EXPECT_GE(out.score, entry.score);
    EXPECT_EQ(out.score, p.predict_aggregate(out.design));
    EXPECT_EQ(reconstruct(out.layout), out.design);
    EXPECT_EQ(out.layout.leaf_count(), entry.layout.leaf_count());
  }
}

// The target has ones in rows 0..4 of a 12x12 grid: a 5/7 row split, which
// no midpoint split of the 12-row root can express with four leaves.
TEST(Refine, MovesOffMidpointWhenItHelps) {
  const GridDims dims{12, 12, 1};
  FnPredictor p(dims, [](const DesignMatrix& d) {
    double match = 0;
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 12; ++j) match += d.at(0, i, j) == (i < 5 ? 1 : 0);
    }
    return match;
  });
  SearchConfig cfg;
  cfg.leaf_cap = 4;
  cfg.max_steps = 2000;
  cfg.top_k = 5;
  int improved = 0;
  for (int run = 0; run < 100; ++run) {
    cfg.seed = derive_seed(7, "planted", static_cast<std::uint64_t>(run));
    const auto found = tree_search(p, cfg, dims);
    Rng rng(derive_seed(7, "refine", static_cast<std::uint64_t>(run)));
    const auto refined = importance_assignment(found.top[0], p, 200, rng);
    improved += refined.score > found.top[0].score;
  }
  EXPECT_GE(improved, 80);
}

TEST(CapSchedule, GeometricAndConstant) {
  CapSchedule geo;
  EXPECT_EQ(grow_cap(geo, 0), 8U);
  EXPECT_EQ(grow_cap(geo, 1), 16U);
  EXPECT_EQ(grow_cap(geo, 2), 32U);
  EXPECT_EQ(grow_cap(geo, 3), 32U);
  for (int t = 0; t <= 60; ++t) EXPECT_LE(grow_cap(geo, t), geo.max);
  CapSchedule flat;
  flat.kind = CapSchedule::Kind::kConstant;
  for (int t = 0; t <= 60; ++t) EXPECT_EQ(grow_cap(flat, t), 32U);
  CapSchedule bad;
  bad.initial = 64;
  EXPECT_THROW(bad.validate(), ConfigError);
}

}  // namespace
}  // namespace quadopt
