#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <thread>

#include "quadopt/errors.hpp"
#include "quadopt/oracle.hpp"
#include "quadopt/sampling.hpp"

namespace quadopt {
namespace {

TEST(Aggregate, WorstCase) {
  const double a[] = {3.0, 5.0};
  EXPECT_EQ(aggregate_objective(a), 3.0);
  const double hga_row[] = {3.6595, 6.4820};
  EXPECT_EQ(aggregate_objective(hga_row), 3.6595);
  const double one[] = {-2.5};
  EXPECT_EQ(aggregate_objective(one), -2.5);
  const double bad[] = {1.0, std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(aggregate_objective(bad), NonFiniteError);
  EXPECT_THROW(aggregate_objective(std::span<const double>{}), DimensionMismatchError);
}

TEST(Budget, CacheHitsAreFree) {
  CountOnesOracle oracle({3, 3, 1});
  BudgetLedger ledger(2);
  Dataset data;
  Rng rng(1);
  const DesignMatrix d = sample_pixel_uniform(oracle.dims(), rng);
  const auto first = evaluate(oracle, d, ledger, data);
  EXPECT_EQ(ledger.used(), 1);
  const auto again = evaluate(oracle, d, ledger, data);
  EXPECT_EQ(ledger.used(), 1);
  EXPECT_EQ(again.aggregate, first.aggregate);
  EXPECT_EQ(first.aggregate, static_cast<double>(d.count_ones()));
  EXPECT_EQ(first.sequence, 1);
}

TEST(Budget, ExhaustedLedgerRejectsMisses) {
  CountOnesOracle oracle({2, 2, 1});
  BudgetLedger ledger(1);
  Dataset data;
  evaluate(oracle, DesignMatrix::from_bits(oracle.dims(), "0000"), ledger, data);
  EXPECT_THROW(evaluate(oracle, DesignMatrix::from_bits(oracle.dims(), "0001"), ledger, data),
               BudgetExhaustedError);
  EXPECT_EQ(ledger.used(), 1);
  EXPECT_EQ(data.size(), 1U);
}

TEST(Budget, ThousandDistinctDesigns) {
  CountOnesOracle oracle({4, 4, 1});
  BudgetLedger ledger(1000);
  Dataset data;
  for (int v = 0; v < 1000; ++v) {
    DesignMatrix d(oracle.dims());
    for (int c = 0; c < 16; ++c) d.mutable_cells()[static_cast<std::size_t>(c)] = (v >> c) & 1;
    evaluate(oracle, d, ledger, data);
  }
  EXPECT_EQ(ledger.used(), 1000);
  EXPECT_EQ(ledger.remaining(), 0);
}

TEST(Budget, ConcurrentSpendingNeverOvershoots) {
  BudgetLedger ledger(1000);
  std::vector<std::thread> threads;
  std::atomic<int> granted{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 400; ++i) granted += ledger.try_spend() ? 1 : 0;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(granted.load(), 1000);
  EXPECT_EQ(ledger.used(), 1000);
}

TEST(Budget, BatchRejectedUpFront) {
  CountOnesOracle oracle({3, 3, 1});
  BudgetLedger ledger(2);
  Dataset data;
  Rng rng(3);
  std::vector<EvaluationRequest> batch;
  for (int i = 0; i < 3; ++i) batch.push_back({sample_pixel_uniform(oracle.dims(), rng), ""});
  EXPECT_THROW(evaluate_batch(oracle, batch, ledger, data), BudgetExhaustedError);
  EXPECT_EQ(ledger.used(), 0);
  EXPECT_TRUE(data.empty());
}

TEST(Budget, BatchOrderIndependentOfJobs) {
  const auto oracle = make_oracle("synth-hga");
  Rng rng(5);
  std::vector<EvaluationRequest> batch;
  for (int i = 0; i < 12; ++i) batch.push_back({sample_pixel_uniform(oracle->dims(), rng), ""});
  batch.push_back(batch[3]);
  BudgetLedger l1(100), l4(100);
  Dataset d1, d4;
  evaluate_batch(*oracle, batch, l1, d1, 0, 1);
  evaluate_batch(*oracle, batch, l4, d4, 0, 4);
  ASSERT_EQ(d1.size(), 12U);
  ASSERT_EQ(d4.size(), 12U);
  for (std::size_t i = 0; i < d1.size(); ++i) {
    EXPECT_EQ(d1[i].design, d4[i].design);
    EXPECT_EQ(d1[i].aggregate, d4[i].aggregate);
    EXPECT_EQ(d1[i].sequence, d4[i].sequence);
  }
}

TEST(Dataset, BestPrefersEarliest) {
  Dataset data;
  const GridDims dims{1, 2, 1};
  data.append({DesignMatrix::from_bits(dims, "01"), "", {1.0}, 1.0, 0, 1});
  data.append({DesignMatrix::from_bits(dims, "10"), "", {1.0}, 1.0, 0, 2});
  EXPECT_EQ(data.best().sequence, 1);
  EXPECT_THROW(data.append({DesignMatrix::from_bits(dims, "01"), "", {2.0}, 2.0, 0, 3}),
               ConsistencyError);
}

// Direct evaluation of the response from its defining sum.
std::vector<double> response_by_definition(const SyntheticOracle& oracle, const DesignMatrix& x) {
  const auto blocks = oracle.features().blocks();
  std::vector<double> phi;
  for (const auto& b : blocks) {
    double ones = 0;
    for (int i = b.region.r_start; i <= b.region.r_end; ++i) {
      for (int j = b.region.c_start; j <= b.region.c_end; ++j) ones += x.at(b.layer, i, j);
    }
    phi.push_back(ones / b.region.area());
  }
  std::vector<double> r;
  for (double u : oracle.frequencies()) {
    double v = oracle.offset(u);
    for (std::size_t f = 0; f < phi.size(); ++f) v += oracle.feature_weight(f, u) * phi[f];
    r.push_back(v);
  }
  return r;
}

TEST(Synthetic, ZeroDesignIsOffset) {
  for (const char* id : {"synth-hga", "synth-dualfss"}) {
    const auto base = make_oracle(id);
    const auto& oracle = dynamic_cast<const SyntheticOracle&>(*base);
    const auto curve = oracle.response(DesignMatrix(oracle.dims()));
    for (std::size_t p = 0; p < curve.frequency.size(); ++p) {
      EXPECT_NEAR(curve.value[p], oracle.offset(curve.frequency[p]), 1e-12);
    }
  }
}

TEST(Synthetic, LinearInFeatures) {
  Rng rng(7);
  for (const char* id : {"synth-hga", "synth-dualfss"}) {
    const auto base = make_oracle(id);
    const auto& oracle = dynamic_cast<const SyntheticOracle&>(*base);
    for (int t = 0; t < 20; ++t) {
      const DesignMatrix x = sample_pixel_uniform(oracle.dims(), rng);
      const auto expected = response_by_definition(oracle, x);
      const auto curve = oracle.response(x);
      ASSERT_EQ(curve.value.size(), expected.size());
      for (std::size_t p = 0; p < expected.size(); ++p) {
        EXPECT_NEAR(curve.value[p], expected[p], 1e-9);
      }
    }
  }
}

TEST(Synthetic, Deterministic) {
  const auto a = make_oracle("synth-dualfss");
  const auto b = make_oracle("synth-dualfss");
  Rng rng(9);
  const DesignMatrix x = sample_pixel_uniform(a->dims(), rng);
  EXPECT_EQ(a->criteria(x), b->criteria(x));
  EXPECT_EQ(a->criteria(x), a->criteria(x));
  EXPECT_EQ(a->dims(), (GridDims{12, 12, 2}));
  EXPECT_EQ(make_oracle("synth-hga")->dims(), (GridDims{15, 20, 1}));
}

TEST(Synthetic, CriteriaAreBandExtrema) {
  Rng rng(11);
  for (const char* id : {"synth-hga", "synth-dualfss"}) {
    const auto base = make_oracle(id);
    const auto& oracle = dynamic_cast<const SyntheticOracle&>(*base);
    for (int t = 0; t < 20; ++t) {
      const DesignMatrix x = sample_pixel_uniform(oracle.dims(), rng);
      const auto curve = oracle.response(x);
      const auto y = oracle.criteria(x);
      ASSERT_EQ(y.size(), oracle.spec().bands.size());
      for (std::size_t k = 0; k < y.size(); ++k) {
        const Band& band = oracle.spec().bands[k];
        double best = band.sense == BandSense::kMin ? INFINITY : -INFINITY;
        for (std::size_t p = 0; p < curve.frequency.size(); ++p) {
          const double u = curve.frequency[p];
          if (u < band.lo || u > band.hi) continue;
          const double v = band.sign * curve.value[p];
          best = band.sense == BandSense::kMin ? std::min(best, v) : std::max(best, v);
        }
        EXPECT_EQ(y[k], best);
      }
    }
  }
}

TEST(Synthetic, BandEdgeCases) {
  ResponseCurve flat{{0.0, 0.25, 0.5, 0.75, 1.0}, {2.5, 2.5, 2.5, 2.5, 2.5}};
  const Band min_band{0.2, 0.9, BandSense::kMin, 1.0};
  EXPECT_EQ(criteria_from_response(std::span(&min_band, 1), flat)[0], 2.5);

  ResponseCurve curve{{0.0, 0.25, 0.5, 0.75, 1.0}, {1.0, -3.0, 7.0, 2.0, 0.0}};
  const Band narrow[] = {{0.4, 0.6, BandSense::kMin, 1.0}, {0.4, 0.6, BandSense::kMax, -1.0}};
  const auto y = criteria_from_response(narrow, curve);
  EXPECT_EQ(y[0], 7.0);
  EXPECT_EQ(y[1], -7.0);
}

TEST(Oracle, Factory) {
  EXPECT_EQ(make_oracle("count-ones:4x4")->dims(), (GridDims{4, 4, 1}));
  EXPECT_EQ(make_oracle("count-ones:3x5x2")->dims(), (GridDims{3, 5, 2}));
  EXPECT_THROW(make_oracle("nope"), ConfigError);
  EXPECT_THROW(make_oracle("count-ones:4"), ConfigError);
  const auto oracle = make_oracle("count-ones:2x2");
  EXPECT_THROW(oracle->criteria(DesignMatrix({3, 3, 1})), DimensionMismatchError);
}

}  // namespace
}  // namespace quadopt
