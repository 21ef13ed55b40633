#pragma once

#include <cstddef>
#include <span>

namespace quadopt {

double median(std::span<const double> values);
double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double stddev(std::span<const double> values);

struct WilcoxonResult {
  double w_plus = 0.0;    // sum of ranks of positive differences
  std::size_t n = 0;      // non-zero differences used
  double p_value = 1.0;   // one-sided, H1: a > b
};

/// Exact one-sided Wilcoxon signed-rank test on paired samples. Zero
/// differences are dropped, tied magnitudes get average ranks and the null
/// distribution is enumerated over all 2^n sign assignments (n <= 20).
WilcoxonResult wilcoxon_signed_rank_greater(std::span<const double> a,
                                            std::span<const double> b);

}  // namespace quadopt
