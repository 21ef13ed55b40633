#include "quadopt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "quadopt/errors.hpp"

namespace quadopt {

double median(std::span<const double> values) {
  if (values.empty()) throw DimensionMismatchError("median of an empty list");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw DimensionMismatchError("mean of an empty list");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

WilcoxonResult wilcoxon_signed_rank_greater(std::span<const double> a,
                                            std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatchError("wilcoxon: unpaired samples");
  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diff.push_back(d);
  }
  WilcoxonResult result;
  result.n = diff.size();
  if (diff.empty()) return result;
  if (diff.size() > 20) throw ConfigError("wilcoxon: exact test limited to 20 pairs");

  std::vector<std::size_t> order(diff.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return std::abs(diff[x]) < std::abs(diff[y]); });
  // Ranks doubled so average ranks of ties stay integral.
  std::vector<long> rank2(diff.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && std::abs(diff[order[j]]) == std::abs(diff[order[i]])) ++j;
    const long r2 = static_cast<long>(i + 1 + j);  // (i+1 + j) / 2 * 2
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = r2;
    i = j;
  }
  long observed = 0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    if (diff[i] > 0) observed += rank2[i];
  }
  result.w_plus = static_cast<double>(observed) / 2.0;

  const std::size_t n = diff.size();
  std::size_t at_least = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    long w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) w += rank2[i];
    }
    if (w >= observed) ++at_least;
  }
  result.p_value = static_cast<double>(at_least) / std::ldexp(1.0, static_cast<int>(n));
  return result;
}

}  // namespace quadopt
