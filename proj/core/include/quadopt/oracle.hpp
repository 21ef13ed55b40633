#pragma once

// Expensive-evaluation abstraction: criterion vectors, the worst-case
// aggregate, budget accounting, the evaluated dataset, and deterministic
// synthetic simulators standing in for a full-wave solver.

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "quadopt/features.hpp"
#include "quadopt/layout.hpp"

namespace quadopt {

using CriterionVector = std::vector<double>;

/// Worst case over criteria: min_k y_k. Throws NonFiniteError on NaN/inf and
/// DimensionMismatchError on an empty vector.
double aggregate_objective(std::span<const double> criteria);

/// Counts simulator calls against a hard cap. Spending is all-or-nothing and
/// atomic, so concurrent dispatchers can share one ledger.
class BudgetLedger {
 public:
  explicit BudgetLedger(std::int64_t cap, std::int64_t used = 0);

  std::int64_t used() const noexcept { return used_.load(); }
  std::int64_t cap() const noexcept { return cap_; }
  std::int64_t remaining() const noexcept { return cap_ - used(); }

  /// Spends `n` evaluations if they fit; returns false (spending nothing)
  /// otherwise.
  bool try_spend(std::int64_t n = 1) noexcept;

 private:
  std::atomic<std::int64_t> used_;
  std::int64_t cap_;
};

struct EvaluationRecord {
  DesignMatrix design;
  std::string layout;  // serialized LayoutStack, empty for pixel designs
  CriterionVector criteria;
  double aggregate = 0.0;
  int iteration = 0;
  /// Logical timestamp: the ledger count right after this evaluation was
  /// charged. Wall-clock time is deliberately not recorded so logs stay
  /// reproducible.
  std::int64_t sequence = 0;
};

/// Ordered evaluated records with O(1) duplicate lookup.
class Dataset {
 public:
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const EvaluationRecord& operator[](std::size_t i) const { return records_.at(i); }
  std::span<const EvaluationRecord> records() const noexcept { return records_; }
  auto begin() const noexcept { return records_.begin(); }
  auto end() const noexcept { return records_.end(); }

  const EvaluationRecord* find(const DesignMatrix& design) const;
  bool contains(const DesignMatrix& design) const { return find(design) != nullptr; }

  /// Throws ConsistencyError if the design is already present.
  const EvaluationRecord& append(EvaluationRecord record);

  /// Highest aggregate; the earliest record wins ties. Throws on empty.
  const EvaluationRecord& best() const;

 private:
  std::vector<EvaluationRecord> records_;
  std::unordered_map<DesignMatrix, std::size_t, DesignHash> index_;
};

/// Ground-truth evaluator. Implementations must be pure and thread-safe.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::string name() const = 0;
  virtual GridDims dims() const = 0;
  virtual std::size_t criterion_count() const = 0;
  virtual CriterionVector criteria(const DesignMatrix& design) const = 0;

 protected:
  void check_dims(const DesignMatrix& design) const;
};

/// One criterion: the number of ones. Its optimum is the all-ones design.
class CountOnesOracle : public Oracle {
 public:
  explicit CountOnesOracle(GridDims dims) : dims_(dims) {}
  std::string name() const override { return "count-ones:" + to_string(dims_); }
  GridDims dims() const override { return dims_; }
  std::size_t criterion_count() const override { return 1; }
  CriterionVector criteria(const DesignMatrix& design) const override;

 private:
  GridDims dims_;
};

/// Wraps an arbitrary function; handy for planted test problems.
class FunctionOracle : public Oracle {
 public:
  using Fn = std::function<CriterionVector(const DesignMatrix&)>;
  FunctionOracle(std::string name, GridDims dims, std::size_t criteria, Fn fn)
      : name_(std::move(name)), dims_(dims), count_(criteria), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  GridDims dims() const override { return dims_; }
  std::size_t criterion_count() const override { return count_; }
  CriterionVector criteria(const DesignMatrix& design) const override;

 private:
  std::string name_;
  GridDims dims_;
  std::size_t count_;
  Fn fn_;
};

// ---------------------------------------------------------------------------
// Synthetic simulators

enum class BandSense { kMin, kMax };

/// A criterion: extremum of sign * r(u) over u in [lo, hi] (normalized units).
struct Band {
  double lo = 0.0;
  double hi = 1.0;
  BandSense sense = BandSense::kMin;
  double sign = 1.0;
};

struct OracleSpec {
  std::string family;
  GridDims dims;
  std::vector<Band> bands;
  std::uint64_t seed = 0;
  int points_per_band = 101;
  /// Total gain of each pooling level (full, halves, quarters, cells); a
  /// level-l weight curve is scaled by level_gain[l] / (blocks at level l).
  std::array<double, 4> level_gain = {4.0, 4.0, 4.0, 4.0};
  /// Artificial per-evaluation delay; models an expensive solver.
  double latency_ms = 0.0;
};

/// 12x12x2, two criteria: min over a band of -r and max over a band of -r.
OracleSpec synth_dualfss_spec();
/// 15x20, two criteria, both min over their band of r.
OracleSpec synth_hga_spec();

struct ResponseCurve {
  std::vector<double> frequency;
  std::vector<double> value;
};

/// Band extrema of a response curve: for each band, min or max of
/// sign * value over the grid points u with lo <= u <= hi.
CriterionVector criteria_from_response(std::span<const Band> bands,
                                       const ResponseCurve& curve);

/// Linear multi-scale response:
///
///   r(u; x) = w_0(u) + sum_f w_f(u) * phi_f(x)
///
/// where phi are the FeatureMap features of x and every weight curve is a
/// seeded sum of at most five sinusoids in u. Weight curves of level-l
/// features are scaled by 1/(number of level-l blocks) so each scale can move
/// the response by a comparable amount.
class SyntheticOracle : public Oracle {
 public:
  explicit SyntheticOracle(OracleSpec spec);

  std::string name() const override { return spec_.family; }
  GridDims dims() const override { return spec_.dims; }
  std::size_t criterion_count() const override { return spec_.bands.size(); }
  CriterionVector criteria(const DesignMatrix& design) const override;

  ResponseCurve response(const DesignMatrix& design) const;

  const OracleSpec& spec() const noexcept { return spec_; }
  const FeatureMap& features() const noexcept { return features_; }
  std::span<const double> frequencies() const noexcept { return frequency_; }

  /// w_f(u) for feature f.
  double feature_weight(std::size_t feature, double u) const;
  /// w_0(u).
  double offset(double u) const;

 private:
  struct Term {
    double amplitude;
    double cycles;
    double phase;
  };
  struct Curve {
    std::vector<Term> terms;
    double scale;
    double operator()(double u) const;
  };

  OracleSpec spec_;
  FeatureMap features_;
  std::vector<double> frequency_;
  Curve offset_curve_;
  std::vector<Curve> weight_curves_;
  // Folded form: r(u_p) = bias_[p] + sum_c x_c * cell_coef_[p * cells + c].
  std::vector<double> bias_;
  std::vector<double> cell_coef_;
};

/// Builds an oracle from its id: "synth-dualfss", "synth-hga",
/// "count-ones:RxC" or "count-ones:RxCxL". Throws ConfigError otherwise.
std::unique_ptr<Oracle> make_oracle(std::string_view id, double latency_ms = 0.0);

// ---------------------------------------------------------------------------
// Metered evaluation

struct EvaluationRequest {
  DesignMatrix design;
  std::string layout;
};

/// Cache hit: returns the stored record and spends nothing. Miss: computes
/// the criteria, charges one evaluation and appends the record. Throws
/// BudgetExhaustedError if a miss does not fit in the ledger.
EvaluationRecord evaluate(const Oracle& oracle, const DesignMatrix& design,
                          BudgetLedger& ledger, Dataset& dataset, int iteration = 0,
                          std::string layout = {});

/// Evaluates a batch, running the misses on up to `jobs` threads. The whole
/// batch is rejected up front if its distinct misses exceed the remaining
/// budget. New records are appended in submission order regardless of
/// completion order, so results do not depend on `jobs`.
std::vector<EvaluationRecord> evaluate_batch(const Oracle& oracle,
                                             std::span<const EvaluationRequest> batch,
                                             BudgetLedger& ledger, Dataset& dataset,
                                             int iteration = 0, unsigned jobs = 1);

}  // namespace quadopt
