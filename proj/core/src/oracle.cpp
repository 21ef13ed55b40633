#include "quadopt/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <future>
#include <numbers>
#include <thread>

#include "quadopt/errors.hpp"

namespace quadopt {

double aggregate_objective(std::span<const double> criteria) {
  if (criteria.empty()) throw DimensionMismatchError("criterion vector is empty");
  double worst = criteria.front();
  for (double y : criteria) {
    if (!std::isfinite(y)) throw NonFiniteError("non-finite criterion value");
    worst = std::min(worst, y);
  }
  return worst;
}

BudgetLedger::BudgetLedger(std::int64_t cap, std::int64_t used) : used_(used), cap_(cap) {
  if (cap < 0 || used < 0 || used > cap) {
    throw ConfigError("budget ledger requires 0 <= used <= cap");
  }
}

bool BudgetLedger::try_spend(std::int64_t n) noexcept {
  std::int64_t current = used_.load();
  do {
    if (n < 0 || current + n > cap_) return false;
  } while (!used_.compare_exchange_weak(current, current + n));
  return true;
}

const EvaluationRecord* Dataset::find(const DesignMatrix& design) const {
  auto it = index_.find(design);
  return it == index_.end() ? nullptr : &records_[it->second];
}

const EvaluationRecord& Dataset::append(EvaluationRecord record) {
  if (index_.contains(record.design)) {
    throw ConsistencyError("design already present in dataset");
  }
  index_.emplace(record.design, records_.size());
  records_.push_back(std::move(record));
  return records_.back();
}

const EvaluationRecord& Dataset::best() const {
  if (records_.empty()) throw InsufficientDataError("dataset is empty");
  const EvaluationRecord* best = &records_.front();
  for (const auto& r : records_) {
    if (r.aggregate > best->aggregate) best = &r;
  }
  return *best;
}

void Oracle::check_dims(const DesignMatrix& design) const {
  if (design.dims() != dims()) {
    throw DimensionMismatchError("design " + to_string(design.dims()) +
                                 " does not match oracle " + to_string(dims()));
  }
}

CriterionVector CountOnesOracle::criteria(const DesignMatrix& design) const {
  check_dims(design);
  return {static_cast<double>(design.count_ones())};
}

CriterionVector FunctionOracle::criteria(const DesignMatrix& design) const {
  check_dims(design);
  CriterionVector y = fn_(design);
  if (y.size() != count_) throw DimensionMismatchError("oracle returned wrong criterion count");
  return y;
}

// ---------------------------------------------------------------------------
// Synthetic simulators

OracleSpec synth_dualfss_spec() {
  // Physical sweep 10..35 GHz mapped onto [0, 1].
  OracleSpec spec;
  spec.family = "synth-dualfss";
  spec.dims = {12, 12, 2};
  spec.bands = {{0.86, 0.98, BandSense::kMin, -1.0},
                {0.02, 0.22, BandSense::kMax, -1.0}};
  spec.seed = 0x5eedf55ULL;
  return spec;
}

OracleSpec synth_hga_spec() {
  // Physical sweep 2..6 GHz mapped onto [0, 1].
  OracleSpec spec;
  spec.family = "synth-hga";
  spec.dims = {15, 20, 1};
  spec.bands = {{0.1125, 0.1375, BandSense::kMin, 1.0},
                {0.75, 1.0, BandSense::kMin, 1.0}};
  spec.seed = 0x5eeda4aULL;
  return spec;
}

CriterionVector criteria_from_response(std::span<const Band> bands,
                                       const ResponseCurve& curve) {
  CriterionVector out;
  out.reserve(bands.size());
  for (const Band& band : bands) {
    bool any = false;
    double best = 0.0;
    for (std::size_t p = 0; p < curve.frequency.size(); ++p) {
      const double u = curve.frequency[p];
      if (u < band.lo || u > band.hi) continue;
      const double v = band.sign * curve.value[p];
      if (!any) {
        best = v;
        any = true;
      } else if (band.sense == BandSense::kMin) {
        best = std::min(best, v);
      } else {
        best = std::max(best, v);
      }
    }
    if (!any) throw ConfigError("band contains no frequency grid point");
    out.push_back(best);
  }
  return out;
}

double SyntheticOracle::Curve::operator()(double u) const {
  double acc = 0.0;
  for (const Term& t : terms) {
    acc += t.amplitude * std::sin(2.0 * std::numbers::pi * t.cycles * u + t.phase);
  }
  return scale * acc;
}

SyntheticOracle::SyntheticOracle(OracleSpec spec)
    : spec_(std::move(spec)), features_(spec_.dims) {
  if (spec_.bands.empty()) throw ConfigError("oracle spec needs at least one band");
  if (spec_.points_per_band < 1) throw ConfigError("points_per_band must be positive");
  for (const Band& b : spec_.bands) {
    if (!(b.lo <= b.hi)) throw ConfigError("band bounds must satisfy lo <= hi");
  }

  for (const Band& b : spec_.bands) {
    const int n = b.lo == b.hi ? 1 : spec_.points_per_band;
    for (int j = 0; j < n; ++j) {
      frequency_.push_back(n == 1 ? b.lo : b.lo + (b.hi - b.lo) * j / (n - 1));
    }
  }
  std::sort(frequency_.begin(), frequency_.end());
  frequency_.erase(std::unique(frequency_.begin(), frequency_.end()), frequency_.end());

  Rng rng(spec_.seed);
  std::normal_distribution<double> amplitude(0.0, 1.0);
  std::uniform_real_distribution<double> cycles(0.5, 3.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  auto make_curve = [&](double scale) {
    Curve c;
    const std::size_t count = 1 + uniform_index(rng, 5);
    const double norm = 1.0 / std::sqrt(static_cast<double>(count));
    for (std::size_t s = 0; s < count; ++s) {
      const double a = amplitude(rng) * norm;
      const double k = cycles(rng);
      const double p = phase(rng);
      c.terms.push_back({a, k, p});
    }
    c.scale = scale;
    return c;
  };

  std::vector<int> blocks_per_level(FeatureMap::kLevels, 0);
  for (const auto& b : features_.blocks()) {
    if (b.layer == 0) ++blocks_per_level[static_cast<std::size_t>(b.level)];
  }
  offset_curve_ = make_curve(1.0);
  for (const auto& b : features_.blocks()) {
    weight_curves_.push_back(
        make_curve(spec_.level_gain[static_cast<std::size_t>(b.level)] /
                   blocks_per_level[static_cast<std::size_t>(b.level)]));
  }

  const std::size_t cells = static_cast<std::size_t>(spec_.dims.cells());
  bias_.resize(frequency_.size());
  cell_coef_.resize(frequency_.size() * cells);
  std::vector<double> w(features_.size());
  for (std::size_t p = 0; p < frequency_.size(); ++p) {
    const double u = frequency_[p];
    bias_[p] = offset_curve_(u);
    for (std::size_t f = 0; f < w.size(); ++f) w[f] = weight_curves_[f](u);
    const std::vector<double> folded = features_.fold(w);
    std::copy(folded.begin(), folded.end(), cell_coef_.begin() + static_cast<std::ptrdiff_t>(p * cells));
  }
}

double SyntheticOracle::feature_weight(std::size_t feature, double u) const {
  return weight_curves_.at(feature)(u);
}

double SyntheticOracle::offset(double u) const { return offset_curve_(u); }

ResponseCurve SyntheticOracle::response(const DesignMatrix& design) const {
  check_dims(design);
  if (spec_.latency_ms > 0.0) {
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(spec_.latency_ms));
  }
  const auto x = design.cells();
  const std::size_t cells = x.size();
  ResponseCurve curve;
  curve.frequency = frequency_;
  curve.value.resize(frequency_.size());
  for (std::size_t p = 0; p < frequency_.size(); ++p) {
    const double* coef = cell_coef_.data() + p * cells;
    double acc = bias_[p];
    for (std::size_t c = 0; c < cells; ++c) {
      if (x[c]) acc += coef[c];
    }
    curve.value[p] = acc;
  }
  return curve;
}

CriterionVector SyntheticOracle::criteria(const DesignMatrix& design) const {
  return criteria_from_response(spec_.bands, response(design));
}

std::unique_ptr<Oracle> make_oracle(std::string_view id, double latency_ms) {
  if (id == "synth-dualfss" || id == "synth-hga") {
    OracleSpec spec = id == "synth-hga" ? synth_hga_spec() : synth_dualfss_spec();
    spec.latency_ms = latency_ms;
    return std::make_unique<SyntheticOracle>(std::move(spec));
  }
  constexpr std::string_view kCountOnes = "count-ones:";
  if (id.starts_with(kCountOnes)) {
    std::string_view rest = id.substr(kCountOnes.size());
    int values[3] = {0, 0, 1};
    int count = 0;
    while (!rest.empty() && count < 3) {
      auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), values[count]);
      if (ec != std::errc{}) break;
      ++count;
      rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
      if (!rest.empty() && rest.front() == 'x') rest.remove_prefix(1);
      else break;
    }
    if (rest.empty() && count >= 2 && values[0] > 0 && values[1] > 0 && values[2] > 0) {
      return std::make_unique<CountOnesOracle>(GridDims{values[0], values[1], values[2]});
    }
  }
  throw ConfigError("unknown oracle id '" + std::string(id) + "'");
}

// ---------------------------------------------------------------------------
// Metered evaluation

EvaluationRecord evaluate(const Oracle& oracle, const DesignMatrix& design,
                          BudgetLedger& ledger, Dataset& dataset, int iteration,
                          std::string layout) {
  EvaluationRequest request{design, std::move(layout)};
  return evaluate_batch(oracle, std::span<const EvaluationRequest>(&request, 1), ledger,
                        dataset, iteration, 1)
      .front();
}

std::vector<EvaluationRecord> evaluate_batch(const Oracle& oracle,
                                             std::span<const EvaluationRequest> batch,
                                             BudgetLedger& ledger, Dataset& dataset,
                                             int iteration, unsigned jobs) {
  // Distinct misses in submission order.
  std::vector<std::size_t> misses;
  std::unordered_map<DesignMatrix, std::size_t, DesignHash> seen;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].design.dims() != oracle.dims()) {
      throw DimensionMismatchError("design " + to_string(batch[i].design.dims()) +
                                   " does not match oracle " + to_string(oracle.dims()));
    }
    if (dataset.contains(batch[i].design)) continue;
    if (seen.emplace(batch[i].design, i).second) misses.push_back(i);
  }
  const std::int64_t base = ledger.used();
  if (!ledger.try_spend(static_cast<std::int64_t>(misses.size()))) {
    throw BudgetExhaustedError("evaluation needs " + std::to_string(misses.size()) +
                               " simulations but only " +
                               std::to_string(ledger.remaining()) + " remain");
  }

  std::vector<CriterionVector> results(misses.size());
  const unsigned workers =
      std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(misses.size())));
  if (workers <= 1) {
    for (std::size_t k = 0; k < misses.size(); ++k) {
      results[k] = oracle.criteria(batch[misses[k]].design);
    }
  } else {
    std::vector<std::future<void>> futures;
    for (unsigned w = 0; w < workers; ++w) {
      futures.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t k = w; k < misses.size(); k += workers) {
          results[k] = oracle.criteria(batch[misses[k]].design);
        }
      }));
    }
    for (auto& f : futures) f.get();
  }

  for (std::size_t k = 0; k < misses.size(); ++k) {
    const EvaluationRequest& req = batch[misses[k]];
    EvaluationRecord record;
    record.design = req.design;
    record.layout = req.layout;
    record.aggregate = aggregate_objective(results[k]);
    record.criteria = std::move(results[k]);
    record.iteration = iteration;
    record.sequence = base + static_cast<std::int64_t>(k) + 1;
    dataset.append(std::move(record));
  }

  std::vector<EvaluationRecord> out;
  out.reserve(batch.size());
  for (const auto& req : batch) out.push_back(*dataset.find(req.design));
  return out;
}

}  // namespace quadopt
