#include "quadopt/predictor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <numeric>

#include "quadopt/errors.hpp"

namespace quadopt {

void TrainConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("train.lambda must be > 0");
  if (!(resample_fraction > 0.0 && resample_fraction <= 1.0)) {
    throw ConfigError("train.resample_fraction must be in (0, 1]");
  }
}

std::vector<CriterionVector> Predictor::predict_batch(
    std::span<const DesignMatrix> designs) const {
  std::vector<CriterionVector> out;
  out.reserve(designs.size());
  for (const auto& d : designs) out.push_back(predict(d));
  return out;
}

// ---------------------------------------------------------------------------
// RidgePredictor

RidgePredictor::RidgePredictor(GridDims dims, std::vector<std::vector<double>> feature_weights,
                               std::vector<double> intercepts, double lambda,
                               std::string fingerprint)
    : features_(dims),
      feature_weights_(std::move(feature_weights)),
      intercepts_(std::move(intercepts)),
      lambda_(lambda),
      fingerprint_(std::move(fingerprint)) {
  if (feature_weights_.size() != intercepts_.size() || intercepts_.empty()) {
    throw DimensionMismatchError("ridge model needs one weight vector per intercept");
  }
  for (const auto& w : feature_weights_) {
    if (w.size() != features_.size()) {
      throw DimensionMismatchError("ridge weight vector length does not match features");
    }
    cell_weights_.push_back(features_.fold(w));
  }
}

void RidgePredictor::check(const DesignMatrix& design) const {
  if (design.dims() != features_.dims()) {
    throw DimensionMismatchError("design " + to_string(design.dims()) +
                                 " does not match predictor " + to_string(features_.dims()));
  }
}

CriterionVector RidgePredictor::predict(const DesignMatrix& design) const {
  check(design);
  const auto x = design.cells();
  CriterionVector out(intercepts_.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double* w = cell_weights_[k].data();
    double acc = intercepts_[k];
    for (std::size_t c = 0; c < x.size(); ++c) acc += x[c] * w[c];
    out[k] = acc;
  }
  return out;
}

double RidgePredictor::predict_aggregate(const DesignMatrix& design) const {
  check(design);
  const auto x = design.cells();
  double worst = 0.0;
  for (std::size_t k = 0; k < intercepts_.size(); ++k) {
    const double* w = cell_weights_[k].data();
    double acc = intercepts_[k];
    for (std::size_t c = 0; c < x.size(); ++c) acc += x[c] * w[c];
    worst = k == 0 ? acc : std::min(worst, acc);
  }
  return worst;
}

std::string RidgePredictor::to_json() const {
  const GridDims d = features_.dims();
  nlohmann::json j;
  j["feature_definition"] = std::string(FeatureMap::kId);
  j["dims"] = {d.rows, d.cols, d.layers};
  j["lambda"] = lambda_;
  j["fingerprint"] = fingerprint_;
  j["intercepts"] = intercepts_;
  j["weights"] = feature_weights_;
  return j.dump();
}

RidgePredictor RidgePredictor::from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("feature_definition").get<std::string>() != FeatureMap::kId) {
      throw ConfigError("unsupported feature definition");
    }
    const auto dims = j.at("dims").get<std::vector<int>>();
    if (dims.size() != 3) throw ConfigError("model dims must have three entries");
    return RidgePredictor({dims[0], dims[1], dims[2]},
                          j.at("weights").get<std::vector<std::vector<double>>>(),
                          j.at("intercepts").get<std::vector<double>>(),
                          j.at("lambda").get<double>(), j.at("fingerprint").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Training

std::string dataset_fingerprint(std::span<const EvaluationRecord* const> records) {
  std::vector<const EvaluationRecord*> sorted(records.begin(), records.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto* a, const auto* b) { return a->design < b->design; });
  std::uint64_t h = fnv1a64("");
  for (const auto* r : sorted) {
    const auto cells = r->design.cells();
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(cells.data()), cells.size()), h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(r->criteria.data()),
                                 r->criteria.size() * sizeof(double)),
                h);
    h = fnv1a64(";", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

RidgePredictor fit(std::vector<const EvaluationRecord*> rows, double lambda) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto* a, const auto* b) { return a->design < b->design; });
  const GridDims dims = rows.front()->design.dims();
  const std::size_t p = rows.front()->criteria.size();
  for (const auto* r : rows) {
    if (r->design.dims() != dims) {
      throw DimensionMismatchError("training records have mixed design dimensions");
    }
    if (r->criteria.size() != p) {
      throw DimensionMismatchError("training records have mixed criterion counts");
    }
  }
  const FeatureMap features(dims);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto f = static_cast<Eigen::Index>(features.size());

  Eigen::MatrixXd x(n, f);
  Eigen::MatrixXd y(n, static_cast<Eigen::Index>(p));
  std::vector<double> phi(features.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto* r = rows[static_cast<std::size_t>(i)];
    features.compute_into(r->design, phi);
    for (Eigen::Index c = 0; c < f; ++c) x(i, c) = phi[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k < p; ++k) y(i, static_cast<Eigen::Index>(k)) = r->criteria[k];
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const Eigen::RowVectorXd y_mean = y.colwise().mean();
  x.rowwise() -= x_mean;
  y.rowwise() -= y_mean;

  // Primal or dual normal equations, whichever system is smaller.
  Eigen::MatrixXd w;
  if (f <= n) {
    Eigen::MatrixXd a = x.transpose() * x;
    a.diagonal().array() += lambda;
    w = a.ldlt().solve(x.transpose() * y);
  } else {
    Eigen::MatrixXd g = x * x.transpose();
    g.diagonal().array() += lambda;
    w = x.transpose() * g.ldlt().solve(y);
  }
  const Eigen::RowVectorXd intercept = y_mean - x_mean * w;

  std::vector<std::vector<double>> weights(p, std::vector<double>(features.size()));
  std::vector<double> intercepts(p);
  for (std::size_t k = 0; k < p; ++k) {
    for (Eigen::Index c = 0; c < f; ++c) {
      weights[k][static_cast<std::size_t>(c)] = w(c, static_cast<Eigen::Index>(k));
    }
    intercepts[k] = intercept(static_cast<Eigen::Index>(k));
    for (double v : weights[k]) {
      if (!std::isfinite(v)) throw NonFiniteError("ridge fit produced non-finite weights");
    }
  }
  return RidgePredictor(dims, std::move(weights), std::move(intercepts), lambda,
                        dataset_fingerprint(rows));
}

std::vector<const EvaluationRecord*> resample(std::span<const EvaluationRecord> records,
                                              double fraction, std::uint64_t seed) {
  Rng rng(seed);
  const auto count = static_cast<std::size_t>(
      std::max(2.0, std::round(fraction * static_cast<double>(records.size()))));
  std::vector<const EvaluationRecord*> rows;
  rows.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    rows.push_back(&records[uniform_index(rng, records.size())]);
  }
  return rows;
}

}  // namespace

RidgePredictor train_ridge(std::span<const EvaluationRecord> records,
                           const TrainConfig& config) {
  config.validate();
  if (records.size() < 2) {
    throw InsufficientDataError("training needs at least 2 records, got " +
                                std::to_string(records.size()));
  }
  std::vector<const EvaluationRecord*> rows;
  if (config.bootstrap) {
    rows = resample(records, config.resample_fraction, config.seed);
  } else {
    for (const auto& r : records) rows.push_back(&r);
  }
  return fit(std::move(rows), config.lambda);
}

RidgePredictor train_ridge(const Dataset& dataset, const TrainConfig& config) {
  return train_ridge(dataset.records(), config);
}

std::vector<RidgePredictor> bootstrap_ensemble(std::span<const EvaluationRecord> records,
                                               const TrainConfig& config,
                                               std::span<const std::uint64_t> seeds) {
  if (seeds.size() < 2) throw ConfigError("bootstrap ensemble needs at least 2 members");
  std::vector<RidgePredictor> out;
  out.reserve(seeds.size());
  for (std::uint64_t s : seeds) {
    TrainConfig member = config;
    member.bootstrap = true;
    member.seed = s;
    out.push_back(train_ridge(records, member));
  }
  return out;
}

std::vector<RidgePredictor> bootstrap_ensemble(std::span<const EvaluationRecord> records,
                                               const TrainConfig& config, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = derive_seed(config.seed, "bootstrap", i);
  return bootstrap_ensemble(records, config, seeds);
}

std::shared_ptr<const Predictor> RidgeTrainer::train(const Dataset& dataset,
                                                     std::uint64_t seed) const {
  TrainConfig cfg = config_;
  cfg.seed = seed;
  return std::make_shared<RidgePredictor>(train_ridge(dataset, cfg));
}

}  // namespace quadopt
