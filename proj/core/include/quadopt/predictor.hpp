#pragma once

// Surrogate models: a swappable Predictor interface, a ridge-regression
// reference implementation over multi-scale pooled features, and bootstrap
// ensembles.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "quadopt/features.hpp"
#include "quadopt/oracle.hpp"

namespace quadopt {

struct TrainConfig {
  double lambda = 1.0;  // ridge strength, > 0
  bool bootstrap = false;
  double resample_fraction = 1.0;  // in (0, 1]
  std::uint64_t seed = 0;

  void validate() const;
};

/// Predicts the full criterion vector; the aggregate is taken afterwards.
/// Implementations are immutable once built and safe for concurrent use.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual GridDims dims() const = 0;
  virtual std::size_t criterion_count() const = 0;
  virtual CriterionVector predict(const DesignMatrix& design) const = 0;

  virtual double predict_aggregate(const DesignMatrix& design) const {
    return aggregate_objective(predict(design));
  }
  std::vector<CriterionVector> predict_batch(std::span<const DesignMatrix> designs) const;
};

/// Fits a predictor from a dataset. `seed` drives any randomness (bootstrap
/// resampling); the same (dataset, seed) must give the same predictor.
class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual std::string name() const = 0;
  virtual std::shared_ptr<const Predictor> train(const Dataset& dataset,
                                                 std::uint64_t seed) const = 0;
};

class RidgePredictor : public Predictor {
 public:
  RidgePredictor(GridDims dims, std::vector<std::vector<double>> feature_weights,
                 std::vector<double> intercepts, double lambda, std::string fingerprint);

  GridDims dims() const override { return features_.dims(); }
  std::size_t criterion_count() const override { return intercepts_.size(); }
  CriterionVector predict(const DesignMatrix& design) const override;
  double predict_aggregate(const DesignMatrix& design) const override;

  const FeatureMap& features() const noexcept { return features_; }
  std::span<const double> feature_weights(std::size_t criterion) const {
    return feature_weights_.at(criterion);
  }
  std::span<const double> intercepts() const noexcept { return intercepts_; }
  double lambda() const noexcept { return lambda_; }
  const std::string& fingerprint() const noexcept { return fingerprint_; }

  /// {"feature_definition", "dims", "lambda", "fingerprint", "intercepts", "weights"}
  std::string to_json() const;
  static RidgePredictor from_json(const std::string& text);

 private:
  void check(const DesignMatrix& design) const;

  FeatureMap features_;
  std::vector<std::vector<double>> feature_weights_;
  std::vector<double> intercepts_;
  double lambda_;
  std::string fingerprint_;
  std::vector<std::vector<double>> cell_weights_;
};

/// Hex digest of a (design, criteria) multiset, independent of record order.
std::string dataset_fingerprint(std::span<const EvaluationRecord* const> records);

/// One ridge model per criterion on the multi-scale features. Records are
/// sorted by design before fitting, so the result does not depend on dataset
/// order. With `config.bootstrap`, fits on a seeded with-replacement resample
/// of round(fraction * n) records.
RidgePredictor train_ridge(const Dataset& dataset, const TrainConfig& config);
/// Same contract over a plain record list, which may contain repeated designs.
RidgePredictor train_ridge(std::span<const EvaluationRecord> records, const TrainConfig& config);

/// `count` bootstrap members; member i uses derive_seed(config.seed, "bootstrap", i).
std::vector<RidgePredictor> bootstrap_ensemble(std::span<const EvaluationRecord> records,
                                               const TrainConfig& config, std::size_t count);
/// Bootstrap members with explicitly chosen seeds.
std::vector<RidgePredictor> bootstrap_ensemble(std::span<const EvaluationRecord> records,
                                               const TrainConfig& config,
                                               std::span<const std::uint64_t> seeds);

class RidgeTrainer : public Trainer {
 public:
  explicit RidgeTrainer(TrainConfig config) : config_(config) { config_.validate(); }
  std::string name() const override { return "ridge"; }
  std::shared_ptr<const Predictor> train(const Dataset& dataset,
                                         std::uint64_t seed) const override;
  const TrainConfig& config() const noexcept { return config_; }

 private:
  TrainConfig config_;
};

/// The oracle itself used as a predictor. Only for tests and upper-bound runs.
class OraclePredictor : public Predictor {
 public:
  explicit OraclePredictor(std::shared_ptr<const Oracle> oracle) : oracle_(std::move(oracle)) {}
  GridDims dims() const override { return oracle_->dims(); }
  std::size_t criterion_count() const override { return oracle_->criterion_count(); }
  CriterionVector predict(const DesignMatrix& design) const override {
    return oracle_->criteria(design);
  }

 private:
  std::shared_ptr<const Oracle> oracle_;
};

class OracleTrainer : public Trainer {
 public:
  explicit OracleTrainer(std::shared_ptr<const Oracle> oracle) : oracle_(std::move(oracle)) {}
  std::string name() const override { return "oracle"; }
  std::shared_ptr<const Predictor> train(const Dataset&, std::uint64_t) const override {
    return std::make_shared<OraclePredictor>(oracle_);
  }

 private:
  std::shared_ptr<const Oracle> oracle_;
};

}  // namespace quadopt
