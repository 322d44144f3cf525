#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "regcal/elastic_net.hpp"
#include "regcal/types.hpp"

namespace regcal {

// Polynomial feature map over base statistics. Linear terms are always
// present; squares and pairwise products are opt-in. For M base statistics
// the expanded count is M + M (squares) + M*(M-1)/2 (pairwise). Expanded
// names are "<s>" , "<s>^2" and "<a>*<b>" with a before b in base order.
struct FeatureExpansion {
  bool squares = false;
  bool pairwise = false;

  std::size_t size(std::size_t m) const {
    return m + (squares ? m : 0) + (pairwise ? m * (m - 1) / 2 : 0);
  }
  std::vector<std::string> names(const std::vector<std::string>& base) const;
  void apply(std::span<const double> base, std::vector<double>& out) const;
};

SummaryVector expand_features(const SummaryVector& s, const FeatureExpansion& expansion);

struct EstimateResult {
  std::vector<double> values;        // parameter order of the training space
  std::vector<bool> out_of_bounds;   // flagged, never clipped
};

struct ParameterReport {
  std::string parameter;
  double bias = 0.0;          // mean(real - estimate)
  double rmse = 0.0;
  double predictivity = 0.0;  // out-of-sample R^2 against the mean predictor
};

struct EstimationReport {
  std::vector<ParameterReport> parameters;
  std::size_t n_test = 0;
  std::string to_csv() const;
  void save_csv(const std::string& path) const;
};

// One elastic net per parameter, trained on expanded statistics.
class FittedEstimator {
 public:
  FittedEstimator() = default;

  const ParameterSpace& space() const { return space_; }
  const std::vector<std::string>& base_statistics() const { return base_statistics_; }
  const FeatureExpansion& expansion() const { return expansion_; }
  const RegressionModel& model(std::size_t k) const { return models_.at(k); }

  // Estimates every parameter from one summary vector. Statistics are
  // looked up by name; extra statistics are ignored, missing ones throw.
  EstimateResult estimate(const SummaryVector& s) const;

  nlohmann::json to_json() const;
  static FittedEstimator from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static FittedEstimator load(const std::string& path);

 private:
  friend FittedEstimator train_estimator(const ExperimentTable&, const FeatureExpansion&,
                                         const PenaltySpec&, std::uint64_t, int);
  friend class BoundEstimator;
  ParameterSpace space_;
  std::vector<std::string> base_statistics_;
  FeatureExpansion expansion_;
  std::vector<RegressionModel> models_;
};

// Feature resolution done once for repeated estimation over table rows.
class BoundEstimator {
 public:
  BoundEstimator(const FittedEstimator& est, const std::vector<std::string>& table_stats);
  // base_row holds the table's statistics in table column order.
  void estimate(std::span<const double> base_row, std::vector<double>& out) const;

 private:
  const FittedEstimator& est_;
  std::vector<std::size_t> base_index_;  // table column per base statistic
  std::vector<std::vector<std::pair<std::size_t, double>>> bound_;
  mutable std::vector<double> base_buf_, expanded_buf_;
};

// Fits one cross-validated elastic net per parameter (parallel across
// parameters). Marks the table as used for fitting.
FittedEstimator train_estimator(const ExperimentTable& table,
                                const FeatureExpansion& expansion,
                                const PenaltySpec& spec, std::uint64_t seed,
                                int jobs = 0);

// Out-of-sample metrics per parameter. Refuses tables that were used for
// training and empty tables.
EstimationReport evaluate_estimator(const FittedEstimator& est, const ExperimentTable& test);

// Metric helpers (real = generating values, est = estimates).
double estimation_bias(std::span<const double> real, std::span<const double> est);
double estimation_rmse(std::span<const double> real, std::span<const double> est);
// 1 - SSE/SST; exactly 1 for a perfect predictor and exactly 0 for the
// mean predictor (same summation order as the internal mean). NaN when the
// real values are constant.
double predictivity(std::span<const double> real, std::span<const double> est);

}  // namespace regcal
