#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "regcal/types.hpp"

namespace regcal {

enum class FoldAssignment {
  seeded,        // folds from a seeded shuffle of row indices
  content_hash,  // folds from a hash of row bytes; fit is row-order invariant
};

enum class LambdaRule {
  min_cv,  // lambda with the smallest CV error; ties go to the larger lambda
  one_se,  // largest lambda within one standard error of that minimum
};

// Penalty and cross-validation settings shared by the regression and the
// classifier fits. alpha mixes the L1 and squared-L2 terms: the penalty is
// lambda * (alpha*|b|_1 + (1-alpha)*|b|_2^2 / 2) on standardized features.
struct PenaltySpec {
  double alpha = 0.5;
  std::vector<double> lambda_path;  // empty = automatic path
  int path_length = 100;
  double lambda_min_ratio = 1e-4;
  int cv_folds = 10;
  FoldAssignment fold_assignment = FoldAssignment::seeded;
  LambdaRule lambda_rule = LambdaRule::min_cv;
  double tolerance = 1e-7;
  long max_sweeps = 100000;

  void validate() const;
};

// Fit-time byproducts. Only converged / sweeps / training_rmse are
// persisted; the vectors exist for in-memory inspection and tests.
struct FitDiagnostics {
  bool converged = true;
  long sweeps = 0;
  double training_rmse = 0.0;
  std::vector<double> lambda_path;
  std::vector<double> cv_errors;        // mean squared error per lambda
  std::vector<double> cv_se;            // standard error of that estimate
  std::vector<int> nonzero_per_lambda;  // from the final full-data path fit
  std::size_t selected_index = 0;
  std::vector<double> training_residuals;  // y - fitted, original scale
};

struct Coefficient {
  std::string feature;
  double value = 0.0;  // original (unstandardized) scale
};

class RegressionModel {
 public:
  RegressionModel() = default;

  double intercept() const { return intercept_; }
  const std::vector<Coefficient>& coefficients() const { return coefs_; }
  double alpha() const { return alpha_; }
  double lambda() const { return lambda_; }
  double cv_error() const { return cv_error_; }
  const FitDiagnostics& diagnostics() const { return diagnostics_; }

  // intercept + sum of coefficient * named statistic; throws if a
  // referenced feature is missing from s.
  double predict(const SummaryVector& s) const;

  // Resolves coefficient features against a fixed feature ordering once,
  // for repeated prediction over rows laid out in that order.
  std::vector<std::pair<std::size_t, double>> bind(
      const std::vector<std::string>& feature_order) const;
  static double predict_bound(const std::vector<std::pair<std::size_t, double>>& bound,
                              double intercept, const double* row);

  nlohmann::json to_json() const;
  static RegressionModel from_json(const nlohmann::json& j);

 private:
  friend RegressionModel fit_elastic_net(const Eigen::MatrixXd&,
                                         const Eigen::VectorXd&,
                                         const std::vector<std::string>&,
                                         const PenaltySpec&, std::uint64_t);
  double intercept_ = 0.0;
  std::vector<Coefficient> coefs_;
  double alpha_ = 0.5;
  double lambda_ = 0.0;
  double cv_error_ = 0.0;
  FitDiagnostics diagnostics_;
};

// Cross-validated elastic net. Features are standardized internally to
// zero mean and unit population variance (y is centered, not scaled);
// reported coefficients are on the original scale. The selected lambda
// minimizes CV mean squared error; ties go to the larger lambda. With
// lambda_rule = one_se the largest lambda whose CV error stays within one
// standard error of that minimum is used instead. Constant columns get
// coefficient exactly 0. Throws std::invalid_argument on malformed input
// (non-finite values, cv_folds > n, bad path).
RegressionModel fit_elastic_net(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const std::vector<std::string>& feature_names,
                                const PenaltySpec& spec, std::uint64_t seed);

double predict_regression(const RegressionModel& model, const SummaryVector& s);

}  // namespace regcal
