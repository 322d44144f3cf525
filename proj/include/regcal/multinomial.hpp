#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "regcal/elastic_net.hpp"
#include "regcal/types.hpp"

namespace regcal {

struct ClassPrediction {
  std::string label;
  // (class label, probability) in training class order; sums to 1.
  std::vector<std::pair<std::string, double>> probabilities;
};

// Multinomial logit with the same elastic net penalty as the regression
// fit, symmetric parameterization (one coefficient vector per class).
class ClassifierModel {
 public:
  ClassifierModel() = default;

  const std::vector<std::string>& classes() const { return classes_; }
  double alpha() const { return alpha_; }
  double lambda() const { return lambda_; }
  double cv_deviance() const { return cv_deviance_; }
  bool converged() const { return converged_; }
  long sweeps() const { return sweeps_; }

  double intercept(std::size_t k) const { return intercepts_.at(k); }
  const std::vector<Coefficient>& class_coefficients(std::size_t k) const {
    return coefs_.at(k);
  }

  // Argmax of class probabilities; exact ties go to the earliest class in
  // training order.
  ClassPrediction predict(const SummaryVector& s) const;

  nlohmann::json to_json() const;
  static ClassifierModel from_json(const nlohmann::json& j);

 private:
  friend ClassifierModel fit_multinomial(const Eigen::MatrixXd&,
                                         const std::vector<std::string>&,
                                         const std::vector<std::string>&,
                                         const PenaltySpec&, std::uint64_t);
  std::vector<std::string> classes_;
  std::vector<double> intercepts_;
  std::vector<std::vector<Coefficient>> coefs_;  // per class, original scale
  double alpha_ = 0.5;
  double lambda_ = 0.0;
  double cv_deviance_ = 0.0;
  bool converged_ = true;
  long sweeps_ = 0;
};

// Cross-validated multinomial elastic net via cyclic coordinate descent on
// per-class quadratic approximations. Lambda is selected by CV multinomial
// deviance; ties go to the larger lambda. Requires at least two classes and
// at least cv_folds rows per class.
ClassifierModel fit_multinomial(const Eigen::MatrixXd& X,
                                const std::vector<std::string>& labels,
                                const std::vector<std::string>& feature_names,
                                const PenaltySpec& spec, std::uint64_t seed);

ClassPrediction predict_classifier(const ClassifierModel& model,
                                   const SummaryVector& s);

}  // namespace regcal
