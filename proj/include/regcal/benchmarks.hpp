#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regcal/baselines.hpp"
#include "regcal/estimator.hpp"
#include "regcal/models.hpp"
#include "regcal/selector.hpp"
#include "regcal/types.hpp"

namespace regcal {

// End-to-end pipelines behind the `benchmark` command. The acceptance
// suite drives the same code, so CLI results and test results agree.

struct LineBenchmarkConfig {
  LineModelConfig::Kind kind = LineModelConfig::Kind::straight;
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  double beta_low = 0.0;
  double beta_high = 2.0;
  PenaltySpec penalty;
  AbcConfig abc;                  // n_draws per target, keep_fraction, chain_length
  double epsilon_quantile = 0.05;  // MCMC epsilon from reference distances
  std::uint64_t design_seed = 1;
  std::uint64_t fit_seed = 2;
  int jobs = 0;
};

struct MethodResult {
  std::string method;
  double rmse = 0.0;
  double runtime_minutes = 0.0;
  std::vector<double> estimates;  // per test row
};

struct LineBenchmarkResult {
  std::vector<double> beta_true;
  MethodResult regression;
  MethodResult rejection;
  MethodResult mcmc;
  FittedEstimator estimator;

  // method,rmse,runtime_minutes,runtime_scaled (regression = 1)
  std::string methods_csv() const;
  // beta_true,regression,rejection,mcmc per test row; no wall-clock content
  std::string points_csv() const;
};

LineBenchmarkResult run_line_benchmark(const LineBenchmarkConfig& cfg);

struct SelectionBenchmarkConfig {
  std::size_t n_train_per_model = 1000;
  std::size_t n_test_per_model = 1000;
  double beta = 1.0;  // both candidates run at this fixed slope
  PenaltySpec penalty;
  std::uint64_t design_seed = 1;
  std::uint64_t fit_seed = 2;
  int jobs = 0;
};

struct SelectionBenchmarkResult {
  ClassifierModel classifier;
  SelectionReport report;                  // classifier on the test table
  double nearest_identity_accuracy = 0.0;  // 1-NN, W = identity
  double nearest_diag_accuracy = 0.0;      // 1-NN, W = diag(1/var)
  double classifier_runtime_minutes = 0.0;
  double nearest_runtime_minutes = 0.0;

  std::string methods_csv() const;  // method,accuracy,runtime_minutes
};

SelectionBenchmarkResult run_selection_benchmark(const SelectionBenchmarkConfig& cfg);

struct CurvatureBenchmarkConfig {
  LineModelConfig::Kind kind = LineModelConfig::Kind::straight;
  std::size_t n_reference = 1000;
  double beta_star = 1.0;
  // Replicate-variance stage (matched-theta grid), broken-line diagnostics.
  std::size_t grid_points = 9;
  std::size_t replicates = 30;
  PenaltySpec penalty;
  std::uint64_t design_seed = 1;
  std::uint64_t fit_seed = 2;
  int jobs = 0;
};

struct CurvatureBenchmarkResult {
  // Per reference row: generating beta and the profile value under each
  // notion of discrepancy.
  std::vector<double> beta;
  std::vector<double> regression_profile;  // |r(S*) - r(S_row)|
  std::vector<double> identity_distance;
  std::vector<double> diag_distance;
  double spearman_regression = 0.0;  // rank corr with |beta - beta_star|
  double spearman_identity = 0.0;
  double spearman_diag = 0.0;

  // Matched-theta replicate spread: grid beta, per-weighting mean and
  // variance of the distance over replicates.
  std::vector<double> grid_beta;
  std::vector<double> identity_mean, identity_var;
  std::vector<double> diag_mean, diag_var;

  std::string profile_csv() const;    // beta,curve,value rows
  std::string replicate_csv() const;  // beta,weighting,mean,variance
};

CurvatureBenchmarkResult run_curvature_benchmark(const CurvatureBenchmarkConfig& cfg);

struct SurrogateBenchmarkConfig {
  std::size_t n_train = 2000;
  std::size_t n_test = 2000;
  std::size_t panel_length = 150;
  PenaltySpec penalty;
  FeatureExpansion expansion{true, true};
  std::uint64_t design_seed = 1;
  std::uint64_t fit_seed = 2;
  int jobs = 0;
};

struct SurrogateBenchmarkResult {
  // Statistic sets compared: the auxiliary set (regressions + covariances)
  // and cross-correlations alone.
  EstimationReport aux_report;
  EstimationReport xcorr_report;
  std::size_t aux_base_count = 0;
  std::size_t aux_feature_count = 0;
  std::size_t xcorr_base_count = 0;
  std::size_t xcorr_feature_count = 0;

  std::string report_csv() const;  // parameter,statistics,bias,rmse,predictivity
};

SurrogateBenchmarkResult run_surrogate_benchmark(const SurrogateBenchmarkConfig& cfg);

// Rank correlation with average ranks on ties; used by the curvature
// benchmark and its acceptance checks.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace regcal
