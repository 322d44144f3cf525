#pragma once

// Shared internals of the regression and multinomial coordinate descent
// fits. Not installed; test code links against the public headers only.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regcal/elastic_net.hpp"

namespace regcal::detail {

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

struct Standardized {
  Eigen::MatrixXd X;  // centered and scaled columns; constant columns all zero
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;     // 1 for constant columns
  Eigen::VectorXd col_norm;  // (1/n)*|x_j|^2 after scaling, ~1, 0 for constant
  std::vector<char> variable;
};

Standardized standardize(const Eigen::MatrixXd& X);

// Automatic descending log-spaced path from lambda_max down to
// lambda_min_ratio * lambda_max.
std::vector<double> make_lambda_path(double lambda_max, const PenaltySpec& spec);

// Validated path for a fit: the user's path if given, otherwise automatic
// from the supplied lambda_max.
std::vector<double> resolve_lambda_path(const PenaltySpec& spec, double lambda_max);

// Fold index per row in [0, cv_folds). For seeded assignment folds come
// from a shuffled round-robin. For content-hash assignment the caller must
// already have put rows into canonical order; folds are then rank % folds.
std::vector<int> assign_folds(std::size_t n, const PenaltySpec& spec, std::uint64_t seed);

// Canonical row order for content-hash mode: rows sorted by (FNV-1a hash of
// row bytes, row bytes). Row i's bytes are the concatenation of the doubles
// handed in via `row_bytes` (empty, and unused, in seeded mode). Returns the
// identity order for seeded mode.
std::vector<std::size_t> canonical_order(
    std::size_t n, const PenaltySpec& spec,
    const std::vector<std::vector<unsigned char>>& row_bytes);

std::vector<unsigned char> row_byte_image(const Eigen::MatrixXd& X, std::size_t i,
                                          const double* extra, std::size_t n_extra,
                                          const std::string* label);

// One gaussian coordinate descent path on standardized data. Warm-started
// along the path; sweeps counts both full and active-set passes and is
// capped by max_sweeps (exceeding the cap clears `converged` and freezes
// the remaining path entries at the last iterate).
struct GaussianPath {
  std::vector<Eigen::VectorXd> betas;  // standardized scale, one per lambda
  long sweeps = 0;
  bool converged = true;
};

GaussianPath fit_gaussian_path(const Standardized& sx, const Eigen::VectorXd& y_centered,
                               const std::vector<double>& lambdas, const PenaltySpec& spec);

// Standard error of the CV curve per path point: sd over per-fold mean
// errors divided by sqrt(#folds). fold_sums[k][l] is fold k's error sum at
// path point l; folds that held out no rows are skipped.
std::vector<double> cv_standard_errors(const std::vector<std::vector<double>>& fold_sums,
                                       const std::vector<std::size_t>& fold_counts);

// Path index picked by the rule. min_cv takes the first strict minimum —
// the path descends, so ties resolve to the larger lambda. one_se walks
// back to the largest lambda whose mean stays within one standard error of
// that minimum.
std::size_t select_lambda_index(const std::vector<double>& cv_mean,
                                const std::vector<double>& cv_se, LambdaRule rule);

}  // namespace regcal::detail
