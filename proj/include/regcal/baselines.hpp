#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regcal/estimator.hpp"
#include "regcal/types.hpp"

namespace regcal {

enum class Weighting { identity, inverse_variance, custom };

// Quadratic-form distance d(s1,s2) = (s1-s2)' W (s1-s2) over a statistic
// subset (all statistics by default). inverse_variance builds a diagonal W
// from sample variances of a reference table; a zero-variance statistic
// gets weight 0 (reported, not fatal). custom takes a full symmetric PSD
// matrix over the selected statistics.
struct DistanceSpec {
  Weighting weighting = Weighting::identity;
  std::optional<std::vector<std::string>> subset;
  Eigen::MatrixXd custom_w;
};

// Distance compiled against a fixed statistic schema.
class DistanceFunction {
 public:
  // variance_table supplies the variances for inverse_variance weighting;
  // it must be non-null in that mode.
  static DistanceFunction build(const DistanceSpec& spec,
                                const std::vector<std::string>& statistic_names,
                                const ExperimentTable* variance_table);

  double operator()(std::span<const double> a, std::span<const double> b) const;
  double between(const SummaryVector& a, const SummaryVector& b) const;

  // Statistics whose variance was zero and weight therefore dropped to 0.
  const std::vector<std::string>& dropped() const { return dropped_; }
  const std::vector<std::size_t>& columns() const { return columns_; }

 private:
  std::vector<std::size_t> columns_;       // into the schema
  std::vector<std::string> names_;         // selected statistic names
  std::vector<double> diag_;               // empty when full matrix is used
  Eigen::MatrixXd w_;                      // used for custom weighting
  bool full_matrix_ = false;
  std::vector<std::string> dropped_;
};

double distance(const SummaryVector& a, const SummaryVector& b, const DistanceSpec& spec,
                const ExperimentTable* variance_table = nullptr);

// Settings for the simulation-based baselines.
struct AbcConfig {
  std::size_t n_draws = 1000;        // reference draws (rejection)
  double keep_fraction = 0.05;       // retained fraction (rejection)
  std::size_t chain_length = 10000;  // MCMC steps
  double epsilon = 0.0;              // MCMC acceptance threshold, > 0
  double proposal_scale = 0.10;      // random-walk sd as a fraction of range
  double burn_in_fraction = 0.20;
};

struct RejectionResult {
  std::vector<double> estimate;            // mean of retained thetas
  std::vector<std::size_t> retained_rows;  // indices into the table
};

// Keeps the ceil(keep_fraction * n) rows closest to s_star (ties broken by
// row order) and averages their parameters.
RejectionResult rejection_abc(const ExperimentTable& table, const SummaryVector& s_star,
                              const DistanceSpec& dspec, double keep_fraction);

struct McmcResult {
  std::vector<std::vector<double>> chain;  // one state per step
  std::vector<double> estimate;            // mean after burn-in
  std::size_t accepted = 0;
  double acceptance_rate = 0.0;
};

// Likelihood-free random walk: propose by reflecting a Gaussian step into
// the box, simulate once at the proposal, accept iff the distance to
// s_star is below epsilon. The chain starts at `start` when given (use a
// point already within epsilon, e.g. the closest reference draw);
// otherwise it starts at a prior draw and throws SimulationError if
// nothing is ever accepted. variance_table supplies weights for
// inverse_variance specs.
McmcResult mcmc_abc(const Simulator& sim, const ParameterSpace& space,
                    const SummaryVector& s_star, const DistanceSpec& dspec,
                    const AbcConfig& cfg, std::uint64_t seed,
                    const ExperimentTable* variance_table = nullptr,
                    const std::vector<double>* start = nullptr);

// epsilon = the q-th quantile (q in (0,1]) of distances from s_star to the
// table rows; the conventional default is q = 0.05.
double epsilon_from_reference(const ExperimentTable& table, const SummaryVector& s_star,
                              const DistanceSpec& dspec, double quantile);

struct SmdResult {
  std::vector<double> estimate;
  double best_distance = 0.0;
  std::size_t evaluations = 0;
};

// Simulated minimum distance: a coarse uniform sweep of `budget` points
// followed by golden-section refinement around the best cell (coordinate
// passes for multi-parameter spaces). Each objective evaluation averages
// the distance over three simulation replicates.
SmdResult smd_estimate(const Simulator& sim, const ParameterSpace& space,
                       const SummaryVector& s_star, const DistanceSpec& dspec,
                       std::size_t budget, std::uint64_t seed,
                       const ExperimentTable* variance_table = nullptr);

// (theta, |r(S*) - r(S_row)|) per reference row for a single-parameter
// estimator; the regression analogue of a distance profile.
std::vector<std::pair<double, double>> curvature_profile(const FittedEstimator& est,
                                                         const ExperimentTable& reference,
                                                         const SummaryVector& s_star);

}  // namespace regcal
