#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regcal/types.hpp"

namespace regcal {

// Synthetic regression-line model: statistic i is beta*i plus N(0, sd^2)
// noise for i = 0..n_points-1. In the broken variant the first break_index
// statistics carry no signal (pure noise), the rest keep the linear mean.
struct LineModelConfig {
  enum class Kind { straight, broken };
  Kind kind = Kind::straight;
  std::size_t n_points = 10;
  std::size_t break_index = 5;
  double noise_sd = 1.0;
};

// Statistic names are "0", "1", ... so tables carry columns S.0 ... S.9.
SummaryVector simulate_line(const LineModelConfig& cfg, double beta,
                            std::uint64_t run_seed);

class LineSimulator : public Simulator {
 public:
  explicit LineSimulator(LineModelConfig cfg) : cfg_(cfg) {}
  SummaryVector run(std::span<const double> theta, std::uint64_t run_seed) const override;

 private:
  LineModelConfig cfg_;
};

ParameterSpace line_space(double low = 0.0, double high = 2.0);

// Equal-length named series sampled at t = 0..T-1.
struct TimeSeriesPanel {
  std::vector<std::string> names;
  std::vector<std::vector<double>> series;

  std::size_t length() const { return series.empty() ? 0 : series[0].size(); }
  const std::vector<double>& series_named(std::string_view name) const;
  void validate() const;  // equal lengths, finite values, unique names

  void save_csv(const std::string& path) const;
  static TimeSeriesPanel load_csv(const std::string& path);
};

// Small linear macro generator used as the multi-parameter demo model. One
// latent AR(1) state drives five observed series through fixed loading
// shapes; the six inputs are
//   rho     autoregressive persistence of the state, in [0, 0.95]
//   sigma   stationary standard deviation of the state, in [0.5, 1.5]
//   load_r  loading of r on (z_t - 0.5 z_{t-1}),    in [0.2, 1.0]
//   load_i  loading of I on (z_t - z_{t-1}),        in [0.5, 2.5]
//   load_c  loading of C on a 3-period mean of z,   in [0.2, 1.2]
//   load_l  loading of L on z_t,                    in [0.1, 0.9]
// with observation noise 0.10 on Y and 0.30 elsewhere. |rho| >= 1 is
// rejected as non-stationary.
ParameterSpace surrogate_macro_space();
TimeSeriesPanel simulate_surrogate_macro(std::span<const double> theta, std::size_t T,
                                         std::uint64_t run_seed);

// Pearson correlation between target_t and other_{t+k} for each listed
// other series and each lag k in [-max_lag, max_lag], computed on the
// overlapping window per lag. A zero-variance window yields 0 (with a
// warning on stderr). Names: xcorr.<target>.<other>.lag<k>. Requires
// T > 2*max_lag + 2.
SummaryVector cross_correlations(const TimeSeriesPanel& panel, const std::string& target,
                                 const std::vector<std::string>& others,
                                 std::size_t max_lag);

// Sample covariances cov.<a>.<b> for the lower triangle (diagonal
// included), rows in series order.
SummaryVector covariance_lower_triangle(const TimeSeriesPanel& panel);

// One auxiliary least squares regression: dependent_t on (series, lag)
// terms plus intercept, over t = max_lag..T-1. Coefficient names are
// aux.<id>.intercept and aux.<id>.<series>.lag<k>. A singular design is
// re-solved with ridge jitter 1e-10 on the normal equations.
struct AuxRegressionSpec {
  std::string id;
  std::string dependent;
  std::vector<std::pair<std::string, int>> terms;  // (series name, lag >= 0)
};

SummaryVector auxiliary_ols(const TimeSeriesPanel& panel, const AuxRegressionSpec& spec);

enum class StatSet { xcorr, cov, aux, ar5 };

// The five auxiliary regressions used for the macro benchmark (19
// coefficients in total).
std::vector<AuxRegressionSpec> surrogate_aux_specs();
// AR(5) of Y on its own lags (6 coefficients).
AuxRegressionSpec surrogate_ar5_spec();

SummaryVector surrogate_statistics(const TimeSeriesPanel& panel,
                                   const std::vector<StatSet>& sets);

class SurrogateMacroSimulator : public Simulator {
 public:
  SurrogateMacroSimulator(std::size_t T, std::vector<StatSet> sets)
      : T_(T), sets_(std::move(sets)) {}
  SummaryVector run(std::span<const double> theta, std::uint64_t run_seed) const override;

 private:
  std::size_t T_;
  std::vector<StatSet> sets_;
};

}  // namespace regcal
