#include "regcal/models.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include <Eigen/Dense>

#include "regcal/csv.hpp"
#include "regcal/rng.hpp"

namespace regcal {

SummaryVector simulate_line(const LineModelConfig& cfg, double beta,
                            std::uint64_t run_seed) {
  if (cfg.n_points == 0) throw std::invalid_argument("line model needs n_points > 0");
  if (!(cfg.noise_sd >= 0.0)) throw std::invalid_argument("noise_sd must be non-negative");
  Rng rng(run_seed);
  std::vector<std::string> names(cfg.n_points);
  std::vector<double> values(cfg.n_points);
  for (std::size_t i = 0; i < cfg.n_points; ++i) {
    names[i] = std::to_string(i);
    double signal = beta * static_cast<double>(i);
    if (cfg.kind == LineModelConfig::Kind::broken && i < cfg.break_index) {
      signal = 0.0;
    }
    values[i] = signal + cfg.noise_sd * rng.normal();
  }
  return SummaryVector(std::move(names), std::move(values));
}

SummaryVector LineSimulator::run(std::span<const double> theta,
                                 std::uint64_t run_seed) const {
  if (theta.size() != 1) throw std::invalid_argument("line model takes one parameter");
  return simulate_line(cfg_, theta[0], run_seed);
}

ParameterSpace line_space(double low, double high) {
  return ParameterSpace({{"beta", low, high}});
}

const std::vector<double>& TimeSeriesPanel::series_named(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return series[i];
  }
  throw std::invalid_argument("panel has no series '" + std::string(name) + "'");
}

void TimeSeriesPanel::validate() const {
  if (names.size() != series.size()) {
    throw std::invalid_argument("panel names and series differ in count");
  }
  if (series.empty()) throw std::invalid_argument("panel is empty");
  std::set<std::string> seen;
  for (const auto& n : names) {
    require_csv_safe(n, "series");
    if (!seen.insert(n).second) {
      throw std::invalid_argument("duplicate series name '" + n + "'");
    }
  }
  std::size_t T = series[0].size();
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].size() != T) {
      throw std::invalid_argument("series '" + names[i] + "' has mismatched length");
    }
    for (double v : series[i]) {
      if (!std::isfinite(v)) {
        throw SimulationError("series '" + names[i] + "' contains a non-finite value");
      }
    }
  }
}

void TimeSeriesPanel::save_csv(const std::string& path) const {
  validate();
  std::string text = "t";
  for (const auto& n : names) text += "," + n;
  text.push_back('\n');
  for (std::size_t t = 0; t < length(); ++t) {
    text += std::to_string(t);
    for (const auto& s : series) {
      text.push_back(',');
      text += csv::format_double(s[t]);
    }
    text.push_back('\n');
  }
  csv::write_text(path, text);
}

TimeSeriesPanel TimeSeriesPanel::load_csv(const std::string& path) {
  auto lines = csv::read_lines(path);
  if (lines.empty()) throw std::runtime_error(path + ": missing header");
  auto header = csv::split_line(lines[0]);
  if (header.empty() || header[0] != "t") {
    throw std::runtime_error(path + ": first column must be t");
  }
  TimeSeriesPanel panel;
  panel.names.assign(header.begin() + 1, header.end());
  panel.series.assign(panel.names.size(), {});
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = csv::split_line(lines[r]);
    if (fields.size() != header.size()) {
      throw std::runtime_error(path + ": row " + std::to_string(r) + " has wrong field count");
    }
    for (std::size_t c = 1; c < fields.size(); ++c) {
      panel.series[c - 1].push_back(
          csv::parse_double(fields[c], path + " row " + std::to_string(r)));
    }
  }
  panel.validate();
  return panel;
}

ParameterSpace surrogate_macro_space() {
  return ParameterSpace({{"rho", 0.0, 0.95},
                         {"sigma", 0.5, 1.5},
                         {"load_r", 0.2, 1.0},
                         {"load_i", 0.5, 2.5},
                         {"load_c", 0.2, 1.2},
                         {"load_l", 0.1, 0.9}});
}

TimeSeriesPanel simulate_surrogate_macro(std::span<const double> theta, std::size_t T,
                                         std::uint64_t run_seed) {
  if (theta.size() != 6) throw std::invalid_argument("macro generator takes six parameters");
  const double rho = theta[0], sigma = theta[1];
  const double kr = theta[2], ki = theta[3], kc = theta[4], kl = theta[5];
  if (std::abs(rho) >= 1.0) {
    throw SimulationError("autoregressive persistence must be below 1 in magnitude");
  }
  if (T < 3) throw std::invalid_argument("panel length must be at least 3");

  Rng rng(run_seed);
  // State starts at its stationary distribution; two extra leading values
  // supply the lags used by the observation equations at t = 0.
  std::vector<double> z(T + 2);
  double innov_sd = sigma * std::sqrt(1.0 - rho * rho);
  z[0] = sigma * rng.normal();
  for (std::size_t t = 1; t < z.size(); ++t) {
    z[t] = rho * z[t - 1] + innov_sd * rng.normal();
  }

  TimeSeriesPanel panel;
  panel.names = {"Y", "r", "I", "C", "L"};
  panel.series.assign(5, std::vector<double>(T));
  for (std::size_t t = 0; t < T; ++t) {
    panel.series[0][t] = z[t + 2] + 0.10 * rng.normal();
  }
  for (std::size_t t = 0; t < T; ++t) {
    panel.series[1][t] = kr * (z[t + 2] - 0.5 * z[t + 1]) + 0.30 * rng.normal();
  }
  for (std::size_t t = 0; t < T; ++t) {
    panel.series[2][t] = ki * (z[t + 2] - z[t + 1]) + 0.30 * rng.normal();
  }
  for (std::size_t t = 0; t < T; ++t) {
    panel.series[3][t] = kc * (z[t + 2] + z[t + 1] + z[t]) / 3.0 + 0.30 * rng.normal();
  }
  for (std::size_t t = 0; t < T; ++t) {
    panel.series[4][t] = kl * z[t + 2] + 0.30 * rng.normal();
  }
  return panel;
}

namespace {

double pearson(const double* a, const double* b, std::size_t n, bool& degenerate) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    degenerate = true;
    return 0.0;
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

SummaryVector cross_correlations(const TimeSeriesPanel& panel, const std::string& target,
                                 const std::vector<std::string>& others,
                                 std::size_t max_lag) {
  panel.validate();
  const std::size_t T = panel.length();
  if (T <= 2 * max_lag + 2) {
    throw std::invalid_argument("panel too short for the requested maximum lag");
  }
  const auto& tv = panel.series_named(target);
  std::vector<std::string> names;
  std::vector<double> values;
  bool warned = false;
  const long L = static_cast<long>(max_lag);
  for (const auto& other : others) {
    const auto& ov = panel.series_named(other);
    for (long k = -L; k <= L; ++k) {
      // Pairs (target_t, other_{t+k}) over the valid window.
      std::size_t start = static_cast<std::size_t>(std::max(0l, -k));
      std::size_t stop = T - static_cast<std::size_t>(std::max(0l, k));
      bool degenerate = false;
      double c = pearson(tv.data() + start, ov.data() + start + static_cast<std::size_t>(k),
                         stop - start, degenerate);
      if (degenerate && !warned) {
        std::cerr << "warning: zero-variance window in cross-correlations; "
                     "reporting 0\n";
        warned = true;
      }
      names.push_back("xcorr." + target + "." + other + ".lag" + std::to_string(k));
      values.push_back(c);
    }
  }
  return SummaryVector(std::move(names), std::move(values));
}

SummaryVector covariance_lower_triangle(const TimeSeriesPanel& panel) {
  panel.validate();
  const std::size_t T = panel.length();
  if (T < 2) throw std::invalid_argument("covariance needs at least two observations");
  const std::size_t m = panel.series.size();
  std::vector<double> means(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (double v : panel.series[i]) means[i] += v;
    means[i] /= static_cast<double>(T);
  }
  std::vector<std::string> names;
  std::vector<double> values;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        s += (panel.series[i][t] - means[i]) * (panel.series[j][t] - means[j]);
      }
      names.push_back("cov." + panel.names[i] + "." + panel.names[j]);
      values.push_back(s / static_cast<double>(T - 1));
    }
  }
  return SummaryVector(std::move(names), std::move(values));
}

SummaryVector auxiliary_ols(const TimeSeriesPanel& panel, const AuxRegressionSpec& spec) {
  panel.validate();
  if (spec.terms.empty()) throw std::invalid_argument("auxiliary regression has no terms");
  int max_lag = 0;
  for (const auto& [name, lag] : spec.terms) {
    if (lag < 0) throw std::invalid_argument("auxiliary regression lags must be >= 0");
    max_lag = std::max(max_lag, lag);
  }
  const std::size_t T = panel.length();
  const std::size_t k = spec.terms.size() + 1;  // + intercept
  if (T <= static_cast<std::size_t>(max_lag) + k + 1) {
    throw std::invalid_argument("panel too short for auxiliary regression '" + spec.id + "'");
  }
  const auto& dep = panel.series_named(spec.dependent);
  const std::size_t rows = T - static_cast<std::size_t>(max_lag);

  Eigen::MatrixXd X(rows, k);
  Eigen::VectorXd y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t t = r + static_cast<std::size_t>(max_lag);
    X(static_cast<Eigen::Index>(r), 0) = 1.0;
    for (std::size_t c = 0; c < spec.terms.size(); ++c) {
      const auto& [name, lag] = spec.terms[c];
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c + 1)) =
          panel.series_named(name)[t - static_cast<std::size_t>(lag)];
    }
    y(static_cast<Eigen::Index>(r)) = dep[t];
  }

  Eigen::MatrixXd xtx = X.transpose() * X;
  Eigen::VectorXd xty = X.transpose() * y;
  Eigen::VectorXd coef = xtx.ldlt().solve(xty);
  double solve_scale = std::max(xty.cwiseAbs().maxCoeff(), 1.0);
  bool bad = !coef.allFinite() ||
             (xtx * coef - xty).cwiseAbs().maxCoeff() > 1e-8 * solve_scale;
  if (bad) {
    // Singular design: tiny ridge to pin the solution.
    Eigen::MatrixXd jittered = xtx + 1e-10 * Eigen::MatrixXd::Identity(
                                                  static_cast<Eigen::Index>(k),
                                                  static_cast<Eigen::Index>(k));
    coef = jittered.ldlt().solve(xty);
    if (!coef.allFinite()) {
      throw SimulationError("auxiliary regression '" + spec.id + "' failed to solve");
    }
  }

  std::vector<std::string> names;
  std::vector<double> values;
  names.push_back("aux." + spec.id + ".intercept");
  values.push_back(coef(0));
  for (std::size_t c = 0; c < spec.terms.size(); ++c) {
    names.push_back("aux." + spec.id + "." + spec.terms[c].first + ".lag" +
                    std::to_string(spec.terms[c].second));
    values.push_back(coef(static_cast<Eigen::Index>(c + 1)));
  }
  return SummaryVector(std::move(names), std::move(values));
}

std::vector<AuxRegressionSpec> surrogate_aux_specs() {
  return {
      {"ir", "I", {{"Y", 0}, {"Y", 1}, {"r", 0}}},
      {"c", "C", {{"Y", 0}, {"Y", 1}, {"Y", 2}}},
      {"l", "L", {{"Y", 0}, {"L", 1}}},
      {"r", "r", {{"Y", 0}, {"Y", 1}, {"r", 1}}},
      {"y", "Y", {{"Y", 1}, {"Y", 2}, {"I", 0}}},
  };
}

AuxRegressionSpec surrogate_ar5_spec() {
  return {"ar5", "Y", {{"Y", 1}, {"Y", 2}, {"Y", 3}, {"Y", 4}, {"Y", 5}}};
}

SummaryVector surrogate_statistics(const TimeSeriesPanel& panel,
                                   const std::vector<StatSet>& sets) {
  if (sets.empty()) throw std::invalid_argument("no statistic sets requested");
  std::vector<std::string> names;
  std::vector<double> values;
  auto append = [&](const SummaryVector& s) {
    names.insert(names.end(), s.names.begin(), s.names.end());
    values.insert(values.end(), s.values.begin(), s.values.end());
  };
  for (StatSet set : sets) {
    switch (set) {
      case StatSet::xcorr:
        append(cross_correlations(panel, "Y", {"r", "I", "C", "L"}, 5));
        break;
      case StatSet::cov:
        append(covariance_lower_triangle(panel));
        break;
      case StatSet::aux:
        for (const auto& spec : surrogate_aux_specs()) append(auxiliary_ols(panel, spec));
        break;
      case StatSet::ar5:
        append(auxiliary_ols(panel, surrogate_ar5_spec()));
        break;
    }
  }
  return SummaryVector(std::move(names), std::move(values));
}

SummaryVector SurrogateMacroSimulator::run(std::span<const double> theta,
                                           std::uint64_t run_seed) const {
  return surrogate_statistics(simulate_surrogate_macro(theta, T_, run_seed), sets_);
}

}  // namespace regcal
