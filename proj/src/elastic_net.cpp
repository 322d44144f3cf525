#include "regcal/elastic_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "net_internal.hpp"
#include "regcal/rng.hpp"

namespace regcal {

void PenaltySpec::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0,1]");
  }
  if (cv_folds < 2) throw std::invalid_argument("cv_folds must be at least 2");
  if (path_length < 1) throw std::invalid_argument("path_length must be positive");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
    throw std::invalid_argument("lambda_min_ratio must lie in (0,1)");
  }
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be positive");
  for (std::size_t i = 0; i < lambda_path.size(); ++i) {
    if (!(lambda_path[i] > 0.0) || !std::isfinite(lambda_path[i])) {
      throw std::invalid_argument("lambda_path values must be positive and finite");
    }
    if (i > 0 && !(lambda_path[i] < lambda_path[i - 1])) {
      throw std::invalid_argument("lambda_path must be strictly descending");
    }
  }
}

namespace detail {

Standardized standardize(const Eigen::MatrixXd& X) {
  const auto n = X.rows();
  const auto p = X.cols();
  Standardized out;
  out.mean = X.colwise().mean();
  out.X = X.rowwise() - out.mean.transpose();
  out.scale = Eigen::VectorXd::Ones(p);
  out.col_norm = Eigen::VectorXd::Zero(p);
  out.variable.assign(static_cast<std::size_t>(p), 0);
  for (Eigen::Index j = 0; j < p; ++j) {
    // Exact constancy check so a constant column is dropped rather than
    // amplified by a near-zero scale.
    bool constant = (X.col(j).array() == X(0, j)).all();
    if (constant) {
      out.X.col(j).setZero();
      continue;
    }
    double var = out.X.col(j).squaredNorm() / static_cast<double>(n);
    out.scale(j) = std::sqrt(var);
    out.X.col(j) /= out.scale(j);
    out.col_norm(j) = out.X.col(j).squaredNorm() / static_cast<double>(n);
    out.variable[static_cast<std::size_t>(j)] = 1;
  }
  return out;
}

std::vector<double> make_lambda_path(double lambda_max, const PenaltySpec& spec) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) lambda_max = 1.0;
  std::vector<double> path(static_cast<std::size_t>(spec.path_length));
  if (spec.path_length == 1) {
    path[0] = lambda_max;
    return path;
  }
  double log_max = std::log(lambda_max);
  double log_min = std::log(lambda_max * spec.lambda_min_ratio);
  for (int i = 0; i < spec.path_length; ++i) {
    double t = static_cast<double>(i) / static_cast<double>(spec.path_length - 1);
    path[static_cast<std::size_t>(i)] = std::exp(log_max + t * (log_min - log_max));
  }
  return path;
}

std::vector<double> resolve_lambda_path(const PenaltySpec& spec, double lambda_max) {
  if (!spec.lambda_path.empty()) return spec.lambda_path;
  return make_lambda_path(lambda_max, spec);
}

std::vector<int> assign_folds(std::size_t n, const PenaltySpec& spec, std::uint64_t seed) {
  std::vector<int> fold(n);
  if (spec.fold_assignment == FoldAssignment::content_hash) {
    // Caller reordered rows canonically; balanced round-robin by rank.
    for (std::size_t i = 0; i < n; ++i) fold[i] = static_cast<int>(i % spec.cv_folds);
    return fold;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, SeedStream::fit, 0));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  for (std::size_t i = 0; i < n; ++i) fold[order[i]] = static_cast<int>(i % spec.cv_folds);
  return fold;
}

std::vector<unsigned char> row_byte_image(const Eigen::MatrixXd& X, std::size_t i,
                                          const double* extra, std::size_t n_extra,
                                          const std::string* label) {
  std::vector<unsigned char> bytes;
  const std::size_t p = static_cast<std::size_t>(X.cols());
  bytes.reserve((p + n_extra) * sizeof(double) + (label ? label->size() : 0));
  auto push = [&bytes](double v) {
    unsigned char raw[sizeof(double)];
    std::memcpy(raw, &v, sizeof(double));
    bytes.insert(bytes.end(), raw, raw + sizeof(double));
  };
  for (std::size_t j = 0; j < p; ++j) push(X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  for (std::size_t j = 0; j < n_extra; ++j) push(extra[j]);
  if (label) bytes.insert(bytes.end(), label->begin(), label->end());
  return bytes;
}

std::vector<std::size_t> canonical_order(
    std::size_t n, const PenaltySpec& spec,
    const std::vector<std::vector<unsigned char>>& row_bytes) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (spec.fold_assignment != FoldAssignment::content_hash) return order;
  std::vector<std::uint64_t> hash(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char b : row_bytes[i]) {
      h ^= b;
      h *= 1099511628211ull;
    }
    hash[i] = h;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (hash[a] != hash[b]) return hash[a] < hash[b];
    return row_bytes[a] < row_bytes[b];
  });
  return order;
}

namespace {

// One pass over the given coordinate set; returns the largest coefficient
// move. Keeping the update in terms of the actual column norm (instead of
// assuming exactly 1) makes the converged point satisfy the optimality
// conditions to solver tolerance.
double cd_sweep(const Standardized& sx, Eigen::VectorXd& beta, Eigen::VectorXd& r,
                double lam_l1, double lam_l2, const std::vector<Eigen::Index>& coords) {
  const double n = static_cast<double>(sx.X.rows());
  double max_delta = 0.0;
  for (Eigen::Index j : coords) {
    double bj = beta(j);
    double g = sx.X.col(j).dot(r) / n + sx.col_norm(j) * bj;
    double nb = soft_threshold(g, lam_l1) / (sx.col_norm(j) + lam_l2);
    double d = nb - bj;
    if (d != 0.0) {
      beta(j) = nb;
      r.noalias() -= d * sx.X.col(j);
      max_delta = std::max(max_delta, std::abs(d));
    }
  }
  return max_delta;
}

// Same update, driven by cached residual correlations c = X'r/n and the
// Gram matrix instead of the residual itself: a coordinate move costs O(p)
// rather than O(n), which wins whenever p is well below n.
double cd_sweep_gram(const Standardized& sx, Eigen::VectorXd& beta, Eigen::VectorXd& c,
                     const Eigen::MatrixXd& gram, double lam_l1, double lam_l2,
                     const std::vector<Eigen::Index>& coords) {
  double max_delta = 0.0;
  for (Eigen::Index j : coords) {
    double bj = beta(j);
    double g = c(j) + sx.col_norm(j) * bj;
    double nb = soft_threshold(g, lam_l1) / (sx.col_norm(j) + lam_l2);
    double d = nb - bj;
    if (d != 0.0) {
      beta(j) = nb;
      c.noalias() -= d * gram.col(j);
      max_delta = std::max(max_delta, std::abs(d));
    }
  }
  return max_delta;
}

}  // namespace

GaussianPath fit_gaussian_path(const Standardized& sx, const Eigen::VectorXd& y_centered,
                               const std::vector<double>& lambdas, const PenaltySpec& spec) {
  const Eigen::Index p = sx.X.cols();
  const double n = static_cast<double>(sx.X.rows());
  GaussianPath out;
  out.betas.reserve(lambdas.size());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = y_centered;

  // When the Gram matrix is smaller than the data, cache it and track the
  // residual correlations directly; the screening checks below then read
  // them for free instead of re-touching every column of X.
  const bool use_gram = static_cast<double>(p) <= n && p <= 4096;
  Eigen::MatrixXd gram;
  Eigen::VectorXd c;
  if (use_gram) {
    gram.noalias() = (sx.X.transpose() * sx.X) / n;
    // Column-by-column so the rounding matches the lambda_max scan exactly;
    // a one-ulp mismatch there would leak a coefficient at the path head.
    c.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) c(j) = sx.X.col(j).dot(y_centered) / n;
  }
  auto corr = [&](Eigen::Index j) {
    return use_gram ? c(j) : sx.X.col(j).dot(r) / n;
  };

  std::vector<Eigen::Index> all;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (sx.variable[static_cast<std::size_t>(j)]) all.push_back(j);
  }
  std::vector<Eigen::Index> active, work;
  std::vector<char> in_work(static_cast<std::size_t>(p), 0);

  // beta = 0 is exact above this, which anchors the first screening cut
  // when the path does not start at the data's own lambda_max.
  double prev_lambda = 0.0;
  if (spec.alpha > 0.0) {
    for (Eigen::Index j : all) {
      prev_lambda = std::max(prev_lambda, std::abs(corr(j)) / spec.alpha);
    }
  }

  for (double lambda : lambdas) {
    double lam_l1 = lambda * spec.alpha;
    double lam_l2 = lambda * (1.0 - spec.alpha);
    auto sweep = [&](const std::vector<Eigen::Index>& coords) {
      return use_gram ? cd_sweep_gram(sx, beta, c, gram, lam_l1, lam_l2, coords)
                      : cd_sweep(sx, beta, r, lam_l1, lam_l2, coords);
    };

    // Sequential strong rule: sweep only coordinates that are already
    // nonzero or whose gradient at the previous solution clears the cut.
    // Exclusions are provisional — verified against the exact optimality
    // threshold below, so the solution matches an unscreened fit.
    work.clear();
    if (spec.alpha > 0.0) {
      std::fill(in_work.begin(), in_work.end(), 0);
      double cut = spec.alpha * std::max(2.0 * lambda - prev_lambda, 0.0);
      for (Eigen::Index j : all) {
        if (beta(j) != 0.0 || std::abs(corr(j)) >= cut) {
          work.push_back(j);
          in_work[static_cast<std::size_t>(j)] = 1;
        }
      }
    } else {
      work = all;  // ridge keeps every coordinate in play
    }

    for (;;) {
      while (out.converged) {
        if (out.sweeps >= spec.max_sweeps) {
          out.converged = false;
          break;
        }
        ++out.sweeps;
        double delta = sweep(work);
        if (delta < spec.tolerance) break;
        // Iterate on the active set until stable, then re-check the rest.
        while (out.converged) {
          active.clear();
          for (Eigen::Index j : work) {
            if (beta(j) != 0.0) active.push_back(j);
          }
          if (active.empty()) break;
          if (out.sweeps >= spec.max_sweeps) {
            out.converged = false;
            break;
          }
          ++out.sweeps;
          if (sweep(active) < spec.tolerance) break;
        }
      }
      if (!out.converged || spec.alpha == 0.0 || work.size() == all.size()) break;
      bool violated = false;
      for (Eigen::Index j : all) {
        if (in_work[static_cast<std::size_t>(j)]) continue;
        if (std::abs(corr(j)) > lam_l1) {
          work.push_back(j);
          in_work[static_cast<std::size_t>(j)] = 1;
          violated = true;
        }
      }
      if (!violated) break;
      std::sort(work.begin(), work.end());  // keep the sweep order canonical
    }
    out.betas.push_back(beta);
    prev_lambda = lambda;
  }
  return out;
}

std::vector<double> cv_standard_errors(const std::vector<std::vector<double>>& fold_sums,
                                       const std::vector<std::size_t>& fold_counts) {
  const std::size_t L = fold_sums.empty() ? 0 : fold_sums.front().size();
  std::vector<double> se(L, 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    double mean = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < fold_sums.size(); ++k) {
      if (fold_counts[k] == 0) continue;
      mean += fold_sums[k][l] / static_cast<double>(fold_counts[k]);
      ++used;
    }
    if (used < 2) continue;
    mean /= static_cast<double>(used);
    double var = 0.0;
    for (std::size_t k = 0; k < fold_sums.size(); ++k) {
      if (fold_counts[k] == 0) continue;
      double d = fold_sums[k][l] / static_cast<double>(fold_counts[k]) - mean;
      var += d * d;
    }
    var /= static_cast<double>(used - 1);
    se[l] = std::sqrt(var / static_cast<double>(used));
  }
  return se;
}

std::size_t select_lambda_index(const std::vector<double>& cv_mean,
                                const std::vector<double>& cv_se, LambdaRule rule) {
  std::size_t best = 0;
  for (std::size_t l = 1; l < cv_mean.size(); ++l) {
    if (cv_mean[l] < cv_mean[best]) best = l;
  }
  if (rule == LambdaRule::one_se) {
    double bound = cv_mean[best] + cv_se[best];
    for (std::size_t l = 0; l < best; ++l) {
      if (cv_mean[l] <= bound) return l;
    }
  }
  return best;
}

}  // namespace detail

namespace {

void validate_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const std::vector<std::string>& feature_names,
                     const PenaltySpec& spec) {
  spec.validate();
  if (X.rows() != y.size()) throw std::invalid_argument("X and y row counts differ");
  if (X.rows() < 2) throw std::invalid_argument("need at least two rows to fit");
  if (static_cast<std::size_t>(X.cols()) != feature_names.size()) {
    throw std::invalid_argument("feature name count does not match X columns");
  }
  if (spec.cv_folds > X.rows()) {
    throw std::invalid_argument("cv_folds exceeds the number of rows");
  }
  if (!X.allFinite()) throw std::invalid_argument("X contains non-finite values");
  if (!y.allFinite()) throw std::invalid_argument("y contains non-finite values");
  std::set<std::string> seen;
  for (const auto& f : feature_names) {
    if (!seen.insert(f).second) {
      throw std::invalid_argument("duplicate feature name '" + f + "'");
    }
  }
}

double gaussian_lambda_max(const detail::Standardized& sx,
                           const Eigen::VectorXd& y_centered, double alpha) {
  const double n = static_cast<double>(sx.X.rows());
  double m = 0.0;
  for (Eigen::Index j = 0; j < sx.X.cols(); ++j) {
    if (!sx.variable[static_cast<std::size_t>(j)]) continue;
    m = std::max(m, std::abs(sx.X.col(j).dot(y_centered) / n));
  }
  return m / std::max(alpha, 1e-3);
}

}  // namespace

RegressionModel fit_elastic_net(const Eigen::MatrixXd& X_in, const Eigen::VectorXd& y_in,
                                const std::vector<std::string>& feature_names,
                                const PenaltySpec& spec, std::uint64_t seed) {
  validate_matrix(X_in, y_in, feature_names, spec);
  const std::size_t n = static_cast<std::size_t>(X_in.rows());
  const Eigen::Index p = X_in.cols();

  // Content-hash mode reorders rows canonically so every sum over rows,
  // and thus the whole fit, is invariant to the incoming row permutation.
  std::vector<std::vector<unsigned char>> images;
  if (spec.fold_assignment == FoldAssignment::content_hash) {
    images.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      double yi = y_in(static_cast<Eigen::Index>(i));
      images.push_back(detail::row_byte_image(X_in, i, &yi, 1, nullptr));
    }
  }
  std::vector<std::size_t> order = detail::canonical_order(n, spec, images);
  Eigen::MatrixXd X(X_in.rows(), p);
  Eigen::VectorXd y(y_in.size());
  for (std::size_t i = 0; i < n; ++i) {
    X.row(static_cast<Eigen::Index>(i)) = X_in.row(static_cast<Eigen::Index>(order[i]));
    y(static_cast<Eigen::Index>(i)) = y_in(static_cast<Eigen::Index>(order[i]));
  }

  detail::Standardized sx = detail::standardize(X);
  double ybar = y.mean();
  Eigen::VectorXd yc = y.array() - ybar;

  std::vector<double> path =
      detail::resolve_lambda_path(spec, gaussian_lambda_max(sx, yc, spec.alpha));
  const std::size_t L = path.size();

  std::vector<int> fold = detail::assign_folds(n, spec, seed);
  std::vector<double> cv_sq(L, 0.0);
  std::vector<std::vector<double>> fold_sq(static_cast<std::size_t>(spec.cv_folds),
                                           std::vector<double>(L, 0.0));
  std::vector<std::size_t> fold_rows(static_cast<std::size_t>(spec.cv_folds), 0);
  bool cv_converged = true;
  long cv_sweeps = 0;
  for (int k = 0; k < spec.cv_folds; ++k) {
    std::vector<Eigen::Index> train, held;
    for (std::size_t i = 0; i < n; ++i) {
      (fold[i] == k ? held : train).push_back(static_cast<Eigen::Index>(i));
    }
    if (held.empty() || train.empty()) continue;
    fold_rows[static_cast<std::size_t>(k)] = held.size();
    Eigen::MatrixXd Xt(train.size(), p);
    Eigen::VectorXd yt(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      Xt.row(static_cast<Eigen::Index>(i)) = X.row(train[i]);
      yt(static_cast<Eigen::Index>(i)) = y(train[i]);
    }
    detail::Standardized sxt = detail::standardize(Xt);
    double ybar_t = yt.mean();
    Eigen::VectorXd yct = yt.array() - ybar_t;
    detail::GaussianPath fit = detail::fit_gaussian_path(sxt, yct, path, spec);
    cv_converged = cv_converged && fit.converged;
    cv_sweeps += fit.sweeps;
    for (std::size_t l = 0; l < L; ++l) {
      const Eigen::VectorXd& b = fit.betas[l];
      for (Eigen::Index i : held) {
        double pred = ybar_t;
        for (Eigen::Index j = 0; j < p; ++j) {
          if (b(j) != 0.0) {
            pred += b(j) * (X(i, j) - sxt.mean(j)) / sxt.scale(j);
          }
        }
        double e = y(i) - pred;
        cv_sq[l] += e * e;
        fold_sq[static_cast<std::size_t>(k)][l] += e * e;
      }
    }
  }
  for (std::size_t l = 0; l < L; ++l) cv_sq[l] /= static_cast<double>(n);

  std::vector<double> cv_se = detail::cv_standard_errors(fold_sq, fold_rows);
  std::size_t best = detail::select_lambda_index(cv_sq, cv_se, spec.lambda_rule);

  detail::GaussianPath full = detail::fit_gaussian_path(sx, yc, path, spec);
  const Eigen::VectorXd& b_std = full.betas[best];

  RegressionModel model;
  model.alpha_ = spec.alpha;
  model.lambda_ = path[best];
  model.cv_error_ = cv_sq[best];
  double intercept = ybar;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (b_std(j) != 0.0) {
      double b = b_std(j) / sx.scale(j);
      model.coefs_.push_back({feature_names[static_cast<std::size_t>(j)], b});
      intercept -= b * sx.mean(j);
    }
  }
  model.intercept_ = intercept;

  FitDiagnostics& d = model.diagnostics_;
  d.converged = full.converged && cv_converged;
  d.sweeps = full.sweeps + cv_sweeps;
  d.lambda_path = path;
  d.cv_errors = cv_sq;
  d.cv_se = cv_se;
  d.selected_index = best;
  d.nonzero_per_lambda.reserve(L);
  for (const auto& b : full.betas) {
    d.nonzero_per_lambda.push_back(static_cast<int>((b.array() != 0.0).count()));
  }
  // Residuals at the selected lambda, mapped back to the original row order.
  Eigen::VectorXd fitted_std = sx.X * b_std;
  d.training_residuals.assign(n, 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double res = yc(static_cast<Eigen::Index>(i)) - fitted_std(static_cast<Eigen::Index>(i));
    d.training_residuals[order[i]] = res;
    sq += res * res;
  }
  d.training_rmse = std::sqrt(sq / static_cast<double>(n));
  return model;
}

double RegressionModel::predict(const SummaryVector& s) const {
  double out = intercept_;
  for (const auto& c : coefs_) out += c.value * s.at(c.feature);
  return out;
}

std::vector<std::pair<std::size_t, double>> RegressionModel::bind(
    const std::vector<std::string>& feature_order) const {
  std::vector<std::pair<std::size_t, double>> bound;
  bound.reserve(coefs_.size());
  for (const auto& c : coefs_) {
    auto it = std::find(feature_order.begin(), feature_order.end(), c.feature);
    if (it == feature_order.end()) {
      throw std::invalid_argument("feature '" + c.feature +
                                  "' not present in the supplied ordering");
    }
    bound.emplace_back(static_cast<std::size_t>(it - feature_order.begin()), c.value);
  }
  return bound;
}

double RegressionModel::predict_bound(
    const std::vector<std::pair<std::size_t, double>>& bound, double intercept,
    const double* row) {
  double out = intercept;
  for (const auto& [idx, value] : bound) out += value * row[idx];
  return out;
}

nlohmann::json RegressionModel::to_json() const {
  nlohmann::json coefs = nlohmann::json::array();
  for (const auto& c : coefs_) {
    coefs.push_back({{"feature", c.feature}, {"value", c.value}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "regression"},
          {"alpha", alpha_},
          {"lambda", lambda_},
          {"cv_error", cv_error_},
          {"intercept", intercept_},
          {"coefficients", coefs},
          {"converged", diagnostics_.converged},
          {"sweeps", diagnostics_.sweeps},
          {"training_rmse", diagnostics_.training_rmse}};
}

RegressionModel RegressionModel::from_json(const nlohmann::json& j) {
  if (j.at("kind").get<std::string>() != "regression") {
    throw std::runtime_error("artifact is not a regression model");
  }
  RegressionModel m;
  m.alpha_ = j.at("alpha").get<double>();
  m.lambda_ = j.at("lambda").get<double>();
  m.cv_error_ = j.at("cv_error").get<double>();
  m.intercept_ = j.at("intercept").get<double>();
  for (const auto& c : j.at("coefficients")) {
    m.coefs_.push_back({c.at("feature").get<std::string>(), c.at("value").get<double>()});
  }
  m.diagnostics_.converged = j.at("converged").get<bool>();
  m.diagnostics_.sweeps = j.at("sweeps").get<long>();
  m.diagnostics_.training_rmse = j.at("training_rmse").get<double>();
  return m;
}

double predict_regression(const RegressionModel& model, const SummaryVector& s) {
  return model.predict(s);
}

}  // namespace regcal
