#include "regcal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "regcal/experiment.hpp"
#include "regcal/rng.hpp"

namespace regcal {

DistanceFunction DistanceFunction::build(const DistanceSpec& spec,
                                         const std::vector<std::string>& statistic_names,
                                         const ExperimentTable* variance_table) {
  DistanceFunction f;
  if (spec.subset) {
    for (const auto& name : *spec.subset) {
      auto it = std::find(statistic_names.begin(), statistic_names.end(), name);
      if (it == statistic_names.end()) {
        throw std::invalid_argument("distance subset names unknown statistic '" + name + "'");
      }
      f.columns_.push_back(static_cast<std::size_t>(it - statistic_names.begin()));
      f.names_.push_back(name);
    }
    if (f.columns_.empty()) throw std::invalid_argument("distance subset is empty");
  } else {
    f.columns_.resize(statistic_names.size());
    std::iota(f.columns_.begin(), f.columns_.end(), 0);
    f.names_ = statistic_names;
  }

  const std::size_t m = f.columns_.size();
  switch (spec.weighting) {
    case Weighting::identity:
      f.diag_.assign(m, 1.0);
      break;
    case Weighting::inverse_variance: {
      if (!variance_table) {
        throw std::invalid_argument("inverse-variance weighting needs a reference table");
      }
      std::vector<double> var = variance_table->statistic_variances();
      const auto& table_names = variance_table->statistic_names();
      f.diag_.assign(m, 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        auto it = std::find(table_names.begin(), table_names.end(), f.names_[j]);
        if (it == table_names.end()) {
          throw std::invalid_argument("reference table lacks statistic '" + f.names_[j] + "'");
        }
        double v = var[static_cast<std::size_t>(it - table_names.begin())];
        if (v == 0.0) {
          f.dropped_.push_back(f.names_[j]);
          f.diag_[j] = 0.0;
        } else {
          f.diag_[j] = 1.0 / v;
        }
      }
      if (!f.dropped_.empty()) {
        std::cerr << "warning: zero-variance statistics get weight 0 in the distance:";
        for (const auto& n : f.dropped_) std::cerr << " " << n;
        std::cerr << "\n";
      }
      break;
    }
    case Weighting::custom: {
      if (spec.custom_w.rows() != static_cast<Eigen::Index>(m) ||
          spec.custom_w.cols() != static_cast<Eigen::Index>(m)) {
        throw std::invalid_argument("custom weight matrix size does not match statistics");
      }
      if (!spec.custom_w.isApprox(spec.custom_w.transpose(), 1e-12)) {
        throw std::invalid_argument("custom weight matrix must be symmetric");
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec.custom_w);
      double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
      if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
        throw std::invalid_argument("custom weight matrix must be positive semidefinite");
      }
      f.w_ = spec.custom_w;
      f.full_matrix_ = true;
      break;
    }
  }
  return f;
}

double DistanceFunction::operator()(std::span<const double> a,
                                    std::span<const double> b) const {
  const std::size_t m = columns_.size();
  if (full_matrix_) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
      d(static_cast<Eigen::Index>(j)) = a[columns_[j]] - b[columns_[j]];
    }
    return d.dot(w_ * d);
  }
  double out = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double d = a[columns_[j]] - b[columns_[j]];
    out += diag_[j] * d * d;
  }
  return out;
}

double DistanceFunction::between(const SummaryVector& a, const SummaryVector& b) const {
  double out = 0.0;
  if (full_matrix_) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(names_.size()));
    for (std::size_t j = 0; j < names_.size(); ++j) {
      d(static_cast<Eigen::Index>(j)) = a.at(names_[j]) - b.at(names_[j]);
    }
    return d.dot(w_ * d);
  }
  for (std::size_t j = 0; j < names_.size(); ++j) {
    double d = a.at(names_[j]) - b.at(names_[j]);
    out += diag_[j] * d * d;
  }
  return out;
}

double distance(const SummaryVector& a, const SummaryVector& b, const DistanceSpec& spec,
                const ExperimentTable* variance_table) {
  if (a.names != b.names) {
    throw std::invalid_argument("summary vectors have different statistic schemas");
  }
  return DistanceFunction::build(spec, a.names, variance_table)(a.values, b.values);
}

RejectionResult rejection_abc(const ExperimentTable& table, const SummaryVector& s_star,
                              const DistanceSpec& dspec, double keep_fraction) {
  if (table.n() == 0) throw std::invalid_argument("reference table is empty");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw std::invalid_argument("keep_fraction must lie in (0,1]");
  }
  DistanceFunction dist = DistanceFunction::build(
      dspec, table.statistic_names(),
      dspec.weighting == Weighting::inverse_variance ? &table : nullptr);

  // s_star values in table column order.
  std::vector<double> star(table.statistic_names().size());
  for (std::size_t j = 0; j < star.size(); ++j) {
    star[j] = s_star.at(table.statistic_names()[j]);
  }

  const std::size_t n = table.n();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = dist(table.statistics()[i], star);

  std::size_t keep = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(n)));
  keep = std::min(keep, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });
  order.resize(keep);
  std::sort(order.begin(), order.end());

  RejectionResult out;
  out.retained_rows = order;
  out.estimate.assign(table.space().size(), 0.0);
  for (std::size_t i : order) {
    for (std::size_t k = 0; k < out.estimate.size(); ++k) {
      out.estimate[k] += table.thetas()[i][k];
    }
  }
  for (double& v : out.estimate) v /= static_cast<double>(keep);
  return out;
}

double epsilon_from_reference(const ExperimentTable& table, const SummaryVector& s_star,
                              const DistanceSpec& dspec, double quantile) {
  if (table.n() == 0) throw std::invalid_argument("reference table is empty");
  if (!(quantile > 0.0 && quantile <= 1.0)) {
    throw std::invalid_argument("quantile must lie in (0,1]");
  }
  DistanceFunction dist = DistanceFunction::build(
      dspec, table.statistic_names(),
      dspec.weighting == Weighting::inverse_variance ? &table : nullptr);
  std::vector<double> star(table.statistic_names().size());
  for (std::size_t j = 0; j < star.size(); ++j) {
    star[j] = s_star.at(table.statistic_names()[j]);
  }
  std::vector<double> d(table.n());
  for (std::size_t i = 0; i < table.n(); ++i) d[i] = dist(table.statistics()[i], star);
  std::sort(d.begin(), d.end());
  std::size_t idx = static_cast<std::size_t>(
      std::ceil(quantile * static_cast<double>(d.size()))) - 1;
  return d[std::min(idx, d.size() - 1)];
}

namespace {

// Reflects x into [lo, hi] by folding the line at the bounds (triangle
// wave with period 2*(hi-lo)); exact for arbitrarily large excursions.
double reflect_into(double x, double lo, double hi) {
  double range = hi - lo;
  double t = std::fmod(x - lo, 2.0 * range);
  if (t < 0.0) t += 2.0 * range;
  return t <= range ? lo + t : hi - (t - range);
}

}  // namespace

McmcResult mcmc_abc(const Simulator& sim, const ParameterSpace& space,
                    const SummaryVector& s_star, const DistanceSpec& dspec,
                    const AbcConfig& cfg, std::uint64_t seed,
                    const ExperimentTable* variance_table,
                    const std::vector<double>* start) {
  if (cfg.chain_length == 0) throw std::invalid_argument("chain_length must be positive");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(cfg.proposal_scale > 0.0)) throw std::invalid_argument("proposal_scale must be positive");
  if (!(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0)) {
    throw std::invalid_argument("burn_in_fraction must lie in [0,1)");
  }
  const std::size_t K = space.size();

  DistanceFunction dist = DistanceFunction::build(
      dspec, s_star.names,
      dspec.weighting == Weighting::inverse_variance ? variance_table : nullptr);

  Rng walk(derive_seed(seed, SeedStream::chain, 0));
  std::vector<double> theta(K), proposal(K);
  if (start) {
    if (start->size() != K) throw std::invalid_argument("start has wrong dimension");
    if (!space.contains(*start)) {
      throw std::invalid_argument("start lies outside the parameter space");
    }
    theta = *start;
  } else {
    for (std::size_t k = 0; k < K; ++k) {
      theta[k] = walk.uniform(space.at(k).low, space.at(k).high);
    }
  }

  McmcResult out;
  out.chain.reserve(cfg.chain_length);
  for (std::size_t step = 0; step < cfg.chain_length; ++step) {
    for (std::size_t k = 0; k < K; ++k) {
      double sd = cfg.proposal_scale * (space.at(k).high - space.at(k).low);
      proposal[k] = reflect_into(theta[k] + sd * walk.normal(),
                                 space.at(k).low, space.at(k).high);
    }
    SummaryVector s = sim.run(proposal, derive_seed(seed, SeedStream::chain, step + 1));
    if (dist.between(s, s_star) < cfg.epsilon) {
      theta = proposal;
      ++out.accepted;
    }
    out.chain.push_back(theta);
  }
  // With an explicit start the chain is valid even if it never moved; from
  // a prior draw a zero-accept chain never reached a valid state at all.
  if (out.accepted == 0 && !start) {
    throw SimulationError("no proposal was ever accepted; epsilon is too small "
                          "for this simulator and target");
  }
  out.acceptance_rate =
      static_cast<double>(out.accepted) / static_cast<double>(cfg.chain_length);

  std::size_t burn = static_cast<std::size_t>(
      cfg.burn_in_fraction * static_cast<double>(cfg.chain_length));
  out.estimate.assign(K, 0.0);
  for (std::size_t step = burn; step < cfg.chain_length; ++step) {
    for (std::size_t k = 0; k < K; ++k) out.estimate[k] += out.chain[step][k];
  }
  for (double& v : out.estimate) v /= static_cast<double>(cfg.chain_length - burn);
  return out;
}

namespace {

struct Objective {
  const Simulator& sim;
  const ParameterSpace& space;
  const DistanceFunction& dist;
  const std::vector<double>& star;   // in s_star schema order
  const std::vector<std::string>& names;
  std::uint64_t seed;
  mutable std::size_t evals = 0;

  // Mean distance over three replicates; replicate seeds are derived from
  // a running evaluation counter so the whole search is deterministic.
  double operator()(const std::vector<double>& theta) const {
    double total = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
      SummaryVector s =
          sim.run(theta, derive_seed(seed, SeedStream::refine, evals * 3 + rep));
      double d = 0.0;
      std::vector<double> values(names.size());
      for (std::size_t j = 0; j < names.size(); ++j) values[j] = s.at(names[j]);
      d = dist(values, star);
      total += d;
    }
    ++evals;
    return total / 3.0;
  }
};

}  // namespace

SmdResult smd_estimate(const Simulator& sim, const ParameterSpace& space,
                       const SummaryVector& s_star, const DistanceSpec& dspec,
                       std::size_t budget, std::uint64_t seed,
                       const ExperimentTable* variance_table) {
  if (budget == 0) throw std::invalid_argument("budget must be positive");
  const std::size_t K = space.size();
  DistanceFunction dist = DistanceFunction::build(
      dspec, s_star.names,
      dspec.weighting == Weighting::inverse_variance ? variance_table : nullptr);
  std::vector<double> star(s_star.names.size());
  for (std::size_t j = 0; j < star.size(); ++j) star[j] = s_star.values[j];

  Objective obj{sim, space, dist, star, s_star.names, seed, 0};

  // Coarse stage: cell midpoints along each axis (a uniform seeded sweep
  // for multi-parameter spaces).
  std::vector<std::vector<double>> grid;
  if (K == 1) {
    grid.reserve(budget);
    for (std::size_t g = 0; g < budget; ++g) {
      double frac = (static_cast<double>(g) + 0.5) / static_cast<double>(budget);
      grid.push_back({space.at(0).low + frac * (space.at(0).high - space.at(0).low)});
    }
  } else {
    Rng rng(derive_seed(seed, SeedStream::refine, ~0ull));
    grid.reserve(budget);
    for (std::size_t g = 0; g < budget; ++g) {
      std::vector<double> theta(K);
      for (std::size_t k = 0; k < K; ++k) {
        theta[k] = rng.uniform(space.at(k).low, space.at(k).high);
      }
      grid.push_back(std::move(theta));
    }
  }

  std::vector<double> best = grid[0];
  double best_val = obj(grid[0]);
  for (std::size_t g = 1; g < grid.size(); ++g) {
    double v = obj(grid[g]);
    if (v < best_val) {
      best_val = v;
      best = grid[g];
    }
  }

  // Refinement: golden-section per coordinate around the best cell.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  int passes = K == 1 ? 1 : 2;
  for (int pass = 0; pass < passes; ++pass) {
    for (std::size_t k = 0; k < K; ++k) {
      double range = space.at(k).high - space.at(k).low;
      double cell = K == 1 ? range / static_cast<double>(budget)
                           : range / std::cbrt(static_cast<double>(budget));
      double lo = std::max(space.at(k).low, best[k] - cell);
      double hi = std::min(space.at(k).high, best[k] + cell);
      double a = lo, b = hi;
      double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      std::vector<double> t1 = best, t2 = best;
      t1[k] = x1;
      t2[k] = x2;
      double f1 = obj(t1), f2 = obj(t2);
      for (int it = 0; it < 20; ++it) {
        if (f1 < f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - gr * (b - a);
          t1[k] = x1;
          f1 = obj(t1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + gr * (b - a);
          t2[k] = x2;
          f2 = obj(t2);
        }
      }
      double mid = 0.5 * (a + b);
      std::vector<double> tm = best;
      tm[k] = mid;
      double fm = obj(tm);
      if (fm < best_val) {
        best_val = fm;
        best = tm;
      }
    }
  }

  SmdResult out;
  out.estimate = best;
  out.best_distance = best_val;
  out.evaluations = obj.evals;
  return out;
}

std::vector<std::pair<double, double>> curvature_profile(const FittedEstimator& est,
                                                         const ExperimentTable& reference,
                                                         const SummaryVector& s_star) {
  if (est.space().size() != 1) {
    throw std::invalid_argument("curvature profile is defined for one-parameter models");
  }
  double r_star = est.estimate(s_star).values[0];
  BoundEstimator bound(est, reference.statistic_names());
  std::vector<std::pair<double, double>> out;
  out.reserve(reference.n());
  std::vector<double> row_est;
  for (std::size_t i = 0; i < reference.n(); ++i) {
    bound.estimate(reference.statistics()[i], row_est);
    out.emplace_back(reference.thetas()[i][0], std::abs(r_star - row_est[0]));
  }
  return out;
}

}  // namespace regcal
