#include "regcal/benchmarks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "regcal/csv.hpp"
#include "regcal/experiment.hpp"
#include "regcal/rng.hpp"

namespace regcal {

namespace {

using Clock = std::chrono::steady_clock;

double minutes_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count() / 60.0;
}

std::uint64_t stage_seed(std::uint64_t master, std::uint64_t stage) {
  return derive_seed(master, SeedStream::stage, stage);
}

std::vector<double> ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("spearman needs two equally sized inputs");
  }
  std::vector<double> ra = ranks(a), rb = ranks(b);
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= static_cast<double>(ra.size());
  mb /= static_cast<double>(rb.size());
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    double da = ra[i] - ma, db = rb[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw std::invalid_argument("spearman is undefined for constant input");
  }
  return sab / std::sqrt(saa * sbb);
}

LineBenchmarkResult run_line_benchmark(const LineBenchmarkConfig& cfg) {
  LineModelConfig line{cfg.kind, 10, 5, 1.0};
  LineSimulator sim(line);
  ParameterSpace space = line_space(cfg.beta_low, cfg.beta_high);

  // The observed targets: fresh (beta*, S*) pairs shared by every method
  // and not charged to any of their runtimes.
  ExperimentTable test =
      run_experiment(sim, space, cfg.n_test, stage_seed(cfg.design_seed, 1), cfg.jobs);

  LineBenchmarkResult out;
  out.beta_true = test.theta_column(0);

  // Regression: simulate a training design, fit, predict each target.
  {
    auto t0 = Clock::now();
    ExperimentTable train =
        run_experiment(sim, space, cfg.n_train, stage_seed(cfg.design_seed, 2), cfg.jobs);
    out.estimator = train_estimator(train, FeatureExpansion{}, cfg.penalty,
                                    cfg.fit_seed, cfg.jobs);
    BoundEstimator bound(out.estimator, test.statistic_names());
    std::vector<double> est(test.n());
    std::vector<double> row;
    for (std::size_t i = 0; i < test.n(); ++i) {
      bound.estimate(test.statistics()[i], row);
      est[i] = row[0];
    }
    out.regression = {"regression", estimation_rmse(out.beta_true, est),
                      minutes_since(t0), std::move(est)};
  }

  // Scale-matched distance: every statistic counts equally, so the flat
  // statistics dilute the ABC signal exactly as an off-the-shelf ABC run
  // (which standardizes its inputs) would experience.
  DistanceSpec dspec;
  dspec.weighting = Weighting::inverse_variance;

  // Rejection: per target, simulate a fresh reference design and average
  // the retained draws (the standard per-call protocol, so simulation cost
  // is charged per target).
  {
    auto t0 = Clock::now();
    std::uint64_t s = stage_seed(cfg.design_seed, 3);
    std::vector<double> est(test.n());
    parallel_for(test.n(), cfg.jobs, [&](std::size_t i) {
      ExperimentTable ref = run_experiment(sim, space, cfg.abc.n_draws,
                                           derive_seed(s, SeedStream::draw, i), 1);
      est[i] = rejection_abc(ref, test.row_summary(i), dspec, cfg.abc.keep_fraction)
                   .estimate[0];
    });
    out.rejection = {"rejection_abc", estimation_rmse(out.beta_true, est),
                     minutes_since(t0), std::move(est)};
  }

  // MCMC: per target, calibrate epsilon on a fresh reference design, then
  // run the chain.
  {
    auto t0 = Clock::now();
    std::uint64_t s = stage_seed(cfg.design_seed, 4);
    std::vector<double> est(test.n());
    parallel_for(test.n(), cfg.jobs, [&](std::size_t i) {
      std::uint64_t si = derive_seed(s, SeedStream::draw, i);
      ExperimentTable ref =
          run_experiment(sim, space, cfg.abc.n_draws, derive_seed(si, SeedStream::draw, 0), 1);
      AbcConfig abc = cfg.abc;
      abc.epsilon = epsilon_from_reference(ref, test.row_summary(i), dspec,
                                           cfg.epsilon_quantile);
      // Start at the closest reference draw: a state within epsilon by
      // construction, so the chain begins valid.
      RejectionResult closest = rejection_abc(ref, test.row_summary(i), dspec,
                                              1.0 / static_cast<double>(ref.n()));
      McmcResult r = mcmc_abc(sim, space, test.row_summary(i), dspec, abc,
                              derive_seed(si, SeedStream::draw, 1), &ref,
                              &closest.estimate);
      est[i] = r.estimate[0];
    });
    out.mcmc = {"mcmc_abc", estimation_rmse(out.beta_true, est), minutes_since(t0),
                std::move(est)};
  }
  return out;
}

std::string LineBenchmarkResult::methods_csv() const {
  double base = regression.runtime_minutes;
  std::string out = "method,rmse,runtime_minutes,runtime_scaled\n";
  for (const MethodResult* m : {&regression, &rejection, &mcmc}) {
    double scaled = base > 0.0 ? m->runtime_minutes / base : 0.0;
    out += m->method + "," + csv::format_double(m->rmse) + "," +
           csv::format_double(m->runtime_minutes) + "," + csv::format_double(scaled) + "\n";
  }
  return out;
}

std::string LineBenchmarkResult::points_csv() const {
  std::string out = "beta_true,regression,rejection_abc,mcmc_abc\n";
  for (std::size_t i = 0; i < beta_true.size(); ++i) {
    out += csv::format_double(beta_true[i]) + "," +
           csv::format_double(regression.estimates[i]) + "," +
           csv::format_double(rejection.estimates[i]) + "," +
           csv::format_double(mcmc.estimates[i]) + "\n";
  }
  return out;
}

SelectionBenchmarkResult run_selection_benchmark(const SelectionBenchmarkConfig& cfg) {
  auto straight = std::make_shared<LineSimulator>(
      LineModelConfig{LineModelConfig::Kind::straight, 10, 5, 1.0});
  auto broken = std::make_shared<LineSimulator>(
      LineModelConfig{LineModelConfig::Kind::broken, 10, 5, 1.0});
  CandidateSet cands({{"straight", straight, std::nullopt, {cfg.beta}},
                      {"broken", broken, std::nullopt, {cfg.beta}}});

  ExperimentTable test = build_selection_table(cands, cfg.n_test_per_model,
                                               stage_seed(cfg.design_seed, 1), cfg.jobs);

  SelectionBenchmarkResult out;
  Clock::time_point t0 = Clock::now();
  ExperimentTable train = build_selection_table(cands, cfg.n_train_per_model,
                                                stage_seed(cfg.design_seed, 2), cfg.jobs);
  out.classifier = train_selector(train, cfg.penalty, cfg.fit_seed);
  out.report = evaluate_selection(out.classifier, test);
  out.classifier_runtime_minutes = minutes_since(t0);

  // Minimum-distance baseline: nearest labeled reference row, under both
  // weightings, using the same reference design the classifier trained on.
  t0 = Clock::now();
  ExperimentTable ref = build_selection_table(cands, cfg.n_train_per_model,
                                              stage_seed(cfg.design_seed, 2), cfg.jobs);
  DistanceSpec identity;
  DistanceSpec diag;
  diag.weighting = Weighting::inverse_variance;
  std::size_t correct_id = 0, correct_diag = 0;
  DistanceFunction f_id = DistanceFunction::build(identity, ref.statistic_names(), nullptr);
  DistanceFunction f_diag =
      DistanceFunction::build(diag, ref.statistic_names(), &ref);
  for (std::size_t i = 0; i < test.n(); ++i) {
    const auto& row = test.statistics()[i];
    std::size_t best_id = 0, best_diag = 0;
    double d_id = f_id(ref.statistics()[0], row), d_dg = f_diag(ref.statistics()[0], row);
    for (std::size_t r = 1; r < ref.n(); ++r) {
      double a = f_id(ref.statistics()[r], row);
      if (a < d_id) {
        d_id = a;
        best_id = r;
      }
      double b = f_diag(ref.statistics()[r], row);
      if (b < d_dg) {
        d_dg = b;
        best_diag = r;
      }
    }
    if (ref.labels()[best_id] == test.labels()[i]) ++correct_id;
    if (ref.labels()[best_diag] == test.labels()[i]) ++correct_diag;
  }
  out.nearest_identity_accuracy =
      static_cast<double>(correct_id) / static_cast<double>(test.n());
  out.nearest_diag_accuracy =
      static_cast<double>(correct_diag) / static_cast<double>(test.n());
  out.nearest_runtime_minutes = minutes_since(t0);
  return out;
}

std::string SelectionBenchmarkResult::methods_csv() const {
  std::string out = "method,accuracy,runtime_minutes\n";
  out += "classifier," + csv::format_double(report.accuracy) + "," +
         csv::format_double(classifier_runtime_minutes) + "\n";
  out += "nearest_identity," + csv::format_double(nearest_identity_accuracy) + "," +
         csv::format_double(nearest_runtime_minutes) + "\n";
  out += "nearest_diag," + csv::format_double(nearest_diag_accuracy) + "," +
         csv::format_double(nearest_runtime_minutes) + "\n";
  return out;
}

CurvatureBenchmarkResult run_curvature_benchmark(const CurvatureBenchmarkConfig& cfg) {
  LineModelConfig line{cfg.kind, 10, 5, 1.0};
  LineSimulator sim(line);
  ParameterSpace space = line_space();

  ExperimentTable reference =
      run_experiment(sim, space, cfg.n_reference, stage_seed(cfg.design_seed, 1), cfg.jobs);
  SummaryVector s_star =
      simulate_line(line, cfg.beta_star, stage_seed(cfg.design_seed, 2));

  // Train on a separate design so the reference rows stay evaluable.
  ExperimentTable train =
      run_experiment(sim, space, cfg.n_reference, stage_seed(cfg.design_seed, 3), cfg.jobs);
  FittedEstimator est =
      train_estimator(train, FeatureExpansion{}, cfg.penalty, cfg.fit_seed, cfg.jobs);

  CurvatureBenchmarkResult out;
  auto profile = curvature_profile(est, reference, s_star);
  out.beta.reserve(profile.size());
  out.regression_profile.reserve(profile.size());
  for (const auto& [b, v] : profile) {
    out.beta.push_back(b);
    out.regression_profile.push_back(v);
  }

  DistanceSpec identity;
  DistanceSpec diag;
  diag.weighting = Weighting::inverse_variance;
  DistanceFunction f_id =
      DistanceFunction::build(identity, reference.statistic_names(), nullptr);
  DistanceFunction f_diag =
      DistanceFunction::build(diag, reference.statistic_names(), &reference);
  std::vector<double> star(reference.statistic_names().size());
  for (std::size_t j = 0; j < star.size(); ++j) {
    star[j] = s_star.at(reference.statistic_names()[j]);
  }
  out.identity_distance.resize(reference.n());
  out.diag_distance.resize(reference.n());
  for (std::size_t i = 0; i < reference.n(); ++i) {
    out.identity_distance[i] = f_id(reference.statistics()[i], star);
    out.diag_distance[i] = f_diag(reference.statistics()[i], star);
  }

  std::vector<double> gap(reference.n());
  for (std::size_t i = 0; i < reference.n(); ++i) gap[i] = std::abs(out.beta[i] - cfg.beta_star);
  out.spearman_regression = spearman(gap, out.regression_profile);
  out.spearman_identity = spearman(gap, out.identity_distance);
  out.spearman_diag = spearman(gap, out.diag_distance);

  // Replicate spread at matched theta: same beta re-simulated many times.
  std::uint64_t rep_seed = stage_seed(cfg.design_seed, 4);
  for (std::size_t g = 0; g < cfg.grid_points; ++g) {
    double frac = (static_cast<double>(g) + 1.0) / (static_cast<double>(cfg.grid_points) + 1.0);
    double beta = space.at(0).low + frac * (space.at(0).high - space.at(0).low);
    std::vector<double> d_id(cfg.replicates), d_dg(cfg.replicates);
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      SummaryVector s =
          simulate_line(line, beta, derive_seed(rep_seed, SeedStream::run, g * cfg.replicates + r));
      std::vector<double> v(star.size());
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = s.at(reference.statistic_names()[j]);
      }
      d_id[r] = f_id(v, star);
      d_dg[r] = f_diag(v, star);
    }
    auto mean_var = [](const std::vector<double>& d) {
      double m = 0.0;
      for (double x : d) m += x;
      m /= static_cast<double>(d.size());
      double v = 0.0;
      for (double x : d) v += (x - m) * (x - m);
      v /= static_cast<double>(d.size() - 1);
      return std::pair<double, double>(m, v);
    };
    auto [mi, vi] = mean_var(d_id);
    auto [md, vd] = mean_var(d_dg);
    out.grid_beta.push_back(beta);
    out.identity_mean.push_back(mi);
    out.identity_var.push_back(vi);
    out.diag_mean.push_back(md);
    out.diag_var.push_back(vd);
  }
  return out;
}

std::string CurvatureBenchmarkResult::profile_csv() const {
  std::string out = "beta,curve,value\n";
  for (std::size_t i = 0; i < beta.size(); ++i) {
    out += csv::format_double(beta[i]) + ",regression," +
           csv::format_double(regression_profile[i]) + "\n";
    out += csv::format_double(beta[i]) + ",identity," +
           csv::format_double(identity_distance[i]) + "\n";
    out += csv::format_double(beta[i]) + ",diag," +
           csv::format_double(diag_distance[i]) + "\n";
  }
  return out;
}

std::string CurvatureBenchmarkResult::replicate_csv() const {
  std::string out = "beta,weighting,mean,variance\n";
  for (std::size_t g = 0; g < grid_beta.size(); ++g) {
    out += csv::format_double(grid_beta[g]) + ",identity," +
           csv::format_double(identity_mean[g]) + "," +
           csv::format_double(identity_var[g]) + "\n";
    out += csv::format_double(grid_beta[g]) + ",diag," +
           csv::format_double(diag_mean[g]) + "," + csv::format_double(diag_var[g]) + "\n";
  }
  return out;
}

SurrogateBenchmarkResult run_surrogate_benchmark(const SurrogateBenchmarkConfig& cfg) {
  ParameterSpace space = surrogate_macro_space();
  SurrogateMacroSimulator aux_sim(cfg.panel_length,
                                  {StatSet::aux, StatSet::ar5, StatSet::cov});
  SurrogateMacroSimulator xcorr_sim(cfg.panel_length, {StatSet::xcorr});

  SurrogateBenchmarkResult out;
  {
    ExperimentTable train = run_experiment(aux_sim, space, cfg.n_train,
                                           stage_seed(cfg.design_seed, 1), cfg.jobs);
    ExperimentTable test = run_experiment(aux_sim, space, cfg.n_test,
                                          stage_seed(cfg.design_seed, 2), cfg.jobs);
    out.aux_base_count = train.statistic_names().size();
    out.aux_feature_count = cfg.expansion.size(out.aux_base_count);
    FittedEstimator est =
        train_estimator(train, cfg.expansion, cfg.penalty, cfg.fit_seed, cfg.jobs);
    out.aux_report = evaluate_estimator(est, test);
  }
  {
    ExperimentTable train = run_experiment(xcorr_sim, space, cfg.n_train,
                                           stage_seed(cfg.design_seed, 1), cfg.jobs);
    ExperimentTable test = run_experiment(xcorr_sim, space, cfg.n_test,
                                          stage_seed(cfg.design_seed, 2), cfg.jobs);
    out.xcorr_base_count = train.statistic_names().size();
    out.xcorr_feature_count = cfg.expansion.size(out.xcorr_base_count);
    FittedEstimator est =
        train_estimator(train, cfg.expansion, cfg.penalty, cfg.fit_seed, cfg.jobs);
    out.xcorr_report = evaluate_estimator(est, test);
  }
  return out;
}

std::string SurrogateBenchmarkResult::report_csv() const {
  std::string out = "parameter,statistics,bias,rmse,predictivity\n";
  for (const auto& p : aux_report.parameters) {
    out += p.parameter + ",aux," + csv::format_double(p.bias) + "," +
           csv::format_double(p.rmse) + "," + csv::format_double(p.predictivity) + "\n";
  }
  for (const auto& p : xcorr_report.parameters) {
    out += p.parameter + ",xcorr," + csv::format_double(p.bias) + "," +
           csv::format_double(p.rmse) + "," + csv::format_double(p.predictivity) + "\n";
  }
  return out;
}

}  // namespace regcal
