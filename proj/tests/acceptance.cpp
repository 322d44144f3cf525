// Acceptance gate: each check prints exactly one PASS/FAIL line with the
// measured numbers next to the threshold it is held against. The process
// exit code is the number of failed checks. Run with check names
// (e.g. "c2 c7") to restrict to a subset during development.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regcal/benchmarks.hpp"
#include "regcal/elastic_net.hpp"
#include "regcal/estimator.hpp"
#include "regcal/experiment.hpp"
#include "regcal/models.hpp"
#include "regcal/rng.hpp"
#include "regcal/types.hpp"
#include "support/oracles.hpp"

using namespace regcal;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;
std::set<std::string> g_only;

bool enabled(const std::string& id) { return g_only.empty() || g_only.count(id) > 0; }

void report(const std::string& id, const std::string& name, bool ok,
            const std::string& details) {
  std::cout << id << " " << name << ": " << (ok ? "PASS" : "FAIL") << " (" << details
            << ")\n"
            << std::flush;
  if (!ok) ++g_failures;
}

void report_error(const std::string& id, const std::string& name, const std::string& what) {
  report(id, name, false, "exception: " + what);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

double minutes_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count() / 60.0;
}

// L1 mass of the fitted slope coefficients, restricted to the listed
// feature names when a filter is given.
double coef_l1(const std::vector<Coefficient>& coefs,
               const std::set<std::string>* filter) {
  double total = 0.0;
  for (const auto& c : coefs) {
    if (!filter || filter->count(c.feature) > 0) total += std::abs(c.value);
  }
  return total;
}

double classifier_l1(const ClassifierModel& model, const std::set<std::string>* filter) {
  double total = 0.0;
  for (std::size_t k = 0; k < model.classes().size(); ++k) {
    total += coef_l1(model.class_coefficients(k), filter);
  }
  return total;
}

bool has_feature(const std::vector<Coefficient>& coefs, const std::string& feature) {
  for (const auto& c : coefs) {
    if (c.feature == feature) return true;
  }
  return false;
}

// Drops trailing fields from every row of a CSV so wall-clock columns do
// not enter byte comparisons.
std::string keep_columns(const std::string& text, std::size_t keep) {
  std::stringstream ss(text);
  std::string line, out;
  while (std::getline(ss, line)) {
    std::size_t pos = 0;
    for (std::size_t field = 0; field < keep; ++field) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) {
        pos = line.size();
        break;
      }
      pos = next + 1;
    }
    out += line.substr(0, pos == line.size() ? pos : pos - 1);
    out.push_back('\n');
  }
  return out;
}

LineBenchmarkConfig line_config(LineModelConfig::Kind kind) {
  LineBenchmarkConfig cfg;
  cfg.kind = kind;
  cfg.n_train = 1000;
  cfg.n_test = 1000;
  cfg.design_seed = 1;
  cfg.fit_seed = 2;
  cfg.jobs = 0;
  return cfg;
}

// ---- c1 + c4 (straight half) + c3 + c4 (broken half) -----------------

LineBenchmarkResult g_straight, g_broken;
bool g_straight_ok = false, g_broken_ok = false;
double g_straight_minutes = 0.0;

void run_line_benchmarks() {
  if (enabled("c1") || enabled("c4")) {
    try {
      auto t0 = Clock::now();
      g_straight = run_line_benchmark(line_config(LineModelConfig::Kind::straight));
      g_straight_minutes = minutes_between(t0, Clock::now());
      g_straight_ok = true;
    } catch (const std::exception& e) {
      report_error("c1", "straight-line regression benchmark", e.what());
    }
  }
  if (enabled("c3") || enabled("c4")) {
    try {
      g_broken = run_line_benchmark(line_config(LineModelConfig::Kind::broken));
      g_broken_ok = true;
    } catch (const std::exception& e) {
      report_error("c3", "broken-line benchmark", e.what());
    }
  }
}

void check_c1() {
  if (!enabled("c1") || !g_straight_ok) return;
  double rmse = g_straight.regression.rmse;
  bool ok = rmse <= 0.07 && g_straight_minutes < 2.0;
  report("c1", "straight-line regression benchmark", ok,
         "rmse " + fmt(rmse) + " <= 0.07, wall clock " + fmt(g_straight_minutes) +
             " min < 2");
}

void check_c2() {
  if (!enabled("c2")) return;
  try {
    LineSimulator sim{LineModelConfig{}};
    // Support recovery wants the one-standard-error lambda; the plain CV
    // minimum lands in the flat part of the curve where a pure-noise
    // coefficient of this size survives about half the time.
    PenaltySpec spec;
    spec.lambda_rule = LambdaRule::one_se;
    int zero = 0;
    for (int k = 0; k < 10; ++k) {
      ExperimentTable table =
          run_experiment(sim, line_space(), 1000, 100 + static_cast<std::uint64_t>(k));
      FittedEstimator est = train_estimator(table, FeatureExpansion{}, spec,
                                            200 + static_cast<std::uint64_t>(k));
      if (!has_feature(est.model(0).coefficients(), "0")) ++zero;
    }
    report("c2", "flat statistic is dropped", zero >= 9,
           "coefficient on S.0 exactly zero in " + std::to_string(zero) +
               "/10 seeded one-SE fits (need >= 9)");
  } catch (const std::exception& e) {
    report_error("c2", "flat statistic is dropped", e.what());
  }
}

void check_c3() {
  if (!enabled("c3") || !g_broken_ok) return;
  double rmse = g_broken.regression.rmse;
  const auto& coefs = g_broken.estimator.model(0).coefficients();
  std::set<std::string> flat{"0", "1", "2", "3", "4"};
  double flat_mass = coef_l1(coefs, &flat);
  double total_mass = coef_l1(coefs, nullptr);
  double share = total_mass > 0.0 ? flat_mass / total_mass : 1.0;
  double rej_ratio = g_broken.rejection.rmse / rmse;
  double mcmc_ratio = g_broken.mcmc.rmse / rmse;
  bool ok = rmse <= 0.07 && share < 0.01 && rej_ratio >= 1.3 && mcmc_ratio >= 1.3;
  report("c3", "broken-line benchmark", ok,
         "rmse " + fmt(rmse) + " <= 0.07, flat-statistic L1 share " + fmt(share) +
             " < 0.01, rejection/regression " + fmt(rej_ratio) +
             " >= 1.3, mcmc/regression " + fmt(mcmc_ratio) + " >= 1.3");
}

void check_c4() {
  if (!enabled("c4") || !g_straight_ok || !g_broken_ok) return;
  auto faster = [](const LineBenchmarkResult& r) {
    return r.regression.runtime_minutes < r.rejection.runtime_minutes &&
           r.regression.runtime_minutes < r.mcmc.runtime_minutes;
  };
  bool ok = faster(g_straight) && faster(g_broken);
  report("c4", "regression is the fastest method", ok,
         "straight reg/rej/mcmc " + fmt(g_straight.regression.runtime_minutes) + "/" +
             fmt(g_straight.rejection.runtime_minutes) + "/" +
             fmt(g_straight.mcmc.runtime_minutes) + " min; broken " +
             fmt(g_broken.regression.runtime_minutes) + "/" +
             fmt(g_broken.rejection.runtime_minutes) + "/" +
             fmt(g_broken.mcmc.runtime_minutes) + " min");
}

void check_c5() {
  if (!enabled("c5")) return;
  try {
    SelectionBenchmarkConfig cfg;
    cfg.n_train_per_model = 1000;
    cfg.n_test_per_model = 1000;
    cfg.beta = 1.0;
    SelectionBenchmarkResult r = run_selection_benchmark(cfg);
    std::set<std::string> informative{"1", "2", "3", "4"};
    double share = classifier_l1(r.classifier, &informative) /
                   classifier_l1(r.classifier, nullptr);
    bool ok = r.report.accuracy >= r.nearest_diag_accuracy &&
              r.report.accuracy >= 0.90 && share >= 0.90;
    report("c5", "model selection beats direct matching", ok,
           "classifier accuracy " + fmt(r.report.accuracy) + " >= 1-NN diag " +
               fmt(r.nearest_diag_accuracy) + " and >= 0.90 on " +
               std::to_string(r.report.n_test) + " rows; informative L1 share " +
               fmt(share) + " >= 0.90");
  } catch (const std::exception& e) {
    report_error("c5", "model selection beats direct matching", e.what());
  }
}

void check_c6() {
  if (!enabled("c6")) return;
  try {
    CurvatureBenchmarkConfig cfg;
    cfg.kind = LineModelConfig::Kind::straight;
    cfg.n_reference = 1000;
    cfg.beta_star = 1.0;
    CurvatureBenchmarkResult straight = run_curvature_benchmark(cfg);

    cfg.kind = LineModelConfig::Kind::broken;
    CurvatureBenchmarkResult broken = run_curvature_benchmark(cfg);

    // The two weightings live on arbitrary scales, so replicate noise is
    // compared through the squared coefficient of variation per grid point.
    double cv_id = 0.0, cv_diag = 0.0;
    for (std::size_t g = 0; g < broken.grid_beta.size(); ++g) {
      cv_id += broken.identity_var[g] /
               (broken.identity_mean[g] * broken.identity_mean[g]);
      cv_diag += broken.diag_var[g] / (broken.diag_mean[g] * broken.diag_mean[g]);
    }
    cv_id /= static_cast<double>(broken.grid_beta.size());
    cv_diag /= static_cast<double>(broken.grid_beta.size());

    bool ok = straight.spearman_regression >= 0.9 && cv_diag > cv_id;
    report("c6", "estimator gap tracks parameter error", ok,
           "straight spearman " + fmt(straight.spearman_regression) +
               " >= 0.9; broken replicate CV^2: diag " + fmt(cv_diag) + " > identity " +
               fmt(cv_id));
  } catch (const std::exception& e) {
    report_error("c6", "estimator gap tracks parameter error", e.what());
  }
}

void check_c7() {
  if (!enabled("c7")) return;
  try {
    SurrogateBenchmarkConfig cfg;
    cfg.n_train = 2000;
    cfg.n_test = 2000;
    SurrogateBenchmarkResult r = run_surrogate_benchmark(cfg);

    int predictive = 0;
    double worst_gap = 1e9;
    for (std::size_t k = 0; k < r.aux_report.parameters.size(); ++k) {
      double aux = r.aux_report.parameters[k].predictivity;
      double xc = r.xcorr_report.parameters[k].predictivity;
      if (aux > 0.5) ++predictive;
      worst_gap = std::min(worst_gap, aux - xc);
    }
    bool ok = r.aux_feature_count > 800 && predictive >= 4 && worst_gap >= -0.05;
    report("c7", "richer statistics keep every parameter predictable", ok,
           std::to_string(r.aux_base_count) + " base statistics -> " +
               std::to_string(r.aux_feature_count) + " features (> 800); predictivity > 0.5 for " +
               std::to_string(predictive) + "/6 (need >= 4); worst aux-vs-xcorr gap " +
               fmt(worst_gap) + " >= -0.05");
  } catch (const std::exception& e) {
    report_error("c7", "richer statistics keep every parameter predictable", e.what());
  }
}

// ---- c8: engine correctness against oracles ---------------------------

std::vector<double> standardized_coefs(const RegressionModel& model,
                                       const oracle::Standardized& st,
                                       const std::vector<std::string>& names) {
  std::vector<double> b(names.size(), 0.0);
  for (const auto& c : model.coefficients()) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (names[j] == c.feature) b[j] = c.value * st.scale(static_cast<Eigen::Index>(j));
    }
  }
  return b;
}

void check_c8() {
  if (!enabled("c8")) return;
  try {
    double worst_kkt = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
      auto prob = oracle::random_problem(30 + (seed * 7) % 170, 3 + seed % 18,
                                         static_cast<unsigned>(900 + seed));
      PenaltySpec spec;
      spec.cv_folds = 5;
      RegressionModel model =
          fit_elastic_net(prob.X, prob.y, prob.names, spec, 40 + seed);

      oracle::Standardized st = oracle::standardize(prob.X);
      Eigen::VectorXd yc = prob.y.array() - prob.y.mean();
      std::vector<double> b =
          standardized_coefs(model, st, prob.names);
      const double lambda = model.lambda();
      const double alpha = spec.alpha;
      Eigen::VectorXd bv =
          Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
      Eigen::VectorXd resid = yc - st.X * bv;
      for (std::size_t j = 0; j < b.size(); ++j) {
        double g = st.X.col(static_cast<Eigen::Index>(j)).dot(resid) /
                   static_cast<double>(prob.X.rows());
        double viol;
        if (b[j] != 0.0) {
          viol = std::abs(-g + lambda * (1.0 - alpha) * b[j] +
                          lambda * alpha * (b[j] > 0 ? 1.0 : -1.0));
        } else {
          viol = std::max(0.0, std::abs(g) - lambda * alpha);
        }
        worst_kkt = std::max(worst_kkt, viol);
      }
    }

    double worst_obj = 0.0;
    for (int seed = 0; seed < 6; ++seed) {
      auto prob = oracle::random_problem(20 + seed * 5, 2 + seed % 5,
                                         static_cast<unsigned>(70 + seed));
      for (double alpha : {0.0, 0.5, 1.0}) {
        PenaltySpec spec;
        spec.alpha = alpha;
        spec.cv_folds = 2;
        spec.lambda_path = {0.25};
        RegressionModel model =
            fit_elastic_net(prob.X, prob.y, prob.names, spec, 7 + seed);
        oracle::Standardized st = oracle::standardize(prob.X);
        Eigen::VectorXd yc = prob.y.array() - prob.y.mean();
        std::vector<double> b = standardized_coefs(model, st, prob.names);
        Eigen::VectorXd bv =
            Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        double f_fit = oracle::net_objective(st.X, yc, bv, alpha, 0.25);
        Eigen::VectorXd b_grid = oracle::grid_minimize_net(st.X, yc, alpha, 0.25);
        double f_grid = oracle::net_objective(st.X, yc, b_grid, alpha, 0.25);
        worst_obj = std::max(worst_obj, f_fit - f_grid);
      }
    }

    std::vector<double> y{0.5, 1.5, -2.0, 3.0};
    std::vector<double> mean_pred(4, (0.5 + 1.5 - 2.0 + 3.0) / 4.0);
    bool exact = predictivity(y, y) == 1.0 && predictivity(y, mean_pred) == 0.0;

    bool ok = worst_kkt <= 1e-6 && worst_obj <= 1e-6 && exact;
    report("c8", "engine matches its optimality conditions", ok,
           "max KKT residual " + fmt(worst_kkt) + " <= 1e-6 over 100 fits; max objective gap vs grid oracle " +
               fmt(worst_obj) + " <= 1e-6; predictivity exactly 1/0: " +
               (exact ? "yes" : "no"));
  } catch (const std::exception& e) {
    report_error("c8", "engine matches its optimality conditions", e.what());
  }
}

void check_c9() {
  if (!enabled("c9")) return;
  try {
    auto small_line = [] {
      LineBenchmarkConfig cfg = line_config(LineModelConfig::Kind::straight);
      cfg.n_train = 150;
      cfg.n_test = 40;
      cfg.abc.n_draws = 120;
      cfg.abc.chain_length = 400;
      return run_line_benchmark(cfg);
    };
    LineBenchmarkResult a = small_line(), b = small_line();
    bool line_ok = a.points_csv() == b.points_csv() &&
                   keep_columns(a.methods_csv(), 2) == keep_columns(b.methods_csv(), 2);

    auto small_selection = [] {
      SelectionBenchmarkConfig cfg;
      cfg.n_train_per_model = 120;
      cfg.n_test_per_model = 60;
      return run_selection_benchmark(cfg);
    };
    SelectionBenchmarkResult sa = small_selection(), sb = small_selection();
    bool sel_ok =
        sa.report.confusion_csv() == sb.report.confusion_csv() &&
        keep_columns(sa.methods_csv(), 2) == keep_columns(sb.methods_csv(), 2) &&
        sa.classifier.to_json().dump() == sb.classifier.to_json().dump();

    auto small_curvature = [] {
      CurvatureBenchmarkConfig cfg;
      cfg.kind = LineModelConfig::Kind::broken;
      cfg.n_reference = 150;
      cfg.grid_points = 5;
      cfg.replicates = 8;
      return run_curvature_benchmark(cfg);
    };
    CurvatureBenchmarkResult ca = small_curvature(), cb = small_curvature();
    bool curv_ok = ca.profile_csv() == cb.profile_csv() &&
                   ca.replicate_csv() == cb.replicate_csv();

    bool ok = line_ok && sel_ok && curv_ok;
    report("c9", "identical seeds give byte-identical outputs", ok,
           std::string("line CSVs identical: ") + (line_ok ? "yes" : "no") +
               "; selection CSVs identical: " + (sel_ok ? "yes" : "no") +
               "; curvature CSVs identical: " + (curv_ok ? "yes" : "no") +
               " (wall-clock columns excluded)");
  } catch (const std::exception& e) {
    report_error("c9", "identical seeds give byte-identical outputs", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) g_only.insert(argv[i]);

  run_line_benchmarks();
  check_c1();
  check_c2();
  check_c3();
  check_c4();
  check_c5();
  check_c6();
  check_c7();
  check_c8();
  check_c9();

  if (g_failures == 0) {
    std::cout << "all acceptance checks passed\n";
  } else {
    std::cout << g_failures << " acceptance check(s) failed\n";
  }
  return g_failures;
}
