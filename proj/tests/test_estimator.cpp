#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "regcal/csv.hpp"
#include "regcal/estimator.hpp"
#include "regcal/experiment.hpp"
#include "regcal/models.hpp"
#include "regcal/types.hpp"

using namespace regcal;
namespace fs = std::filesystem;

namespace {

ExperimentTable line_table(std::size_t n, std::uint64_t seed,
                           LineModelConfig::Kind kind = LineModelConfig::Kind::straight) {
  LineModelConfig cfg;
  cfg.kind = kind;
  LineSimulator sim(cfg);
  return run_experiment(sim, line_space(), n, seed);
}

}  // namespace

TEST_CASE("feature expansion produces named polynomial terms") {
  SummaryVector s({"a", "b", "c"}, {2.0, 3.0, 5.0});

  FeatureExpansion none;
  SummaryVector e0 = expand_features(s, none);
  CHECK(e0.names == s.names);
  CHECK(e0.values == s.values);
  CHECK(none.size(3) == 3);

  FeatureExpansion squares;
  squares.squares = true;
  SummaryVector e1 = expand_features(s, squares);
  CHECK(e1.size() == 6);
  CHECK(e1.at("b^2") == 9.0);

  FeatureExpansion full;
  full.squares = true;
  full.pairwise = true;
  CHECK(full.size(3) == 9);
  SummaryVector e2 = expand_features(s, full);
  CHECK(e2.names == std::vector<std::string>{"a", "b", "c", "a^2", "b^2", "c^2", "a*b",
                                             "a*c", "b*c"});
  CHECK(e2.values == std::vector<double>{2.0, 3.0, 5.0, 4.0, 9.0, 25.0, 6.0, 10.0, 15.0});

  // Pairwise without squares is a legal combination.
  FeatureExpansion cross;
  cross.pairwise = true;
  CHECK(cross.size(4) == 4 + 6);
}

TEST_CASE("metric helpers have closed-form values") {
  std::vector<double> real{1.0, 2.0};
  std::vector<double> low{0.5, 1.0};
  CHECK(estimation_bias(real, low) == doctest::Approx(0.75).epsilon(1e-15));
  std::vector<double> off{0.0, 2.0};
  CHECK(estimation_rmse(real, off) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));

  std::vector<double> y{1.0, 2.0, 3.0, 7.0};
  CHECK(predictivity(y, y) == 1.0);
  double mean = (1.0 + 2.0 + 3.0 + 7.0) / 4.0;
  std::vector<double> mp(4, mean);
  CHECK(predictivity(y, mp) == 0.0);

  std::vector<double> flat{2.0, 2.0, 2.0};
  CHECK(std::isnan(predictivity(flat, flat)));

  std::vector<double> one{1.0};
  std::vector<double> empty;
  CHECK_THROWS_AS((void)estimation_bias(real, one), std::invalid_argument);
  CHECK_THROWS_AS((void)estimation_rmse(empty, empty), std::invalid_argument);
  CHECK_THROWS_AS((void)predictivity(real, one), std::invalid_argument);
}

TEST_CASE("a trained estimator recovers the line slope") {
  ExperimentTable train = line_table(300, 11);
  ExperimentTable test = line_table(200, 12);

  FittedEstimator est = train_estimator(train, FeatureExpansion{}, PenaltySpec{}, 5);
  CHECK(train.used_for_fit());
  CHECK(est.space() == line_space());
  CHECK(est.base_statistics() == train.statistic_names());

  EstimationReport report = evaluate_estimator(est, test);
  REQUIRE(report.parameters.size() == 1);
  CHECK(report.n_test == 200);
  CHECK(report.parameters[0].parameter == "beta");
  CHECK(report.parameters[0].predictivity > 0.9);
  CHECK(report.parameters[0].rmse < 0.15);
  CHECK(std::abs(report.parameters[0].bias) < 0.05);

  // Row-level estimates agree with the batch path.
  EstimateResult r = est.estimate(test.row_summary(0));
  REQUIRE(r.values.size() == 1);
  CHECK(std::abs(r.values[0] - test.thetas()[0][0]) < 0.5);

  // Extra statistics are ignored; missing ones throw.
  SummaryVector row = test.row_summary(1);
  std::vector<std::string> extra_names = row.names;
  std::vector<double> extra_values = row.values;
  extra_names.push_back("unrelated");
  extra_values.push_back(123.0);
  SummaryVector extended(std::move(extra_names), std::move(extra_values));
  CHECK(est.estimate(extended).values[0] == est.estimate(row).values[0]);

  SummaryVector missing({"0", "1"}, {0.0, 1.0});
  CHECK_THROWS_AS((void)est.estimate(missing), std::invalid_argument);
}

TEST_CASE("out-of-bounds estimates are flagged but not clipped") {
  ExperimentTable train = line_table(200, 21);
  FittedEstimator est = train_estimator(train, FeatureExpansion{}, PenaltySpec{}, 6);

  // Statistics from a line far steeper than anything in [0, 2].
  LineModelConfig cfg;
  cfg.noise_sd = 0.0;
  SummaryVector steep = simulate_line(cfg, 40.0, 1);
  EstimateResult r = est.estimate(steep);
  REQUIRE(r.values.size() == 1);
  CHECK(r.out_of_bounds[0]);
  CHECK(r.values[0] > line_space().at(0).high);

  SummaryVector inside = simulate_line(cfg, 1.0, 1);
  CHECK_FALSE(est.estimate(inside).out_of_bounds[0]);
}

TEST_CASE("evaluation refuses misuse") {
  ExperimentTable train = line_table(120, 31);
  ExperimentTable test = line_table(80, 32);
  FittedEstimator est = train_estimator(train, FeatureExpansion{}, PenaltySpec{}, 7);

  CHECK_THROWS_AS((void)evaluate_estimator(est, train), std::invalid_argument);

  LineSimulator sim{LineModelConfig{}};
  ExperimentTable empty = run_experiment(sim, line_space(), 0, 1);
  CHECK_THROWS_AS((void)evaluate_estimator(est, empty), std::invalid_argument);

  ExperimentTable other_space = run_experiment(sim, line_space(0.0, 3.0), 50, 33);
  CHECK_THROWS_AS((void)evaluate_estimator(est, other_space), std::invalid_argument);

  // A test table lacking one of the training statistics.
  std::vector<std::vector<double>> stats(10, std::vector<double>(2, 0.5));
  std::vector<std::vector<double>> thetas(10, std::vector<double>(1, 1.0));
  ExperimentTable narrow(line_space(), {"0", "1"}, std::move(thetas), std::move(stats), 1);
  CHECK_THROWS_AS((void)evaluate_estimator(est, narrow), std::invalid_argument);
}

TEST_CASE("training validates its inputs") {
  LineSimulator sim{LineModelConfig{}};
  ExperimentTable one = run_experiment(sim, line_space(), 1, 1);
  CHECK_THROWS_AS((void)train_estimator(one, FeatureExpansion{}, PenaltySpec{}, 1),
                  std::invalid_argument);

  // A labeled table has no parameters to regress on.
  std::vector<std::vector<double>> stats(12, std::vector<double>(3, 1.0));
  ExperimentTable labeled(ParameterSpace{}, {"a", "b", "c"}, {}, std::move(stats), 1,
                          std::vector<std::string>(12, "m"));
  CHECK_THROWS_AS((void)train_estimator(labeled, FeatureExpansion{}, PenaltySpec{}, 1),
                  std::invalid_argument);
}

TEST_CASE("estimator artifacts round-trip exactly") {
  ExperimentTable train = line_table(150, 41);
  FeatureExpansion full;
  full.squares = true;
  full.pairwise = true;
  FittedEstimator est = train_estimator(train, full, PenaltySpec{}, 8);

  fs::path dir = fs::temp_directory_path() / "regcal_test_estimator";
  fs::create_directories(dir);
  std::string path = (dir / "estimator.json").string();
  est.save(path);
  FittedEstimator back = FittedEstimator::load(path);

  CHECK(back.to_json() == est.to_json());
  CHECK(back.expansion().squares);
  CHECK(back.expansion().pairwise);
  ExperimentTable probe = line_table(25, 42);
  for (std::size_t i = 0; i < probe.n(); ++i) {
    EstimateResult a = est.estimate(probe.row_summary(i));
    EstimateResult b = back.estimate(probe.row_summary(i));
    CHECK(a.values == b.values);  // bit-identical, not approximate
  }

  nlohmann::json j = est.to_json();
  j["kind"] = "classifier";
  CHECK_THROWS_AS((void)FittedEstimator::from_json(j), std::runtime_error);

  nlohmann::json short_models = est.to_json();
  short_models["models"].erase(0);
  CHECK_THROWS_AS((void)FittedEstimator::from_json(short_models), std::runtime_error);
}

TEST_CASE("training is deterministic in the seed") {
  ExperimentTable t1 = line_table(100, 51);
  ExperimentTable t2 = line_table(100, 51);
  FittedEstimator a = train_estimator(t1, FeatureExpansion{}, PenaltySpec{}, 9);
  FittedEstimator b = train_estimator(t2, FeatureExpansion{}, PenaltySpec{}, 9);
  CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("reports print a fixed CSV schema") {
  EstimationReport report;
  report.n_test = 3;
  report.parameters.push_back({"beta", 0.5, 0.25, 1.0});
  report.parameters.push_back({"rho", -0.5, 1.5, 0.0});
  CHECK(report.to_csv() ==
        "parameter,bias,rmse,predictivity\n"
        "beta,0.5,0.25,1\n"
        "rho,-0.5,1.5,0\n");

  fs::path dir = fs::temp_directory_path() / "regcal_test_estimator";
  fs::create_directories(dir);
  std::string path = (dir / "report.csv").string();
  report.save_csv(path);
  CHECK(csv::read_text(path) == report.to_csv());
}
