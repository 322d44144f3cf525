#include "regcal/selector.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "regcal/baselines.hpp"
#include "regcal/csv.hpp"
#include "regcal/experiment.hpp"
#include "regcal/rng.hpp"

namespace regcal {

CandidateSet::CandidateSet(std::vector<Candidate> candidates)
    : candidates_(std::move(candidates)) {
  if (candidates_.size() < 2) {
    throw std::invalid_argument("model selection needs at least two candidates");
  }
  std::set<std::string> seen;
  for (const auto& c : candidates_) {
    require_csv_safe(c.label, "candidate");
    if (!seen.insert(c.label).second) {
      throw std::invalid_argument("duplicate candidate label '" + c.label + "'");
    }
    if (!c.simulator) {
      throw std::invalid_argument("candidate '" + c.label + "' has no simulator");
    }
    if (c.space && !c.fixed_theta.empty()) {
      throw std::invalid_argument("candidate '" + c.label +
                                  "' sets both a space and a fixed theta");
    }
    if (!c.space && c.fixed_theta.empty()) {
      throw std::invalid_argument("candidate '" + c.label +
                                  "' needs either a space or a fixed theta");
    }
  }
}

ExperimentTable build_selection_table(const CandidateSet& cands, std::size_t n_per_model,
                                      std::uint64_t seed, int jobs) {
  if (n_per_model == 0) throw std::invalid_argument("n_per_model must be positive");
  const std::size_t C = cands.size();
  const std::size_t total = C * n_per_model;
  std::vector<std::vector<double>> stats(total);
  std::vector<std::string> stat_names;

  for (std::size_t c = 0; c < C; ++c) {
    const Candidate& cand = cands.candidates()[c];
    std::uint64_t cand_seed = derive_seed(seed, SeedStream::draw, c);
    std::vector<std::vector<double>> thetas;
    if (cand.space) {
      thetas = sample_parameters(*cand.space, n_per_model, cand_seed);
    }
    std::vector<SummaryVector> results(n_per_model);
    parallel_for(n_per_model, jobs, [&](std::size_t i) {
      const std::vector<double>& theta = cand.space ? thetas[i] : cand.fixed_theta;
      std::uint64_t run_seed = derive_seed(cand_seed, SeedStream::run, i);
      try {
        results[i] = cand.simulator->run(theta, run_seed);
      } catch (const std::exception& e) {
        throw SimulationError("candidate '" + cand.label + "' failed on row " +
                              std::to_string(i) + ": " + e.what());
      }
    });
    for (std::size_t i = 0; i < n_per_model; ++i) {
      if (stat_names.empty()) {
        stat_names = results[i].names;
      } else if (results[i].names != stat_names) {
        throw SimulationError("candidate '" + cand.label +
                              "' emits a different statistic schema");
      }
      stats[c * n_per_model + i] = std::move(results[i].values);
    }
  }

  std::vector<std::string> labels(total);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < n_per_model; ++i) {
      labels[c * n_per_model + i] = cands.candidates()[c].label;
    }
  }
  // No theta columns: candidate parameterizations need not agree.
  return ExperimentTable(ParameterSpace{}, std::move(stat_names),
                         std::vector<std::vector<double>>(total), std::move(stats),
                         seed, std::move(labels));
}

namespace {

Eigen::MatrixXd feature_matrix(const ExperimentTable& table,
                               const std::optional<FeatureExpansion>& expansion,
                               std::vector<std::string>& feature_names) {
  const std::size_t n = table.n();
  if (!expansion) {
    feature_names = table.statistic_names();
    Eigen::MatrixXd X(n, feature_names.size());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < feature_names.size(); ++j) {
        X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            table.statistics()[i][j];
      }
    }
    return X;
  }
  feature_names = expansion->names(table.statistic_names());
  Eigen::MatrixXd X(n, feature_names.size());
  std::vector<double> row;
  for (std::size_t i = 0; i < n; ++i) {
    expansion->apply(table.statistics()[i], row);
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return X;
}

}  // namespace

ClassifierModel train_selector(const ExperimentTable& labeled, const PenaltySpec& spec,
                               std::uint64_t seed,
                               const std::optional<FeatureExpansion>& expansion) {
  if (!labeled.labeled()) {
    throw std::invalid_argument("selector training needs a labeled table");
  }
  std::vector<std::string> feature_names;
  Eigen::MatrixXd X = feature_matrix(labeled, expansion, feature_names);
  ClassifierModel model =
      fit_multinomial(X, labeled.labels(), feature_names, spec, seed);
  labeled.mark_used_for_fit();
  return model;
}

ClassPrediction select_model(const ClassifierModel& model, const SummaryVector& s) {
  return model.predict(s);
}

SelectionReport evaluate_selection(const ClassifierModel& model,
                                   const ExperimentTable& labeled_test,
                                   const std::optional<FeatureExpansion>& expansion) {
  if (!labeled_test.labeled()) {
    throw std::invalid_argument("selection evaluation needs a labeled table");
  }
  if (labeled_test.used_for_fit()) {
    throw std::invalid_argument(
        "test table was used for fitting; evaluation would be in-sample");
  }
  const auto& classes = model.classes();
  for (const auto& label : labeled_test.labels()) {
    if (std::find(classes.begin(), classes.end(), label) == classes.end()) {
      throw std::invalid_argument("test label '" + label +
                                  "' was never seen in training");
    }
  }

  SelectionReport report;
  report.labels = classes;
  report.n_test = labeled_test.n();
  report.confusion.assign(classes.size(), std::vector<std::size_t>(classes.size(), 0));

  std::size_t correct = 0;
  for (std::size_t i = 0; i < labeled_test.n(); ++i) {
    SummaryVector s = expansion
                          ? expand_features(labeled_test.row_summary(i), *expansion)
                          : labeled_test.row_summary(i);
    ClassPrediction pred = model.predict(s);
    std::size_t t = static_cast<std::size_t>(
        std::find(classes.begin(), classes.end(), labeled_test.labels()[i]) -
        classes.begin());
    std::size_t p = static_cast<std::size_t>(
        std::find(classes.begin(), classes.end(), pred.label) - classes.begin());
    report.confusion[t][p]++;
    if (t == p) ++correct;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(labeled_test.n());
  return report;
}

std::string SelectionReport::confusion_csv() const {
  std::string out = "true_model";
  for (const auto& l : labels) out += ",predicted." + l;
  out.push_back('\n');
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += labels[i];
    for (std::size_t j = 0; j < labels.size(); ++j) {
      out += "," + std::to_string(confusion[i][j]);
    }
    out.push_back('\n');
  }
  return out;
}

nlohmann::json SelectionReport::to_json() const {
  nlohmann::json conf = nlohmann::json::array();
  for (const auto& row : confusion) conf.push_back(row);
  return {{"schema_version", kSchemaVersion},
          {"kind", "selection_report"},
          {"labels", labels},
          {"confusion", conf},
          {"accuracy", accuracy},
          {"n_test", n_test}};
}

std::string nearest_model(const ExperimentTable& labeled_reference, const SummaryVector& s,
                          const DistanceSpec& dspec) {
  if (!labeled_reference.labeled()) {
    throw std::invalid_argument("nearest-model baseline needs a labeled table");
  }
  DistanceFunction dist = DistanceFunction::build(
      dspec, labeled_reference.statistic_names(),
      dspec.weighting == Weighting::inverse_variance ? &labeled_reference : nullptr);
  std::vector<double> star(labeled_reference.statistic_names().size());
  for (std::size_t j = 0; j < star.size(); ++j) {
    star[j] = s.at(labeled_reference.statistic_names()[j]);
  }
  std::size_t best = 0;
  double best_d = dist(labeled_reference.statistics()[0], star);
  for (std::size_t i = 1; i < labeled_reference.n(); ++i) {
    double d = dist(labeled_reference.statistics()[i], star);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return labeled_reference.labels()[best];
}

}  // namespace regcal
