#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "regcal/estimator.hpp"
#include "regcal/multinomial.hpp"
#include "regcal/types.hpp"

namespace regcal {

// One candidate generating model. If `space` is set, its parameters are
// treated as nuisance inputs and drawn uniformly per row; otherwise the
// simulator runs at `fixed_theta` for every row.
struct Candidate {
  std::string label;
  std::shared_ptr<const Simulator> simulator;
  std::optional<ParameterSpace> space;
  std::vector<double> fixed_theta;
};

class CandidateSet {
 public:
  explicit CandidateSet(std::vector<Candidate> candidates);
  const std::vector<Candidate>& candidates() const { return candidates_; }
  std::size_t size() const { return candidates_.size(); }

 private:
  std::vector<Candidate> candidates_;
};

// n_per_model rows per candidate, labeled, in candidate order. The output
// carries no theta columns (candidates may disagree on parameterization);
// every candidate must emit the same statistic names.
ExperimentTable build_selection_table(const CandidateSet& cands, std::size_t n_per_model,
                                      std::uint64_t seed, int jobs = 0);

// Multinomial elastic net on the labeled table. Default features are the
// raw statistics; pass an expansion to opt in to polynomial terms. Marks
// the table as used for fitting.
ClassifierModel train_selector(const ExperimentTable& labeled, const PenaltySpec& spec,
                               std::uint64_t seed,
                               const std::optional<FeatureExpansion>& expansion = {});

// Predicted label plus class probabilities for one observed vector.
ClassPrediction select_model(const ClassifierModel& model, const SummaryVector& s);

struct SelectionReport {
  std::vector<std::string> labels;                 // confusion row/col order
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  double accuracy = 0.0;
  std::size_t n_test = 0;

  std::string confusion_csv() const;
  nlohmann::json to_json() const;
};

// Accuracy and confusion matrix over a labeled test table. Refuses tables
// used for training and labels the classifier has never seen.
SelectionReport evaluate_selection(const ClassifierModel& model,
                                   const ExperimentTable& labeled_test,
                                   const std::optional<FeatureExpansion>& expansion = {});

// Minimum-distance baseline: label of the nearest reference row under the
// given distance. Used to compare the classifier against direct matching.
struct DistanceSpec;
std::string nearest_model(const ExperimentTable& labeled_reference, const SummaryVector& s,
                          const DistanceSpec& dspec);

}  // namespace regcal
