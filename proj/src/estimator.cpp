#include "regcal/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "regcal/csv.hpp"
#include "regcal/experiment.hpp"
#include "regcal/rng.hpp"

namespace regcal {

std::vector<std::string> FeatureExpansion::names(const std::vector<std::string>& base) const {
  std::vector<std::string> out;
  out.reserve(size(base.size()));
  for (const auto& b : base) out.push_back(b);
  if (squares) {
    for (const auto& b : base) out.push_back(b + "^2");
  }
  if (pairwise) {
    for (std::size_t i = 0; i + 1 < base.size(); ++i) {
      for (std::size_t j = i + 1; j < base.size(); ++j) {
        out.push_back(base[i] + "*" + base[j]);
      }
    }
  }
  return out;
}

void FeatureExpansion::apply(std::span<const double> base, std::vector<double>& out) const {
  out.clear();
  out.reserve(size(base.size()));
  for (double v : base) out.push_back(v);
  if (squares) {
    for (double v : base) out.push_back(v * v);
  }
  if (pairwise) {
    for (std::size_t i = 0; i + 1 < base.size(); ++i) {
      for (std::size_t j = i + 1; j < base.size(); ++j) {
        out.push_back(base[i] * base[j]);
      }
    }
  }
}

SummaryVector expand_features(const SummaryVector& s, const FeatureExpansion& expansion) {
  std::vector<double> values;
  expansion.apply(s.values, values);
  return SummaryVector(expansion.names(s.names), std::move(values));
}

double estimation_bias(std::span<const double> real, std::span<const double> est) {
  if (real.size() != est.size() || real.empty()) {
    throw std::invalid_argument("bias needs equally sized non-empty inputs");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) s += real[i] - est[i];
  return s / static_cast<double>(real.size());
}

double estimation_rmse(std::span<const double> real, std::span<const double> est) {
  if (real.size() != est.size() || real.empty()) {
    throw std::invalid_argument("rmse needs equally sized non-empty inputs");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    double d = real[i] - est[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(real.size()));
}

double predictivity(std::span<const double> real, std::span<const double> est) {
  if (real.size() != est.size() || real.empty()) {
    throw std::invalid_argument("predictivity needs equally sized non-empty inputs");
  }
  double mean = 0.0;
  for (double v : real) mean += v;
  mean /= static_cast<double>(real.size());
  double sst = 0.0, sse = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    double dm = real[i] - mean;
    double de = real[i] - est[i];
    sst += dm * dm;
    sse += de * de;
  }
  if (sst == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (sst - sse) / sst;
}

FittedEstimator train_estimator(const ExperimentTable& table,
                                const FeatureExpansion& expansion,
                                const PenaltySpec& spec, std::uint64_t seed,
                                int jobs) {
  if (table.n() < 2) throw std::invalid_argument("training table needs at least two rows");
  if (table.space().size() == 0) {
    throw std::invalid_argument("training table has no parameters to estimate");
  }
  const std::size_t n = table.n();
  const std::size_t m = table.statistic_names().size();
  const std::size_t pe = expansion.size(m);

  std::vector<std::string> feature_names = expansion.names(table.statistic_names());
  Eigen::MatrixXd X(n, pe);
  std::vector<double> row;
  for (std::size_t i = 0; i < n; ++i) {
    expansion.apply(table.statistics()[i], row);
    for (std::size_t j = 0; j < pe; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }

  FittedEstimator est;
  est.space_ = table.space();
  est.base_statistics_ = table.statistic_names();
  est.expansion_ = expansion;
  est.models_.resize(table.space().size());
  parallel_for(table.space().size(), jobs, [&](std::size_t k) {
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = table.thetas()[i][k];
    est.models_[k] = fit_elastic_net(X, y, feature_names, spec,
                                     derive_seed(seed, SeedStream::fit, k));
  });
  table.mark_used_for_fit();
  return est;
}

EstimateResult FittedEstimator::estimate(const SummaryVector& s) const {
  if (models_.empty()) throw std::logic_error("estimator is empty");
  // Pull base statistics by name, then expand.
  std::vector<double> base(base_statistics_.size());
  for (std::size_t j = 0; j < base_statistics_.size(); ++j) {
    base[j] = s.at(base_statistics_[j]);
  }
  std::vector<double> expanded;
  expansion_.apply(base, expanded);
  SummaryVector es(expansion_.names(base_statistics_), std::move(expanded));

  EstimateResult out;
  out.values.reserve(models_.size());
  out.out_of_bounds.reserve(models_.size());
  for (std::size_t k = 0; k < models_.size(); ++k) {
    double v = models_[k].predict(es);
    const Parameter& p = space_.at(k);
    out.values.push_back(v);
    out.out_of_bounds.push_back(v < p.low || v > p.high);
  }
  return out;
}

BoundEstimator::BoundEstimator(const FittedEstimator& est,
                               const std::vector<std::string>& table_stats)
    : est_(est) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < table_stats.size(); ++j) index.emplace(table_stats[j], j);
  base_index_.reserve(est.base_statistics_.size());
  for (const auto& name : est.base_statistics_) {
    auto it = index.find(name);
    if (it == index.end()) {
      throw std::invalid_argument("test table lacks statistic '" + name + "'");
    }
    base_index_.push_back(it->second);
  }
  std::vector<std::string> expanded_names = est.expansion_.names(est.base_statistics_);
  bound_.reserve(est.models_.size());
  for (const auto& model : est.models_) {
    bound_.push_back(model.bind(expanded_names));
  }
}

void BoundEstimator::estimate(std::span<const double> base_row,
                              std::vector<double>& out) const {
  base_buf_.resize(base_index_.size());
  for (std::size_t j = 0; j < base_index_.size(); ++j) base_buf_[j] = base_row[base_index_[j]];
  est_.expansion_.apply(base_buf_, expanded_buf_);
  out.resize(bound_.size());
  for (std::size_t k = 0; k < bound_.size(); ++k) {
    out[k] = RegressionModel::predict_bound(bound_[k], est_.models_[k].intercept(),
                                            expanded_buf_.data());
  }
}

EstimationReport evaluate_estimator(const FittedEstimator& est, const ExperimentTable& test) {
  if (test.used_for_fit()) {
    throw std::invalid_argument("test table was used for fitting; evaluation would be in-sample");
  }
  if (test.n() == 0) throw std::invalid_argument("test table is empty");
  if (!(test.space() == est.space())) {
    throw std::invalid_argument("test table parameter space differs from the estimator's");
  }
  BoundEstimator bound(est, test.statistic_names());

  const std::size_t n = test.n();
  const std::size_t kp = est.space().size();
  std::vector<std::vector<double>> estimates(kp, std::vector<double>(n));
  std::vector<double> row_est;
  for (std::size_t i = 0; i < n; ++i) {
    bound.estimate(test.statistics()[i], row_est);
    for (std::size_t k = 0; k < kp; ++k) estimates[k][i] = row_est[k];
  }

  EstimationReport report;
  report.n_test = n;
  for (std::size_t k = 0; k < kp; ++k) {
    std::vector<double> real = test.theta_column(k);
    ParameterReport pr;
    pr.parameter = est.space().at(k).name;
    pr.bias = estimation_bias(real, estimates[k]);
    pr.rmse = estimation_rmse(real, estimates[k]);
    pr.predictivity = predictivity(real, estimates[k]);
    report.parameters.push_back(pr);
  }
  return report;
}

std::string EstimationReport::to_csv() const {
  std::string out = "parameter,bias,rmse,predictivity\n";
  for (const auto& p : parameters) {
    out += p.parameter + "," + csv::format_double(p.bias) + "," +
           csv::format_double(p.rmse) + "," + csv::format_double(p.predictivity) + "\n";
  }
  return out;
}

void EstimationReport::save_csv(const std::string& path) const {
  csv::write_text(path, to_csv());
}

nlohmann::json FittedEstimator::to_json() const {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : models_) models.push_back(m.to_json());
  return {{"schema_version", kSchemaVersion},
          {"kind", "estimator"},
          {"space", space_.to_json()},
          {"base_statistics", base_statistics_},
          {"expansion", {{"squares", expansion_.squares}, {"pairwise", expansion_.pairwise}}},
          {"models", models}};
}

FittedEstimator FittedEstimator::from_json(const nlohmann::json& j) {
  if (j.at("kind").get<std::string>() != "estimator") {
    throw std::runtime_error("artifact is not an estimator");
  }
  FittedEstimator est;
  est.space_ = ParameterSpace::from_json(j.at("space"));
  est.base_statistics_ = j.at("base_statistics").get<std::vector<std::string>>();
  est.expansion_.squares = j.at("expansion").at("squares").get<bool>();
  est.expansion_.pairwise = j.at("expansion").at("pairwise").get<bool>();
  for (const auto& m : j.at("models")) est.models_.push_back(RegressionModel::from_json(m));
  if (est.models_.size() != est.space_.size()) {
    throw std::runtime_error("estimator artifact has wrong model count");
  }
  return est;
}

void FittedEstimator::save(const std::string& path) const {
  csv::write_text(path, to_json().dump(2) + "\n");
}

FittedEstimator FittedEstimator::load(const std::string& path) {
  return from_json(nlohmann::json::parse(csv::read_text(path)));
}

}  // namespace regcal
