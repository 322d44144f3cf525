#include "regcal/multinomial.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "net_internal.hpp"
#include "regcal/rng.hpp"

namespace regcal {

namespace {

constexpr double kWeightFloor = 1e-5;
constexpr double kProbFloor = 1e-15;
constexpr int kMaxOuter = 100;

struct ClassIndex {
  std::vector<std::string> classes;  // first-appearance order
  std::vector<int> y;                // class index per row
};

ClassIndex index_classes(const std::vector<std::string>& labels) {
  ClassIndex out;
  out.y.reserve(labels.size());
  for (const auto& label : labels) {
    auto it = std::find(out.classes.begin(), out.classes.end(), label);
    if (it == out.classes.end()) {
      out.classes.push_back(label);
      out.y.push_back(static_cast<int>(out.classes.size()) - 1);
    } else {
      out.y.push_back(static_cast<int>(it - out.classes.begin()));
    }
  }
  return out;
}

// Row-wise softmax probabilities for one class, computed stably.
void class_probabilities(const Eigen::MatrixXd& margins, int k, Eigen::VectorXd& p) {
  const Eigen::Index n = margins.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = margins.row(i).maxCoeff();
    double denom = 0.0;
    for (Eigen::Index c = 0; c < margins.cols(); ++c) {
      denom += std::exp(margins(i, c) - m);
    }
    p(i) = std::exp(margins(i, k) - m) / denom;
  }
}

struct MultinomialState {
  std::vector<Eigen::VectorXd> beta;  // per class, standardized scale
  Eigen::VectorXd intercept;
  Eigen::MatrixXd margins;  // n x K
};

// Weighted coordinate descent on one class's quadratic approximation.
// Returns the largest coefficient (or intercept) move seen.
double weighted_cd(const detail::Standardized& sx, const Eigen::VectorXd& w,
                   Eigen::VectorXd& r, double& a, Eigen::VectorXd& beta,
                   double lam_l1, double lam_l2, const PenaltySpec& spec,
                   long& sweeps, bool& converged) {
  const Eigen::Index p = sx.X.cols();
  const double n = static_cast<double>(sx.X.rows());
  Eigen::VectorXd wx2(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    wx2(j) = sx.variable[static_cast<std::size_t>(j)]
                 ? w.cwiseProduct(sx.X.col(j)).dot(sx.X.col(j)) / n
                 : 0.0;
  }
  double wsum = w.sum() / n;
  double total_move = 0.0;
  auto sweep = [&](bool active_only) {
    double max_delta = 0.0;
    double da = w.dot(r) / n / wsum;
    if (da != 0.0) {
      a += da;
      r.array() -= da;
      max_delta = std::abs(da);
      total_move = std::max(total_move, std::abs(da));
    }
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!sx.variable[static_cast<std::size_t>(j)]) continue;
      double bj = beta(j);
      if (active_only && bj == 0.0) continue;
      double g = w.cwiseProduct(sx.X.col(j)).dot(r) / n + wx2(j) * bj;
      double nb = detail::soft_threshold(g, lam_l1) / (wx2(j) + lam_l2);
      double d = nb - bj;
      if (d != 0.0) {
        beta(j) = nb;
        r.noalias() -= d * sx.X.col(j);
        max_delta = std::max(max_delta, std::abs(d));
        total_move = std::max(total_move, std::abs(d));
      }
    }
    return max_delta;
  };
  while (converged) {
    if (sweeps >= spec.max_sweeps) {
      converged = false;
      break;
    }
    ++sweeps;
    if (sweep(false) < spec.tolerance) break;
    while (converged) {
      if (sweeps >= spec.max_sweeps) {
        converged = false;
        break;
      }
      ++sweeps;
      if (sweep(true) < spec.tolerance) break;
    }
  }
  return total_move;
}

// Full path fit on standardized data; betas per lambda per class.
struct MultinomialPath {
  std::vector<MultinomialState> states;  // one per lambda
  long sweeps = 0;
  bool converged = true;
};

MultinomialPath fit_multinomial_path(const detail::Standardized& sx,
                                     const std::vector<int>& y, int n_classes,
                                     const std::vector<double>& lambdas,
                                     const PenaltySpec& spec) {
  const Eigen::Index n = sx.X.rows();
  const Eigen::Index p = sx.X.cols();
  const int K = n_classes;

  MultinomialPath out;
  out.states.reserve(lambdas.size());

  MultinomialState st;
  st.beta.assign(static_cast<std::size_t>(K), Eigen::VectorXd::Zero(p));
  st.intercept = Eigen::VectorXd::Zero(K);
  // Intercept-only start at the observed class frequencies.
  std::vector<double> freq(static_cast<std::size_t>(K), 0.0);
  for (int yi : y) freq[static_cast<std::size_t>(yi)] += 1.0;
  for (int k = 0; k < K; ++k) {
    double f = std::max(freq[static_cast<std::size_t>(k)] / static_cast<double>(n), 1e-12);
    st.intercept(k) = std::log(f);
  }
  st.intercept.array() -= st.intercept.mean();
  st.margins = Eigen::MatrixXd::Zero(n, K);
  st.margins.rowwise() = st.intercept.transpose();

  Eigen::VectorXd pk(n), w(n), r(n);
  for (double lambda : lambdas) {
    double lam_l1 = lambda * spec.alpha;
    double lam_l2 = lambda * (1.0 - spec.alpha);
    for (int outer = 0; out.converged; ++outer) {
      if (outer >= kMaxOuter) {
        out.converged = false;
        break;
      }
      double outer_move = 0.0;
      for (int k = 0; k < K; ++k) {
        class_probabilities(st.margins, k, pk);
        for (Eigen::Index i = 0; i < n; ++i) {
          double pik = pk(i);
          w(i) = std::max(pik * (1.0 - pik), kWeightFloor);
          double yik = (y[static_cast<std::size_t>(i)] == k) ? 1.0 : 0.0;
          r(i) = (yik - pik) / w(i);
        }
        double move = weighted_cd(sx, w, r, st.intercept(k), st.beta[static_cast<std::size_t>(k)],
                                  lam_l1, lam_l2, spec, out.sweeps, out.converged);
        outer_move = std::max(outer_move, move);
        st.margins.col(k) = sx.X * st.beta[static_cast<std::size_t>(k)];
        st.margins.col(k).array() += st.intercept(k);
      }
      if (outer_move < spec.tolerance * 10.0) break;
    }
    out.states.push_back(st);
  }
  return out;
}

double multinomial_lambda_max(const detail::Standardized& sx, const std::vector<int>& y,
                              int n_classes, double alpha) {
  const Eigen::Index n = sx.X.rows();
  std::vector<double> freq(static_cast<std::size_t>(n_classes), 0.0);
  for (int yi : y) freq[static_cast<std::size_t>(yi)] += 1.0;
  double m = 0.0;
  for (int k = 0; k < n_classes; ++k) {
    double pk = freq[static_cast<std::size_t>(k)] / static_cast<double>(n);
    for (Eigen::Index j = 0; j < sx.X.cols(); ++j) {
      if (!sx.variable[static_cast<std::size_t>(j)]) continue;
      double g = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double yik = (y[static_cast<std::size_t>(i)] == k) ? 1.0 : 0.0;
        g += sx.X(i, j) * (yik - pk);
      }
      m = std::max(m, std::abs(g / static_cast<double>(n)));
    }
  }
  return m / std::max(alpha, 1e-3);
}

// Held-out multinomial deviance contribution of one row.
double row_deviance(const MultinomialState& st, const detail::Standardized& sx_train,
                    const Eigen::RowVectorXd& x_raw, int y_true) {
  const int K = static_cast<int>(st.intercept.size());
  Eigen::VectorXd scores(K);
  for (int k = 0; k < K; ++k) {
    double s = st.intercept(k);
    const Eigen::VectorXd& b = st.beta[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      if (b(j) != 0.0) {
        s += b(j) * (x_raw(j) - sx_train.mean(j)) / sx_train.scale(j);
      }
    }
    scores(k) = s;
  }
  double m = scores.maxCoeff();
  double denom = 0.0;
  for (int k = 0; k < K; ++k) denom += std::exp(scores(k) - m);
  double p_true = std::exp(scores(y_true) - m) / denom;
  return -2.0 * std::log(std::max(p_true, kProbFloor));
}

}  // namespace

ClassifierModel fit_multinomial(const Eigen::MatrixXd& X_in,
                                const std::vector<std::string>& labels,
                                const std::vector<std::string>& feature_names,
                                const PenaltySpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = static_cast<std::size_t>(X_in.rows());
  if (labels.size() != n) throw std::invalid_argument("label count does not match X rows");
  if (static_cast<std::size_t>(X_in.cols()) != feature_names.size()) {
    throw std::invalid_argument("feature name count does not match X columns");
  }
  if (!X_in.allFinite()) throw std::invalid_argument("X contains non-finite values");
  if (spec.cv_folds > X_in.rows()) {
    throw std::invalid_argument("cv_folds exceeds the number of rows");
  }
  {
    std::set<std::string> seen;
    for (const auto& f : feature_names) {
      if (!seen.insert(f).second) {
        throw std::invalid_argument("duplicate feature name '" + f + "'");
      }
    }
  }

  ClassIndex ci = index_classes(labels);
  const int K = static_cast<int>(ci.classes.size());
  if (K < 2) throw std::invalid_argument("need at least two classes");
  {
    std::map<int, int> counts;
    for (int yi : ci.y) counts[yi]++;
    for (const auto& [k, c] : counts) {
      if (c < spec.cv_folds) {
        throw std::invalid_argument("class '" + ci.classes[static_cast<std::size_t>(k)] +
                                    "' has fewer members than cv_folds");
      }
    }
  }

  // The optimizer cycles classes in sorted-label order so the trajectory
  // does not depend on which label happened to appear first; the stored
  // model still presents classes in first-appearance order.
  std::vector<std::string> sorted_classes = ci.classes;
  std::sort(sorted_classes.begin(), sorted_classes.end());
  std::vector<int> to_internal(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    auto it = std::find(sorted_classes.begin(), sorted_classes.end(),
                        ci.classes[static_cast<std::size_t>(k)]);
    to_internal[static_cast<std::size_t>(k)] = static_cast<int>(it - sorted_classes.begin());
  }

  // Canonical reorder for content-hash fold assignment (hash covers the
  // features and the label).
  std::vector<std::vector<unsigned char>> images;
  if (spec.fold_assignment == FoldAssignment::content_hash) {
    images.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      images.push_back(detail::row_byte_image(X_in, i, nullptr, 0, &labels[i]));
    }
  }
  std::vector<std::size_t> order = detail::canonical_order(n, spec, images);
  Eigen::MatrixXd X(X_in.rows(), X_in.cols());
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    X.row(static_cast<Eigen::Index>(i)) = X_in.row(static_cast<Eigen::Index>(order[i]));
    y[i] = to_internal[static_cast<std::size_t>(ci.y[order[i]])];
  }

  detail::Standardized sx = detail::standardize(X);
  std::vector<double> path =
      detail::resolve_lambda_path(spec, multinomial_lambda_max(sx, y, K, spec.alpha));
  const std::size_t L = path.size();

  std::vector<int> fold = detail::assign_folds(n, spec, seed);
  std::vector<double> cv_dev(L, 0.0);
  std::vector<std::vector<double>> fold_dev(static_cast<std::size_t>(spec.cv_folds),
                                            std::vector<double>(L, 0.0));
  std::vector<std::size_t> fold_rows(static_cast<std::size_t>(spec.cv_folds), 0);
  bool cv_converged = true;
  long cv_sweeps = 0;
  for (int f = 0; f < spec.cv_folds; ++f) {
    std::vector<Eigen::Index> train, held;
    for (std::size_t i = 0; i < n; ++i) {
      (fold[i] == f ? held : train).push_back(static_cast<Eigen::Index>(i));
    }
    if (held.empty() || train.empty()) continue;
    fold_rows[static_cast<std::size_t>(f)] = held.size();
    Eigen::MatrixXd Xt(train.size(), X.cols());
    std::vector<int> yt(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      Xt.row(static_cast<Eigen::Index>(i)) = X.row(train[i]);
      yt[i] = y[static_cast<std::size_t>(train[i])];
    }
    detail::Standardized sxt = detail::standardize(Xt);
    MultinomialPath fit = fit_multinomial_path(sxt, yt, K, path, spec);
    cv_converged = cv_converged && fit.converged;
    cv_sweeps += fit.sweeps;
    for (std::size_t l = 0; l < L; ++l) {
      for (Eigen::Index i : held) {
        double dev = row_deviance(fit.states[l], sxt, X.row(i), y[static_cast<std::size_t>(i)]);
        cv_dev[l] += dev;
        fold_dev[static_cast<std::size_t>(f)][l] += dev;
      }
    }
  }
  for (std::size_t l = 0; l < L; ++l) cv_dev[l] /= static_cast<double>(n);

  std::size_t best = detail::select_lambda_index(
      cv_dev, detail::cv_standard_errors(fold_dev, fold_rows), spec.lambda_rule);

  MultinomialPath full = fit_multinomial_path(sx, y, K, path, spec);
  const MultinomialState& st = full.states[best];

  ClassifierModel model;
  model.classes_ = ci.classes;
  model.alpha_ = spec.alpha;
  model.lambda_ = path[best];
  model.cv_deviance_ = cv_dev[best];
  model.converged_ = full.converged && cv_converged;
  model.sweeps_ = full.sweeps + cv_sweeps;
  model.intercepts_.resize(static_cast<std::size_t>(K));
  model.coefs_.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const int ik = to_internal[static_cast<std::size_t>(k)];
    double a = st.intercept(ik);
    const Eigen::VectorXd& b_std = st.beta[static_cast<std::size_t>(ik)];
    for (Eigen::Index j = 0; j < b_std.size(); ++j) {
      if (b_std(j) != 0.0) {
        double b = b_std(j) / sx.scale(j);
        model.coefs_[static_cast<std::size_t>(k)].push_back(
            {feature_names[static_cast<std::size_t>(j)], b});
        a -= b * sx.mean(j);
      }
    }
    model.intercepts_[static_cast<std::size_t>(k)] = a;
  }
  // Softmax scores only identify intercept differences; center the stored
  // intercepts so the artifact does not depend on the optimizer's start.
  double a_mean = 0.0;
  for (double a : model.intercepts_) a_mean += a;
  a_mean /= static_cast<double>(K);
  for (double& a : model.intercepts_) a -= a_mean;
  return model;
}

ClassPrediction ClassifierModel::predict(const SummaryVector& s) const {
  const std::size_t K = classes_.size();
  std::vector<double> scores(K);
  for (std::size_t k = 0; k < K; ++k) {
    double v = intercepts_[k];
    for (const auto& c : coefs_[k]) v += c.value * s.at(c.feature);
    scores[k] = v;
  }
  double m = *std::max_element(scores.begin(), scores.end());
  double denom = 0.0;
  for (double v : scores) denom += std::exp(v - m);
  ClassPrediction out;
  out.probabilities.reserve(K);
  std::size_t best = 0;
  for (std::size_t k = 0; k < K; ++k) {
    double p = std::exp(scores[k] - m) / denom;
    out.probabilities.emplace_back(classes_[k], p);
    if (p > out.probabilities[best].second) best = k;
  }
  out.label = classes_[best];
  return out;
}

nlohmann::json ClassifierModel::to_json() const {
  nlohmann::json cls = nlohmann::json::array();
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    nlohmann::json coefs = nlohmann::json::array();
    for (const auto& c : coefs_[k]) {
      coefs.push_back({{"feature", c.feature}, {"value", c.value}});
    }
    cls.push_back({{"label", classes_[k]},
                   {"intercept", intercepts_[k]},
                   {"coefficients", coefs}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "classifier"},
          {"alpha", alpha_},
          {"lambda", lambda_},
          {"cv_deviance", cv_deviance_},
          {"converged", converged_},
          {"sweeps", sweeps_},
          {"classes", cls}};
}

ClassifierModel ClassifierModel::from_json(const nlohmann::json& j) {
  if (j.at("kind").get<std::string>() != "classifier") {
    throw std::runtime_error("artifact is not a classifier model");
  }
  ClassifierModel m;
  m.alpha_ = j.at("alpha").get<double>();
  m.lambda_ = j.at("lambda").get<double>();
  m.cv_deviance_ = j.at("cv_deviance").get<double>();
  m.converged_ = j.at("converged").get<bool>();
  m.sweeps_ = j.at("sweeps").get<long>();
  for (const auto& c : j.at("classes")) {
    m.classes_.push_back(c.at("label").get<std::string>());
    m.intercepts_.push_back(c.at("intercept").get<double>());
    std::vector<Coefficient> coefs;
    for (const auto& e : c.at("coefficients")) {
      coefs.push_back({e.at("feature").get<std::string>(), e.at("value").get<double>()});
    }
    m.coefs_.push_back(std::move(coefs));
  }
  return m;
}

ClassPrediction predict_classifier(const ClassifierModel& model, const SummaryVector& s) {
  return model.predict(s);
}

}  // namespace regcal
