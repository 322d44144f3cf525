#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace regcal {

inline constexpr int kSchemaVersion = 1;

struct Parameter {
  std::string name;
  double low = 0.0;
  double high = 1.0;
};

// Rectangular box of admissible simulator inputs. Bounds are finite and
// low < high for every coordinate; names are unique and CSV-safe.
class ParameterSpace {
 public:
  ParameterSpace() = default;
  explicit ParameterSpace(std::vector<Parameter> params);

  std::size_t size() const { return params_.size(); }
  const std::vector<Parameter>& params() const { return params_; }
  const Parameter& at(std::size_t k) const { return params_.at(k); }

  bool contains(std::span<const double> theta) const;
  // Index of a parameter by name, throws if absent.
  std::size_t index_of(std::string_view name) const;

  nlohmann::json to_json() const;
  static ParameterSpace from_json(const nlohmann::json& j);

  friend bool operator==(const ParameterSpace&, const ParameterSpace&);

 private:
  std::vector<Parameter> params_;
};

// Named vector of summary statistics. Values are finite by construction;
// a simulator emitting NaN or infinity is a hard error, not a warning.
struct SummaryVector {
  std::vector<std::string> names;
  std::vector<double> values;

  SummaryVector() = default;
  SummaryVector(std::vector<std::string> n, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double at(std::string_view name) const;
  const double* find(std::string_view name) const;
};

// Black-box model: parameter vector plus run seed in, summary statistics
// out. Implementations must be deterministic in (theta, run_seed) and must
// emit the same statistic names in the same order on every run.
class Simulator {
 public:
  virtual ~Simulator() = default;
  virtual SummaryVector run(std::span<const double> theta,
                            std::uint64_t run_seed) const = 0;
};

// One design: rows of (theta, statistics) pairs with an optional model
// label per row (used for model selection tables, where theta is dropped
// because candidates may have different parameterizations).
class ExperimentTable {
 public:
  ExperimentTable(ParameterSpace space, std::vector<std::string> statistic_names,
                  std::vector<std::vector<double>> thetas,
                  std::vector<std::vector<double>> statistics,
                  std::uint64_t seed,
                  std::vector<std::string> labels = {});

  std::size_t n() const { return statistics_.size(); }
  const ParameterSpace& space() const { return space_; }
  const std::vector<std::string>& statistic_names() const { return statistic_names_; }
  const std::vector<std::vector<double>>& thetas() const { return thetas_; }
  const std::vector<std::vector<double>>& statistics() const { return statistics_; }
  const std::vector<std::string>& labels() const { return labels_; }
  bool labeled() const { return !labels_.empty(); }
  std::uint64_t seed() const { return seed_; }

  SummaryVector row_summary(std::size_t i) const;

  // Column of one parameter across rows.
  std::vector<double> theta_column(std::size_t k) const;

  // Per-statistic sample variance (denominator n-1); used for
  // inverse-variance distance weighting.
  std::vector<double> statistic_variances() const;

  // Set once a fit has consumed this table; evaluation helpers refuse
  // tables that were used for training. Persisted in the manifest.
  bool used_for_fit() const { return used_for_fit_; }
  void mark_used_for_fit() const { used_for_fit_ = true; }

  ExperimentTable subset(const std::vector<std::size_t>& rows,
                         std::uint64_t seed) const;

  // CSV with sidecar manifest at <path>.manifest.json. load throws
  // ConfigError on any malformed or inconsistent file pair.
  void save(const std::string& csv_path) const;
  static ExperimentTable load(const std::string& csv_path);

  friend bool operator==(const ExperimentTable& a, const ExperimentTable& b);

 private:
  ParameterSpace space_;
  std::vector<std::string> statistic_names_;
  static ExperimentTable load_impl(const std::string& csv_path);

  std::vector<std::vector<double>> thetas_;
  std::vector<std::vector<double>> statistics_;
  std::vector<std::string> labels_;
  std::uint64_t seed_ = 0;
  mutable bool used_for_fit_ = false;
};

// Thrown for malformed configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a simulator or downstream numeric step fails (CLI exit 3).
struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_csv_safe(std::string_view name, const std::string& what);

}  // namespace regcal
