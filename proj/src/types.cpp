#include "regcal/types.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "regcal/csv.hpp"

namespace regcal {

void require_csv_safe(std::string_view name, const std::string& what) {
  if (name.empty()) throw std::invalid_argument(what + " name is empty");
  if (name.find(',') != std::string_view::npos ||
      name.find('\n') != std::string_view::npos ||
      name.find('\r') != std::string_view::npos) {
    throw std::invalid_argument(what + " name '" + std::string(name) +
                                "' contains a comma or newline");
  }
}

ParameterSpace::ParameterSpace(std::vector<Parameter> params)
    : params_(std::move(params)) {
  std::set<std::string> seen;
  for (const auto& p : params_) {
    require_csv_safe(p.name, "parameter");
    if (!seen.insert(p.name).second) {
      throw std::invalid_argument("duplicate parameter name '" + p.name + "'");
    }
    if (!std::isfinite(p.low) || !std::isfinite(p.high) || !(p.low < p.high)) {
      throw std::invalid_argument("parameter '" + p.name +
                                  "' needs finite bounds with low < high");
    }
  }
}

bool ParameterSpace::contains(std::span<const double> theta) const {
  if (theta.size() != params_.size()) return false;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (!(theta[k] >= params_[k].low && theta[k] <= params_[k].high)) {
      return false;
    }
  }
  return true;
}

std::size_t ParameterSpace::index_of(std::string_view name) const {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (params_[k].name == name) return k;
  }
  throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
}

nlohmann::json ParameterSpace::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : params_) {
    arr.push_back({{"name", p.name}, {"low", p.low}, {"high", p.high}});
  }
  return arr;
}

ParameterSpace ParameterSpace::from_json(const nlohmann::json& j) {
  std::vector<Parameter> params;
  for (const auto& e : j) {
    params.push_back({e.at("name").get<std::string>(),
                      e.at("low").get<double>(), e.at("high").get<double>()});
  }
  return ParameterSpace(std::move(params));
}

bool operator==(const ParameterSpace& a, const ParameterSpace& b) {
  if (a.params_.size() != b.params_.size()) return false;
  for (std::size_t k = 0; k < a.params_.size(); ++k) {
    if (a.params_[k].name != b.params_[k].name ||
        a.params_[k].low != b.params_[k].low ||
        a.params_[k].high != b.params_[k].high) {
      return false;
    }
  }
  return true;
}

SummaryVector::SummaryVector(std::vector<std::string> n, std::vector<double> v)
    : names(std::move(n)), values(std::move(v)) {
  if (names.size() != values.size()) {
    throw std::invalid_argument("summary names and values differ in length");
  }
  std::set<std::string> seen;
  for (const auto& name : names) {
    require_csv_safe(name, "statistic");
    if (!seen.insert(name).second) {
      throw std::invalid_argument("duplicate statistic name '" + name + "'");
    }
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw SimulationError("statistic '" + names[i] + "' is not finite");
    }
  }
}

const double* SummaryVector::find(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return &values[i];
  }
  return nullptr;
}

double SummaryVector::at(std::string_view name) const {
  if (const double* v = find(name)) return *v;
  throw std::invalid_argument("missing statistic '" + std::string(name) + "'");
}

ExperimentTable::ExperimentTable(ParameterSpace space,
                                 std::vector<std::string> statistic_names,
                                 std::vector<std::vector<double>> thetas,
                                 std::vector<std::vector<double>> statistics,
                                 std::uint64_t seed,
                                 std::vector<std::string> labels)
    : space_(std::move(space)),
      statistic_names_(std::move(statistic_names)),
      thetas_(std::move(thetas)),
      statistics_(std::move(statistics)),
      labels_(std::move(labels)),
      seed_(seed) {
  std::set<std::string> seen;
  for (const auto& name : statistic_names_) {
    require_csv_safe(name, "statistic");
    if (!seen.insert(name).second) {
      throw std::invalid_argument("duplicate statistic name '" + name + "'");
    }
  }
  // Parameter-free tables (labeled selection designs) may omit the theta
  // rows entirely.
  if (space_.size() == 0 && thetas_.empty()) {
    thetas_.assign(statistics_.size(), {});
  }
  if (thetas_.size() != statistics_.size()) {
    throw std::invalid_argument("theta and statistic row counts differ");
  }
  if (!labels_.empty() && labels_.size() != statistics_.size()) {
    throw std::invalid_argument("label count does not match row count");
  }
  for (std::size_t i = 0; i < statistics_.size(); ++i) {
    if (thetas_[i].size() != space_.size()) {
      throw std::invalid_argument("row " + std::to_string(i) +
                                  ": theta length does not match space");
    }
    if (!space_.contains(thetas_[i])) {
      throw std::invalid_argument("row " + std::to_string(i) +
                                  ": theta outside parameter bounds");
    }
    if (statistics_[i].size() != statistic_names_.size()) {
      throw std::invalid_argument("row " + std::to_string(i) +
                                  ": statistic count does not match names");
    }
    for (std::size_t j = 0; j < statistics_[i].size(); ++j) {
      if (!std::isfinite(statistics_[i][j])) {
        throw SimulationError("row " + std::to_string(i) + ": statistic '" +
                              statistic_names_[j] + "' is not finite");
      }
    }
    if (!labels_.empty()) require_csv_safe(labels_[i], "label");
  }
}

SummaryVector ExperimentTable::row_summary(std::size_t i) const {
  return SummaryVector(statistic_names_, statistics_.at(i));
}

std::vector<double> ExperimentTable::theta_column(std::size_t k) const {
  if (k >= space_.size()) throw std::invalid_argument("parameter index out of range");
  std::vector<double> col(n());
  for (std::size_t i = 0; i < n(); ++i) col[i] = thetas_[i][k];
  return col;
}

std::vector<double> ExperimentTable::statistic_variances() const {
  std::size_t m = statistic_names_.size();
  std::vector<double> mean(m, 0.0), var(m, 0.0);
  if (n() < 2) return var;
  for (const auto& row : statistics_) {
    for (std::size_t j = 0; j < m; ++j) mean[j] += row[j];
  }
  for (std::size_t j = 0; j < m; ++j) mean[j] /= static_cast<double>(n());
  for (const auto& row : statistics_) {
    for (std::size_t j = 0; j < m; ++j) {
      double d = row[j] - mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < m; ++j) var[j] /= static_cast<double>(n() - 1);
  return var;
}

ExperimentTable ExperimentTable::subset(const std::vector<std::size_t>& rows,
                                        std::uint64_t seed) const {
  std::vector<std::vector<double>> th, st;
  std::vector<std::string> lb;
  th.reserve(rows.size());
  st.reserve(rows.size());
  for (std::size_t i : rows) {
    th.push_back(thetas_.at(i));
    st.push_back(statistics_.at(i));
    if (labeled()) lb.push_back(labels_.at(i));
  }
  return ExperimentTable(space_, statistic_names_, std::move(th), std::move(st),
                         seed, std::move(lb));
}

bool operator==(const ExperimentTable& a, const ExperimentTable& b) {
  return a.space_ == b.space_ && a.statistic_names_ == b.statistic_names_ &&
         a.thetas_ == b.thetas_ && a.statistics_ == b.statistics_ &&
         a.labels_ == b.labels_ && a.seed_ == b.seed_;
}

void ExperimentTable::save(const std::string& csv_path) const {
  std::string text;
  std::vector<std::string> header;
  for (const auto& p : space_.params()) header.push_back("theta." + p.name);
  for (const auto& s : statistic_names_) header.push_back("S." + s);
  if (labeled()) header.push_back("label");
  text += csv::join(header);
  text.push_back('\n');
  std::vector<std::string> fields;
  for (std::size_t i = 0; i < n(); ++i) {
    fields.clear();
    for (double v : thetas_[i]) fields.push_back(csv::format_double(v));
    for (double v : statistics_[i]) fields.push_back(csv::format_double(v));
    if (labeled()) fields.push_back(labels_[i]);
    text += csv::join(fields);
    text.push_back('\n');
  }
  csv::write_text(csv_path, text);

  nlohmann::json manifest{{"schema_version", kSchemaVersion},
                          {"seed", seed_},
                          {"n", n()},
                          {"space", space_.to_json()}};
  if (used_for_fit_) manifest["used_for_fit"] = true;
  csv::write_text(csv_path + ".manifest.json", manifest.dump(2) + "\n");
}

ExperimentTable ExperimentTable::load(const std::string& csv_path) {
  // Anything wrong with the file pair is a configuration problem for the
  // caller, whatever layer first noticed it.
  try {
    return load_impl(csv_path);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(csv_path + ": " + e.what());
  }
}

ExperimentTable ExperimentTable::load_impl(const std::string& csv_path) {
  auto manifest = nlohmann::json::parse(csv::read_text(csv_path + ".manifest.json"));
  if (manifest.at("schema_version").get<int>() != kSchemaVersion) {
    throw std::runtime_error(csv_path + ": unsupported schema_version");
  }
  ParameterSpace space = ParameterSpace::from_json(manifest.at("space"));
  std::uint64_t seed = manifest.at("seed").get<std::uint64_t>();

  auto lines = csv::read_lines(csv_path);
  if (lines.empty()) throw std::runtime_error(csv_path + ": missing header");
  auto header = csv::split_line(lines[0]);
  std::size_t k = space.size();
  bool has_label = !header.empty() && header.back() == "label";
  std::size_t m = header.size() - k - (has_label ? 1 : 0);
  if (header.size() < k + (has_label ? 1 : 0)) {
    throw std::runtime_error(csv_path + ": header shorter than manifest space");
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (header[c] != "theta." + space.at(c).name) {
      throw std::runtime_error(csv_path + ": header column " + std::to_string(c) +
                               " does not match manifest parameter order");
    }
  }
  std::vector<std::string> stat_names;
  for (std::size_t c = 0; c < m; ++c) {
    const std::string& h = header[k + c];
    if (h.rfind("S.", 0) != 0) {
      throw std::runtime_error(csv_path + ": expected statistic column, got '" + h + "'");
    }
    stat_names.push_back(h.substr(2));
  }

  std::vector<std::vector<double>> thetas, stats;
  std::vector<std::string> labels;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = csv::split_line(lines[r]);
    if (fields.size() != header.size()) {
      throw std::runtime_error(csv_path + ": row " + std::to_string(r) +
                               " has wrong field count");
    }
    std::string ctx = csv_path + " row " + std::to_string(r);
    std::vector<double> th(k), st(m);
    for (std::size_t c = 0; c < k; ++c) th[c] = csv::parse_double(fields[c], ctx);
    for (std::size_t c = 0; c < m; ++c) st[c] = csv::parse_double(fields[k + c], ctx);
    thetas.push_back(std::move(th));
    stats.push_back(std::move(st));
    if (has_label) labels.push_back(fields.back());
  }
  if (manifest.at("n").get<std::size_t>() != stats.size()) {
    throw std::runtime_error(csv_path + ": manifest n does not match row count");
  }
  ExperimentTable table(std::move(space), std::move(stat_names), std::move(thetas),
                        std::move(stats), seed, std::move(labels));
  if (manifest.value("used_for_fit", false)) table.mark_used_for_fit();
  return table;
}

}  // namespace regcal
