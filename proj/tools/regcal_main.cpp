// Command line front end: simulate designs, train estimators and
// selectors, apply them to observed statistics, and run the bundled
// benchmarks. Exit codes: 0 success, 2 configuration error, 3 simulation
// or numeric failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "regcal/baselines.hpp"
#include "regcal/benchmarks.hpp"
#include "regcal/csv.hpp"
#include "regcal/elastic_net.hpp"
#include "regcal/estimator.hpp"
#include "regcal/experiment.hpp"
#include "regcal/models.hpp"
#include "regcal/multinomial.hpp"
#include "regcal/rng.hpp"
#include "regcal/selector.hpp"
#include "regcal/types.hpp"

namespace fs = std::filesystem;
using namespace regcal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct PenaltyOptions {
  double alpha = 0.5;
  int folds = 10;
  std::string fold_assignment = "seeded";
  int path_length = 100;
  double lambda_min_ratio = 1e-4;

  void attach(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "L1/L2 mix in [0,1]");
    cmd->add_option("--folds", folds, "cross-validation folds");
    cmd->add_option("--fold-assignment", fold_assignment, "seeded or content_hash");
    cmd->add_option("--path-length", path_length, "lambda path length");
    cmd->add_option("--lambda-min-ratio", lambda_min_ratio,
                    "smallest lambda as a fraction of lambda_max");
  }

  PenaltySpec spec() const {
    PenaltySpec s;
    s.alpha = alpha;
    s.cv_folds = folds;
    s.path_length = path_length;
    s.lambda_min_ratio = lambda_min_ratio;
    if (fold_assignment == "seeded") {
      s.fold_assignment = FoldAssignment::seeded;
    } else if (fold_assignment == "content_hash") {
      s.fold_assignment = FoldAssignment::content_hash;
    } else {
      throw ConfigError("fold-assignment must be seeded or content_hash");
    }
    return s;
  }
};

FeatureExpansion parse_expansion(const std::string& text) {
  FeatureExpansion e;
  if (text == "none" || text.empty()) return e;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part == "squares") {
      e.squares = true;
    } else if (part == "pairwise") {
      e.pairwise = true;
    } else if (part == "full") {
      e.squares = e.pairwise = true;
    } else {
      throw ConfigError("unknown expansion '" + part +
                        "' (valid: none, squares, pairwise, full)");
    }
  }
  return e;
}

std::vector<StatSet> parse_stat_sets(const std::string& text) {
  std::vector<StatSet> sets;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part == "xcorr") {
      sets.push_back(StatSet::xcorr);
    } else if (part == "cov") {
      sets.push_back(StatSet::cov);
    } else if (part == "aux") {
      sets.push_back(StatSet::aux);
    } else if (part == "ar5") {
      sets.push_back(StatSet::ar5);
    } else {
      throw ConfigError("unknown statistic set '" + part +
                        "' (valid: xcorr, cov, aux, ar5)");
    }
  }
  if (sets.empty()) throw ConfigError("no statistic sets given");
  return sets;
}

// "name:low:high;name:low:high" -> ParameterSpace
ParameterSpace parse_space(const std::string& text) {
  std::vector<Parameter> params;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.empty()) continue;
    std::stringstream ps(part);
    std::string name, lo, hi;
    if (!std::getline(ps, name, ':') || !std::getline(ps, lo, ':') ||
        !std::getline(ps, hi, ':')) {
      throw ConfigError("space entry '" + part + "' is not name:low:high");
    }
    params.push_back({name, csv::parse_double(lo, "space"), csv::parse_double(hi, "space")});
  }
  if (params.empty()) throw ConfigError("space definition is empty");
  return ParameterSpace(std::move(params));
}

fs::path prepare_out_dir(const std::string& out_dir) {
  fs::path p(out_dir);
  fs::create_directories(p);
  return p;
}

// Child-process simulator: runs `command theta... run_seed`, reads one CSV
// value line from stdout, optionally preceded by a header line of names.
class ExternalSimulator : public Simulator {
 public:
  explicit ExternalSimulator(std::string command) : command_(std::move(command)) {}

  SummaryVector run(std::span<const double> theta, std::uint64_t run_seed) const override {
    std::string cmd = command_;
    for (double v : theta) cmd += " " + csv::format_double(v);
    cmd += " " + std::to_string(run_seed);
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw SimulationError("cannot launch simulator command");
    std::string output;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, got);
    int status = pclose(pipe);
    if (status != 0) {
      throw SimulationError("simulator command exited with status " +
                            std::to_string(status));
    }
    std::vector<std::string> lines;
    std::stringstream ss(output);
    std::string line;
    while (std::getline(ss, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) lines.push_back(line);
    }
    if (lines.empty()) throw SimulationError("simulator command wrote no output");
    std::vector<std::string> names;
    std::string value_line;
    if (lines.size() >= 2) {
      names = csv::split_line(lines[0]);
      value_line = lines[1];
    } else {
      value_line = lines[0];
    }
    auto fields = csv::split_line(value_line);
    if (names.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) names.push_back("s" + std::to_string(i));
    }
    std::vector<double> values;
    values.reserve(fields.size());
    for (const auto& f : fields) values.push_back(csv::parse_double(f, "simulator output"));
    return SummaryVector(std::move(names), std::move(values));
  }

 private:
  std::string command_;
};

// Reads observed statistics: either a bare CSV (header of names, value
// rows) or an experiment-table CSV (theta.* columns ignored, S. prefixes
// stripped, label column ignored).
std::vector<SummaryVector> read_observed(const std::string& path) {
  auto lines = csv::read_lines(path);
  if (lines.size() < 2) throw ConfigError(path + ": need a header and at least one row");
  auto header = csv::split_line(lines[0]);
  std::vector<std::size_t> cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.rfind("theta.", 0) == 0 || h == "label") continue;
    if (h.rfind("S.", 0) == 0) {
      names.push_back(h.substr(2));
    } else {
      names.push_back(h);
    }
    cols.push_back(c);
  }
  if (names.empty()) throw ConfigError(path + ": no statistic columns found");
  std::vector<SummaryVector> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = csv::split_line(lines[r]);
    if (fields.size() != header.size()) {
      throw ConfigError(path + ": row " + std::to_string(r) + " has wrong field count");
    }
    std::vector<double> values;
    values.reserve(cols.size());
    for (std::size_t c : cols) {
      values.push_back(csv::parse_double(fields[c], path + " row " + std::to_string(r)));
    }
    rows.emplace_back(names, std::move(values));
  }
  return rows;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat key=value config grammar: one option per line, '#' starts a
// comment, blank lines are skipped. Keys that also appear on the command
// line are ignored, so explicit flags win over the file.
std::vector<std::string> config_file_args(const std::string& path,
                                          const std::vector<std::string>& cli) {
  std::vector<std::string> out;
  std::stringstream ss(csv::read_text(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (std::size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    }
    std::string flag = "--" + key;
    bool shadowed = false;
    for (const auto& a : cli) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) {
        shadowed = true;
        break;
      }
    }
    if (shadowed) continue;
    out.push_back(flag);
    out.push_back(value);
  }
  return out;
}

// Pulls --config out of the raw arguments and splices the file's options
// in behind them. An unknown key in the file surfaces as an ordinary
// unknown-option parse error.
std::vector<std::string> splice_config(int argc, char** argv) {
  std::vector<std::string> args;
  std::string config_path;
  auto set_path = [&](std::string p) {
    if (!config_path.empty()) throw ConfigError("--config given more than once");
    if (p.empty()) throw ConfigError("--config needs a file path");
    config_path = std::move(p);
  };
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config") {
      if (i + 1 >= argc) throw ConfigError("--config needs a file path");
      set_path(argv[++i]);
    } else if (a.rfind("--config=", 0) == 0) {
      set_path(a.substr(9));
    } else {
      args.push_back(std::move(a));
    }
  }
  if (!config_path.empty()) {
    std::vector<std::string> extra = config_file_args(config_path, args);
    args.insert(args.end(), extra.begin(), extra.end());
  }
  return args;
}

void add_config_option(CLI::App* cmd) {
  // Handled by splice_config before parsing; registered here so the help
  // text documents it.
  static std::string sink;
  cmd->add_option("--config", sink, "key=value config file ('#' comments)");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"regression-based calibration of simulation models"};
  app.require_subcommand(1);
  app.set_version_flag("--version",
                       "regcal schema_version " + std::to_string(kSchemaVersion));

  // ---- simulate ----------------------------------------------------
  auto* sim_cmd = app.add_subcommand("simulate", "generate train/test experiment tables");
  std::string sim_preset = "straight", sim_out = "out", sim_space, sim_stats = "aux,ar5,cov";
  std::string sim_command;
  std::size_t sim_n_train = 1000, sim_n_test = 1000, sim_panel_length = 150;
  double sim_noise_sd = 1.0;
  std::uint64_t sim_seed = 1;
  int sim_jobs = 0;
  sim_cmd->add_option("--preset", sim_preset,
                      "model preset: straight, broken, surrogate, external");
  sim_cmd->add_option("--command", sim_command, "external simulator command");
  sim_cmd->add_option("--space", sim_space, "name:low:high;... parameter bounds");
  sim_cmd->add_option("--stats", sim_stats, "surrogate statistic sets (comma list)");
  sim_cmd->add_option("--panel-length", sim_panel_length, "surrogate panel length");
  sim_cmd->add_option("--noise-sd", sim_noise_sd, "line model noise sd");
  sim_cmd->add_option("--n-train", sim_n_train, "training rows");
  sim_cmd->add_option("--n-test", sim_n_test, "test rows");
  sim_cmd->add_option("--design-seed", sim_seed, "master seed for draws and runs");
  sim_cmd->add_option("--jobs", sim_jobs, "worker threads (0 = hardware)");
  sim_cmd->add_option("--out-dir", sim_out, "output directory");
  add_config_option(sim_cmd);

  // ---- train --------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "fit a parameter estimator on a table");
  std::string train_table, train_out = "out/estimator.json", train_expansion = "none";
  std::uint64_t train_seed = 2;
  int train_jobs = 0;
  PenaltyOptions train_penalty;
  train_cmd->add_option("--table", train_table, "training table CSV")->required();
  train_cmd->add_option("--expansion", train_expansion, "none, squares, pairwise or full");
  train_cmd->add_option("--fit-seed", train_seed, "seed for fold assignment");
  train_cmd->add_option("--jobs", train_jobs, "worker threads");
  train_cmd->add_option("--out", train_out, "estimator artifact path");
  train_penalty.attach(train_cmd);
  add_config_option(train_cmd);

  // ---- estimate -----------------------------------------------------
  auto* est_cmd = app.add_subcommand("estimate", "apply an estimator to observed statistics");
  std::string est_model, est_input, est_out = "out/estimates.csv";
  est_cmd->add_option("--estimator", est_model, "estimator artifact")->required();
  est_cmd->add_option("--input", est_input, "observed statistics CSV")->required();
  est_cmd->add_option("--out", est_out, "estimates CSV path");
  add_config_option(est_cmd);

  // ---- evaluate -----------------------------------------------------
  auto* eval_cmd = app.add_subcommand("evaluate", "score an estimator on a test table");
  std::string eval_model, eval_table, eval_out = "out/report.csv";
  eval_cmd->add_option("--estimator", eval_model, "estimator artifact")->required();
  eval_cmd->add_option("--table", eval_table, "test table CSV")->required();
  eval_cmd->add_option("--out", eval_out, "report CSV path");
  add_config_option(eval_cmd);

  // ---- select -------------------------------------------------------
  auto* sel_cmd = app.add_subcommand("select", "train a model selector and classify");
  std::string sel_table, sel_test, sel_input, sel_out = "out", sel_expansion = "none";
  std::string sel_preset;
  std::size_t sel_n_train = 1000, sel_n_test = 1000;
  double sel_beta = 1.0;
  std::uint64_t sel_design_seed = 1, sel_fit_seed = 2;
  int sel_jobs = 0;
  PenaltyOptions sel_penalty;
  sel_cmd->add_option("--table", sel_table, "labeled training table CSV");
  sel_cmd->add_option("--preset", sel_preset,
                      "generate the training table: selection (straight vs broken)");
  sel_cmd->add_option("--test-table", sel_test, "labeled test table CSV");
  sel_cmd->add_option("--input", sel_input, "observed statistics CSV to classify");
  sel_cmd->add_option("--expansion", sel_expansion, "feature expansion");
  sel_cmd->add_option("--n-per-model-train", sel_n_train, "rows per candidate (preset)");
  sel_cmd->add_option("--n-per-model-test", sel_n_test, "test rows per candidate (preset)");
  sel_cmd->add_option("--beta", sel_beta, "fixed slope for the selection preset");
  sel_cmd->add_option("--design-seed", sel_design_seed, "seed for generated tables");
  sel_cmd->add_option("--fit-seed", sel_fit_seed, "seed for fold assignment");
  sel_cmd->add_option("--jobs", sel_jobs, "worker threads");
  sel_cmd->add_option("--out-dir", sel_out, "output directory");
  sel_penalty.attach(sel_cmd);
  add_config_option(sel_cmd);

  // ---- benchmark ----------------------------------------------------
  auto* bench_cmd = app.add_subcommand("benchmark", "run a bundled end-to-end benchmark");
  std::string bench_preset, bench_out = "out";
  std::size_t bench_n_train = 1000, bench_n_test = 1000, bench_n_draws = 1000;
  std::size_t bench_chain = 10000, bench_npm_train = 1000, bench_npm_test = 1000;
  std::size_t bench_n_reference = 1000, bench_grid = 9, bench_replicates = 30;
  std::size_t bench_panel = 150;
  double bench_keep = 0.05, bench_proposal = 0.10, bench_eps_q = 0.05;
  double bench_beta = 1.0, bench_beta_star = 1.0;
  std::uint64_t bench_design_seed = 1, bench_fit_seed = 2;
  int bench_jobs = 0;
  PenaltyOptions bench_penalty;
  bench_cmd->add_option("--preset", bench_preset,
                        "straight, broken, selection, surrogate or curvature")
      ->required();
  bench_cmd->add_option("--n-train", bench_n_train, "training rows (line presets)");
  bench_cmd->add_option("--n-test", bench_n_test, "test rows (line presets)");
  bench_cmd->add_option("--n-draws", bench_n_draws, "reference draws per ABC target");
  bench_cmd->add_option("--keep-fraction", bench_keep, "rejection ABC retained fraction");
  bench_cmd->add_option("--chain-length", bench_chain, "MCMC ABC chain length");
  bench_cmd->add_option("--proposal-scale", bench_proposal,
                        "MCMC proposal sd as a fraction of range");
  bench_cmd->add_option("--epsilon-quantile", bench_eps_q,
                        "MCMC epsilon quantile of reference distances");
  bench_cmd->add_option("--n-per-model-train", bench_npm_train, "selection preset rows");
  bench_cmd->add_option("--n-per-model-test", bench_npm_test, "selection preset test rows");
  bench_cmd->add_option("--beta", bench_beta, "fixed slope (selection preset)");
  bench_cmd->add_option("--n-reference", bench_n_reference, "curvature reference rows");
  bench_cmd->add_option("--beta-star", bench_beta_star, "curvature target slope");
  bench_cmd->add_option("--grid-points", bench_grid, "curvature replicate grid size");
  bench_cmd->add_option("--replicates", bench_replicates, "curvature replicates per point");
  bench_cmd->add_option("--panel-length", bench_panel, "surrogate panel length");
  bench_cmd->add_option("--design-seed", bench_design_seed, "simulation seed");
  bench_cmd->add_option("--fit-seed", bench_fit_seed, "fitting seed");
  bench_cmd->add_option("--jobs", bench_jobs, "worker threads");
  bench_cmd->add_option("--out-dir", bench_out, "output directory");
  bench_penalty.attach(bench_cmd);
  add_config_option(bench_cmd);

  try {
    std::vector<std::string> args = splice_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help() << "\n";
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All) << "\n";
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    std::cout << app.version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  // ---- dispatch -----------------------------------------------------
  if (sim_cmd->parsed()) {
    std::unique_ptr<Simulator> sim;
    ParameterSpace space;
    if (sim_preset == "straight" || sim_preset == "broken") {
      LineModelConfig cfg;
      cfg.kind = sim_preset == "straight" ? LineModelConfig::Kind::straight
                                          : LineModelConfig::Kind::broken;
      cfg.noise_sd = sim_noise_sd;
      sim = std::make_unique<LineSimulator>(cfg);
      space = sim_space.empty() ? line_space() : parse_space(sim_space);
    } else if (sim_preset == "surrogate") {
      sim = std::make_unique<SurrogateMacroSimulator>(sim_panel_length,
                                                      parse_stat_sets(sim_stats));
      space = sim_space.empty() ? surrogate_macro_space() : parse_space(sim_space);
    } else if (sim_preset == "external") {
      if (sim_command.empty()) throw ConfigError("external preset needs --command");
      if (sim_space.empty()) throw ConfigError("external preset needs --space");
      sim = std::make_unique<ExternalSimulator>(sim_command);
      space = parse_space(sim_space);
    } else {
      throw ConfigError("unknown preset '" + sim_preset +
                        "' (valid: straight, broken, surrogate, external)");
    }
    fs::path dir = prepare_out_dir(sim_out);
    ExperimentTable train = run_experiment(*sim, space, sim_n_train, sim_seed, sim_jobs);
    ExperimentTable test = run_experiment(
        *sim, space, sim_n_test, derive_seed(sim_seed, SeedStream::stage, 1), sim_jobs);
    train.save((dir / "train.csv").string());
    test.save((dir / "test.csv").string());
    std::cout << "wrote " << (dir / "train.csv").string() << " (" << train.n()
              << " rows) and " << (dir / "test.csv").string() << " (" << test.n()
              << " rows)\n";
    return kExitOk;
  }

  if (train_cmd->parsed()) {
    ExperimentTable table = ExperimentTable::load(train_table);
    FittedEstimator est = train_estimator(table, parse_expansion(train_expansion),
                                          train_penalty.spec(), train_seed, train_jobs);
    fs::path out(train_out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    est.save(out.string());
    std::cout << "trained estimator on " << table.n() << " rows; wrote " << train_out
              << "\n";
    for (std::size_t k = 0; k < est.space().size(); ++k) {
      const auto& m = est.model(k);
      std::cout << "  " << est.space().at(k).name << ": lambda "
                << csv::format_double(m.lambda()) << ", " << m.coefficients().size()
                << " nonzero coefficients" << (m.diagnostics().converged ? "" : " (not converged)")
                << "\n";
    }
    return kExitOk;
  }

  if (est_cmd->parsed()) {
    FittedEstimator est = FittedEstimator::load(est_model);
    std::vector<SummaryVector> rows = read_observed(est_input);
    fs::path out(est_out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::string text = "row";
    for (const auto& p : est.space().params()) {
      text += "," + p.name + "," + p.name + ".out_of_bounds";
    }
    text.push_back('\n');
    for (std::size_t i = 0; i < rows.size(); ++i) {
      EstimateResult r = est.estimate(rows[i]);
      text += std::to_string(i);
      for (std::size_t k = 0; k < r.values.size(); ++k) {
        text += "," + csv::format_double(r.values[k]) + "," +
                (r.out_of_bounds[k] ? "1" : "0");
      }
      text.push_back('\n');
      std::cout << "row " << i << ":";
      for (std::size_t k = 0; k < r.values.size(); ++k) {
        std::cout << " " << est.space().at(k).name << "="
                  << csv::format_double(r.values[k])
                  << (r.out_of_bounds[k] ? " (out of bounds)" : "");
      }
      std::cout << "\n";
    }
    csv::write_text(out.string(), text);
    return kExitOk;
  }

  if (eval_cmd->parsed()) {
    FittedEstimator est = FittedEstimator::load(eval_model);
    ExperimentTable table = ExperimentTable::load(eval_table);
    EstimationReport report = evaluate_estimator(est, table);
    fs::path out(eval_out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    report.save_csv(out.string());
    std::cout << report.to_csv();
    return kExitOk;
  }

  if (sel_cmd->parsed()) {
    fs::path dir = prepare_out_dir(sel_out);
    std::optional<FeatureExpansion> expansion;
    FeatureExpansion parsed = parse_expansion(sel_expansion);
    if (parsed.squares || parsed.pairwise) expansion = parsed;

    std::optional<ExperimentTable> train, test;
    if (!sel_table.empty()) {
      train = ExperimentTable::load(sel_table);
    } else if (sel_preset == "selection") {
      auto straight = std::make_shared<LineSimulator>(
          LineModelConfig{LineModelConfig::Kind::straight, 10, 5, 1.0});
      auto broken = std::make_shared<LineSimulator>(
          LineModelConfig{LineModelConfig::Kind::broken, 10, 5, 1.0});
      CandidateSet cands({{"straight", straight, std::nullopt, {sel_beta}},
                          {"broken", broken, std::nullopt, {sel_beta}}});
      train = build_selection_table(cands, sel_n_train, sel_design_seed, sel_jobs);
      test = build_selection_table(cands, sel_n_test,
                                   derive_seed(sel_design_seed, SeedStream::stage, 1),
                                   sel_jobs);
    } else if (sel_preset.empty()) {
      throw ConfigError("select needs --table or --preset selection");
    } else {
      throw ConfigError("unknown preset '" + sel_preset + "' (valid: selection)");
    }
    if (!sel_test.empty()) test = ExperimentTable::load(sel_test);

    ClassifierModel model = train_selector(*train, sel_penalty.spec(), sel_fit_seed,
                                           expansion);
    csv::write_text((dir / "classifier.json").string(), model.to_json().dump(2) + "\n");
    std::cout << "trained selector over {";
    for (std::size_t k = 0; k < model.classes().size(); ++k) {
      std::cout << (k ? ", " : "") << model.classes()[k];
    }
    std::cout << "} on " << train->n() << " rows\n";

    if (test) {
      SelectionReport report = evaluate_selection(model, *test, expansion);
      csv::write_text((dir / "confusion.csv").string(), report.confusion_csv());
      csv::write_text((dir / "selection.json").string(), report.to_json().dump(2) + "\n");
      std::cout << "test accuracy " << csv::format_double(report.accuracy) << " on "
                << report.n_test << " rows\n";
    }
    if (!sel_input.empty()) {
      for (const auto& s : read_observed(sel_input)) {
        ClassPrediction pred = expansion ? model.predict(expand_features(s, *expansion))
                                         : model.predict(s);
        std::cout << "selected " << pred.label << " (";
        for (std::size_t k = 0; k < pred.probabilities.size(); ++k) {
          std::cout << (k ? ", " : "") << pred.probabilities[k].first << "="
                    << csv::format_double(pred.probabilities[k].second);
        }
        std::cout << ")\n";
      }
    }
    return kExitOk;
  }

  if (bench_cmd->parsed()) {
    fs::path dir = prepare_out_dir(bench_out);
    if (bench_preset == "straight" || bench_preset == "broken") {
      LineBenchmarkConfig cfg;
      cfg.kind = bench_preset == "straight" ? LineModelConfig::Kind::straight
                                            : LineModelConfig::Kind::broken;
      cfg.n_train = bench_n_train;
      cfg.n_test = bench_n_test;
      cfg.penalty = bench_penalty.spec();
      cfg.abc.n_draws = bench_n_draws;
      cfg.abc.keep_fraction = bench_keep;
      cfg.abc.chain_length = bench_chain;
      cfg.abc.proposal_scale = bench_proposal;
      cfg.epsilon_quantile = bench_eps_q;
      cfg.design_seed = bench_design_seed;
      cfg.fit_seed = bench_fit_seed;
      cfg.jobs = bench_jobs;
      LineBenchmarkResult r = run_line_benchmark(cfg);
      csv::write_text((dir / "methods.csv").string(), r.methods_csv());
      csv::write_text((dir / "points.csv").string(), r.points_csv());
      std::cout << r.methods_csv();
      std::cout << "wrote " << (dir / "methods.csv").string() << " and "
                << (dir / "points.csv").string() << "\n";
    } else if (bench_preset == "selection") {
      SelectionBenchmarkConfig cfg;
      cfg.n_train_per_model = bench_npm_train;
      cfg.n_test_per_model = bench_npm_test;
      cfg.beta = bench_beta;
      cfg.penalty = bench_penalty.spec();
      cfg.design_seed = bench_design_seed;
      cfg.fit_seed = bench_fit_seed;
      cfg.jobs = bench_jobs;
      SelectionBenchmarkResult r = run_selection_benchmark(cfg);
      csv::write_text((dir / "methods.csv").string(), r.methods_csv());
      csv::write_text((dir / "confusion.csv").string(), r.report.confusion_csv());
      csv::write_text((dir / "selection.json").string(), r.report.to_json().dump(2) + "\n");
      csv::write_text((dir / "classifier.json").string(),
                      r.classifier.to_json().dump(2) + "\n");
      std::cout << r.methods_csv();
    } else if (bench_preset == "curvature") {
      CurvatureBenchmarkConfig cfg;
      cfg.kind = LineModelConfig::Kind::straight;
      cfg.n_reference = bench_n_reference;
      cfg.beta_star = bench_beta_star;
      cfg.grid_points = bench_grid;
      cfg.replicates = bench_replicates;
      cfg.penalty = bench_penalty.spec();
      cfg.design_seed = bench_design_seed;
      cfg.fit_seed = bench_fit_seed;
      cfg.jobs = bench_jobs;
      CurvatureBenchmarkResult straight = run_curvature_benchmark(cfg);
      cfg.kind = LineModelConfig::Kind::broken;
      CurvatureBenchmarkResult broken = run_curvature_benchmark(cfg);
      csv::write_text((dir / "profile_straight.csv").string(), straight.profile_csv());
      csv::write_text((dir / "profile_broken.csv").string(), broken.profile_csv());
      csv::write_text((dir / "replicates_broken.csv").string(), broken.replicate_csv());
      std::cout << "straight: spearman regression "
                << csv::format_double(straight.spearman_regression) << ", identity "
                << csv::format_double(straight.spearman_identity) << ", diag "
                << csv::format_double(straight.spearman_diag) << "\n";
      std::cout << "broken: spearman regression "
                << csv::format_double(broken.spearman_regression) << ", identity "
                << csv::format_double(broken.spearman_identity) << ", diag "
                << csv::format_double(broken.spearman_diag) << "\n";
    } else if (bench_preset == "surrogate") {
      SurrogateBenchmarkConfig cfg;
      cfg.n_train = bench_n_train;
      cfg.n_test = bench_n_test;
      cfg.panel_length = bench_panel;
      cfg.penalty = bench_penalty.spec();
      cfg.design_seed = bench_design_seed;
      cfg.fit_seed = bench_fit_seed;
      cfg.jobs = bench_jobs;
      SurrogateBenchmarkResult r = run_surrogate_benchmark(cfg);
      csv::write_text((dir / "predictivity.csv").string(), r.report_csv());
      std::cout << r.report_csv();
      std::cout << "aux set: " << r.aux_base_count << " base statistics, "
                << r.aux_feature_count << " expanded features\n";
    } else {
      throw ConfigError("unknown preset '" + bench_preset +
                        "' (valid: straight, broken, selection, surrogate, curvature)");
    }
    return kExitOk;
  }

  throw ConfigError("no command given");
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SimulationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
