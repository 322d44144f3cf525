#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args) {
  std::string cmd = std::string(REGCAL_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, got);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("regcal_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("--version prints the artifact schema version") {
  CliResult r = run_cli("--version");
  CHECK(r.exit_code == 0);
  CHECK(r.output == "regcal schema_version 1\n");
}

TEST_CASE("--help succeeds and bad invocations exit with 2") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("").exit_code == 2);                      // a subcommand is required
  CHECK(run_cli("calibrate").exit_code == 2);             // unknown subcommand
  CHECK(run_cli("train").exit_code == 2);                 // missing required --table
  CHECK(run_cli("simulate --bogus 1").exit_code == 2);    // unknown flag

  CliResult preset = run_cli("simulate --preset wiggly");
  CHECK(preset.exit_code == 2);
  CHECK(preset.output.find("unknown preset") != std::string::npos);

  CliResult bench = run_cli("benchmark --preset nope");
  CHECK(bench.exit_code == 2);
}

TEST_CASE("the simulate/train/evaluate/estimate pipeline runs end to end") {
  fs::path dir = fresh_dir("pipeline");

  CliResult sim = run_cli("simulate --preset straight --n-train 60 --n-test 30 "
                          "--design-seed 5 --out-dir " + dir.string());
  CHECK(sim.exit_code == 0);
  REQUIRE(fs::exists(dir / "train.csv"));
  REQUIRE(fs::exists(dir / "test.csv"));
  CHECK(line_count(slurp(dir / "train.csv")) == 61);  // header + rows
  CHECK(line_count(slurp(dir / "test.csv")) == 31);

  CliResult train = run_cli("train --table " + (dir / "train.csv").string() +
                            " --folds 5 --fit-seed 2 --out " +
                            (dir / "est.json").string());
  CHECK(train.exit_code == 0);
  CHECK(train.output.find("trained estimator on 60 rows") != std::string::npos);
  CHECK(train.output.find("beta: lambda") != std::string::npos);
  REQUIRE(fs::exists(dir / "est.json"));

  CliResult eval = run_cli("evaluate --estimator " + (dir / "est.json").string() +
                           " --table " + (dir / "test.csv").string() + " --out " +
                           (dir / "report.csv").string());
  CHECK(eval.exit_code == 0);
  CHECK(eval.output.rfind("parameter,bias,rmse,predictivity\n", 0) == 0);
  CHECK(slurp(dir / "report.csv") == eval.output);

  CliResult est = run_cli("estimate --estimator " + (dir / "est.json").string() +
                          " --input " + (dir / "test.csv").string() + " --out " +
                          (dir / "theta.csv").string());
  CHECK(est.exit_code == 0);
  CHECK(est.output.find("row 0: beta=") != std::string::npos);
  std::string theta = slurp(dir / "theta.csv");
  CHECK(theta.rfind("row,beta,beta.out_of_bounds\n", 0) == 0);
  CHECK(line_count(theta) == 31);

  // Observed statistics missing a trained feature cannot be estimated.
  write_file(dir / "obs.csv", "S.0,S.1\n0.5,0.5\n");
  CliResult missing = run_cli("estimate --estimator " + (dir / "est.json").string() +
                              " --input " + (dir / "obs.csv").string() + " --out " +
                              (dir / "bad.csv").string());
  CHECK(missing.exit_code == 2);
}

TEST_CASE("malformed inputs are configuration errors") {
  fs::path dir = fresh_dir("corrupt");
  CHECK(run_cli("train --table " + (dir / "absent.csv").string()).exit_code == 2);

  write_file(dir / "garbage.csv", "this is not,a table\n1,2,3\n");
  CHECK(run_cli("train --table " + (dir / "garbage.csv").string()).exit_code == 2);

  // Penalty options are validated before any heavy work.
  fs::path pdir = fresh_dir("penalty");
  CliResult sim = run_cli("simulate --preset straight --n-train 12 --n-test 4 "
                          "--out-dir " + pdir.string());
  REQUIRE(sim.exit_code == 0);
  CHECK(run_cli("train --table " + (pdir / "train.csv").string() +
                " --fold-assignment sometimes").exit_code == 2);
  CHECK(run_cli("train --table " + (pdir / "train.csv").string() +
                " --expansion cubes").exit_code == 2);
}

TEST_CASE("config files supply defaults that flags override") {
  fs::path dir = fresh_dir("config");
  write_file(dir / "sim.conf",
             "# straight-line design\n"
             "preset=straight\n"
             "n-train=40\n"
             "n-test=10\n"
             "design-seed=9\n"
             "out-dir=" + (dir / "a").string() + "\n");

  CliResult from_config = run_cli("simulate --config " + (dir / "sim.conf").string());
  CHECK(from_config.exit_code == 0);
  CHECK(line_count(slurp(dir / "a" / "train.csv")) == 41);

  CliResult overridden = run_cli("simulate --config " + (dir / "sim.conf").string() +
                                 " --n-train 25 --out-dir " + (dir / "b").string());
  CHECK(overridden.exit_code == 0);
  CHECK(line_count(slurp(dir / "b" / "train.csv")) == 26);

  write_file(dir / "bad.conf", "n-train=40\nfrobnicate=1\n");
  CHECK(run_cli("simulate --config " + (dir / "bad.conf").string()).exit_code == 2);
}

TEST_CASE("identical seeds reproduce tables byte for byte") {
  fs::path a = fresh_dir("repro_a");
  fs::path b = fresh_dir("repro_b");
  std::string base = "simulate --preset broken --n-train 30 --n-test 15 --design-seed 11 ";
  REQUIRE(run_cli(base + "--out-dir " + a.string()).exit_code == 0);
  REQUIRE(run_cli(base + "--out-dir " + b.string()).exit_code == 0);
  CHECK(slurp(a / "train.csv") == slurp(b / "train.csv"));
  CHECK(slurp(a / "test.csv") == slurp(b / "test.csv"));

  fs::path c = fresh_dir("repro_c");
  REQUIRE(run_cli("simulate --preset broken --n-train 30 --n-test 15 --design-seed 12 "
                  "--out-dir " + c.string()).exit_code == 0);
  CHECK(slurp(a / "train.csv") != slurp(c / "train.csv"));
}

TEST_CASE("external commands act as simulators") {
  fs::path dir = fresh_dir("external");
  // Echo the single parameter back as statistic "s".
  write_file(dir / "ext.sh", "#!/bin/sh\nprintf 's\\n%s\\n' \"$1\"\n");

  CliResult sim = run_cli("simulate --preset external --command \"/bin/sh " +
                          (dir / "ext.sh").string() + "\" --space beta:0:2 "
                          "--n-train 8 --n-test 4 --design-seed 3 --jobs 1 "
                          "--out-dir " + dir.string());
  CHECK(sim.exit_code == 0);

  // The echoed statistic must match the drawn parameter, field for field.
  std::string table = slurp(dir / "train.csv");
  std::size_t pos = table.find('\n');
  CHECK(table.substr(0, pos) == "theta.beta,S.s");
  std::string rows = table.substr(pos + 1);
  std::size_t line_start = 0;
  while (line_start < rows.size()) {
    std::size_t line_end = rows.find('\n', line_start);
    std::string line = rows.substr(line_start, line_end - line_start);
    std::size_t comma = line.find(',');
    CHECK(line.substr(0, comma) == line.substr(comma + 1));
    line_start = line_end + 1;
  }

  // A failing child process is a simulation failure, not a config error.
  CliResult fail = run_cli("simulate --preset external --command /bin/false "
                           "--space beta:0:2 --n-train 2 --n-test 2 --jobs 1 "
                           "--out-dir " + dir.string());
  CHECK(fail.exit_code == 3);

  // Missing pieces of the external setup are config errors.
  CHECK(run_cli("simulate --preset external --space beta:0:2").exit_code == 2);
  CHECK(run_cli("simulate --preset external --command /bin/true").exit_code == 2);
  CHECK(run_cli("simulate --preset external --command /bin/true --space beta:2:0")
            .exit_code == 2);
}

TEST_CASE("the selection preset trains and scores a classifier") {
  fs::path dir = fresh_dir("select");
  CliResult sel = run_cli("select --preset selection --n-per-model-train 60 "
                          "--n-per-model-test 30 --beta 1.2 --design-seed 4 "
                          "--fit-seed 5 --folds 5 --out-dir " + dir.string());
  CHECK(sel.exit_code == 0);
  CHECK(sel.output.find("trained selector over {straight, broken}") != std::string::npos);
  CHECK(sel.output.find("test accuracy") != std::string::npos);
  CHECK(fs::exists(dir / "classifier.json"));
  CHECK(fs::exists(dir / "confusion.csv"));
  CHECK(fs::exists(dir / "selection.json"));
  CHECK(slurp(dir / "confusion.csv").rfind("true_model,", 0) == 0);

  CHECK(run_cli("select --out-dir " + dir.string()).exit_code == 2);
  CHECK(run_cli("select --preset karaoke --out-dir " + dir.string()).exit_code == 2);
}
