#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gmmdr/cli.hpp"
#include "gmmdr/io.hpp"
#include "scratch_dir.hpp"

using namespace gmmdr;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gmmdr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("usage errors") {
  CHECK(cli({"--help"}).code == kExitOk);
  CHECK(cli({"fit", "--help"}).code == kExitOk);
  CHECK(contains(cli({"benchmark", "--help"}).out, "--replicates-output"));
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"dance"}).code == kExitUsage);
  CHECK(cli({"fit", "--input", "x.csv", "--bogus"}).code == kExitUsage);
  CHECK(cli({"fit"}).code == kExitUsage);
  const Run missing = cli({"fit", "--input", "/nonexistent/none.csv"});
  CHECK(missing.code == kExitIo);
  CHECK(contains(missing.err, "none.csv"));
}

TEST_CASE("simulate, fit, reduce, select and evaluate") {
  ScratchDir dir;
  const std::string data = (dir / "sim.csv").string();
  const Run sim = cli({"simulate", "--scenario", "synthetic_vvv", "--augmentation", "noise",
                       "--n-per-cluster", "50", "--seed", "3", "-o", data});
  REQUIRE(sim.code == kExitOk);
  CHECK(contains(slurp(data), "# config {"));
  CHECK(contains(slurp(data), "\"seed\":3"));

  const std::string archive = (dir / "fit.gmmdr.json").string();
  const Run one = cli({"fit", "-i", data, "--label", "class", "--models", "EEE", "--g", "3",
                       "-o", archive, "--table", (dir / "bic.csv").string()});
  REQUIRE(one.code == kExitOk);
  CHECK(contains(one.out, "best model: EEE with G = 3"));
  CHECK(contains(one.out, "ARI: "));
  const Dataset table = read_csv(dir / "bic.csv");
  CHECK(table.data.rows() == 1);
  CHECK(table.column_names == std::vector<std::string>{"G", "EEE"});
  const ModelArchive a = load_model(archive);
  CHECK(a.fit.model == ModelName::EEE);
  CHECK(a.provenance.config["command"] == "fit");

  CHECK(cli({"fit", "-i", data, "--label", "class", "--models", "QQQ"}).code == kExitUsage);
  CHECK(cli({"fit", "-i", data, "--label", "class", "--max-g", "0"}).code == kExitUsage);

  const Run red = cli({"reduce", "-i", data, "--label", "class", "--model", archive, "--out-dir",
                       (dir / "red").string(), "--grid", "10"});
  REQUIRE(red.code == kExitOk);
  CHECK(contains(red.out, "directions: 2"));
  for (const char* f : {"eigen_contrib.csv", "coefficients.csv", "projection.csv",
                        "uncertainty.csv", "density_grid.csv", "reduce.gmmdr.json"})
    CHECK(fs::exists(dir / "red" / f));
  CHECK(load_model(dir / "red" / "reduce.gmmdr.json").basis->d == 2);

  const Run sel = cli({"select", "-i", data, "--label", "class", "--out-dir",
                       (dir / "sel").string(), "--prefix", "run_"});
  REQUIRE(sel.code == kExitOk);
  CHECK(contains(sel.out, "final mixture: VVV with G = 3"));
  CHECK(contains(sel.out, "ARI: 1.0000"));
  const ModelArchive s = load_model(dir / "sel" / "run_select.gmmdr.json");
  CHECK(!s.selection.empty());
  REQUIRE(s.transform);
  CHECK(s.transform->rows() == 10);

  const Run ev = cli({"evaluate", "-i", data, "--label", "class", "--model",
                      (dir / "sel" / "run_select.gmmdr.json").string()});
  CHECK(ev.code == kExitOk);
  CHECK(contains(ev.out, "ARI: 1.0000"));
  CHECK(contains(ev.out, "error rate: 0.00%"));

  std::ofstream(dir / "pairs.csv") << "truth,pred\n1,2\n1,2\n2,1\n2,1\n";
  const Run cols = cli({"evaluate", "-i", (dir / "pairs.csv").string(), "--truth", "truth",
                        "--predicted", "pred"});
  CHECK(cols.code == kExitOk);
  CHECK(contains(cols.out, "ARI: 1.0000"));
  CHECK(cli({"evaluate", "-i", (dir / "pairs.csv").string()}).code == kExitUsage);
}

TEST_CASE("numerical failures exit with code 3") {
  ScratchDir dir;
  std::ofstream(dir / "dup.csv") << "a,b\n0,0\n0,0\n0,0\n5,5\n5,5\n5,5\n";
  const Run r = cli({"fit", "-i", (dir / "dup.csv").string(), "--models", "VVV", "--g", "2",
                     "-o", (dir / "f.json").string()});
  CHECK(r.code == kExitNumeric);
}

TEST_CASE("benchmark") {
  ScratchDir dir;
  auto run = [&](const std::string& tag, const std::string& reps) {
    return cli({"benchmark", "--model", "model1_eee", "--scenario", "none", "--n", "60", "--reps",
                reps, "--max-g", "3", "--jobs", "2", "-q", "-o", (dir / (tag + ".csv")).string(),
                "--replicates-output", (dir / (tag + "_reps.csv")).string()});
  };
  const Run single = run("one", "1");
  REQUIRE(single.code == kExitOk);
  std::istringstream summary(slurp(dir / "one.csv"));
  std::vector<std::string> methods;
  for (std::string line; std::getline(summary, line);) {
    if (line.empty() || line[0] == '#' || line.starts_with("scenario")) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 9);
    methods.push_back(cells[3]);
  }
  std::sort(methods.begin(), methods.end());
  CHECK(methods == std::vector<std::string>{"GMM", "GMMDR", "PCA+GMM"});
  CHECK(contains(slurp(dir / "one.csv"), ",NA,NA\n"));
  CHECK(contains(single.out, "GMMDR"));

  REQUIRE(run("a", "2").code == kExitOk);
  REQUIRE(run("b", "2").code == kExitOk);
  std::string a = slurp(dir / "a.csv"), b = slurp(dir / "b.csv");
  // The embedded config names the output file; compare the data rows.
  CHECK(a.substr(a.find('\n')) == b.substr(b.find('\n')));
  a = slurp(dir / "a_reps.csv");
  b = slurp(dir / "b_reps.csv");
  CHECK(a.substr(a.find('\n')) == b.substr(b.find('\n')));

  CHECK(cli({"benchmark", "--reps", "0"}).code == kExitUsage);
  CHECK(cli({"benchmark", "--methods", "LDA"}).code == kExitUsage);
}
