#ifdef MRFDENS_CLI_PATH

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "mrfdens/io.hpp"
#include "mrfdens/pixstats.hpp"
#include "mrfdens/rng.hpp"
#include "test_util.hpp"

using namespace mrfdens;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

// Runs the installed binary with `args`, capturing stdout; stderr is dropped
// unless merge_stderr is set.
CliResult run_cli(const std::string& args, bool merge_stderr = false) {
  const std::string cmd = std::string("\"") + MRFDENS_CLI_PATH + "\" " + args +
                          (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult res;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

json parse_out(const CliResult& res) {
  REQUIRE(res.exit_code == 0);
  return json::parse(res.out);
}

void check_schema(const json& doc, const std::string& schema_name) {
  const json schema = load_json_file(testutil::schema_path(schema_name + ".schema.json"));
  std::string err;
  const bool ok = validate_json(doc, schema, err);
  CAPTURE(err);
  CHECK(ok);
}

std::string write_samples_1d(const std::string& dir) {
  const std::string path = dir + "/pts.csv";
  write_text_file(path, "x1\n0.1\n0.2\n0.3\n0.9\n");
  return path;
}

std::string write_samples_2d(const std::string& dir, int n) {
  SampleMatrix m;
  m.d = 2;
  Rng rng(101);
  for (int i = 0; i < n; ++i) m.rows.push_back({rng.u01(), rng.u01()});
  const std::string path = dir + "/pts2.csv";
  write_samples_csv_file(path, m);
  return path;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("version flag prints name and version") {
  const CliResult res = run_cli("--version");
  CHECK(res.exit_code == 0);
  CHECK(res.out == "mrfdens 1.0.0\n");
}

TEST_CASE("usage errors exit with code 1") {
  CHECK(run_cli("").exit_code == 1);
  CHECK(run_cli("--no-such-flag").exit_code == 1);
  CHECK(run_cli("cliques --family nonsense --dims 4").exit_code == 1);
  CHECK(run_cli("scheffe").exit_code == 1);  // missing required options
}

TEST_CASE("cliques reports the path power cliques and the formula bound") {
  const json out = parse_out(run_cli("cliques --family path --dims 5 --power 2"));
  check_schema(out, "cliques");
  CHECK(out.at("command") == "cliques");
  CHECK(out.at("d") == 5);
  CHECK(out.at("count") == 3);
  CHECK(out.at("max_clique_size") == 3);
  CHECK(out.at("cliques") == json({{1, 2, 3}, {2, 3, 4}, {3, 4, 5}}));
  CHECK(out.at("formula_bound").at("value") == 3);
  CHECK(out.at("formula_bound").at("exact") == true);
}

TEST_CASE("cliques on the squared diagonal grid is one full clique") {
  const json out = parse_out(run_cli("cliques --family grid-diag --dims 3x3 --power 2"));
  check_schema(out, "cliques");
  CHECK(out.at("d") == 9);
  CHECK(out.at("count") == 1);
  CHECK(out.at("max_clique_size") == 9);
  CHECK(out.at("formula_bound").at("value") == 9);
  CHECK(out.at("formula_bound").at("exact") == true);
}

TEST_CASE("cliques over the ceiling exits with the resource code") {
  const CliResult res =
      run_cli("--clique-ceiling 2 cliques --family grid-diag --dims 4x4 --power 2", true);
  CHECK(res.exit_code == 2);
  CHECK(res.out.find("resource error") != std::string::npos);
}

TEST_CASE("synth-sample emits deterministic csv and a spec document") {
  const std::string dir = testutil::temp_dir("cli-synth");
  const std::string spec_path = dir + "/spec.json";
  const std::string args =
      "--seed 7 synth-sample --family chain --d 3 --n 40 --q 64 --spec-out " + spec_path;
  const CliResult first = run_cli(args);
  CHECK(first.exit_code == 0);
  const CliResult again = run_cli(args);
  CHECK(again.out == first.out);
  const CliResult other = run_cli(
      "--seed 8 synth-sample --family chain --d 3 --n 40 --q 64 --spec-out " + spec_path);
  CHECK(other.out != first.out);

  std::istringstream in(first.out);
  const SampleMatrix m = read_samples_csv(in);
  CHECK(m.d == 3);
  CHECK(m.n() == 40);

  const json spec = load_json_file(spec_path);
  check_schema(spec, "synth-spec");
  CHECK(spec.at("family") == "chain");
  CHECK(spec.at("sampler") == "exact-sequential");
  CHECK(std::abs(spec.at("z").get<double>() - 1.0) < 1e-9);  // cosine chain
}

TEST_CASE("synth-sample grid family runs the gibbs sampler") {
  const std::string dir = testutil::temp_dir("cli-gibbs");
  const std::string spec_path = dir + "/spec.json";
  const CliResult res = run_cli(
      "--seed 2 --out " + dir + "/g.csv" +
      " synth-sample --family grid --dims 3x3 --n 10 --gibbs-q 32 --burnin 900 --thin 9"
      " --kind gauss --kappa 5 --spec-out " + spec_path);
  CHECK(res.exit_code == 0);
  const SampleMatrix m = read_samples_csv_file(dir + "/g.csv");
  CHECK(m.d == 9);
  CHECK(m.n() == 10);
  const json spec = load_json_file(spec_path);
  check_schema(spec, "synth-spec");
  CHECK(spec.at("sampler") == "gibbs");
  CHECK(spec.at("gibbs").at("burnin_updates") == 900);
}

TEST_CASE("scheffe picks the candidate matching the sample masses") {
  const std::string dir = testutil::temp_dir("cli-scheffe");
  json uniform = json{{"d", 1}, {"b", 2},
                      {"factors", {{{"V", {1}}, {"C", 1.0}, {"weights", {1.0, 1.0}}}}}};
  json tilted = json{{"d", 1}, {"b", 2},
                     {"factors", {{{"V", {1}}, {"C", 2.0}, {"weights", {0.5, 1.5}}}}}};
  write_json_file(dir + "/cands.json",
                  json{{"d", 1}, {"b", 2}, {"densities", {uniform, tilted}}});
  write_text_file(dir + "/pts.csv", "x1\n0.25\n0.75\n0.75\n0.75\n");

  const json out = parse_out(
      run_cli("scheffe --candidates " + dir + "/cands.json --samples " + dir + "/pts.csv"));
  check_schema(out, "scheffe");
  CHECK(out.at("M") == 2);
  CHECK(out.at("n") == 4);
  CHECK(out.at("d") == 1);
  CHECK(out.at("b") == 2);
  CHECK(out.at("winner_index") == 2);
  REQUIRE(out.at("deltas").size() == 2);
  CHECK(out.at("deltas")[0].get<double>() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(out.at("deltas")[1].get<double>() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fit-hist full mode reproduces the counting histogram") {
  const std::string dir = testutil::temp_dir("cli-fithist");
  const std::string pts = write_samples_1d(dir);
  const json out = parse_out(run_cli("fit-hist --mode full --b 2 --samples " + pts));
  check_schema(out, "fit-hist");
  CHECK(out.at("n") == 4);
  CHECK(out.at("r") == 1);
  CHECK(out.at("mass").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.at("surrogate_loss").get<double>() == doctest::Approx(-1.25).epsilon(1e-12));
  const json weights = out.at("hist").at("factors")[0].at("weights");
  CHECK(weights == json({1.5, 0.5}));
}

TEST_CASE("fit-hist structured mode fits factor per clique") {
  const std::string dir = testutil::temp_dir("cli-fithist2");
  const std::string pts = write_samples_2d(dir, 64);
  const json out = parse_out(
      run_cli("fit-hist --family path --dims 2 --mode structured --b 2 --samples " + pts));
  check_schema(out, "fit-hist");
  CHECK(out.at("r") == 2);
  CHECK(out.at("config").at("b") == 2);
  const ProductHistogram h = hist_from_json(out.at("hist"));
  CHECK(h.d == 2);
  CHECK(h.factors.size() == 1);  // single maximal clique {1,2}
  CHECK(out.at("mass").get<double>() > 0.0);
}

TEST_CASE("fit-hist over the cell budget exits with the resource code") {
  const std::string dir = testutil::temp_dir("cli-budget");
  const std::string pts = write_samples_2d(dir, 16);
  const CliResult res = run_cli(
      "--cell-budget 1000 fit-hist --mode full --b 100 --samples " + pts, true);
  CHECK(res.exit_code == 2);
  CHECK(res.out.find("resource error") != std::string::npos);
}

TEST_CASE("missing input files exit with code 1") {
  CHECK(run_cli("fit-hist --mode full --b 2 --samples /nonexistent/pts.csv").exit_code == 1);
  CHECK(run_cli("rate --config /nonexistent/cfg.json").exit_code == 1);
  const std::string dir = testutil::temp_dir("cli-badcsv");
  write_text_file(dir + "/bad.csv", "a,b\n0.5,0.5\n");
  CHECK(run_cli("fit-hist --mode full --b 2 --samples " + dir + "/bad.csv").exit_code == 1);
}

TEST_CASE("fit-nn trains briefly and emits a loadable model") {
  const std::string dir = testutil::temp_dir("cli-fitnn");
  const std::string pts = write_samples_2d(dir, 32);
  const json out = parse_out(run_cli(
      "--seed 5 fit-nn --family path --dims 2 --samples " + pts +
      " --steps 40 --batch 8 --norm-points 8 --hidden 4 --loss-q 8"));
  check_schema(out, "fit-nn");
  CHECK(out.at("steps_done") == 40);
  CHECK(out.at("r") == 2);
  CHECK_FALSE(out.at("loss_trace").empty());
  CHECK(out.contains("surrogate_loss_exact"));
  CHECK(std::isfinite(out.at("surrogate_loss_exact").get<double>()));
  CHECK_FALSE(out.contains("schedule"));
  const CliqueNetModel model = model_from_json(out.at("model"));  // validates weights
  CHECK(model.d == 2);
  CHECK(model.nets.size() == 1);
}

TEST_CASE("fit-nn schedule mode reports the derived architecture") {
  const std::string dir = testutil::temp_dir("cli-fitnn2");
  const std::string pts = write_samples_2d(dir, 32);
  const json out = parse_out(run_cli(
      "--seed 5 fit-nn --family path --dims 2 --samples " + pts +
      " --use-schedule --max-depth 2 --max-width 16 --steps 10 --batch 8 --norm-points 8"));
  check_schema(out, "fit-nn");
  REQUIRE(out.contains("schedule"));
  CHECK(out.at("schedule").at("max_depth") == 2);
  CHECK(out.at("schedule").at("N").get<int>() >= 1);
  CHECK(out.at("schedule").at("sparsity_bound").get<double>() > 0.0);
  const CliqueNetModel model = model_from_json(out.at("model"));
  CHECK(static_cast<int>(model.nets[0].widths.size()) <= 2 + 2);  // depth cap + in/out
}

TEST_CASE("rate runs a tiny experiment and writes plot files") {
  const std::string dir = testutil::temp_dir("cli-rate");
  write_json_file(dir + "/cfg.json", json{{"estimator", "full-hist"},
                                          {"d", 2},
                                          {"chain_quad", 64},
                                          {"ns", {64, 128, 256}},
                                          {"seeds", {1, 2}},
                                          {"error_q", 16},
                                          {"threads", 2}});
  const json out = parse_out(
      run_cli("rate --config " + dir + "/cfg.json --plots-dir " + dir + "/plots"));
  check_schema(out, "rate");
  CHECK(out.at("report").at("estimator") == "full-hist");
  CHECK(out.at("report").at("cells").size() == 6);
  CHECK(out.at("report").at("predicted_slope").get<double>() ==
        doctest::Approx(-0.25).epsilon(1e-12));

  const std::string csv = read_text_file(dir + "/plots/full-hist.csv");
  CHECK(csv.rfind("n,seed,l1,l2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);  // header + 6 cells
  const std::string dat = read_text_file(dir + "/plots/full-hist_medians.dat");
  CHECK(dat.rfind("# n median_l1 median_l2\n", 0) == 0);
  CHECK(std::count(dat.begin(), dat.end(), '\n') == 4);  // comment + 3 sizes
}

TEST_CASE("pixel-diag on a synthetic corpus emits pair stats and profile") {
  const std::string dir = testutil::temp_dir("cli-pixel");
  const json out = parse_out(run_cli(
      "--seed 3 pixel-diag --synth --synth-rows 8 --synth-cols 8 --synth-n 80 --synth-q 64"
      " --anchor 4,4 --neighbor 4,5 --pairs 4,5 6,7 --profile 2 --out-dir " + dir + "/csv"));
  check_schema(out, "pixel-diag");
  CHECK(out.at("corpus").at("rows") == 8);
  CHECK(out.at("corpus").at("count") == 80);
  REQUIRE(out.at("pairs").size() == 2);
  CHECK(out.at("pairs")[0].at("a") == json({4, 4}));
  CHECK(out.at("pairs")[0].at("b") == json({4, 5}));
  CHECK(out.at("pairs")[0].at("unconditional").at("count") == 80);
  CHECK(out.at("pairs")[0].at("conditional").at("count").get<int>() >= 2);
  REQUIRE(out.contains("profile"));
  CHECK(out.at("profile").size() == 2);
  CHECK(out.at("profile")[0].at("dist") == 1);
  CHECK(out.at("profile")[0].at("n_offsets") == 8);  // interior anchor, full ring

  for (const char* name : {"pair_4-4_4-5.csv", "pair_4-4_4-5_cond.csv", "pair_4-4_6-7.csv",
                           "pair_4-4_6-7_cond.csv", "profile.csv"})
    CHECK(fs::exists(fs::path(dir) / "csv" / name));
}

TEST_CASE("pixel-diag loads a pgm directory") {
  const std::string dir = testutil::temp_dir("cli-pgm");
  Rng rng(31);
  for (int i = 0; i < 6; ++i) {
    PgmImage img;
    img.rows = 4;
    img.cols = 4;
    for (int k = 0; k < 16; ++k)
      img.bytes.push_back(static_cast<std::uint8_t>(rng.index(256)));
    write_pgm_file(dir + "/img" + std::to_string(i) + ".pgm", img);
  }
  const json out = parse_out(run_cli(
      "pixel-diag --dir " + dir + " --anchor 2,2 --neighbor 2,3 --pairs 2,3 --tolerance 0.5"));
  check_schema(out, "pixel-diag");
  CHECK(out.at("config").at("source").at("mode") == "pgm-dir");
  CHECK(out.at("corpus").at("rows") == 4);
  CHECK(out.at("corpus").at("count") == 6);
}

TEST_CASE("hc-check reconstructs the chain density through clique potentials") {
  const json out = parse_out(run_cli("hc-check --d 3 --a 0.5 --chain-q 64 --grid 8 --table-q 9"));
  check_schema(out, "hc-check");
  CHECK(out.at("cliques") == json({{1, 2}, {2, 3}}));
  CHECK(out.at("tables") == 2);
  CHECK(out.at("max_rel_error").get<double>() < 1e-9);
}

TEST_CASE("output lands in --out instead of stdout") {
  const std::string dir = testutil::temp_dir("cli-out");
  const CliResult res = run_cli("--out " + dir + "/c.json cliques --family path --dims 4");
  CHECK(res.exit_code == 0);
  CHECK(res.out.empty());
  const json out = load_json_file(dir + "/c.json");
  check_schema(out, "cliques");
  CHECK(out.at("count") == 3);
}

}  // TEST_SUITE

#endif  // MRFDENS_CLI_PATH
