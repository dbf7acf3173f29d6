#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrfdens/errors.hpp"
#include "mrfdens/graph.hpp"
#include "mrfdens/hammersley.hpp"
#include "mrfdens/histogram.hpp"
#include "mrfdens/io.hpp"
#include "mrfdens/pixstats.hpp"
#include "mrfdens/rate.hpp"
#include "mrfdens/relunet.hpp"
#include "mrfdens/scheffe.hpp"
#include "mrfdens/synth.hpp"
#include "mrfdens/version.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace mrfdens;

struct GlobalOpts {
  std::uint64_t seed = 1;
  std::size_t cell_budget = kDefaultCellBudget;
  std::size_t quad_budget = kDefaultQuadBudget;
  std::size_t clique_ceiling = kDefaultCliqueCeiling;
  std::string out;
};

void emit(const GlobalOpts& g, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (g.out.empty())
    std::cout << text;
  else
    write_text_file(g.out, text);
}

// ---- shared graph options ----

struct GraphOpts {
  std::string family = "path";
  std::string dims;
  int power_t = 1;
  std::string edges_path;
};

void add_graph_opts(CLI::App* sub, GraphOpts& g) {
  sub->add_option("--family", g.family, "Graph family")
      ->check(CLI::IsMember({"path", "grid", "grid-diag", "general"}))
      ->capture_default_str();
  sub->add_option("--dims", g.dims, "Vertex count (path) or RxC (grids)");
  sub->add_option("--power", g.power_t, "Metric power t (edges up to distance t)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--edges", g.edges_path, "Edge list file for --family general");
}

std::pair<int, int> parse_dims(const std::string& dims) {
  const auto x = dims.find_first_of("xX");
  try {
    if (x == std::string::npos) return {std::stoi(dims), 0};
    return {std::stoi(dims.substr(0, x)), std::stoi(dims.substr(x + 1))};
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse --dims value: " + dims);
  }
}

MrfGraph build_graph(const GraphOpts& opts) {
  MrfGraph base;
  if (opts.family == "general") {
    if (opts.edges_path.empty()) throw std::invalid_argument("--family general needs --edges");
    base = load_edge_list_file(opts.edges_path);
  } else {
    if (opts.dims.empty()) throw std::invalid_argument("--dims is required for " + opts.family);
    const auto [a, b] = parse_dims(opts.dims);
    if (opts.family == "path") {
      if (b != 0) throw std::invalid_argument("path --dims takes a single vertex count");
      base = make_path(a);
    } else {
      if (b == 0) throw std::invalid_argument("grid --dims must be RxC");
      base = make_grid(a, b, opts.family == "grid-diag");
    }
  }
  return opts.power_t > 1 ? power(base, opts.power_t) : base;
}

json graph_config_json(const GraphOpts& g) {
  return json{{"family", g.family},
              {"dims", g.dims},
              {"power", g.power_t},
              {"edges", g.edges_path}};
}

PixelRef parse_pixel(const std::string& s) {
  const auto c = s.find(',');
  if (c == std::string::npos) throw std::invalid_argument("pixel must be row,col: " + s);
  try {
    return PixelRef{std::stoi(s.substr(0, c)), std::stoi(s.substr(c + 1))};
  } catch (const std::exception&) {
    throw std::invalid_argument("pixel must be row,col: " + s);
  }
}

PairPotential make_potential(const std::string& kind, double a, double kappa) {
  return kind == "cosine" ? cosine_potential(a) : gauss_potential(kappa);
}

// ---- cliques ----

struct CliquesOpts {
  GraphOpts graph;
};

void run_cliques(const CliquesOpts& o, const GlobalOpts& g) {
  const MrfGraph graph = build_graph(o.graph);
  const CliqueSet cs = maximal_cliques(graph, g.clique_ceiling);
  int max_size = 0;
  for (const auto& K : cs.cliques) max_size = std::max(max_size, static_cast<int>(K.size()));

  json out{{"command", "cliques"},
           {"version", kVersion},
           {"config", json{{"graph", graph_config_json(o.graph)},
                           {"clique_ceiling", g.clique_ceiling}}},
           {"d", graph.d},
           {"edge_count", graph.edge_count()},
           {"fingerprint", graph.fingerprint()},
           {"count", cs.cliques.size()},
           {"max_clique_size", max_size},
           {"cliques", cs.cliques}};
  if (graph.family != GraphFamily::general) {
    const auto [r, c] = parse_dims(o.graph.dims);
    const CliqueSizeBound bound = clique_size_formula(graph.family, graph.power_t, r, c);
    out["formula_bound"] = json{{"value", bound.value}, {"exact", bound.exact}};
  }
  emit(g, out);
}

// ---- scheffe ----

struct ScheffeOpts {
  std::string candidates_path;
  std::string samples_path;
};

void run_scheffe(const ScheffeOpts& o, const GlobalOpts& g) {
  const CandidateSet cands = candidates_from_json(load_json_file(o.candidates_path));
  const SampleMatrix samples = read_samples_csv_file(o.samples_path);
  const SelectionResult sel = scheffe_select(cands, samples, g.cell_budget);
  emit(g, json{{"command", "scheffe"},
               {"version", kVersion},
               {"config", json{{"candidates", o.candidates_path},
                               {"samples", o.samples_path},
                               {"cell_budget", g.cell_budget}}},
               {"M", cands.densities.size()},
               {"n", samples.n()},
               {"d", cands.d},
               {"b", cands.b},
               {"winner_index", sel.winner_index},
               {"deltas", sel.deltas}});
}

// ---- fit-hist ----

struct FitHistOpts {
  GraphOpts graph;
  std::string samples_path;
  std::string mode = "structured";
  int b = 0;  // 0: schedule b = ceil(b_scale * n^{1/(r+2)})
  double b_scale = 1.0;
  double C = 8.0;
};

void run_fit_hist(const FitHistOpts& o, const GlobalOpts& g) {
  const SampleMatrix samples = read_samples_csv_file(o.samples_path);
  ProductHistogram fitted;
  int r = 0;
  int b = o.b;
  if (o.mode == "structured") {
    const MrfGraph graph = build_graph(o.graph);
    if (graph.d != samples.d)
      throw std::invalid_argument("graph dimension != sample dimension");
    const CliqueSet cs = maximal_cliques(graph, g.clique_ceiling);
    for (const auto& K : cs.cliques) r = std::max(r, static_cast<int>(K.size()));
    if (b == 0)
      b = std::max(1, static_cast<int>(std::ceil(
                          o.b_scale * std::pow(static_cast<double>(samples.n()), 1.0 / (r + 2)))));
    StructuredFitConfig fc;
    fc.C = o.C;
    fc.budget = g.cell_budget;
    fitted = fit_structured_hist(samples.d, cs.cliques, samples, b, fc);
  } else {
    r = samples.d;
    if (b == 0)
      b = std::max(1, static_cast<int>(std::ceil(
                          o.b_scale * std::pow(static_cast<double>(samples.n()), 1.0 / (r + 2)))));
    fitted = fit_full_hist(samples, b, g.cell_budget);
  }

  double data_term = 0;
  for (const auto& row : samples.rows) data_term += fitted.eval(row);
  const double loss =
      l2_norm_sq(fitted, g.cell_budget) - 2.0 * data_term / static_cast<double>(samples.n());
  emit(g, json{{"command", "fit-hist"},
               {"version", kVersion},
               {"config", json{{"graph", graph_config_json(o.graph)},
                               {"samples", o.samples_path},
                               {"mode", o.mode},
                               {"b", b},
                               {"b_scale", o.b_scale},
                               {"C", o.C},
                               {"cell_budget", g.cell_budget}}},
               {"n", samples.n()},
               {"r", r},
               {"mass", hist_mass(fitted, g.cell_budget)},
               {"surrogate_loss", loss},
               {"hist", hist_to_json(fitted)}});
}

// ---- fit-nn ----

struct FitNnOpts {
  GraphOpts graph;
  std::string samples_path;
  bool use_schedule = false;
  int hidden = 24;
  int max_depth = 3;
  int max_width = 64;
  double F = 2.0;
  TrainConfig train;
  int loss_q = 0;  // exact-loss resolution; 0 skips the quadrature report
};

void run_fit_nn(const FitNnOpts& o, const GlobalOpts& g) {
  const SampleMatrix samples = read_samples_csv_file(o.samples_path);
  const MrfGraph graph = build_graph(o.graph);
  if (graph.d != samples.d) throw std::invalid_argument("graph dimension != sample dimension");
  const CliqueSet cs = maximal_cliques(graph, g.clique_ceiling);
  int r = 0;
  for (const auto& K : cs.cliques) r = std::max(r, static_cast<int>(K.size()));

  std::vector<std::vector<int>> widths;
  json schedule_json;
  if (o.use_schedule) {
    const ArchitectureSchedule sched = nn_schedule(samples.n(), r, o.max_depth, o.max_width);
    for (const auto& K : cs.cliques) widths.push_back(sched.widths(static_cast<int>(K.size())));
    schedule_json = json{{"eps", sched.eps},
                         {"N", sched.N},
                         {"m", sched.m},
                         {"max_depth", o.max_depth},
                         {"max_width", o.max_width},
                         {"sparsity_bound", sched.sparsity_bound()}};
  } else {
    for (const auto& K : cs.cliques)
      widths.push_back({static_cast<int>(K.size()), o.hidden, 1});
  }

  Rng init_rng = Rng(g.seed).derive("fit-nn-init");
  CliqueNetModel model = make_clique_model(graph.d, cs.cliques, widths, o.F, init_rng);
  TrainConfig tc = o.train;
  tc.seed = Rng(g.seed).derive("fit-nn-train").next();
  const TrainResult tr = train_sgd(model, samples, tc);

  json out{{"command", "fit-nn"},
           {"version", kVersion},
           {"config", json{{"graph", graph_config_json(o.graph)},
                           {"samples", o.samples_path},
                           {"use_schedule", o.use_schedule},
                           {"hidden", o.hidden},
                           {"F", o.F},
                           {"seed", g.seed},
                           {"train", json{{"steps", tc.steps},
                                          {"batch", tc.batch},
                                          {"norm_points", tc.norm_points},
                                          {"lr_start", tc.lr_start},
                                          {"lr_end", tc.lr_end},
                                          {"clamp_bound", tc.clamp_bound}}}}},
           {"n", samples.n()},
           {"r", r},
           {"steps_done", tr.steps_done},
           {"loss_trace", tr.loss_trace},
           {"model", model_to_json(model)}};
  if (!schedule_json.is_null()) out["schedule"] = schedule_json;
  if (o.loss_q > 0) {
    NormMode mode;
    mode.kind = NormMode::Kind::exact;
    mode.q = o.loss_q;
    out["surrogate_loss_exact"] = surrogate_loss(model, samples, mode, g.cell_budget);
  }
  emit(g, out);
}

// ---- rate ----

struct RateOpts {
  std::string config_path;
  std::string plots_dir;
};

void run_rate(const RateOpts& o, const GlobalOpts& g) {
  const RateConfig cfg = rate_config_from_json(load_json_file(o.config_path));
  const RateReport rep = run_rate_experiment(cfg);
  if (!o.plots_dir.empty()) {
    fs::create_directories(o.plots_dir);
    std::ostringstream csv;
    csv << "n,seed,l1,l2\n";
    char buf[48];
    for (const auto& cell : rep.cells) {
      if (cell.failed) continue;
      csv << cell.n << "," << cell.seed << ",";
      std::snprintf(buf, sizeof buf, "%.17g", cell.l1);
      csv << buf << ",";
      std::snprintf(buf, sizeof buf, "%.17g", cell.l2);
      csv << buf << "\n";
    }
    write_text_file((fs::path(o.plots_dir) / (rep.estimator + ".csv")).string(), csv.str());

    std::ostringstream dat;
    dat << "# n median_l1 median_l2\n";
    for (std::size_t i = 0; i < rep.ns.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", rep.median_l1[i]);
      dat << rep.ns[i] << " " << buf;
      std::snprintf(buf, sizeof buf, "%.17g", rep.median_l2[i]);
      dat << " " << buf << "\n";
    }
    write_text_file((fs::path(o.plots_dir) / (rep.estimator + "_medians.dat")).string(),
                    dat.str());
  }
  emit(g, json{{"command", "rate"},
               {"version", kVersion},
               {"config", rate_config_to_json(cfg)},
               {"report", rate_report_to_json(rep)}});
}

// ---- synth-sample ----

struct SynthOpts {
  std::string family = "chain";
  int d = 3;
  std::string dims = "4x4";
  int power_t = 1;
  std::string kind = "cosine";
  double a = 0.5;
  double kappa = 20.0;
  std::size_t n = 100;
  int q = 256;
  int gibbs_q = 64;
  std::uint64_t burnin = 0;
  std::uint64_t thin = 0;
  std::string spec_out;
};

void run_synth(const SynthOpts& o, const GlobalOpts& g) {
  const PairPotential psi = make_potential(o.kind, o.a, o.kappa);
  Rng rng = Rng(g.seed).derive("synth-sample");
  SampleMatrix samples;
  samples.seed = g.seed;
  json spec{{"family", o.family}, {"psi", potential_to_json(psi)}, {"seed", g.seed}, {"n", o.n}};

  if (o.family == "chain") {
    const ChainDensity chain(o.d, psi, o.q);
    samples.d = o.d;
    samples.rows = chain.sample_n(o.n, rng);
    spec["d"] = o.d;
    spec["q"] = o.q;
    spec["z"] = chain.z();
    spec["lipschitz_bound"] = chain.lipschitz_bound();
    spec["sampler"] = "exact-sequential";
  } else if (o.family == "grid") {
    const auto [rows, cols] = parse_dims(o.dims);
    MrfGraph graph = make_grid(rows, cols, false);
    if (o.power_t > 1) graph = power(graph, o.power_t);
    const GridDensity dens{graph, psi};
    GibbsConfig gc;
    gc.burnin_updates = o.burnin;
    gc.thin_updates = o.thin;
    gc.q = o.gibbs_q;
    samples.d = graph.d;
    samples.rows = gibbs_sample(dens, o.n, gc, rng);
    spec["rows"] = rows;
    spec["cols"] = cols;
    spec["power"] = o.power_t;
    spec["d"] = graph.d;
    spec["sampler"] = "gibbs";
    spec["gibbs"] = json{{"burnin_updates",
                          gc.burnin_updates == 0 ? 1000ULL * static_cast<std::uint64_t>(graph.d)
                                                 : gc.burnin_updates},
                         {"thin_updates",
                          gc.thin_updates == 0 ? static_cast<std::uint64_t>(graph.d)
                                               : gc.thin_updates},
                         {"q", gc.q}};
    spec["z_mode"] = "unnormalized";
  } else {
    throw std::invalid_argument("unknown family: " + o.family);
  }

  if (!o.spec_out.empty()) write_json_file(o.spec_out, spec);
  if (g.out.empty()) {
    write_samples_csv(std::cout, samples);
  } else {
    write_samples_csv_file(g.out, samples);
  }
}

// ---- pixel-diag ----

struct PixelOpts {
  std::string dir;
  bool synth = false;
  int synth_rows = 16;
  int synth_cols = 16;
  std::size_t synth_n = 500;
  std::string kind = "gauss";
  double a = 0.6;
  double kappa = 20.0;
  int synth_q = 256;
  int target_rows = 0;
  int target_cols = 0;
  std::string policy = "reject";
  std::string anchor = "8,8";
  std::string neighbor = "9,8";
  std::vector<std::string> pairs;
  double tolerance = -1.0;
  int nearest = 0;
  int profile = 0;
  std::string out_dir;
};

void run_pixel(const PixelOpts& o, const GlobalOpts& g) {
  ImageCorpus corpus;
  json source;
  if (o.synth) {
    const PairPotential psi = make_potential(o.kind, o.a, o.kappa);
    corpus = synth_snake_corpus(o.synth_rows, o.synth_cols, o.synth_n, psi, g.seed, o.synth_q);
    source = json{{"mode", "synth-snake"},
                  {"rows", o.synth_rows},
                  {"cols", o.synth_cols},
                  {"n", o.synth_n},
                  {"psi", potential_to_json(psi)},
                  {"seed", g.seed}};
  } else {
    if (o.dir.empty()) throw std::invalid_argument("pixel-diag needs --dir or --synth");
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(o.dir))
      if (entry.is_regular_file() && entry.path().extension() == ".pgm")
        paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw std::invalid_argument("no .pgm files in " + o.dir);
    int tr = o.target_rows, tc = o.target_cols;
    if (tr == 0 || tc == 0) {
      const PgmImage first = read_pgm_file(paths.front());
      tr = first.rows;
      tc = first.cols;
    }
    corpus = load_pgm_corpus(paths, tr, tc,
                             o.policy == "crop" ? DimPolicy::crop : DimPolicy::reject);
    source = json{{"mode", "pgm-dir"},
                  {"dir", o.dir},
                  {"files", corpus.sources.size()},
                  {"policy", o.policy}};
  }

  const PixelRef anchor = parse_pixel(o.anchor);
  const PixelRef neighbor = parse_pixel(o.neighbor);
  Condition cond;
  cond.pixel = neighbor;
  if (o.nearest > 0) {
    cond.mode = Condition::Mode::nearest;
    cond.k = static_cast<std::size_t>(o.nearest);
  } else {
    cond.mode = Condition::Mode::tolerance;
    cond.tolerance = o.tolerance;
  }

  if (!o.out_dir.empty()) fs::create_directories(o.out_dir);
  json jpairs = json::array();
  std::vector<std::string> pair_specs = o.pairs;
  if (pair_specs.empty()) pair_specs = {"8,9", "8,10", "9,12", "14,16"};
  for (const auto& spec : pair_specs) {
    const PixelRef b = parse_pixel(spec);
    const ScatterResult un = pair_scatter(corpus, anchor, b);
    const ScatterResult cn = pair_scatter(corpus, anchor, b, cond);
    jpairs.push_back(json{
        {"a", json::array({anchor.row, anchor.col})},
        {"b", json::array({b.row, b.col})},
        {"unconditional", json{{"correlation", un.correlation}, {"count", un.count}}},
        {"conditional", json{{"correlation", cn.correlation},
                             {"count", cn.count},
                             {"median_used", cn.median_used},
                             {"tolerance_used", cn.tolerance_used}}}});
    if (!o.out_dir.empty()) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "pair_%d-%d_%d-%d", anchor.row, anchor.col, b.row, b.col);
      auto write_scatter = [&](const ScatterResult& res, const std::string& name) {
        std::ostringstream csv;
        csv << "valueA,valueB\n";
        char num[48];
        for (const auto& [va, vb] : res.pairs) {
          std::snprintf(num, sizeof num, "%.17g", va);
          csv << num << ",";
          std::snprintf(num, sizeof num, "%.17g", vb);
          csv << num << "\n";
        }
        write_text_file((fs::path(o.out_dir) / name).string(), csv.str());
      };
      write_scatter(un, std::string(buf) + ".csv");
      write_scatter(cn, std::string(buf) + "_cond.csv");
    }
  }

  json out{{"command", "pixel-diag"},
           {"version", kVersion},
           {"config", json{{"source", source},
                           {"anchor", json::array({anchor.row, anchor.col})},
                           {"neighbor", json::array({neighbor.row, neighbor.col})},
                           {"tolerance", o.tolerance},
                           {"nearest", o.nearest},
                           {"out_dir", o.out_dir}}},
           {"corpus", json{{"rows", corpus.rows}, {"cols", corpus.cols}, {"count", corpus.size()}}},
           {"pairs", jpairs}};

  if (o.profile > 0) {
    json jprof = json::array();
    const auto prof = correlation_profile(corpus, anchor, neighbor, o.profile,
                                          o.tolerance >= 0 ? std::optional<double>(o.tolerance)
                                                           : std::nullopt);
    for (const auto& row : prof) {
      jprof.push_back(json{{"dist", row.dist},
                           {"n_offsets", row.n_offsets},
                           {"unconditional", row.uncond},
                           {"conditional", row.cond}});
    }
    out["profile"] = jprof;
    if (!o.out_dir.empty()) {
      std::ostringstream csv;
      csv << "dist,n_offsets,unconditional,conditional\n";
      char num[48];
      for (const auto& row : prof) {
        csv << row.dist << "," << row.n_offsets << ",";
        std::snprintf(num, sizeof num, "%.17g", row.uncond);
        csv << num << ",";
        std::snprintf(num, sizeof num, "%.17g", row.cond);
        csv << num << "\n";
      }
      write_text_file((fs::path(o.out_dir) / "profile.csv").string(), csv.str());
    }
  }
  emit(g, out);
}

// ---- hc-check ----

struct HcOpts {
  int d = 3;
  std::string kind = "cosine";
  double a = 0.5;
  double kappa = 20.0;
  int chain_q = 256;
  int power_t = 1;
  int grid = 16;    // reconstruction grid per axis
  int table_q = 16; // potential tabulation nodes per axis
};

void run_hc(const HcOpts& o, const GlobalOpts& g) {
  const PairPotential psi = make_potential(o.kind, o.a, o.kappa);
  const ChainDensity chain(o.d, psi, o.chain_q);
  MrfGraph graph = make_path(o.d);
  if (o.power_t > 1) graph = power(graph, o.power_t);
  const CliqueSet cs = maximal_cliques(graph, g.clique_ceiling);

  DensityOracle oracle;
  oracle.d = o.d;
  oracle.eval = [&chain](const std::vector<double>& x) { return chain.eval(x); };
  const HcFactorization fac = hc_potentials(oracle, cs, o.table_q);

  double max_rel = 0;
  for_each_centroid(o.d, o.grid, g.quad_budget, [&](const std::vector<double>& x) {
    const double p = oracle.call(x);
    const double rec = fac.reconstruct(x);
    max_rel = std::max(max_rel, std::abs(p - rec) / p);
  });

  emit(g, json{{"command", "hc-check"},
               {"version", kVersion},
               {"config", json{{"d", o.d},
                               {"psi", potential_to_json(psi)},
                               {"chain_q", o.chain_q},
                               {"power", o.power_t},
                               {"grid", o.grid},
                               {"table_q", o.table_q}}},
               {"cliques", cs.cliques},
               {"max_rel_error", max_rel},
               {"tables", fac.tables.size()}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MRF-structured nonparametric density estimation toolkit"};
  app.set_version_flag("--version", std::string(kProjectName) + " " + kVersion);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Global seed; per-component streams derive from it")
      ->capture_default_str();
  app.add_option("--cell-budget", g.cell_budget, "Max refinement cells per operation")
      ->capture_default_str();
  app.add_option("--quad-budget", g.quad_budget, "Max quadrature points per operation")
      ->capture_default_str();
  app.add_option("--clique-ceiling", g.clique_ceiling, "Max enumerated maximal cliques")
      ->capture_default_str();
  app.add_option("--out", g.out, "Output path (default: stdout)");

  auto cliques_opts = std::make_shared<CliquesOpts>();
  auto* sub_cliques = app.add_subcommand("cliques", "Maximal cliques of a (power) graph");
  add_graph_opts(sub_cliques, cliques_opts->graph);
  sub_cliques->callback([cliques_opts, &g] { run_cliques(*cliques_opts, g); });

  auto scheffe_opts = std::make_shared<ScheffeOpts>();
  auto* sub_scheffe = app.add_subcommand("scheffe", "Minimum-distance candidate selection");
  sub_scheffe->add_option("--candidates", scheffe_opts->candidates_path, "Candidate set JSON")
      ->required();
  sub_scheffe->add_option("--samples", scheffe_opts->samples_path, "Samples CSV")->required();
  sub_scheffe->callback([scheffe_opts, &g] { run_scheffe(*scheffe_opts, g); });

  auto fit_hist_opts = std::make_shared<FitHistOpts>();
  auto* sub_fit_hist = app.add_subcommand("fit-hist", "Fit a (structured) histogram estimator");
  add_graph_opts(sub_fit_hist, fit_hist_opts->graph);
  sub_fit_hist->add_option("--samples", fit_hist_opts->samples_path, "Samples CSV")->required();
  sub_fit_hist->add_option("--mode", fit_hist_opts->mode, "Estimator form")
      ->check(CLI::IsMember({"structured", "full"}))
      ->capture_default_str();
  sub_fit_hist->add_option("--b", fit_hist_opts->b, "Bins per axis (0 = schedule)")
      ->capture_default_str();
  sub_fit_hist->add_option("--b-scale", fit_hist_opts->b_scale, "Schedule constant for b")
      ->capture_default_str();
  sub_fit_hist->add_option("--C", fit_hist_opts->C, "Weight cap for structured factors")
      ->capture_default_str();
  sub_fit_hist->callback([fit_hist_opts, &g] { run_fit_hist(*fit_hist_opts, g); });

  auto fit_nn_opts = std::make_shared<FitNnOpts>();
  auto* sub_fit_nn = app.add_subcommand("fit-nn", "Train the clique-product ReLU-net estimator");
  add_graph_opts(sub_fit_nn, fit_nn_opts->graph);
  sub_fit_nn->add_option("--samples", fit_nn_opts->samples_path, "Samples CSV")->required();
  sub_fit_nn->add_flag("--use-schedule", fit_nn_opts->use_schedule,
                       "Architecture from the n-dependent schedule (capped)");
  sub_fit_nn->add_option("--hidden", fit_nn_opts->hidden, "Hidden width when not using schedule")
      ->capture_default_str();
  sub_fit_nn->add_option("--max-depth", fit_nn_opts->max_depth, "Schedule depth cap")
      ->capture_default_str();
  sub_fit_nn->add_option("--max-width", fit_nn_opts->max_width, "Schedule width cap")
      ->capture_default_str();
  sub_fit_nn->add_option("--F", fit_nn_opts->F, "Per-net output clip bound")
      ->capture_default_str();
  sub_fit_nn->add_option("--steps", fit_nn_opts->train.steps, "SGD steps")->capture_default_str();
  sub_fit_nn->add_option("--batch", fit_nn_opts->train.batch, "Mini-batch size")
      ->capture_default_str();
  sub_fit_nn->add_option("--norm-points", fit_nn_opts->train.norm_points,
                         "Fresh MC points per step for the norm term")
      ->capture_default_str();
  sub_fit_nn->add_option("--lr-start", fit_nn_opts->train.lr_start, "Initial learning rate")
      ->capture_default_str();
  sub_fit_nn->add_option("--lr-end", fit_nn_opts->train.lr_end, "Final learning rate")
      ->capture_default_str();
  sub_fit_nn->add_option("--loss-q", fit_nn_opts->loss_q,
                         "Report exact surrogate loss at this resolution (0 = skip)")
      ->capture_default_str();
  sub_fit_nn->callback([fit_nn_opts, &g] { run_fit_nn(*fit_nn_opts, g); });

  auto rate_opts = std::make_shared<RateOpts>();
  auto* sub_rate = app.add_subcommand("rate", "Convergence-rate experiment harness");
  sub_rate->add_option("--config", rate_opts->config_path, "Experiment config JSON")->required();
  sub_rate->add_option("--plots-dir", rate_opts->plots_dir, "Directory for CSV/gnuplot outputs");
  sub_rate->callback([rate_opts, &g] { run_rate(*rate_opts, g); });

  auto synth_opts = std::make_shared<SynthOpts>();
  auto* sub_synth = app.add_subcommand("synth-sample", "Sample a synthetic Markov density");
  sub_synth->add_option("--family", synth_opts->family, "chain or grid")
      ->check(CLI::IsMember({"chain", "grid"}))
      ->capture_default_str();
  sub_synth->add_option("--d", synth_opts->d, "Chain length")->capture_default_str();
  sub_synth->add_option("--dims", synth_opts->dims, "Grid RxC")->capture_default_str();
  sub_synth->add_option("--power", synth_opts->power_t, "Grid power t")->capture_default_str();
  sub_synth->add_option("--kind", synth_opts->kind, "Potential family")
      ->check(CLI::IsMember({"cosine", "gauss"}))
      ->capture_default_str();
  sub_synth->add_option("--a", synth_opts->a, "Cosine amplitude, |a| < 1")->capture_default_str();
  sub_synth->add_option("--kappa", synth_opts->kappa, "Gauss concentration")
      ->capture_default_str();
  sub_synth->add_option("--n", synth_opts->n, "Sample count")->capture_default_str();
  sub_synth->add_option("--q", synth_opts->q, "Chain quadrature subintervals")
      ->capture_default_str();
  sub_synth->add_option("--gibbs-q", synth_opts->gibbs_q, "Gibbs conditional grid")
      ->capture_default_str();
  sub_synth->add_option("--burnin", synth_opts->burnin, "Gibbs burn-in updates (0 = 1000d)")
      ->capture_default_str();
  sub_synth->add_option("--thin", synth_opts->thin, "Gibbs thinning updates (0 = d)")
      ->capture_default_str();
  sub_synth->add_option("--spec-out", synth_opts->spec_out, "Write density spec JSON here");
  sub_synth->callback([synth_opts, &g] { run_synth(*synth_opts, g); });

  auto pixel_opts = std::make_shared<PixelOpts>();
  auto* sub_pixel = app.add_subcommand("pixel-diag", "Pixel-pair dependence statistics");
  sub_pixel->add_option("--dir", pixel_opts->dir, "Directory of P5 .pgm images");
  sub_pixel->add_flag("--synth", pixel_opts->synth, "Generate a synthetic grid-MRF corpus");
  sub_pixel->add_option("--synth-rows", pixel_opts->synth_rows, "Synthetic rows")
      ->capture_default_str();
  sub_pixel->add_option("--synth-cols", pixel_opts->synth_cols, "Synthetic cols")
      ->capture_default_str();
  sub_pixel->add_option("--synth-n", pixel_opts->synth_n, "Synthetic corpus size")
      ->capture_default_str();
  sub_pixel->add_option("--kind", pixel_opts->kind, "Synthetic potential family")
      ->check(CLI::IsMember({"cosine", "gauss"}))
      ->capture_default_str();
  sub_pixel->add_option("--a", pixel_opts->a, "Cosine amplitude")->capture_default_str();
  sub_pixel->add_option("--kappa", pixel_opts->kappa, "Gauss concentration")
      ->capture_default_str();
  sub_pixel->add_option("--synth-q", pixel_opts->synth_q, "Synthetic chain quadrature")
      ->capture_default_str();
  sub_pixel->add_option("--target-dims", pixel_opts->target_rows,
                        "Target rows (with --target-cols) for loaded corpora")
      ->capture_default_str();
  sub_pixel->add_option("--target-cols", pixel_opts->target_cols, "Target cols")
      ->capture_default_str();
  sub_pixel->add_option("--policy", pixel_opts->policy, "Dimension mismatch policy")
      ->check(CLI::IsMember({"crop", "reject"}))
      ->capture_default_str();
  sub_pixel->add_option("--anchor", pixel_opts->anchor, "Anchor pixel row,col (1-based)")
      ->capture_default_str();
  sub_pixel->add_option("--neighbor", pixel_opts->neighbor, "Conditioning pixel row,col")
      ->capture_default_str();
  sub_pixel->add_option("--pairs", pixel_opts->pairs, "Partner pixels row,col")
      ->expected(-1);
  sub_pixel->add_option("--tolerance", pixel_opts->tolerance,
                        "Conditioning window (<0: half the IQR)")
      ->capture_default_str();
  sub_pixel->add_option("--nearest", pixel_opts->nearest,
                        "Condition on the k images nearest the median instead")
      ->capture_default_str();
  sub_pixel->add_option("--profile", pixel_opts->profile,
                        "Also emit a correlation profile up to this offset")
      ->capture_default_str();
  sub_pixel->add_option("--out-dir", pixel_opts->out_dir, "Directory for per-pair CSVs");
  sub_pixel->callback([pixel_opts, &g] { run_pixel(*pixel_opts, g); });

  auto hc_opts = std::make_shared<HcOpts>();
  auto* sub_hc = app.add_subcommand("hc-check", "Clique-potential factorization check");
  sub_hc->add_option("--d", hc_opts->d, "Chain length")->capture_default_str();
  sub_hc->add_option("--kind", hc_opts->kind, "Potential family")
      ->check(CLI::IsMember({"cosine", "gauss"}))
      ->capture_default_str();
  sub_hc->add_option("--a", hc_opts->a, "Cosine amplitude")->capture_default_str();
  sub_hc->add_option("--kappa", hc_opts->kappa, "Gauss concentration")->capture_default_str();
  sub_hc->add_option("--chain-q", hc_opts->chain_q, "Chain quadrature subintervals")
      ->capture_default_str();
  sub_hc->add_option("--power", hc_opts->power_t, "Path power t")->capture_default_str();
  sub_hc->add_option("--grid", hc_opts->grid, "Reconstruction grid per axis")
      ->capture_default_str();
  sub_hc->add_option("--table-q", hc_opts->table_q, "Potential table nodes per axis")
      ->capture_default_str();
  sub_hc->callback([hc_opts, &g] { run_hc(*hc_opts, g); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
