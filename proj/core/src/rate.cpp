#include "mrfdens/rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mrfdens/errors.hpp"
#include "mrfdens/parallel.hpp"
#include "mrfdens/stats.hpp"

namespace mrfdens {

namespace {

double accumulate_error(const DensityFn& estimate, const DensityFn& truth, int d,
                        const ErrorMode& mode, std::size_t budget, bool squared) {
  if (d < 1) throw std::invalid_argument("error metric: d must be >= 1");
  double sum = 0;
  std::size_t count = 0;
  if (mode.kind == ErrorMode::Kind::quadrature) {
    count = refinement_cell_count(d, mode.q, budget);
    for_each_centroid(d, mode.q, budget, [&](const std::vector<double>& x) {
      const double diff = estimate(x) - truth(x);
      sum += squared ? diff * diff : std::abs(diff);
    });
  } else {
    if (mode.k == 0) throw std::invalid_argument("error metric: mc sample count must be positive");
    count = mode.k;
    Rng rng(mode.seed);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < mode.k; ++j) {
      for (double& c : x) c = rng.u01();
      const double diff = estimate(x) - truth(x);
      sum += squared ? diff * diff : std::abs(diff);
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace

double l1_error(const DensityFn& estimate, const DensityFn& truth, int d, const ErrorMode& mode,
                std::size_t budget) {
  return accumulate_error(estimate, truth, d, mode, budget, false);
}

double l2_error(const DensityFn& estimate, const DensityFn& truth, int d, const ErrorMode& mode,
                std::size_t budget) {
  return std::sqrt(accumulate_error(estimate, truth, d, mode, budget, true));
}

SlopeFit fit_slope(const std::vector<std::pair<std::size_t, double>>& points) {
  std::vector<double> xs, ys;
  for (const auto& [n, err] : points) {
    if (n < 1) throw std::invalid_argument("fit_slope: n must be positive");
    if (!(err > 0)) throw std::invalid_argument("fit_slope: errors must be positive");
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(err));
  }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw std::invalid_argument("fit_slope: need >= 3 distinct n values");

  const std::size_t m = xs.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    rss += r * r;
  }
  fit.stderr_slope = m > 2 ? std::sqrt(rss / static_cast<double>(m - 2) / sxx) : 0.0;
  return fit;
}

namespace {

// Flat factor-cell index of refinement cell `flat` (row-major, axis 1
// slowest) restricted to the axes in V.
struct AxisDecoder {
  std::vector<std::size_t> divisor;  // per V entry
  std::size_t b;
  std::size_t cells;

  AxisDecoder(const std::vector<int>& V, int d, int b_) : b(static_cast<std::size_t>(b_)) {
    divisor.reserve(V.size());
    cells = 1;
    for (int id : V) {
      std::size_t div = 1;
      for (int a = id; a < d; ++a) div *= b;
      divisor.push_back(div);
      cells *= b;
    }
  }

  std::size_t operator()(std::size_t flat) const {
    std::size_t idx = 0;
    for (std::size_t j = 0; j < divisor.size(); ++j) idx = idx * b + (flat / divisor[j]) % b;
    return idx;
  }
};

}  // namespace

ProductHistogram fit_structured_hist(int d, const std::vector<std::vector<int>>& cliques,
                                     const SampleMatrix& samples, int b,
                                     const StructuredFitConfig& cfg) {
  samples.validate();
  if (samples.d != d) throw std::invalid_argument("fit_structured_hist: dimension mismatch");
  if (cliques.empty()) throw std::invalid_argument("fit_structured_hist: no cliques");
  const std::size_t n = samples.n();
  if (n == 0) throw std::invalid_argument("fit_structured_hist: no samples");

  ProductHistogram h;
  h.d = d;
  h.b = b;
  for (const auto& V : cliques) h.factors.push_back(make_constant_factor(d, V, b, cfg.C, 1.0));
  h.validate();
  const std::size_t K = h.factors.size();
  refinement_cell_count(d, b, cfg.budget);  // budget check up front
  const double vol = std::pow(static_cast<double>(b), -d);

  // fixed per-sample factor cells
  std::vector<std::vector<std::size_t>> cell_of(K, std::vector<std::size_t>(n));
  for (std::size_t k = 0; k < K; ++k) {
    const auto& f = h.factors[k];
    for (std::size_t i = 0; i < n; ++i)
      cell_of[k][i] = f.flat_index(locate_cell(samples.rows[i], f.V, b));
  }
  std::vector<AxisDecoder> decode;
  decode.reserve(K);
  for (const auto& f : h.factors) decode.emplace_back(f.V, d, b);

  auto loss_now = [&]() {
    double norm = 0;
    for_each_cell(h, cfg.budget, [&](std::size_t, double val) { norm += val * val; });
    norm *= vol;
    double data = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double prod = 1.0;
      for (std::size_t k = 0; k < K; ++k) prod *= h.factors[k].w[cell_of[k][i]];
      data += prod;
    }
    return norm - 2.0 * data / static_cast<double>(n);
  };

  double prev = loss_now();
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    for (std::size_t k = 0; k < K; ++k) {
      auto& fk = h.factors[k];
      std::vector<double> S(fk.w.size(), 0.0), T(fk.w.size(), 0.0);
      ProductHistogram others;
      others.d = d;
      others.b = b;
      for (std::size_t j = 0; j < K; ++j)
        if (j != k) others.factors.push_back(h.factors[j]);
      if (others.factors.empty()) others.factors.push_back(make_constant_factor(d, {1}, b, 1.0, 1.0));
      for_each_cell(others, cfg.budget, [&](std::size_t flat, double val) {
        S[decode[k](flat)] += val * val * vol;
      });
      for (std::size_t i = 0; i < n; ++i) {
        double prod = 1.0;
        for (std::size_t j = 0; j < K; ++j)
          if (j != k) prod *= h.factors[j].w[cell_of[j][i]];
        T[cell_of[k][i]] += prod;
      }
      for (std::size_t c = 0; c < fk.w.size(); ++c) {
        const double t = T[c] / static_cast<double>(n);
        fk.w[c] = S[c] > 0 ? std::clamp(t / S[c], 0.0, cfg.C) : 0.0;
      }
    }
    const double cur = loss_now();
    if (std::abs(prev - cur) <= cfg.tol * std::max(1.0, std::abs(prev))) {
      prev = cur;
      break;
    }
    prev = cur;
  }
  h.cached_mass.reset();
  return h;
}

ProductHistogram fit_full_hist(const SampleMatrix& samples, int b, std::size_t budget) {
  samples.validate();
  const std::size_t n = samples.n();
  if (n == 0) throw std::invalid_argument("fit_full_hist: no samples");
  const int d = samples.d;
  const std::size_t cells = refinement_cell_count(d, b, budget);

  std::vector<int> all(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) all[static_cast<std::size_t>(k)] = k + 1;
  std::vector<double> counts(cells, 0.0);
  HistogramFactor f;
  f.d = d;
  f.V = all;
  f.b = b;
  for (const auto& row : samples.rows)
    counts[f.flat_index(locate_cell(row, all, b))] += 1.0;

  const double scale = std::pow(static_cast<double>(b), d) / static_cast<double>(n);
  double cmax = 1.0;
  for (double& c : counts) {
    c *= scale;
    cmax = std::max(cmax, c);
  }
  f.C = cmax;
  f.w = std::move(counts);
  ProductHistogram h;
  h.d = d;
  h.b = b;
  h.factors.push_back(std::move(f));
  h.validate();
  return h;
}

std::string rate_estimator_name(RateEstimator e) {
  switch (e) {
    case RateEstimator::structured_hist: return "structured-hist";
    case RateEstimator::full_hist: return "full-hist";
    case RateEstimator::clique_net: return "clique-net";
  }
  throw std::invalid_argument("rate_estimator_name: unknown estimator");
}

RateEstimator parse_rate_estimator(const std::string& name) {
  if (name == "structured-hist") return RateEstimator::structured_hist;
  if (name == "full-hist") return RateEstimator::full_hist;
  if (name == "clique-net") return RateEstimator::clique_net;
  throw std::invalid_argument("unknown estimator: " + name);
}

RateReport run_rate_experiment(const RateConfig& cfg) {
  if (cfg.ns.size() < 3) throw std::invalid_argument("run_rate_experiment: need >= 3 n values");
  if (cfg.seeds.empty()) throw std::invalid_argument("run_rate_experiment: need >= 1 seed");
  cfg.psi.validate();

  const ChainDensity truth(cfg.d, cfg.psi, cfg.chain_quad);
  const MrfGraph chain = make_path(cfg.d);
  const CliqueSet cs = maximal_cliques(chain);
  int rc = 0;
  for (const auto& K : cs.cliques) rc = std::max(rc, static_cast<int>(K.size()));

  RateReport rep;
  rep.estimator = rate_estimator_name(cfg.estimator);
  rep.truth = "chain-" + cfg.psi.name() + "-d" + std::to_string(cfg.d);
  rep.d = cfg.d;
  rep.ns = cfg.ns;
  switch (cfg.estimator) {
    case RateEstimator::structured_hist:
      rep.r = rc;
      rep.predicted_slope = -1.0 / (2.0 + rc);
      break;
    case RateEstimator::full_hist:
      rep.r = cfg.d;
      rep.predicted_slope = -1.0 / (2.0 + cfg.d);
      break;
    case RateEstimator::clique_net:
      rep.r = rc;
      rep.predicted_slope = -1.0 / (4.0 + rc);
      break;
  }
  for (std::size_t n : cfg.ns) {
    const double expo = 1.0 / (rep.r + 2.0);
    rep.b_per_n.push_back(std::max(
        1, static_cast<int>(std::ceil(cfg.b_scale * std::pow(static_cast<double>(n), expo)))));
  }

  const std::size_t cells_total = cfg.ns.size() * cfg.seeds.size();
  rep.cells.assign(cells_total, {});
  const DensityFn truth_fn = [&truth](const std::vector<double>& x) { return truth.eval(x); };

  parallel_for(cells_total, static_cast<unsigned>(cfg.threads), [&](std::size_t idx) {
    const std::size_t ni = idx / cfg.seeds.size();
    const std::size_t si = idx % cfg.seeds.size();
    RateCell& cell = rep.cells[idx];
    cell.n = cfg.ns[ni];
    cell.seed = cfg.seeds[si];
    cell.b = rep.b_per_n[ni];
    try {
      Rng rng = Rng(cell.seed).derive(static_cast<std::uint64_t>(cell.n));
      SampleMatrix samples;
      samples.d = cfg.d;
      samples.seed = cell.seed;
      samples.rows = truth.sample_n(cell.n, rng);

      DensityFn est_fn;
      ProductHistogram fitted;
      NetDensity net_fn;
      if (cfg.estimator == RateEstimator::structured_hist) {
        StructuredFitConfig fit_cfg;
        fit_cfg.C = cfg.C;
        fit_cfg.budget = cfg.budget;
        fitted = fit_structured_hist(cfg.d, cs.cliques, samples, cell.b, fit_cfg);
        est_fn = [&fitted](const std::vector<double>& x) { return fitted.eval(x); };
      } else if (cfg.estimator == RateEstimator::full_hist) {
        fitted = fit_full_hist(samples, cell.b, cfg.budget);
        est_fn = [&fitted](const std::vector<double>& x) { return fitted.eval(x); };
      } else {
        std::vector<std::vector<int>> widths;
        for (const auto& K : cs.cliques)
          widths.push_back({static_cast<int>(K.size()), cfg.net_hidden, 1});
        Rng init_rng = rng.derive("net-init");
        CliqueNetModel model = make_clique_model(cfg.d, cs.cliques, widths, cfg.net_F, init_rng);
        TrainConfig tc = cfg.train;
        tc.seed = rng.derive("net-train").next();
        train_sgd(model, samples, tc);
        net_fn = to_density(model, DensityMode::raw);
        est_fn = [&net_fn](const std::vector<double>& x) { return net_fn(x); };
      }
      ErrorMode mode;
      mode.kind = ErrorMode::Kind::quadrature;
      mode.q = cfg.error_q;
      cell.l1 = l1_error(est_fn, truth_fn, cfg.d, mode, cfg.budget);
      cell.l2 = l2_error(est_fn, truth_fn, cfg.d, mode, cfg.budget);
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.message = e.what();
    }
  });

  std::vector<std::pair<std::size_t, double>> slope_points;
  for (std::size_t ni = 0; ni < cfg.ns.size(); ++ni) {
    std::vector<double> l1s, l2s;
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      const RateCell& cell = rep.cells[ni * cfg.seeds.size() + si];
      if (!cell.failed) {
        l1s.push_back(cell.l1);
        l2s.push_back(cell.l2);
      }
    }
    if (l1s.empty()) {
      rep.median_l1.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.median_l2.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    rep.median_l1.push_back(lower_median(l1s));
    rep.median_l2.push_back(lower_median(l2s));
    if (rep.median_l1.back() > 0) slope_points.emplace_back(cfg.ns[ni], rep.median_l1.back());
  }
  rep.slope_l1 = fit_slope(slope_points);
  return rep;
}

}  // namespace mrfdens
