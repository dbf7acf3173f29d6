#include "mrfdens/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "mrfdens/errors.hpp"

namespace mrfdens {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double PairPotential::operator()(double u, double v) const {
  switch (kind) {
    case Kind::cosine:
      return 1.0 + a * std::cos(kTwoPi * (u - v));
    case Kind::gauss:
      return std::exp(-kappa * (u - v) * (u - v));
  }
  return 1.0;
}

double PairPotential::max_value() const {
  return kind == Kind::cosine ? 1.0 + std::abs(a) : 1.0;
}

double PairPotential::min_value() const {
  return kind == Kind::cosine ? 1.0 - std::abs(a) : std::exp(-kappa);
}

double PairPotential::slope_bound() const {
  if (kind == Kind::cosine) return kTwoPi * std::abs(a);
  // max of 2*kappa*t*exp(-kappa t^2) at t = 1/sqrt(2 kappa)
  return std::sqrt(2.0 * kappa) * std::exp(-0.5);
}

std::string PairPotential::name() const { return kind == Kind::cosine ? "cosine" : "gauss"; }

void PairPotential::validate() const {
  if (kind == Kind::cosine && !(std::abs(a) < 1.0))
    throw std::invalid_argument("cosine potential needs |a| < 1 for positivity");
  if (kind == Kind::gauss && !(kappa > 0))
    throw std::invalid_argument("gauss potential needs kappa > 0");
}

PairPotential cosine_potential(double a) {
  PairPotential p;
  p.kind = PairPotential::Kind::cosine;
  p.a = a;
  p.validate();
  return p;
}

PairPotential gauss_potential(double kappa) {
  PairPotential p;
  p.kind = PairPotential::Kind::gauss;
  p.kappa = kappa;
  p.validate();
  return p;
}

ChainDensity::ChainDensity(int d, PairPotential psi, int q) : d_(d), psi_(psi), q_(q) {
  if (d < 1) throw std::invalid_argument("chain needs d >= 1");
  psi_.validate();
  if (q < 2 || q % 2 != 0) throw std::invalid_argument("chain quadrature needs even q >= 2");

  nodes_.resize(static_cast<std::size_t>(q) + 1);
  simpson_w_.resize(nodes_.size());
  double h = 1.0 / q;
  for (int i = 0; i <= q; ++i) {
    nodes_[static_cast<std::size_t>(i)] = static_cast<double>(i) / q;
    double w = (i == 0 || i == q) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    simpson_w_[static_cast<std::size_t>(i)] = w * h / 3.0;
  }

  // backward messages: beta_[d-1] = 1; beta_[i](u) = int psi(u,v) beta_[i+1](v) dv
  beta_.assign(static_cast<std::size_t>(d), std::vector<double>(nodes_.size(), 1.0));
  for (int i = d - 2; i >= 0; --i) {
    auto& cur = beta_[static_cast<std::size_t>(i)];
    const auto& nxt = beta_[static_cast<std::size_t>(i) + 1];
    for (std::size_t a = 0; a < nodes_.size(); ++a) {
      double s = 0;
      for (std::size_t bnode = 0; bnode < nodes_.size(); ++bnode)
        s += simpson_w_[bnode] * psi_(nodes_[a], nodes_[bnode]) * nxt[bnode];
      cur[a] = s;
    }
  }
  double z = 0;
  for (std::size_t a = 0; a < nodes_.size(); ++a) z += simpson_w_[a] * beta_[0][a];
  if (!(z > 0) || !std::isfinite(z)) throw NumericError("chain partition function is not positive");
  z_ = z;
}

double ChainDensity::eval_unnorm(const std::vector<double>& x) const {
  if (x.size() != static_cast<std::size_t>(d_)) throw std::invalid_argument("point dimension mismatch");
  double p = 1.0;
  for (int i = 0; i + 1 < d_; ++i)
    p *= psi_(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i) + 1]);
  return p;
}

double ChainDensity::eval(const std::vector<double>& x) const { return eval_unnorm(x) / z_; }

double ChainDensity::lipschitz_bound() const {
  // each coordinate touches at most two potentials; product of the rest is
  // bounded by max_value^(edges-1)
  int edges = d_ - 1;
  if (edges == 0) return 0.0;
  double partial = 2.0 * psi_.slope_bound() * std::pow(psi_.max_value(), edges - 1) / z_;
  return std::sqrt(static_cast<double>(d_)) * partial;
}

double sample_node_density(const std::vector<double>& dens, Rng& rng) {
  std::size_t m = dens.size();
  if (m < 2) throw std::invalid_argument("node density needs at least two nodes");
  double h = 1.0 / static_cast<double>(m - 1);
  // trapezoid CDF at nodes
  double total = 0;
  std::vector<double> cdf(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) {
    total += 0.5 * (dens[i - 1] + dens[i]) * h;
    cdf[i] = total;
  }
  if (!(total > 0) || !std::isfinite(total)) throw NumericError("degenerate conditional density");
  double u = rng.u01() * total;
  std::size_t j = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  if (j == 0) j = 1;
  if (j >= m) j = m - 1;
  double seg = cdf[j] - cdf[j - 1];
  double frac = seg > 0 ? (u - cdf[j - 1]) / seg : 0.0;
  return (static_cast<double>(j - 1) + frac) * h;
}

std::vector<double> ChainDensity::sample(Rng& rng) const {
  std::vector<double> x(static_cast<std::size_t>(d_));
  std::vector<double> dens(nodes_.size());
  // marginal of the first coordinate is proportional to beta_[0]
  x[0] = sample_node_density(beta_[0], rng);
  for (int i = 1; i < d_; ++i) {
    const auto& fut = beta_[static_cast<std::size_t>(i)];
    for (std::size_t a = 0; a < nodes_.size(); ++a)
      dens[a] = psi_(x[static_cast<std::size_t>(i) - 1], nodes_[a]) * fut[a];
    x[static_cast<std::size_t>(i)] = sample_node_density(dens, rng);
  }
  return x;
}

std::vector<std::vector<double>> ChainDensity::sample_n(std::size_t n, Rng& rng) const {
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample(rng));
  return out;
}

double GridDensity::eval_unnorm(const std::vector<double>& x) const {
  if (x.size() != static_cast<std::size_t>(graph.d)) throw std::invalid_argument("point dimension mismatch");
  double p = 1.0;
  for (int u = 1; u <= graph.d; ++u)
    for (int v : graph.adj[static_cast<std::size_t>(u)])
      if (u < v) p *= psi(x[static_cast<std::size_t>(u) - 1], x[static_cast<std::size_t>(v) - 1]);
  return p;
}

namespace {

struct QuadGrid {
  std::vector<double> nodes, w;
  explicit QuadGrid(int q) {
    if (q < 2 || q % 2 != 0) throw std::invalid_argument("quadrature needs even q >= 2");
    nodes.resize(static_cast<std::size_t>(q) + 1);
    w.resize(nodes.size());
    double h = 1.0 / q;
    for (int i = 0; i <= q; ++i) {
      nodes[static_cast<std::size_t>(i)] = static_cast<double>(i) / q;
      double s = (i == 0 || i == q) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      w[static_cast<std::size_t>(i)] = s * h / 3.0;
    }
  }
};

}  // namespace

double grid_z_full(const GridDensity& g, int q, std::size_t budget) {
  g.psi.validate();
  QuadGrid qg(q);
  std::size_t m = qg.nodes.size();
  double logcells = g.graph.d * std::log(static_cast<double>(m));
  if (logcells > std::log(static_cast<double>(budget)))
    throw ResourceError("full-tensor Z needs more than the budgeted node count");

  std::vector<int> idx(static_cast<std::size_t>(g.graph.d), 0);
  std::vector<double> x(static_cast<std::size_t>(g.graph.d), 0.0);
  auto edges = g.graph.edges();
  double z = 0;
  for (;;) {
    double wgt = 1.0;
    for (int i = 0; i < g.graph.d; ++i) {
      x[static_cast<std::size_t>(i)] = qg.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      wgt *= qg.w[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    }
    double p = 1.0;
    for (const auto& [u, v] : edges)
      p *= g.psi(x[static_cast<std::size_t>(u - 1)], x[static_cast<std::size_t>(v - 1)]);
    z += wgt * p;
    int ax = g.graph.d;
    while (ax-- > 0) {
      if (++idx[static_cast<std::size_t>(ax)] < static_cast<int>(m)) break;
      idx[static_cast<std::size_t>(ax)] = 0;
    }
    if (ax < 0) break;
  }
  return z;
}

double grid_z_eliminate(const GridDensity& g, int q, std::size_t budget) {
  g.psi.validate();
  QuadGrid qg(q);
  std::size_t m = qg.nodes.size();

  struct Factor {
    std::vector<int> scope;      // sorted vertex ids
    std::vector<double> table;   // row-major over scope, m nodes per axis
  };
  std::vector<Factor> factors;
  for (const auto& [u, v] : g.graph.edges()) {
    Factor f;
    f.scope = {u, v};
    f.table.resize(m * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        f.table[i * m + j] = g.psi(qg.nodes[i], qg.nodes[j]);
    factors.push_back(std::move(f));
  }

  double z = 1.0;
  auto table_value = [&](const Factor& f, const std::map<int, std::size_t>& assign) {
    std::size_t idx = 0;
    for (int s : f.scope) idx = idx * m + assign.at(s);
    return f.table[idx];
  };

  for (int v = 1; v <= g.graph.d; ++v) {
    std::vector<Factor> involved, rest;
    for (auto& f : factors) {
      if (std::binary_search(f.scope.begin(), f.scope.end(), v))
        involved.push_back(std::move(f));
      else
        rest.push_back(std::move(f));
    }
    factors = std::move(rest);
    if (involved.empty()) {
      z *= 1.0;  // isolated vertex integrates to 1 over [0,1]
      continue;
    }
    std::vector<int> scope;
    for (const auto& f : involved)
      for (int s : f.scope)
        if (s != v) scope.push_back(s);
    std::sort(scope.begin(), scope.end());
    scope.erase(std::unique(scope.begin(), scope.end()), scope.end());

    double logsize = static_cast<double>(scope.size()) * std::log(static_cast<double>(m));
    if (logsize > std::log(static_cast<double>(budget)))
      throw ResourceError("elimination table exceeds node budget");
    std::size_t total = 1;
    for (std::size_t i = 0; i < scope.size(); ++i) total *= m;

    Factor out;
    out.scope = scope;
    out.table.assign(total, 0.0);
    std::vector<std::size_t> idx(scope.size(), 0);
    std::map<int, std::size_t> assign;
    for (std::size_t flat = 0; flat < total; ++flat) {
      assign.clear();
      for (std::size_t i = 0; i < scope.size(); ++i) assign[scope[i]] = idx[i];
      double s = 0;
      for (std::size_t a = 0; a < m; ++a) {
        assign[v] = a;
        double prod = qg.w[a];
        for (const auto& f : involved) prod *= table_value(f, assign);
        s += prod;
      }
      out.table[flat] = s;
      for (std::size_t i = scope.size(); i-- > 0;) {
        if (++idx[i] < m) break;
        idx[i] = 0;
      }
    }
    if (out.scope.empty())
      z *= out.table[0];
    else
      factors.push_back(std::move(out));
  }
  for (const auto& f : factors) {
    if (!f.scope.empty()) throw NumericError("elimination left a non-scalar factor");
    z *= f.table[0];
  }
  return z;
}

std::vector<std::vector<double>> gibbs_sample(const GridDensity& g, std::size_t n,
                                              const GibbsConfig& cfg, Rng& rng) {
  g.psi.validate();
  int d = g.graph.d;
  std::uint64_t burnin = cfg.burnin_updates ? cfg.burnin_updates
                                            : 1000ULL * static_cast<std::uint64_t>(d);
  std::uint64_t thin = cfg.thin_updates ? cfg.thin_updates : static_cast<std::uint64_t>(d);
  int q = cfg.q;
  if (q < 2) throw std::invalid_argument("gibbs grid needs q >= 2");
  std::size_t m = static_cast<std::size_t>(q) + 1;
  std::vector<double> nodes(m);
  for (std::size_t i = 0; i < m; ++i) nodes[i] = static_cast<double>(i) / q;

  std::vector<double> x(static_cast<std::size_t>(d));
  for (auto& xi : x) xi = rng.u01();

  std::vector<double> dens(m);
  int site = 0;
  auto update = [&]() {
    int v = site + 1;
    for (std::size_t a = 0; a < m; ++a) {
      double p = 1.0;
      for (int u : g.graph.adj[static_cast<std::size_t>(v)])
        p *= g.psi(nodes[a], x[static_cast<std::size_t>(u) - 1]);
      dens[a] = p;
    }
    x[static_cast<std::size_t>(site)] = sample_node_density(dens, rng);
    site = (site + 1) % d;
  };

  for (std::uint64_t i = 0; i < burnin; ++i) update();
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::uint64_t i = 0; i < thin; ++i) update();
    out.push_back(x);
  }
  return out;
}

}  // namespace mrfdens
