#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrfdens/graph.hpp"
#include "mrfdens/rng.hpp"

namespace mrfdens {

// Strictly positive pair potential on [0,1]^2.
//   cosine: 1 + a*cos(2*pi*(u-v)), |a| < 1. Full period, so every transfer
//           contraction integrates to exactly 1 and chain Z = 1.
//   gauss:  exp(-kappa*(u-v)^2), kappa > 0; attractive, non-circular.
struct PairPotential {
  enum class Kind { cosine, gauss };
  Kind kind = Kind::cosine;
  double a = 0.5;
  double kappa = 20.0;

  double operator()(double u, double v) const;
  double max_value() const;
  double min_value() const;
  double slope_bound() const;  // sup |d psi / du|
  std::string name() const;
  void validate() const;
};

PairPotential cosine_potential(double a);
PairPotential gauss_potential(double kappa);

// Chain density p(x) = prod_{i<d} psi(x_i, x_{i+1}) / Z on [0,1]^d.
// Z and the backward messages are tabulated on a Simpson grid with q
// subintervals per axis (q even); sampling inverts trapezoid CDFs with
// linear interpolation on the same node grid.
class ChainDensity {
 public:
  ChainDensity(int d, PairPotential psi, int q = 256);

  int dim() const { return d_; }
  int quad_points() const { return q_; }
  const PairPotential& potential() const { return psi_; }
  double z() const { return z_; }

  double eval_unnorm(const std::vector<double>& x) const;
  double eval(const std::vector<double>& x) const;

  // conservative Lipschitz bound for the normalized density
  double lipschitz_bound() const;

  std::vector<double> sample(Rng& rng) const;
  std::vector<std::vector<double>> sample_n(std::size_t n, Rng& rng) const;

 private:
  int d_;
  PairPotential psi_;
  int q_;
  double z_;
  std::vector<std::vector<double>> beta_;  // beta_[i][node], i = 0..d-1
  std::vector<double> nodes_;
  std::vector<double> simpson_w_;
};

// Pairwise MRF over an arbitrary graph (typically a grid power), potentials
// on every edge.
struct GridDensity {
  MrfGraph graph;
  PairPotential psi;

  double eval_unnorm(const std::vector<double>& x) const;
};

inline constexpr std::size_t kDefaultQuadBudget = 50'000'000;

// Z by full tensor-product Simpson summation over (q+1)^d nodes.
double grid_z_full(const GridDensity& g, int q, std::size_t budget = kDefaultQuadBudget);

// Z by sequential vertex elimination; intermediate tables are bounded by the
// budget. Same quadrature rule as grid_z_full.
double grid_z_eliminate(const GridDensity& g, int q, std::size_t budget = kDefaultQuadBudget);

struct GibbsConfig {
  std::uint64_t burnin_updates = 0;  // 0: defaults to 1000 * vertex count
  std::uint64_t thin_updates = 0;    // 0: defaults to vertex count
  int q = 64;                        // conditional grid subintervals
};

// Single-site systematic-scan Gibbs sampler; returns n states of dimension d.
std::vector<std::vector<double>> gibbs_sample(const GridDensity& g, std::size_t n,
                                              const GibbsConfig& cfg, Rng& rng);

// Inverse-CDF draw from node values of an unnormalized 1-D density on the
// uniform node grid over [0,1] (trapezoid CDF, linear interpolation).
double sample_node_density(const std::vector<double>& dens, Rng& rng);

}  // namespace mrfdens
