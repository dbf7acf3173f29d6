#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mrfdens/histogram.hpp"
#include "mrfdens/relunet.hpp"
#include "mrfdens/scheffe.hpp"
#include "mrfdens/synth.hpp"

namespace mrfdens {

using DensityFn = std::function<double(const std::vector<double>&)>;

struct ErrorMode {
  enum class Kind { quadrature, mc };
  Kind kind = Kind::quadrature;
  int q = 64;             // midpoint-rule resolution per axis
  std::size_t k = 10'000;  // MC sample count
  std::uint64_t seed = 1;
};

double l1_error(const DensityFn& estimate, const DensityFn& truth, int d, const ErrorMode& mode,
                std::size_t budget = kDefaultCellBudget);
// L2 norm of the difference, sqrt(integral (estimate - truth)^2).
double l2_error(const DensityFn& estimate, const DensityFn& truth, int d, const ErrorMode& mode,
                std::size_t budget = kDefaultCellBudget);

struct SlopeFit {
  double slope = 0;
  double stderr_slope = 0;
  double intercept = 0;
};

// Ordinary least squares of ln(error) on ln(n); needs >= 3 distinct n and
// positive errors.
SlopeFit fit_slope(const std::vector<std::pair<std::size_t, double>>& points);

struct StructuredFitConfig {
  double C = 8.0;
  double tol = 1e-8;    // relative loss-change stopping rule
  int max_sweeps = 100;
  std::size_t budget = kDefaultCellBudget;
};

// Surrogate-loss ERM under the product constraint: coordinate descent over
// factors, each cell weight updated to its clamped quadratic minimizer.
ProductHistogram fit_structured_hist(int d, const std::vector<std::vector<int>>& cliques,
                                     const SampleMatrix& samples, int b,
                                     const StructuredFitConfig& cfg = {});

// Unconstrained per-cell surrogate minimizer w = count * b^d / n on the full
// grid (the classical histogram).
ProductHistogram fit_full_hist(const SampleMatrix& samples, int b,
                               std::size_t budget = kDefaultCellBudget);

enum class RateEstimator { structured_hist, full_hist, clique_net };

std::string rate_estimator_name(RateEstimator e);
RateEstimator parse_rate_estimator(const std::string& name);

struct RateConfig {
  RateEstimator estimator = RateEstimator::structured_hist;
  int d = 3;
  PairPotential psi = cosine_potential(0.5);  // chain truth
  int chain_quad = 256;
  std::vector<std::size_t> ns;
  std::vector<std::uint64_t> seeds;
  double b_scale = 1.0;  // b = ceil(b_scale * n^{1/(r+2)})
  double C = 8.0;
  int error_q = 64;
  int threads = 0;  // 0 = hardware concurrency
  std::size_t budget = kDefaultCellBudget;
  // clique-net settings
  TrainConfig train;
  double net_F = 2.0;
  int net_hidden = 24;
};

struct RateCell {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  int b = 0;
  bool failed = false;
  std::string message;
  double l1 = 0;
  double l2 = 0;
};

struct RateReport {
  std::string estimator;
  std::string truth;
  int d = 0;
  int r = 0;  // rate-exponent dimension: max clique (structured/net), d (full)
  std::vector<RateCell> cells;          // row-major over (ns, seeds)
  std::vector<std::size_t> ns;
  std::vector<int> b_per_n;
  std::vector<double> median_l1;
  std::vector<double> median_l2;
  SlopeFit slope_l1;
  double predicted_slope = 0;
};

// Full (n, seed) sweep: sample the chain truth, fit, and measure errors.
// Cells run in parallel; failures are recorded and the sweep continues.
RateReport run_rate_experiment(const RateConfig& cfg);

}  // namespace mrfdens
