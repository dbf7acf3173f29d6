#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mrfdens/histogram.hpp"
#include "mrfdens/rng.hpp"
#include "mrfdens/scheffe.hpp"

namespace mrfdens {

// Feedforward ReLU network W_L sigma_{v_L} W_{L-1} ... sigma_{v_1} W_0 x with
// every entry bounded by 1 in absolute value and the scalar output hard
// clipped to [-F, F] (zero gradient outside).
struct ReluNet {
  std::vector<int> widths;             // w_0, ..., w_{L+1}; widths.back() == 1
  std::vector<std::vector<double>> W;  // W[i]: widths[i+1] x widths[i], row-major
  std::vector<std::vector<double>> v;  // v[i]: shift after W[i], i = 0..L-1
  double F = 1.0;

  int layer_count() const { return static_cast<int>(W.size()); }  // L + 1 matrices
  std::size_t param_count() const;
  void get_params(std::vector<double>& out) const;   // W0, v0, W1, v1, ..., WL
  void set_params(const std::vector<double>& in, std::size_t& pos);
  void clamp_params(double bound);
  void validate() const;

  double forward(const std::vector<double>& x) const;
};

// Network with the given widths and all parameters zero.
ReluNet make_relunet(std::vector<int> widths, double F);

// Product-of-networks model: f(x) = prod_k clip(net_k(x_{K_k})).
struct CliqueNetModel {
  int d = 0;
  std::vector<std::vector<int>> cliques;  // 1-based coordinate ids per net
  std::vector<ReluNet> nets;

  double forward(const std::vector<double>& x) const;
  std::size_t param_count() const;
  std::vector<double> get_params() const;
  void set_params(const std::vector<double>& in);
  void clamp_params(double bound);
  void validate() const;
};

// Architecture schedule of the product-net estimator: eps = n^{-2/(r+4)},
// N = max(1, round(n^{r/(r+4)})), m = max(1, round(((r+1)/(r+4)) log2 n)).
struct ArchitectureSchedule {
  std::size_t n = 2;
  int r = 1;
  double eps = 0;
  int N = 1;
  int m = 1;
  int max_depth = 0;  // override caps; 0 disables
  int max_width = 0;

  // Hidden-layer count 8 + (m+5)(1 + ceil(log2 k)) for input width k, capped.
  int depth(int clique_size) const;
  // (k, 6(k+1)N, ..., 6(k+1)N, 1) with depth(k) hidden layers, width capped.
  std::vector<int> widths(int clique_size) const;
  // Parameter-count upper bound floor(141 (r+2)^{r+3} N (m+6)).
  double sparsity_bound() const;
};

ArchitectureSchedule nn_schedule(std::size_t n, int r, int max_depth = 0, int max_width = 0);

// Builds one net per clique with the given widths and a near-uniform start:
// single-hidden-layer nets get two constant units summing to 1 plus small
// noise, so the initial product is close to the uniform density.
CliqueNetModel make_clique_model(int d, std::vector<std::vector<int>> cliques,
                                 const std::vector<std::vector<int>>& widths_per_net,
                                 double F, Rng& rng);

// Surrogate loss (1/n') sum f(u_j)^2 - (2/n) sum f(x_i) on fixed point sets,
// with the analytic gradient in flat parameter order (nets concatenated).
double loss_and_grad(const CliqueNetModel& model,
                     const std::vector<std::vector<double>>& data_points,
                     const std::vector<std::vector<double>>& norm_points,
                     std::vector<double>& grad);

// Smallest distance of any ReLU or clip pre-activation from its kink over the
// given points; finite-difference checks need this bounded away from 0.
double min_kink_margin(const CliqueNetModel& model,
                       const std::vector<std::vector<double>>& points);

struct NormMode {
  enum class Kind { exact, mc };
  Kind kind = Kind::exact;
  int q = 64;                 // quadrature resolution per axis (exact mode)
  std::size_t nprime = 0;     // MC points; 0 means 4 * n
  std::uint64_t seed = 1;
};

double surrogate_loss(const CliqueNetModel& model, const SampleMatrix& samples,
                      const NormMode& mode, std::size_t budget = kDefaultCellBudget);

struct TrainConfig {
  std::size_t steps = 25'000;
  std::size_t batch = 256;
  std::size_t norm_points = 256;  // fresh uniform points per step
  double lr_start = 0.1;
  double lr_end = 0.008;          // geometric decay across steps
  double clamp_bound = 1.0;
  std::uint64_t seed = 1;
  std::size_t trace_every = 100;  // record the step loss every k steps
};

struct TrainResult {
  std::vector<double> loss_trace;
  std::size_t steps_done = 0;
};

// Projected mini-batch SGD on the surrogate loss; deterministic given the
// seed; aborts with NumericError if the loss turns non-finite.
TrainResult train_sgd(CliqueNetModel& model, const SampleMatrix& samples, const TrainConfig& cfg);

enum class DensityMode { raw, clipped_normalized };

// Density evaluator view of a trained model. raw returns f as-is;
// clipped_normalized returns max(f,0)/Z with Z by midpoint quadrature,
// falling back to the uniform density when Z = 0.
struct NetDensity {
  CliqueNetModel model;
  DensityMode mode = DensityMode::raw;
  double z = 1.0;

  double operator()(const std::vector<double>& x) const;
};

NetDensity to_density(const CliqueNetModel& model, DensityMode mode, int q = 64,
                      std::size_t budget = kDefaultCellBudget);

}  // namespace mrfdens
