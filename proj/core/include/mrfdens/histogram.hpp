#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mrfdens/errors.hpp"
#include "mrfdens/rng.hpp"

namespace mrfdens {

inline constexpr std::size_t kDefaultCellBudget = 10'000'000;

// 1-based per-axis bin ids, one entry per coordinate in V.
using CellIndex = std::vector<int>;

// Bin id along one axis: min(floor(x*b)+1, b). Cells are half-open with the
// last cell closed, so x = 1 lands in bin b.
int locate_axis(double x, int b);

CellIndex locate_cell(const std::vector<double>& x, const std::vector<int>& V, int b);

// Piecewise-constant factor on the cells of [0,1]^{V}: w_A on
// prod_i [(A_i-1)/b, A_i/b). Weights live in [0, C]. Flat storage is
// row-major over A with V[0] slowest.
struct HistogramFactor {
  int d = 0;                  // ambient dimension
  std::vector<int> V;         // sorted, 1-based coordinate ids
  int b = 1;
  double C = 1.0;
  std::vector<double> w;      // size b^{|V|}

  std::size_t cell_count() const;
  std::size_t flat_index(const CellIndex& A) const;
  double weight_at(const CellIndex& A) const;
  double value_at(const std::vector<double>& x) const;
  void validate() const;      // shape + weight range
};

HistogramFactor make_constant_factor(int d, std::vector<int> V, int b, double C, double value);

// Product of histogram factors over (possibly overlapping) coordinate
// subsets; all factors share the ambient d and resolution b.
struct ProductHistogram {
  int d = 0;
  int b = 1;
  std::vector<HistogramFactor> factors;
  std::optional<double> cached_mass;

  double eval(const std::vector<double>& x) const;
  void validate() const;
};

ProductHistogram uniform_product(int d, int b);

// ---- exact refinement-cell arithmetic ----
//
// The common refinement of all factors is the full grid [b]^d (each factor is
// constant on refinement cells). Visitors stream cells in row-major order.

std::size_t refinement_cell_count(int d, int b, std::size_t budget);

// f(flat_cell_id, value) over all b^d cells.
void for_each_cell(const ProductHistogram& h, std::size_t budget,
                   const std::function<void(std::size_t, double)>& f);

// Visits the q^d cell centroids ((i+0.5)/q per axis) in row-major order;
// the midpoint-rule weight of every point is q^{-d}.
void for_each_centroid(int d, int q, std::size_t budget,
                       const std::function<void(const std::vector<double>&)>& f);

// f(flat_cell_id, value_a, value_b); a and b must share (d, b).
void for_each_cell_pair(const ProductHistogram& a, const ProductHistogram& b, std::size_t budget,
                        const std::function<void(std::size_t, double, double)>& f);

double hist_mass(const ProductHistogram& h, std::size_t budget = kDefaultCellBudget);
double l1_distance(const ProductHistogram& a, const ProductHistogram& b,
                   std::size_t budget = kDefaultCellBudget);
double linf_distance(const ProductHistogram& a, const ProductHistogram& b,
                     std::size_t budget = kDefaultCellBudget);
double l2_norm_sq(const ProductHistogram& h, std::size_t budget = kDefaultCellBudget);
double cross_integral(const ProductHistogram& a, const ProductHistogram& b,
                      std::size_t budget = kDefaultCellBudget);  // integral of a*b

// Population surrogate loss ||f||_2^2 - 2*integral(f*p), all cell-exact.
double surrogate_loss_population(const ProductHistogram& f, const ProductHistogram& p,
                                 std::size_t budget = kDefaultCellBudget);

// Scales one designated factor so the product integrates to 1. The zero
// function maps to the uniform density on the same factor skeleton (weights
// all 1, caps raised to at least 1).
ProductHistogram normalize(const ProductHistogram& h, std::size_t budget = kDefaultCellBudget);

// Draws n points from a normalized product histogram: cell by mass, then
// uniform within the cell.
std::vector<std::vector<double>> sample_histogram(const ProductHistogram& h, std::size_t n, Rng& rng,
                                                  std::size_t budget = kDefaultCellBudget);

// ---- quantized epsilon-covers ----

// log of the covering bound (2C/eps)^(b^cardV); requires C >= 1, 0 < eps <= 1.
double covering_bound_log(int b, int cardV, double C, double eps);

// Cover members quantize every weight to {0, eps, ..., floor(C/eps)*eps}.
struct QuantizedCover {
  int d = 0;
  std::vector<int> V;
  int b = 1;
  double C = 1.0;
  double eps = 1.0;
  std::uint64_t levels = 2;   // floor(C/eps) + 1
  std::size_t cells = 1;      // b^{|V|}

  double log_count() const { return static_cast<double>(cells) * std::log(static_cast<double>(levels)); }

  // levels^cells if it fits in uint64 and <= budget, else ResourceError.
  std::uint64_t count_exact(std::uint64_t budget) const;

  // Enumerates all members in odometer order (last cell fastest).
  void enumerate(std::uint64_t budget, const std::function<void(const HistogramFactor&)>& f) const;

  HistogramFactor sample(Rng& rng) const;

  // Rounding image: nearest grid level per weight; within eps of q everywhere.
  HistogramFactor nearest(const HistogramFactor& q) const;
};

QuantizedCover quantized_cover(int d, std::vector<int> V, int b, double C, double eps);

// ---- Lipschitz approximation ----

struct LipschitzApprox {
  HistogramFactor factor;   // w_A = f(cell centroid)
  double error_bound = 0;   // sqrt(|V|) * L / (2b)
};

// f takes the |V| coordinates of a point in [0,1]^{|V|} and must map into
// [0, C]; L is its Lipschitz constant (Euclidean).
LipschitzApprox approx_lipschitz(const std::function<double(const std::vector<double>&)>& f,
                                 double L, double C, int d, int b, std::vector<int> V);

}  // namespace mrfdens
