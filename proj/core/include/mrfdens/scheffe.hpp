#pragma once

#include <cstdint>
#include <vector>

#include "mrfdens/graph.hpp"
#include "mrfdens/histogram.hpp"

namespace mrfdens {

struct SampleMatrix {
  int d = 0;
  std::vector<std::vector<double>> rows;  // each in [0,1]^d
  std::uint64_t seed = 0;                 // provenance only

  std::size_t n() const { return rows.size(); }
  void validate() const;
};

// Sample size that makes the tournament guarantee hold with probability
// 1 - delta/3: ceil(ln(3 M^2 / delta) / (2 eps^2)).
std::size_t required_samples(std::size_t M, double eps, double delta);

struct CandidateSet {
  int d = 0;
  int b = 1;
  std::vector<ProductHistogram> densities;  // all normalized, shared (d, b)

  void validate(double mass_tol = 1e-9, std::size_t budget = kDefaultCellBudget) const;
};

struct SelectionResult {
  int winner_index = 1;          // 1-based, lowest index wins ties
  std::vector<double> deltas;    // Delta_i per candidate
};

// Minimum-distance selection over the pairwise Scheffe sets
// A_ik = {x : p_i(x) > p_k(x)} (exact cell unions):
// Delta_i = max_{k != i} | integral_{A_ik} p_i - mu_n(A_ik) |.
SelectionResult scheffe_select(const CandidateSet& cands, const SampleMatrix& samples,
                               std::size_t budget = kDefaultCellBudget);

struct VnCandidates {
  CandidateSet set;
  bool sampled = false;        // true when enumeration exceeded the budget
  double log_member_count = 0; // log of the full (pre-drop) member count
  std::size_t zero_dropped = 0;
};

// Candidate densities of the clique-structured estimator: one quantized-cover
// factor per maximal clique, zero products dropped, the rest normalized.
// When the full enumeration exceeds enum_budget, sample_count members are
// drawn at random instead; sample_count == 0 forbids the fallback and raises
// ResourceError carrying the exact member count.
VnCandidates build_vn_candidates(const MrfGraph& g, int b, double C, double eps_cover,
                                 std::size_t enum_budget, std::size_t sample_count,
                                 std::uint64_t sample_seed,
                                 std::size_t clique_ceiling = kDefaultCliqueCeiling,
                                 std::size_t cell_budget = kDefaultCellBudget);

struct VnParams {
  std::size_t n = 0;
  int r = 0;             // max clique size
  int b = 0;
  double eps = 0;        // tournament resolution: n^{-1/(r+2)} * ln n
  double delta = 0;      // 1/n
  double C = 0;
  double eps_cover = 0;  // factor quantization step: 1/b
  std::size_t M = 0;
  bool sampled = false;
  std::size_t required_n = 0;
};

struct VnOverrides {
  double C = 2.0;
  double b_scale = 1.0;    // b = ceil(b_scale * n^{1/(r+2)})
  double eps_scale = 1.0;  // eps = eps_scale * n^{-1/(r+2)} * ln n
  std::size_t enum_budget = 200'000;
  std::size_t sample_count = 50'000;
  std::uint64_t seed = 1;
  std::size_t clique_ceiling = kDefaultCliqueCeiling;
  std::size_t cell_budget = kDefaultCellBudget;
};

struct VnEstimate {
  ProductHistogram density;
  int winner_index = 1;
  std::vector<double> deltas;
  VnParams params;
};

// Full pipeline of the clique-structured minimum-distance estimator.
VnEstimate estimate_vn(const MrfGraph& g, const SampleMatrix& samples,
                       const VnOverrides& cfg = {});

}  // namespace mrfdens
