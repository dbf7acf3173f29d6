#pragma once

#include <functional>
#include <vector>

#include "mrfdens/graph.hpp"

namespace mrfdens {

// Strictly positive density (or unnormalized mass function) on [0,1]^d
// queried pointwise. Every call checks positivity and finiteness.
struct DensityOracle {
  int d = 0;
  std::function<double(const std::vector<double>&)> eval;
  std::vector<double> anchor;  // defaults to the origin

  double call(const std::vector<double>& x) const;
};

// gamma_S(x): keeps coordinates in S (1-based), resets the rest to the anchor.
std::vector<double> gamma_project(const std::vector<double>& x, const std::vector<int>& S,
                                  const std::vector<double>& anchor);

// Tabulated clique potential on the uniform node grid {k/(q-1)}^{|V|} with
// multilinear interpolation between nodes.
struct PotentialTable {
  std::vector<int> V;           // sorted, 1-based coordinate ids
  int q = 16;                   // nodes per axis, >= 2
  std::vector<double> values;   // q^{|V|}, row-major, V[0] slowest

  double eval(const std::vector<double>& u) const;  // u in [0,1]^{|V|}
};

struct HcFactorization {
  DensityOracle oracle;
  CliqueSet cliques;
  // assigned[k] = subsets of clique k (as sorted vertex lists) whose
  // canonical potential is folded into psi_k; every subset of a maximal
  // clique appears exactly once across k, the empty set under the first.
  std::vector<std::vector<std::vector<int>>> assigned;
  std::vector<PotentialTable> tables;

  // psi_k evaluated directly through the oracle (no table); reads only the
  // coordinates in clique k.
  double potential(std::size_t k, const std::vector<double>& x) const;
  // product of direct potentials; equals the oracle exactly when the oracle
  // is Markov with respect to the clique structure.
  double reconstruct(const std::vector<double>& x) const;
  double reconstruct_tabulated(const std::vector<double>& x) const;
};

inline constexpr int kMaxHcCliqueSize = 20;

// Constructive Hammersley-Clifford factorization: canonical potentials via
// alternating products of oracle calls at gamma-projected points, grouped by
// maximal clique. q is the tabulation resolution per axis.
HcFactorization hc_potentials(const DensityOracle& p, const CliqueSet& cliques, int q = 16);

}  // namespace mrfdens
