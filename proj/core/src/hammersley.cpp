#include "mrfdens/hammersley.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mrfdens/errors.hpp"

namespace mrfdens {

double DensityOracle::call(const std::vector<double>& x) const {
  double v = eval(x);
  if (!std::isfinite(v) || v <= 0.0) {
    std::ostringstream os;
    os << "density oracle returned " << v << " at (";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
    os << "); the construction requires strictly positive finite values";
    throw NumericError(os.str());
  }
  return v;
}

std::vector<double> gamma_project(const std::vector<double>& x, const std::vector<int>& S,
                                  const std::vector<double>& anchor) {
  std::vector<double> y = anchor;
  if (y.size() != x.size()) throw std::invalid_argument("anchor dimension mismatch");
  for (int v : S) {
    if (v < 1 || static_cast<std::size_t>(v) > x.size())
      throw std::invalid_argument("gamma projection: coordinate out of range");
    y[static_cast<std::size_t>(v) - 1] = x[static_cast<std::size_t>(v) - 1];
  }
  return y;
}

double PotentialTable::eval(const std::vector<double>& u) const {
  std::size_t k = V.size();
  if (u.size() != k) throw std::invalid_argument("potential table arity mismatch");
  // multilinear interpolation over the 2^k surrounding nodes
  std::vector<int> lo(k);
  std::vector<double> frac(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(u[i] >= 0.0 && u[i] <= 1.0)) throw std::invalid_argument("potential table input outside [0,1]");
    double t = u[i] * (q - 1);
    int j = std::min(static_cast<int>(std::floor(t)), q - 2);
    lo[i] = j;
    frac[i] = t - j;
  }
  double acc = 0;
  for (std::size_t corner = 0; corner < (1ULL << k); ++corner) {
    double wgt = 1.0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < k; ++i) {
      int bit = (corner >> i) & 1;
      wgt *= bit ? frac[i] : 1.0 - frac[i];
      idx = idx * static_cast<std::size_t>(q) + static_cast<std::size_t>(lo[i] + bit);
    }
    acc += wgt * values[idx];
  }
  return acc;
}

namespace {

bool is_subset(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// canonical potential exponent: phi_S(x) = sum_{T subset of S} (-1)^{|S|-|T|} ln p(gamma_T(x))
double phi_exponent(const DensityOracle& p, const std::vector<int>& S,
                    const std::vector<double>& x) {
  std::size_t k = S.size();
  double acc = 0;
  std::vector<int> T;
  T.reserve(k);
  for (std::size_t mask = 0; mask < (1ULL << k); ++mask) {
    T.clear();
    for (std::size_t i = 0; i < k; ++i)
      if ((mask >> i) & 1) T.push_back(S[i]);
    double lp = std::log(p.call(gamma_project(x, T, p.anchor)));
    acc += ((k - T.size()) % 2 == 0) ? lp : -lp;
  }
  return acc;
}

}  // namespace

double HcFactorization::potential(std::size_t k, const std::vector<double>& x) const {
  double e = 0;
  for (const auto& S : assigned[k]) e += phi_exponent(oracle, S, x);
  return std::exp(e);
}

double HcFactorization::reconstruct(const std::vector<double>& x) const {
  double p = 1.0;
  for (std::size_t k = 0; k < cliques.cliques.size(); ++k) p *= potential(k, x);
  return p;
}

double HcFactorization::reconstruct_tabulated(const std::vector<double>& x) const {
  double p = 1.0;
  for (std::size_t k = 0; k < tables.size(); ++k) {
    const auto& V = tables[k].V;
    std::vector<double> u(V.size());
    for (std::size_t i = 0; i < V.size(); ++i) u[i] = x[static_cast<std::size_t>(V[i] - 1)];
    p *= tables[k].eval(u);
  }
  return p;
}

HcFactorization hc_potentials(const DensityOracle& p, const CliqueSet& cliques, int q) {
  if (p.d < 1 || !p.eval) throw std::invalid_argument("density oracle is not set up");
  if (q < 2) throw std::invalid_argument("tabulation needs q >= 2 nodes per axis");
  HcFactorization out;
  out.oracle = p;
  if (out.oracle.anchor.empty()) out.oracle.anchor.assign(static_cast<std::size_t>(p.d), 0.0);
  if (out.oracle.anchor.size() != static_cast<std::size_t>(p.d))
    throw std::invalid_argument("anchor dimension mismatch");
  out.cliques = cliques;

  const auto& cl = cliques.cliques;
  out.assigned.resize(cl.size());
  for (std::size_t k = 0; k < cl.size(); ++k) {
    const auto& Vk = cl[k];
    if (Vk.size() > static_cast<std::size_t>(kMaxHcCliqueSize))
      throw ResourceError("clique size exceeds subset-enumeration limit of " +
                          std::to_string(kMaxHcCliqueSize));
    std::size_t m = Vk.size();
    for (std::size_t mask = 0; mask < (1ULL << m); ++mask) {
      std::vector<int> S;
      for (std::size_t i = 0; i < m; ++i)
        if ((mask >> i) & 1) S.push_back(Vk[i]);
      bool taken = false;
      for (std::size_t j = 0; j < k && !taken; ++j) taken = is_subset(S, cl[j]);
      if (!taken) out.assigned[k].push_back(std::move(S));
    }
  }

  // tabulate each potential on the node grid, off-clique coordinates anchored
  out.tables.resize(cl.size());
  for (std::size_t k = 0; k < cl.size(); ++k) {
    PotentialTable& tab = out.tables[k];
    tab.V = cl[k];
    tab.q = q;
    std::size_t total = 1;
    for (std::size_t i = 0; i < tab.V.size(); ++i) total *= static_cast<std::size_t>(q);
    tab.values.resize(total);
    std::vector<int> node(tab.V.size(), 0);
    std::vector<double> x = out.oracle.anchor;
    for (std::size_t flat = 0; flat < total; ++flat) {
      for (std::size_t i = 0; i < tab.V.size(); ++i)
        x[static_cast<std::size_t>(tab.V[i] - 1)] = static_cast<double>(node[i]) / (q - 1);
      tab.values[flat] = out.potential(k, x);
      for (std::size_t i = tab.V.size(); i-- > 0;) {
        if (++node[i] < q) break;
        node[i] = 0;
      }
    }
  }
  return out;
}

}  // namespace mrfdens
