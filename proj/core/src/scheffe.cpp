#include "mrfdens/scheffe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mrfdens/errors.hpp"

namespace mrfdens {

void SampleMatrix::validate() const {
  if (d < 1) throw std::invalid_argument("SampleMatrix: d must be >= 1");
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != d)
      throw std::invalid_argument("SampleMatrix: row width != d");
    for (double x : row)
      if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument("SampleMatrix: coordinate outside [0,1]");
  }
}

std::size_t required_samples(std::size_t M, double eps, double delta) {
  if (M < 1) throw std::invalid_argument("required_samples: M must be >= 1");
  if (!(eps > 0)) throw std::invalid_argument("required_samples: eps must be positive");
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("required_samples: delta in (0,1)");
  const double m = static_cast<double>(M);
  const double v = std::ceil(std::log(3.0 * m * m / delta) / (2.0 * eps * eps));
  if (!(v >= 0) || v > 9.0e18) throw ResourceError("required_samples: count overflows");
  return static_cast<std::size_t>(v);
}

void CandidateSet::validate(double mass_tol, std::size_t budget) const {
  if (densities.empty()) throw std::invalid_argument("CandidateSet: no candidates");
  for (const auto& h : densities) {
    if (h.d != d || h.b != b) throw std::invalid_argument("CandidateSet: mixed (d, b)");
    h.validate();
    const double mass = hist_mass(h, budget);
    if (std::abs(mass - 1.0) > mass_tol)
      throw std::invalid_argument("CandidateSet: candidate mass differs from 1");
  }
}

namespace {

// Row-major flat id of a full-grid cell, axis 1 slowest.
std::size_t flat_cell_id(const CellIndex& A, int b) {
  std::size_t id = 0;
  for (int a : A) id = id * static_cast<std::size_t>(b) + static_cast<std::size_t>(a - 1);
  return id;
}

}  // namespace

SelectionResult scheffe_select(const CandidateSet& cands, const SampleMatrix& samples,
                               std::size_t budget) {
  cands.validate(1e-9, budget);
  samples.validate();
  if (samples.d != cands.d) throw std::invalid_argument("scheffe_select: sample dimension mismatch");
  const std::size_t M = cands.densities.size();
  SelectionResult out;
  out.deltas.assign(M, 0.0);
  if (M == 1) {
    out.winner_index = 1;
    return out;
  }
  const std::size_t n = samples.n();
  if (n == 0) throw std::invalid_argument("scheffe_select: no samples");

  const std::size_t cells = refinement_cell_count(cands.d, cands.b, budget);
  if (cells > budget / M) throw ResourceError("scheffe_select: candidate tables exceed budget");

  std::vector<std::vector<double>> vals(M, std::vector<double>(cells, 0.0));
  for (std::size_t i = 0; i < M; ++i) {
    for_each_cell(cands.densities[i], budget,
                  [&](std::size_t cell, double v) { vals[i][cell] = v; });
  }

  std::vector<int> all(cands.d);
  for (int k = 0; k < cands.d; ++k) all[k] = k + 1;
  std::vector<double> emp(cells, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (const auto& row : samples.rows)
    emp[flat_cell_id(locate_cell(row, all, cands.b), cands.b)] += inv_n;

  const double cell_vol = std::pow(static_cast<double>(cands.b), -cands.d);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t k = i + 1; k < M; ++k) {
      double pi_on_ik = 0, mu_on_ik = 0, pk_on_ki = 0, mu_on_ki = 0;
      for (std::size_t c = 0; c < cells; ++c) {
        const double vi = vals[i][c], vk = vals[k][c];
        if (vi > vk) {
          pi_on_ik += vi * cell_vol;
          mu_on_ik += emp[c];
        } else if (vk > vi) {
          pk_on_ki += vk * cell_vol;
          mu_on_ki += emp[c];
        }
      }
      out.deltas[i] = std::max(out.deltas[i], std::abs(pi_on_ik - mu_on_ik));
      out.deltas[k] = std::max(out.deltas[k], std::abs(pk_on_ki - mu_on_ki));
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < M; ++i)
    if (out.deltas[i] < out.deltas[best]) best = i;
  out.winner_index = static_cast<int>(best) + 1;
  return out;
}

namespace {

// Member `rank` of the cover in enumeration order (last cell fastest).
HistogramFactor cover_member(const QuantizedCover& cov, std::uint64_t rank) {
  HistogramFactor f;
  f.d = cov.d;
  f.V = cov.V;
  f.b = cov.b;
  f.C = cov.C;
  f.w.assign(cov.cells, 0.0);
  for (std::size_t c = cov.cells; c-- > 0;) {
    const std::uint64_t digit = rank % cov.levels;
    rank /= cov.levels;
    f.w[c] = std::min(static_cast<double>(digit) * cov.eps, cov.C);
  }
  return f;
}

}  // namespace

VnCandidates build_vn_candidates(const MrfGraph& g, int b, double C, double eps_cover,
                                 std::size_t enum_budget, std::size_t sample_count,
                                 std::uint64_t sample_seed, std::size_t clique_ceiling,
                                 std::size_t cell_budget) {
  const CliqueSet cs = maximal_cliques(g, clique_ceiling);
  std::vector<QuantizedCover> covers;
  covers.reserve(cs.cliques.size());
  double log_total = 0;
  for (const auto& K : cs.cliques) {
    covers.push_back(quantized_cover(g.d, K, b, C, eps_cover));
    log_total += covers.back().log_count();
  }

  VnCandidates out;
  out.set.d = g.d;
  out.set.b = b;
  out.log_member_count = log_total;

  // Joint member count across factors; overflow tracked explicitly so the
  // exhaustive-only error can still report the exact count when it fits.
  bool overflow = false;
  std::uint64_t total = 1;
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  for (const auto& cov : covers) {
    for (std::size_t c = 0; c < cov.cells && !overflow; ++c) {
      if (cov.levels != 0 && total > kMax / cov.levels) overflow = true;
      else total *= cov.levels;
    }
    if (overflow) break;
  }
  const bool enumerable = !overflow && total <= enum_budget;
  if (!enumerable && sample_count == 0) {
    std::string msg = "build_vn_candidates: enumeration needs ";
    msg += overflow ? "exp(" + std::to_string(log_total) + ")" : std::to_string(total);
    msg += " members, budget is " + std::to_string(enum_budget);
    throw ResourceError(msg);
  }

  auto push_if_positive = [&](std::vector<HistogramFactor> factors) {
    ProductHistogram h;
    h.d = g.d;
    h.b = b;
    h.factors = std::move(factors);
    const double mass = hist_mass(h, cell_budget);
    if (mass <= 0) {
      ++out.zero_dropped;
      return;
    }
    out.set.densities.push_back(normalize(h, cell_budget));
  };

  if (enumerable) {
    out.sampled = false;
    std::vector<std::uint64_t> counts;
    counts.reserve(covers.size());
    for (const auto& cov : covers) counts.push_back(cov.count_exact(enum_budget));
    for (std::uint64_t combo = 0; combo < total; ++combo) {
      std::uint64_t rest = combo;
      std::vector<HistogramFactor> factors(covers.size());
      for (std::size_t f = covers.size(); f-- > 0;) {
        factors[f] = cover_member(covers[f], rest % counts[f]);
        rest /= counts[f];
      }
      push_if_positive(std::move(factors));
    }
  } else {
    out.sampled = true;
    Rng rng(sample_seed);
    const std::size_t attempt_cap = 10 * std::max<std::size_t>(sample_count, 1);
    std::size_t attempts = 0;
    while (out.set.densities.size() < sample_count && attempts < attempt_cap) {
      ++attempts;
      std::vector<HistogramFactor> factors;
      factors.reserve(covers.size());
      for (const auto& cov : covers) factors.push_back(cov.sample(rng));
      push_if_positive(std::move(factors));
    }
  }
  if (out.set.densities.empty())
    throw NumericError("build_vn_candidates: every candidate had zero mass");
  return out;
}

VnEstimate estimate_vn(const MrfGraph& g, const SampleMatrix& samples, const VnOverrides& cfg) {
  samples.validate();
  if (samples.d != g.d) throw std::invalid_argument("estimate_vn: sample dimension mismatch");
  const std::size_t n = samples.n();
  if (n < 2) throw std::invalid_argument("estimate_vn: need at least 2 samples");

  const CliqueSet cs = maximal_cliques(g, cfg.clique_ceiling);
  int r = 0;
  for (const auto& K : cs.cliques) r = std::max(r, static_cast<int>(K.size()));

  const double nd = static_cast<double>(n);
  const double expo = 1.0 / (r + 2.0);
  const int b = std::max(1, static_cast<int>(std::ceil(cfg.b_scale * std::pow(nd, expo))));
  const double eps = cfg.eps_scale * std::pow(nd, -expo) * std::log(nd);
  const double delta = 1.0 / nd;
  const double eps_cover = 1.0 / b;

  VnCandidates cands = build_vn_candidates(g, b, cfg.C, eps_cover, cfg.enum_budget,
                                           cfg.sample_count, cfg.seed, cfg.clique_ceiling,
                                           cfg.cell_budget);
  SelectionResult sel = scheffe_select(cands.set, samples, cfg.cell_budget);

  VnEstimate out;
  out.density = cands.set.densities[static_cast<std::size_t>(sel.winner_index - 1)];
  out.winner_index = sel.winner_index;
  out.deltas = std::move(sel.deltas);
  out.params = {n,     r,        b,
                eps,   delta,    cfg.C,
                eps_cover, cands.set.densities.size(), cands.sampled,
                required_samples(cands.set.densities.size(), eps, delta)};
  return out;
}

}  // namespace mrfdens
