#include "mrfdens/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mrfdens {

int locate_axis(double x, int b) {
  if (b < 1) throw std::invalid_argument("bin count must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("coordinate outside [0,1]");
  int a = static_cast<int>(std::floor(x * b)) + 1;
  return std::min(a, b);
}

CellIndex locate_cell(const std::vector<double>& x, const std::vector<int>& V, int b) {
  CellIndex A(V.size());
  for (std::size_t i = 0; i < V.size(); ++i) {
    int v = V[i];
    if (v < 1 || static_cast<std::size_t>(v) > x.size())
      throw std::invalid_argument("coordinate id out of range");
    A[i] = locate_axis(x[static_cast<std::size_t>(v) - 1], b);
  }
  return A;
}

namespace {

std::size_t checked_pow(std::size_t base, std::size_t exp, const char* what) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (r > std::numeric_limits<std::size_t>::max() / base)
      throw ResourceError(std::string(what) + ": cell count overflows");
    r *= base;
  }
  return r;
}

}  // namespace

std::size_t HistogramFactor::cell_count() const {
  return checked_pow(static_cast<std::size_t>(b), V.size(), "histogram factor");
}

std::size_t HistogramFactor::flat_index(const CellIndex& A) const {
  if (A.size() != V.size()) throw std::invalid_argument("cell index arity mismatch");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i] < 1 || A[i] > b) throw std::invalid_argument("cell id out of range");
    idx = idx * static_cast<std::size_t>(b) + static_cast<std::size_t>(A[i] - 1);
  }
  return idx;
}

double HistogramFactor::weight_at(const CellIndex& A) const { return w[flat_index(A)]; }

double HistogramFactor::value_at(const std::vector<double>& x) const {
  return w[flat_index(locate_cell(x, V, b))];
}

void HistogramFactor::validate() const {
  if (d < 1) throw std::invalid_argument("factor needs ambient dimension >= 1");
  if (b < 1) throw std::invalid_argument("factor needs b >= 1");
  if (!(C > 0)) throw std::invalid_argument("factor needs C > 0");
  if (V.empty()) throw std::invalid_argument("factor needs a nonempty coordinate set");
  for (std::size_t i = 0; i < V.size(); ++i) {
    if (V[i] < 1 || V[i] > d) throw std::invalid_argument("factor coordinate out of range");
    if (i > 0 && V[i] <= V[i - 1]) throw std::invalid_argument("factor coordinates must be sorted and distinct");
  }
  if (w.size() != cell_count()) throw std::invalid_argument("factor weight table has wrong size");
  for (double x : w)
    if (!(x >= 0.0 && x <= C)) throw std::invalid_argument("factor weight outside [0, C]");
}

HistogramFactor make_constant_factor(int d, std::vector<int> V, int b, double C, double value) {
  HistogramFactor f;
  f.d = d;
  f.V = std::move(V);
  f.b = b;
  f.C = C;
  f.w.assign(f.cell_count(), value);
  f.validate();
  return f;
}

double ProductHistogram::eval(const std::vector<double>& x) const {
  if (x.size() != static_cast<std::size_t>(d)) throw std::invalid_argument("point dimension mismatch");
  double p = 1.0;
  for (const auto& f : factors) p *= f.value_at(x);
  return p;
}

void ProductHistogram::validate() const {
  if (d < 1 || b < 1) throw std::invalid_argument("product histogram needs d >= 1, b >= 1");
  for (const auto& f : factors) {
    f.validate();
    if (f.d != d) throw std::invalid_argument("factor ambient dimension mismatch");
    if (f.b != b) throw std::invalid_argument("all factors must share b");
  }
}

ProductHistogram uniform_product(int d, int b) {
  ProductHistogram h;
  h.d = d;
  h.b = b;
  h.factors.push_back(make_constant_factor(d, {1}, b, 1.0, 1.0));
  h.cached_mass = 1.0;
  return h;
}

std::size_t refinement_cell_count(int d, int b, std::size_t budget) {
  std::size_t total = checked_pow(static_cast<std::size_t>(b), static_cast<std::size_t>(d), "refinement");
  if (total > budget)
    throw ResourceError("refinement needs " + std::to_string(total) + " cells, budget is " +
                        std::to_string(budget));
  return total;
}

namespace {

// Streams values of one or two product histograms over the full refinement
// grid. Each factor keeps a flat index updated incrementally as the odometer
// over [b]^d advances (last axis fastest).
struct CellWalker {
  int d, b;
  const ProductHistogram* A;
  const ProductHistogram* B;

  struct FactorRef {
    const std::vector<double>* w;
    std::vector<std::size_t> stride;  // per global axis; 0 when absent
    std::size_t idx = 0;
    bool first;                       // belongs to A
  };

  template <class F>
  void run(std::size_t total, F&& visit) {
    std::vector<FactorRef> refs;
    auto add = [&](const ProductHistogram& h, bool first) {
      for (const auto& f : h.factors) {
        FactorRef r;
        r.w = &f.w;
        r.first = first;
        r.stride.assign(static_cast<std::size_t>(d), 0);
        std::size_t s = 1;
        for (std::size_t i = f.V.size(); i-- > 0;) {
          r.stride[static_cast<std::size_t>(f.V[i] - 1)] = s;
          s *= static_cast<std::size_t>(b);
        }
        refs.push_back(std::move(r));
      }
    };
    add(*A, true);
    if (B) add(*B, false);

    std::vector<int> cell(static_cast<std::size_t>(d), 0);  // 0-based odometer
    for (std::size_t flat = 0; flat < total; ++flat) {
      double va = 1.0, vb = 1.0;
      for (const auto& r : refs) {
        double v = (*r.w)[r.idx];
        if (r.first)
          va *= v;
        else
          vb *= v;
      }
      visit(flat, va, vb);
      // advance odometer
      for (int ax = d; ax-- > 0;) {
        std::size_t axi = static_cast<std::size_t>(ax);
        if (++cell[axi] < b) {
          for (auto& r : refs) r.idx += r.stride[axi];
          break;
        }
        cell[axi] = 0;
        for (auto& r : refs) r.idx -= r.stride[axi] * static_cast<std::size_t>(b - 1);
      }
    }
  }
};

}  // namespace

void for_each_cell(const ProductHistogram& h, std::size_t budget,
                   const std::function<void(std::size_t, double)>& f) {
  h.validate();
  std::size_t total = refinement_cell_count(h.d, h.b, budget);
  CellWalker w{h.d, h.b, &h, nullptr};
  w.run(total, [&](std::size_t i, double a, double) { f(i, a); });
}

void for_each_cell_pair(const ProductHistogram& a, const ProductHistogram& b, std::size_t budget,
                        const std::function<void(std::size_t, double, double)>& f) {
  a.validate();
  b.validate();
  if (a.d != b.d || a.b != b.b)
    throw std::invalid_argument("refinement requires matching (d, b)");
  std::size_t total = refinement_cell_count(a.d, a.b, budget);
  CellWalker w{a.d, a.b, &a, &b};
  w.run(total, f);
}

void for_each_centroid(int d, int q, std::size_t budget,
                       const std::function<void(const std::vector<double>&)>& f) {
  std::size_t total = refinement_cell_count(d, q, budget);
  std::vector<int> cell(static_cast<std::size_t>(d), 0);
  std::vector<double> x(static_cast<std::size_t>(d));
  const double inv = 1.0 / q;
  for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) x[i] = 0.5 * inv;
  for (std::size_t flat = 0; flat < total; ++flat) {
    f(x);
    for (int ax = d; ax-- > 0;) {
      std::size_t axi = static_cast<std::size_t>(ax);
      if (++cell[axi] < q) {
        x[axi] = (cell[axi] + 0.5) * inv;
        break;
      }
      cell[axi] = 0;
      x[axi] = 0.5 * inv;
    }
  }
}

double hist_mass(const ProductHistogram& h, std::size_t budget) {
  if (h.cached_mass) return *h.cached_mass;
  double vol = std::pow(static_cast<double>(h.b), -h.d);
  double s = 0;
  for_each_cell(h, budget, [&](std::size_t, double v) { s += v; });
  return s * vol;
}

double l1_distance(const ProductHistogram& a, const ProductHistogram& b, std::size_t budget) {
  double vol = std::pow(static_cast<double>(a.b), -a.d);
  double s = 0;
  for_each_cell_pair(a, b, budget, [&](std::size_t, double va, double vb) { s += std::abs(va - vb); });
  return s * vol;
}

double linf_distance(const ProductHistogram& a, const ProductHistogram& b, std::size_t budget) {
  double m = 0;
  for_each_cell_pair(a, b, budget, [&](std::size_t, double va, double vb) { m = std::max(m, std::abs(va - vb)); });
  return m;
}

double l2_norm_sq(const ProductHistogram& h, std::size_t budget) {
  double vol = std::pow(static_cast<double>(h.b), -h.d);
  double s = 0;
  for_each_cell(h, budget, [&](std::size_t, double v) { s += v * v; });
  return s * vol;
}

double cross_integral(const ProductHistogram& a, const ProductHistogram& b, std::size_t budget) {
  double vol = std::pow(static_cast<double>(a.b), -a.d);
  double s = 0;
  for_each_cell_pair(a, b, budget, [&](std::size_t, double va, double vb) { s += va * vb; });
  return s * vol;
}

double surrogate_loss_population(const ProductHistogram& f, const ProductHistogram& p,
                                 std::size_t budget) {
  return l2_norm_sq(f, budget) - 2.0 * cross_integral(f, p, budget);
}

ProductHistogram normalize(const ProductHistogram& h, std::size_t budget) {
  ProductHistogram out = h;
  out.cached_mass.reset();
  double mass = hist_mass(out, budget);
  if (!(mass >= 0) || !std::isfinite(mass)) throw NumericError("histogram mass is not finite");
  if (mass == 0.0) {
    // N-bar(0): uniform density on the same skeleton
    for (auto& f : out.factors) {
      f.C = std::max(f.C, 1.0);
      std::fill(f.w.begin(), f.w.end(), 1.0);
    }
    if (out.factors.empty()) out.factors.push_back(make_constant_factor(out.d, {1}, out.b, 1.0, 1.0));
    out.cached_mass = 1.0;
    return out;
  }
  auto& f0 = out.factors.front();
  double scale = 1.0 / mass;
  for (double& x : f0.w) x *= scale;
  f0.C = std::max(f0.C, f0.C * scale);
  out.cached_mass = 1.0;
  return out;
}

std::vector<std::vector<double>> sample_histogram(const ProductHistogram& h, std::size_t n, Rng& rng,
                                                  std::size_t budget) {
  std::size_t total = refinement_cell_count(h.d, h.b, budget);
  std::vector<double> cdf(total);
  double acc = 0;
  for_each_cell(h, budget, [&](std::size_t i, double v) {
    if (v < 0) throw NumericError("negative cell value while sampling");
    acc += v;
    cdf[i] = acc;
  });
  if (acc <= 0) throw NumericError("cannot sample from the zero histogram");
  for (double& c : cdf) c /= acc;

  std::vector<std::vector<double>> out(n, std::vector<double>(static_cast<std::size_t>(h.d)));
  for (std::size_t k = 0; k < n; ++k) {
    double u = rng.u01();
    std::size_t cell = static_cast<std::size_t>(
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (cell >= total) cell = total - 1;
    // decode row-major flat id, last axis fastest
    std::size_t rem = cell;
    for (int ax = h.d; ax-- > 0;) {
      std::size_t a = rem % static_cast<std::size_t>(h.b);
      rem /= static_cast<std::size_t>(h.b);
      out[k][static_cast<std::size_t>(ax)] = (static_cast<double>(a) + rng.u01()) / h.b;
    }
  }
  return out;
}

double covering_bound_log(int b, int cardV, double C, double eps) {
  if (b < 1 || cardV < 1) throw std::invalid_argument("covering bound needs b >= 1, |V| >= 1");
  if (!(C >= 1.0)) throw std::invalid_argument("covering bound needs C >= 1");
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("covering bound needs 0 < eps <= 1");
  return std::pow(static_cast<double>(b), cardV) * std::log(2.0 * C / eps);
}

QuantizedCover quantized_cover(int d, std::vector<int> V, int b, double C, double eps) {
  if (!(C >= 1.0)) throw std::invalid_argument("quantized cover needs C >= 1");
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("quantized cover needs 0 < eps <= 1");
  QuantizedCover qc;
  qc.d = d;
  qc.V = std::move(V);
  qc.b = b;
  qc.C = C;
  qc.eps = eps;
  qc.levels = static_cast<std::uint64_t>(std::floor(C / eps + 1e-9)) + 1;
  HistogramFactor probe = make_constant_factor(d, qc.V, b, C, 0.0);
  qc.cells = probe.cell_count();
  return qc;
}

std::uint64_t QuantizedCover::count_exact(std::uint64_t budget) const {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < cells; ++i) {
    if (r > budget / levels)
      throw ResourceError("cover cardinality exceeds budget " + std::to_string(budget));
    r *= levels;
  }
  return r;
}

void QuantizedCover::enumerate(std::uint64_t budget,
                               const std::function<void(const HistogramFactor&)>& f) const {
  count_exact(budget);
  HistogramFactor cur = make_constant_factor(d, V, b, C, 0.0);
  std::vector<std::uint64_t> level(cells, 0);
  for (;;) {
    f(cur);
    std::size_t ax = cells;
    while (ax-- > 0) {
      if (++level[ax] < levels) {
        cur.w[ax] = std::min(static_cast<double>(level[ax]) * eps, C);
        break;
      }
      level[ax] = 0;
      cur.w[ax] = 0.0;
    }
    if (ax == static_cast<std::size_t>(-1)) break;
  }
}

HistogramFactor QuantizedCover::sample(Rng& rng) const {
  HistogramFactor f = make_constant_factor(d, V, b, C, 0.0);
  for (auto& x : f.w)
    x = std::min(static_cast<double>(rng.index(static_cast<std::size_t>(levels))) * eps, C);
  return f;
}

HistogramFactor QuantizedCover::nearest(const HistogramFactor& q) const {
  HistogramFactor f = q;
  for (auto& x : f.w) {
    double k = std::round(x / eps);
    k = std::min(k, static_cast<double>(levels - 1));
    x = std::min(k * eps, C);
  }
  return f;
}

LipschitzApprox approx_lipschitz(const std::function<double(const std::vector<double>&)>& f,
                                 double L, double C, int d, int b, std::vector<int> V) {
  if (!(L >= 0)) throw std::invalid_argument("Lipschitz constant must be nonnegative");
  HistogramFactor fac = make_constant_factor(d, std::move(V), b, C, 0.0);
  std::size_t k = fac.V.size();
  std::vector<int> cell(k, 0);  // 0-based odometer
  std::vector<double> centroid(k);
  for (std::size_t flat = 0; flat < fac.w.size(); ++flat) {
    for (std::size_t i = 0; i < k; ++i) centroid[i] = (cell[i] + 0.5) / b;
    double v = f(centroid);
    if (!(v >= 0.0 && v <= C))
      throw std::invalid_argument("target function leaves [0, C] at a cell centroid");
    fac.w[flat] = v;
    for (std::size_t i = k; i-- > 0;) {
      if (++cell[i] < b) break;
      cell[i] = 0;
    }
  }
  double bound = std::sqrt(static_cast<double>(k)) * L / (2.0 * b);
  return {std::move(fac), bound};
}

}  // namespace mrfdens
