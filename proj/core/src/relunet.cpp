#include "mrfdens/relunet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mrfdens/errors.hpp"

namespace mrfdens {

namespace {

std::size_t net_param_count(const std::vector<int>& widths) {
  std::size_t total = 0;
  const std::size_t mats = widths.size() - 1;
  for (std::size_t i = 0; i < mats; ++i) {
    total += static_cast<std::size_t>(widths[i + 1]) * static_cast<std::size_t>(widths[i]);
    if (i + 1 < mats) total += static_cast<std::size_t>(widths[i + 1]);
  }
  return total;
}

}  // namespace

std::size_t ReluNet::param_count() const { return net_param_count(widths); }

void ReluNet::get_params(std::vector<double>& out) const {
  const std::size_t mats = W.size();
  for (std::size_t i = 0; i < mats; ++i) {
    out.insert(out.end(), W[i].begin(), W[i].end());
    if (i + 1 < mats) out.insert(out.end(), v[i].begin(), v[i].end());
  }
}

void ReluNet::set_params(const std::vector<double>& in, std::size_t& pos) {
  const std::size_t mats = W.size();
  for (std::size_t i = 0; i < mats; ++i) {
    for (double& x : W[i]) x = in.at(pos++);
    if (i + 1 < mats)
      for (double& x : v[i]) x = in.at(pos++);
  }
}

void ReluNet::clamp_params(double bound) {
  for (auto& m : W)
    for (double& x : m) x = std::clamp(x, -bound, bound);
  for (auto& s : v)
    for (double& x : s) x = std::clamp(x, -bound, bound);
}

void ReluNet::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("ReluNet: need input and output widths");
  if (widths.back() != 1) throw std::invalid_argument("ReluNet: output width must be 1");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("ReluNet: widths must be positive");
  const std::size_t mats = widths.size() - 1;
  if (W.size() != mats || v.size() != mats - 1)
    throw std::invalid_argument("ReluNet: layer count mismatch");
  for (std::size_t i = 0; i < mats; ++i) {
    if (W[i].size() != static_cast<std::size_t>(widths[i + 1]) * static_cast<std::size_t>(widths[i]))
      throw std::invalid_argument("ReluNet: weight matrix shape mismatch");
    if (i + 1 < mats && v[i].size() != static_cast<std::size_t>(widths[i + 1]))
      throw std::invalid_argument("ReluNet: shift vector shape mismatch");
  }
  for (const auto& m : W)
    for (double x : m)
      if (!(std::abs(x) <= 1.0)) throw std::invalid_argument("ReluNet: |weight| > 1");
  for (const auto& s : v)
    for (double x : s)
      if (!(std::abs(x) <= 1.0)) throw std::invalid_argument("ReluNet: |shift| > 1");
  if (!(F > 0)) throw std::invalid_argument("ReluNet: F must be positive");
}

ReluNet make_relunet(std::vector<int> widths, double F) {
  if (widths.size() < 2) throw std::invalid_argument("ReluNet: need input and output widths");
  ReluNet net;
  net.widths = std::move(widths);
  net.F = F;
  const std::size_t mats = net.widths.size() - 1;
  net.W.resize(mats);
  net.v.resize(mats - 1);
  for (std::size_t i = 0; i < mats; ++i) {
    net.W[i].assign(
        static_cast<std::size_t>(net.widths[i + 1]) * static_cast<std::size_t>(net.widths[i]), 0.0);
    if (i + 1 < mats) net.v[i].assign(static_cast<std::size_t>(net.widths[i + 1]), 0.0);
  }
  net.validate();
  return net;
}

namespace {

struct NetTrace {
  std::vector<std::vector<double>> h;   // h[0] = input, h[i] post-ReLU
  std::vector<std::vector<char>> gate;  // per shift layer
  double raw = 0;
  bool clip_pass = true;
  double y = 0;
};

void net_forward(const ReluNet& net, const std::vector<double>& in, NetTrace& tr) {
  if (in.size() != static_cast<std::size_t>(net.widths.front()))
    throw std::invalid_argument("ReluNet: input width mismatch");
  const std::size_t mats = net.W.size();
  tr.h.assign(mats, {});
  tr.gate.assign(mats - 1, {});
  tr.h[0] = in;
  for (std::size_t i = 0; i + 1 < mats; ++i) {
    const int rows = net.widths[i + 1], cols = net.widths[i];
    std::vector<double>& out = tr.h[i + 1];
    out.assign(static_cast<std::size_t>(rows), 0.0);
    tr.gate[i].assign(static_cast<std::size_t>(rows), 0);
    const std::vector<double>& hin = tr.h[i];
    for (int r = 0; r < rows; ++r) {
      double a = -net.v[i][static_cast<std::size_t>(r)];
      const double* wrow = net.W[i].data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) a += wrow[c] * hin[static_cast<std::size_t>(c)];
      if (a > 0) {
        out[static_cast<std::size_t>(r)] = a;
        tr.gate[i][static_cast<std::size_t>(r)] = 1;
      }
    }
  }
  const std::vector<double>& hl = tr.h[mats - 1];
  double raw = 0;
  for (std::size_t c = 0; c < hl.size(); ++c) raw += net.W[mats - 1][c] * hl[c];
  tr.raw = raw;
  tr.clip_pass = raw >= -net.F && raw <= net.F;
  tr.y = std::clamp(raw, -net.F, net.F);
}

// Adds g * d(net output)/d(theta) into the flat gradient slice of this net.
void net_backward(const ReluNet& net, const NetTrace& tr, double g, double* grad) {
  if (!tr.clip_pass) return;
  const std::size_t mats = net.W.size();
  std::vector<std::size_t> off_w(mats), off_v(mats);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < mats; ++i) {
    off_w[i] = pos;
    pos += static_cast<std::size_t>(net.widths[i + 1]) * static_cast<std::size_t>(net.widths[i]);
    if (i + 1 < mats) {
      off_v[i] = pos;
      pos += static_cast<std::size_t>(net.widths[i + 1]);
    }
  }

  const std::vector<double>& hl = tr.h[mats - 1];
  std::vector<double> gh(hl.size());
  for (std::size_t c = 0; c < hl.size(); ++c) {
    grad[off_w[mats - 1] + c] += g * hl[c];
    gh[c] = net.W[mats - 1][c] * g;
  }
  for (std::size_t i = mats - 1; i-- > 0;) {
    const int rows = net.widths[i + 1], cols = net.widths[i];
    const std::vector<double>& hin = tr.h[i];
    std::vector<double> gh_next(static_cast<std::size_t>(cols), 0.0);
    for (int r = 0; r < rows; ++r) {
      if (!tr.gate[i][static_cast<std::size_t>(r)]) continue;
      const double delta = gh[static_cast<std::size_t>(r)];
      if (delta == 0) continue;
      grad[off_v[i] + static_cast<std::size_t>(r)] -= delta;
      double* gw = grad + off_w[i] + static_cast<std::size_t>(r) * cols;
      const double* wrow = net.W[i].data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) {
        gw[c] += delta * hin[static_cast<std::size_t>(c)];
        gh_next[static_cast<std::size_t>(c)] += wrow[c] * delta;
      }
    }
    gh.swap(gh_next);
  }
}

}  // namespace

double ReluNet::forward(const std::vector<double>& x) const {
  NetTrace tr;
  net_forward(*this, x, tr);
  return tr.y;
}

double CliqueNetModel::forward(const std::vector<double>& x) const {
  if (x.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("CliqueNetModel: input dimension mismatch");
  double prod = 1.0;
  std::vector<double> in;
  NetTrace tr;
  for (std::size_t k = 0; k < nets.size(); ++k) {
    in.clear();
    for (int id : cliques[k]) in.push_back(x[static_cast<std::size_t>(id - 1)]);
    net_forward(nets[k], in, tr);
    prod *= tr.y;
  }
  return prod;
}

std::size_t CliqueNetModel::param_count() const {
  std::size_t total = 0;
  for (const auto& net : nets) total += net.param_count();
  return total;
}

std::vector<double> CliqueNetModel::get_params() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto& net : nets) net.get_params(out);
  return out;
}

void CliqueNetModel::set_params(const std::vector<double>& in) {
  if (in.size() != param_count())
    throw std::invalid_argument("CliqueNetModel: parameter vector size mismatch");
  std::size_t pos = 0;
  for (auto& net : nets) net.set_params(in, pos);
}

void CliqueNetModel::clamp_params(double bound) {
  for (auto& net : nets) net.clamp_params(bound);
}

void CliqueNetModel::validate() const {
  if (d < 1) throw std::invalid_argument("CliqueNetModel: d must be >= 1");
  if (nets.size() != cliques.size() || nets.empty())
    throw std::invalid_argument("CliqueNetModel: one net per clique required");
  for (std::size_t k = 0; k < nets.size(); ++k) {
    nets[k].validate();
    const auto& K = cliques[k];
    if (K.empty() || static_cast<int>(K.size()) != nets[k].widths.front())
      throw std::invalid_argument("CliqueNetModel: net input width != clique size");
    for (std::size_t j = 0; j < K.size(); ++j) {
      if (K[j] < 1 || K[j] > d) throw std::invalid_argument("CliqueNetModel: coordinate out of range");
      if (j > 0 && K[j] <= K[j - 1])
        throw std::invalid_argument("CliqueNetModel: clique ids must be sorted and distinct");
    }
  }
}

int ArchitectureSchedule::depth(int clique_size) const {
  if (clique_size < 1) throw std::invalid_argument("schedule: clique size must be >= 1");
  int log2k = 0;
  while ((1 << log2k) < clique_size) ++log2k;  // ceil(log2 k), 0 for k = 1
  int depth = 8 + (m + 5) * (1 + log2k);
  if (max_depth > 0) depth = std::min(depth, max_depth);
  return depth;
}

std::vector<int> ArchitectureSchedule::widths(int clique_size) const {
  int hidden = 6 * (clique_size + 1) * N;
  if (max_width > 0) hidden = std::min(hidden, max_width);
  std::vector<int> out;
  out.push_back(clique_size);
  const int layers = depth(clique_size);
  for (int i = 0; i < layers; ++i) out.push_back(hidden);
  out.push_back(1);
  return out;
}

double ArchitectureSchedule::sparsity_bound() const {
  return std::floor(141.0 * std::pow(static_cast<double>(r + 2), r + 3) * N * (m + 6));
}

ArchitectureSchedule nn_schedule(std::size_t n, int r, int max_depth, int max_width) {
  if (n < 2) throw std::invalid_argument("nn_schedule: n must be >= 2");
  if (r < 1) throw std::invalid_argument("nn_schedule: r must be >= 1");
  ArchitectureSchedule s;
  s.n = n;
  s.r = r;
  s.max_depth = max_depth;
  s.max_width = max_width;
  const double nd = static_cast<double>(n);
  s.eps = std::pow(nd, -2.0 / (r + 4));
  s.N = std::max(1, static_cast<int>(std::llround(std::pow(nd, static_cast<double>(r) / (r + 4)))));
  s.m = std::max(1, static_cast<int>(std::llround((r + 1.0) / (r + 4.0) * std::log2(nd))));
  return s;
}

CliqueNetModel make_clique_model(int d, std::vector<std::vector<int>> cliques,
                                 const std::vector<std::vector<int>>& widths_per_net,
                                 double F, Rng& rng) {
  if (cliques.size() != widths_per_net.size())
    throw std::invalid_argument("make_clique_model: one widths vector per clique required");
  CliqueNetModel model;
  model.d = d;
  model.cliques = std::move(cliques);
  for (std::size_t k = 0; k < widths_per_net.size(); ++k) {
    ReluNet net = make_relunet(widths_per_net[k], F);
    const std::size_t mats = net.W.size();
    const bool one_hidden = mats == 2;
    for (std::size_t i = 0; i < mats; ++i) {
      const bool first = i == 0, last = i + 1 == mats;
      double lo = -0.1, hi = 0.1;
      if (one_hidden && first) lo = -0.3, hi = 0.3;
      if (one_hidden && last) lo = -0.05, hi = 0.05;
      for (double& x : net.W[i]) x = rng.uniform(lo, hi);
      if (!last)
        for (double& x : net.v[i]) x = one_hidden ? rng.uniform(-0.1, 0.4) : rng.uniform(0.0, 0.1);
    }
    if (one_hidden && net.widths[1] >= 2) {
      // Two constant hidden units relu(0.5) with unit output weight: the net
      // starts at 1 + noise, so the product model starts near uniform.
      const int cols = net.widths[0];
      for (int u = 0; u < 2; ++u) {
        for (int c = 0; c < cols; ++c) net.W[0][static_cast<std::size_t>(u) * cols + c] = 0.0;
        net.v[0][static_cast<std::size_t>(u)] = -0.5;
        net.W[1][static_cast<std::size_t>(u)] = 1.0;
      }
    }
    model.nets.push_back(std::move(net));
  }
  model.validate();
  return model;
}

namespace {

struct ForwardWork {
  std::vector<NetTrace> traces;
  std::vector<double> in;
};

double model_forward_traced(const CliqueNetModel& model, const std::vector<double>& x,
                            ForwardWork& ws) {
  ws.traces.resize(model.nets.size());
  double prod = 1.0;
  for (std::size_t k = 0; k < model.nets.size(); ++k) {
    ws.in.clear();
    for (int id : model.cliques[k]) ws.in.push_back(x[static_cast<std::size_t>(id - 1)]);
    net_forward(model.nets[k], ws.in, ws.traces[k]);
    prod *= ws.traces[k].y;
  }
  return prod;
}

// Adds coef * d f(x) / d theta for the traced point into the flat gradient.
void model_backward_traced(const CliqueNetModel& model, const ForwardWork& ws, double coef,
                           std::vector<double>& grad) {
  const std::size_t K = model.nets.size();
  std::vector<double> prefix(K + 1, 1.0), suffix(K + 1, 1.0);
  for (std::size_t k = 0; k < K; ++k) prefix[k + 1] = prefix[k] * ws.traces[k].y;
  for (std::size_t k = K; k-- > 0;) suffix[k] = suffix[k + 1] * ws.traces[k].y;
  std::size_t off = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const double g = coef * prefix[k] * suffix[k + 1];
    if (g != 0) net_backward(model.nets[k], ws.traces[k], g, grad.data() + off);
    off += model.nets[k].param_count();
  }
}

}  // namespace

double loss_and_grad(const CliqueNetModel& model,
                     const std::vector<std::vector<double>>& data_points,
                     const std::vector<std::vector<double>>& norm_points,
                     std::vector<double>& grad) {
  grad.assign(model.param_count(), 0.0);
  ForwardWork ws;
  double loss = 0;
  if (!norm_points.empty()) {
    const double inv = 1.0 / static_cast<double>(norm_points.size());
    for (const auto& u : norm_points) {
      const double f = model_forward_traced(model, u, ws);
      loss += f * f * inv;
      model_backward_traced(model, ws, 2.0 * f * inv, grad);
    }
  }
  if (!data_points.empty()) {
    const double coef = 2.0 / static_cast<double>(data_points.size());
    for (const auto& x : data_points) {
      loss -= coef * model_forward_traced(model, x, ws);
      model_backward_traced(model, ws, -coef, grad);
    }
  }
  return loss;
}

double min_kink_margin(const CliqueNetModel& model,
                       const std::vector<std::vector<double>>& points) {
  double margin = std::numeric_limits<double>::infinity();
  ForwardWork ws;
  for (const auto& x : points) {
    model_forward_traced(model, x, ws);
    for (std::size_t k = 0; k < model.nets.size(); ++k) {
      const NetTrace& tr = ws.traces[k];
      const ReluNet& net = model.nets[k];
      for (std::size_t i = 0; i + 1 < net.W.size(); ++i) {
        const int rows = net.widths[i + 1], cols = net.widths[i];
        for (int r = 0; r < rows; ++r) {
          double a = -net.v[i][static_cast<std::size_t>(r)];
          const double* wrow = net.W[i].data() + static_cast<std::size_t>(r) * cols;
          for (int c = 0; c < cols; ++c) a += wrow[c] * tr.h[i][static_cast<std::size_t>(c)];
          margin = std::min(margin, std::abs(a));
        }
      }
      margin = std::min(margin, std::abs(std::abs(tr.raw) - net.F));
    }
  }
  return margin;
}

double surrogate_loss(const CliqueNetModel& model, const SampleMatrix& samples,
                      const NormMode& mode, std::size_t budget) {
  model.validate();
  double norm_est = 0;
  if (mode.kind == NormMode::Kind::exact) {
    std::size_t count = refinement_cell_count(model.d, mode.q, budget);
    double sum = 0;
    for_each_centroid(model.d, mode.q, budget, [&](const std::vector<double>& x) {
      const double f = model.forward(x);
      sum += f * f;
    });
    norm_est = sum / static_cast<double>(count);
  } else {
    std::size_t nprime = mode.nprime != 0 ? mode.nprime : 4 * std::max<std::size_t>(samples.n(), 1);
    Rng rng(mode.seed);
    std::vector<double> u(static_cast<std::size_t>(model.d));
    double sum = 0;
    for (std::size_t j = 0; j < nprime; ++j) {
      for (double& c : u) c = rng.u01();
      const double f = model.forward(u);
      sum += f * f;
    }
    norm_est = sum / static_cast<double>(nprime);
  }
  double data_term = 0;
  if (samples.n() > 0) {
    double sum = 0;
    for (const auto& row : samples.rows) sum += model.forward(row);
    data_term = 2.0 * sum / static_cast<double>(samples.n());
  }
  return norm_est - data_term;
}

TrainResult train_sgd(CliqueNetModel& model, const SampleMatrix& samples, const TrainConfig& cfg) {
  model.validate();
  samples.validate();
  if (samples.d != model.d) throw std::invalid_argument("train_sgd: sample dimension mismatch");
  if (samples.n() == 0) throw std::invalid_argument("train_sgd: no samples");
  if (cfg.batch == 0 || cfg.norm_points == 0)
    throw std::invalid_argument("train_sgd: batch and norm_points must be positive");
  if (!(cfg.lr_start >= 0 && cfg.lr_end > 0))
    throw std::invalid_argument("train_sgd: learning rates must be positive");

  Rng rng(cfg.seed);
  TrainResult out;
  std::vector<double> params = model.get_params();
  std::vector<double> grad;
  std::vector<std::vector<double>> batch(cfg.batch);
  std::vector<std::vector<double>> fresh(cfg.norm_points,
                                         std::vector<double>(static_cast<std::size_t>(model.d)));
  const double decay = cfg.lr_end / cfg.lr_start;
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    for (auto& row : batch) row = samples.rows[rng.index(samples.n())];
    for (auto& u : fresh)
      for (double& c : u) c = rng.u01();
    const double loss = loss_and_grad(model, batch, fresh, grad);
    if (!std::isfinite(loss))
      throw NumericError("train_sgd: non-finite loss at step " + std::to_string(t));
    const double frac = cfg.steps > 1 ? static_cast<double>(t) / static_cast<double>(cfg.steps - 1) : 0.0;
    const double lr = cfg.lr_start * std::pow(decay, frac);
    params = model.get_params();
    for (std::size_t i = 0; i < params.size(); ++i)
      params[i] = std::clamp(params[i] - lr * grad[i], -cfg.clamp_bound, cfg.clamp_bound);
    model.set_params(params);
    if (cfg.trace_every > 0 && (t % cfg.trace_every == 0 || t + 1 == cfg.steps))
      out.loss_trace.push_back(loss);
    ++out.steps_done;
  }
  return out;
}

double NetDensity::operator()(const std::vector<double>& x) const {
  const double f = model.forward(x);
  if (mode == DensityMode::raw) return f;
  if (z <= 0) return 1.0;
  return std::max(f, 0.0) / z;
}

NetDensity to_density(const CliqueNetModel& model, DensityMode mode, int q, std::size_t budget) {
  NetDensity out;
  out.model = model;
  out.mode = mode;
  out.z = 1.0;
  if (mode == DensityMode::clipped_normalized) {
    std::size_t count = refinement_cell_count(model.d, q, budget);
    double sum = 0;
    for_each_centroid(model.d, q, budget, [&](const std::vector<double>& x) {
      sum += std::max(model.forward(x), 0.0);
    });
    out.z = sum / static_cast<double>(count);
  }
  return out;
}

}  // namespace mrfdens
