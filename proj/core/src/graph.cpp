#include "mrfdens/graph.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "mrfdens/errors.hpp"
#include "mrfdens/rng.hpp"

namespace mrfdens {

bool MrfGraph::has_edge(int u, int v) const {
  if (u < 1 || u > d || v < 1 || v > d || u == v) return false;
  const auto& a = adj[u];
  return std::binary_search(a.begin(), a.end(), v);
}

std::size_t MrfGraph::edge_count() const {
  std::size_t s = 0;
  for (int v = 1; v <= d; ++v) s += adj[v].size();
  return s / 2;
}

std::vector<std::pair<int, int>> MrfGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 1; u <= d; ++u)
    for (int v : adj[u])
      if (u < v) out.emplace_back(u, v);
  return out;
}

std::uint64_t MrfGraph::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t x) {
    h ^= x;
    h *= 0x100000001b3ULL;
  };
  mix(static_cast<std::uint64_t>(d));
  for (const auto& [u, v] : edges()) {
    mix(static_cast<std::uint64_t>(u));
    mix(static_cast<std::uint64_t>(v));
  }
  return h;
}

namespace {

MrfGraph empty_graph(int d) {
  if (d < 1) throw std::invalid_argument("graph needs at least one vertex");
  MrfGraph g;
  g.d = d;
  g.adj.assign(static_cast<std::size_t>(d) + 1, {});
  return g;
}

void add_edge(MrfGraph& g, int u, int v) {
  g.adj[u].push_back(v);
  g.adj[v].push_back(u);
}

void finish_adjacency(MrfGraph& g) {
  for (int v = 1; v <= g.d; ++v) {
    auto& a = g.adj[v];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
}

}  // namespace

MrfGraph make_path(int d) {
  MrfGraph g = empty_graph(d);
  for (int v = 1; v < d; ++v) add_edge(g, v, v + 1);
  finish_adjacency(g);
  g.family = GraphFamily::path;
  return g;
}

MrfGraph make_grid(int rows, int cols, bool diagonals) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid dims must be positive");
  MrfGraph g = empty_graph(rows * cols);
  auto id = [cols](int i, int j) { return (i - 1) * cols + j; };
  for (int i = 1; i <= rows; ++i) {
    for (int j = 1; j <= cols; ++j) {
      if (j < cols) add_edge(g, id(i, j), id(i, j + 1));
      if (i < rows) add_edge(g, id(i, j), id(i + 1, j));
      if (diagonals && i < rows) {
        if (j < cols) add_edge(g, id(i, j), id(i + 1, j + 1));
        if (j > 1) add_edge(g, id(i, j), id(i + 1, j - 1));
      }
    }
  }
  finish_adjacency(g);
  g.family = diagonals ? GraphFamily::grid_diag : GraphFamily::grid;
  g.rows = rows;
  g.cols = cols;
  return g;
}

MrfGraph make_graph(int d, const std::vector<std::pair<int, int>>& edges) {
  MrfGraph g = empty_graph(d);
  for (const auto& [u, v] : edges) {
    if (u < 1 || u > d || v < 1 || v > d)
      throw std::invalid_argument("edge endpoint out of range");
    if (u == v) throw std::invalid_argument("self-loops are not allowed");
    add_edge(g, u, v);
  }
  finish_adjacency(g);
  return g;
}

MrfGraph load_edge_list(std::istream& in) {
  std::vector<std::pair<int, int>> edges;
  int d = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long u, v;
    if (!(ls >> u)) continue;  // blank or comment-only line
    if (!(ls >> v)) throw std::invalid_argument("edge list line " + std::to_string(lineno) + ": expected two vertex ids");
    long extra;
    if (ls >> extra) throw std::invalid_argument("edge list line " + std::to_string(lineno) + ": trailing tokens");
    if (u < 1 || v < 1) throw std::invalid_argument("edge list line " + std::to_string(lineno) + ": vertex ids are 1-based");
    if (u == v) throw std::invalid_argument("edge list line " + std::to_string(lineno) + ": self-loop");
    edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
    d = std::max(d, static_cast<int>(std::max(u, v)));
  }
  if (d == 0) throw std::invalid_argument("edge list is empty");
  return make_graph(d, edges);
}

MrfGraph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open edge list file: " + path);
  return load_edge_list(in);
}

MrfGraph power(const MrfGraph& g, int t) {
  if (t < 1) throw std::invalid_argument("graph power requires t >= 1");
  MrfGraph out = empty_graph(g.d);
  out.family = g.family;
  out.rows = g.rows;
  out.cols = g.cols;
  out.power_t = g.power_t * t;
  // BFS to depth t from each vertex
  std::vector<int> dist(static_cast<std::size_t>(g.d) + 1);
  for (int s = 1; s <= g.d; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::queue<int> q;
    dist[s] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      if (dist[u] == t) continue;
      for (int v : g.adj[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
          if (v > s) add_edge(out, s, v);  // add once per unordered pair
        }
      }
    }
  }
  finish_adjacency(out);
  return out;
}

namespace {

// Bron-Kerbosch over word-packed vertex sets (0-based bit per vertex).
struct BitGraph {
  int n = 0;
  int words = 0;
  std::vector<std::uint64_t> nbr;  // n rows of `words` words

  const std::uint64_t* row(int v) const { return nbr.data() + static_cast<std::size_t>(v) * words; }
};

struct BkState {
  const BitGraph* bg = nullptr;
  std::size_t ceiling = 0;
  std::vector<std::vector<int>>* out = nullptr;

  void expand(std::vector<int>& r, std::vector<std::uint64_t>& p, std::vector<std::uint64_t>& x) {
    const int words = bg->words;
    bool p_empty = true, x_empty = true;
    for (int w = 0; w < words; ++w) {
      if (p[w]) p_empty = false;
      if (x[w]) x_empty = false;
    }
    if (p_empty && x_empty) {
      if (out->size() >= ceiling)
        throw ResourceError("maximal clique count exceeds ceiling of " + std::to_string(ceiling));
      std::vector<int> clique(r);
      for (int& v : clique) ++v;  // back to 1-based ids
      std::sort(clique.begin(), clique.end());
      out->push_back(std::move(clique));
      return;
    }
    if (p_empty) return;
    // pivot: vertex of P|X with most neighbors in P
    int pivot = -1, best = -1;
    for (int w = 0; w < words; ++w) {
      std::uint64_t m = p[w] | x[w];
      while (m) {
        int v = w * 64 + std::countr_zero(m);
        m &= m - 1;
        const std::uint64_t* nv = bg->row(v);
        int cnt = 0;
        for (int k = 0; k < words; ++k) cnt += std::popcount(p[k] & nv[k]);
        if (cnt > best) {
          best = cnt;
          pivot = v;
        }
      }
    }
    const std::uint64_t* np = bg->row(pivot);
    std::vector<std::uint64_t> cand(words);
    for (int w = 0; w < words; ++w) cand[w] = p[w] & ~np[w];
    std::vector<std::uint64_t> p2(words), x2(words);
    for (int w = 0; w < words; ++w) {
      std::uint64_t m = cand[w];
      while (m) {
        int v = w * 64 + std::countr_zero(m);
        m &= m - 1;
        const std::uint64_t* nv = bg->row(v);
        for (int k = 0; k < words; ++k) {
          p2[k] = p[k] & nv[k];
          x2[k] = x[k] & nv[k];
        }
        r.push_back(v);
        expand(r, p2, x2);
        r.pop_back();
        p[w] &= ~(1ULL << (v - w * 64));
        x[w] |= 1ULL << (v - w * 64);
      }
    }
  }
};

}  // namespace

CliqueSet maximal_cliques(const MrfGraph& g, std::size_t ceiling) {
  BitGraph bg;
  bg.n = g.d;
  bg.words = (g.d + 63) / 64;
  bg.nbr.assign(static_cast<std::size_t>(bg.n) * bg.words, 0);
  for (int u = 1; u <= g.d; ++u)
    for (int v : g.adj[u])
      bg.nbr[static_cast<std::size_t>(u - 1) * bg.words + (v - 1) / 64] |= 1ULL << ((v - 1) % 64);

  CliqueSet result;
  result.graph_fingerprint = g.fingerprint();
  BkState st;
  st.bg = &bg;
  st.ceiling = ceiling;
  st.out = &result.cliques;
  std::vector<int> r;
  std::vector<std::uint64_t> p(bg.words, 0), x(bg.words, 0);
  for (int v = 0; v < g.d; ++v) p[v / 64] |= 1ULL << (v % 64);
  st.expand(r, p, x);
  std::sort(result.cliques.begin(), result.cliques.end());
  return result;
}

int max_clique_size(const MrfGraph& g, std::size_t ceiling) {
  const CliqueSet cs = maximal_cliques(g, ceiling);
  std::size_t best = 0;
  for (const auto& c : cs.cliques) best = std::max(best, c.size());
  return static_cast<int>(best);
}

CliqueSizeBound clique_size_formula(GraphFamily family, int t, int dim1, int dim2) {
  if (t < 1) throw std::invalid_argument("clique_size_formula requires t >= 1");
  switch (family) {
    case GraphFamily::path:
      if (dim1 < 1) throw std::invalid_argument("path length must be positive");
      return {std::min(t + 1, dim1), true};
    case GraphFamily::grid_diag:
    case GraphFamily::grid: {
      if (dim1 < 1 || dim2 < 1) throw std::invalid_argument("grid dims must be positive");
      if (t >= std::min(dim1, dim2))
        throw std::invalid_argument("grid clique formulas require t < min(rows, cols)");
      if (family == GraphFamily::grid_diag) return {(t + 1) * (t + 1), true};
      return {(t * t + 4 * t + 3) / 2, false};
    }
    case GraphFamily::general:
      break;
  }
  throw std::invalid_argument("no closed-form clique size for general graphs");
}

}  // namespace mrfdens
