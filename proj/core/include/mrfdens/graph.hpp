#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mrfdens {

enum class GraphFamily { path, grid, grid_diag, general };

// Undirected simple graph on vertices 1..d. Grid vertices are labeled
// row-major: (i, j) -> (i-1)*cols + j with 1-based i, j.
struct MrfGraph {
  int d = 0;
  std::vector<std::vector<int>> adj;  // adj[v] sorted ascending, adj[0] unused
  GraphFamily family = GraphFamily::general;
  int rows = 0, cols = 0;  // grid labels, 0 when not a grid
  int power_t = 1;         // metric radius relative to the base family

  bool has_edge(int u, int v) const;
  std::size_t edge_count() const;
  std::vector<std::pair<int, int>> edges() const;  // u < v, sorted
  std::uint64_t fingerprint() const;
};

MrfGraph make_path(int d);
MrfGraph make_grid(int rows, int cols, bool diagonals);
MrfGraph make_graph(int d, const std::vector<std::pair<int, int>>& edges);
MrfGraph load_edge_list(std::istream& in);
MrfGraph load_edge_list_file(const std::string& path);

// Graph power: edge iff BFS distance in [1, t].
MrfGraph power(const MrfGraph& g, int t);

inline constexpr std::size_t kDefaultCliqueCeiling = 1'000'000;

struct CliqueSet {
  std::vector<std::vector<int>> cliques;  // each sorted; list sorted lexicographically
  std::uint64_t graph_fingerprint = 0;
};

// Bron-Kerbosch with pivoting. Throws ResourceError when the number of
// maximal cliques found exceeds `ceiling`.
CliqueSet maximal_cliques(const MrfGraph& g, std::size_t ceiling = kDefaultCliqueCeiling);

int max_clique_size(const MrfGraph& g, std::size_t ceiling = kDefaultCliqueCeiling);

struct CliqueSizeBound {
  int value = 0;
  bool exact = false;  // false: upper bound only (plain grid)
};

// Closed-form max clique size of the t-th power. Paths: min(t+1, d), exact.
// Grids with diagonals: (t+1)^2, exact. Plain grids: floor((t^2+4t+3)/2),
// upper bound. Grid families require t < min(rows, cols).
CliqueSizeBound clique_size_formula(GraphFamily family, int t, int dim1, int dim2 = 0);

}  // namespace mrfdens
