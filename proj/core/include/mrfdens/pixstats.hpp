#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrfdens/synth.hpp"

namespace mrfdens {

// 1-based (row, col) pixel address.
struct PixelRef {
  int row = 1;
  int col = 1;
};

struct PgmImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> bytes;  // row-major
};

// Binary 8-bit graymap ("P5", maxval 255). Malformed header, unsupported
// depth, and truncated payload raise distinct errors.
PgmImage read_pgm(std::istream& in);
PgmImage read_pgm_file(const std::string& path);
void write_pgm(std::ostream& out, const PgmImage& img);
void write_pgm_file(const std::string& path, const PgmImage& img);

struct ImageCorpus {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<double>> images;  // row-major, intensities in [0,1]
  std::vector<std::string> sources;

  std::size_t size() const { return images.size(); }
  double at(std::size_t img, PixelRef p) const;
  void validate() const;
};

enum class DimPolicy { crop, reject };

// Loads P5 files, scales intensities by 1/255, and resolves dimension
// mismatches per policy (crop to the top-left target window, or reject the
// whole load).
ImageCorpus load_pgm_corpus(const std::vector<std::string>& paths, int target_rows,
                            int target_cols, DimPolicy policy);

// Zero variance on either side yields 0.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

struct Condition {
  PixelRef pixel;
  enum class Mode { tolerance, nearest } mode = Mode::tolerance;
  double tolerance = -1.0;  // < 0: half the conditioning pixel's IQR
  std::size_t k = 100;      // nearest mode: k images closest to the median
};

struct ScatterResult {
  std::vector<std::pair<double, double>> pairs;  // (value A, value B)
  std::size_t count = 0;
  double correlation = 0;
  bool conditioned = false;
  double median_used = 0;
  double tolerance_used = 0;  // resolved window; 0 in nearest mode
};

// Unconditional: all (A, B) pairs. Conditional: images whose conditioning
// pixel lies within the tolerance window around its corpus median (or the k
// nearest); needs >= 2 surviving images.
ScatterResult pair_scatter(const ImageCorpus& corpus, PixelRef a, PixelRef b,
                           const std::optional<Condition>& cond = std::nullopt);

struct ProfileRow {
  int dist = 0;       // Chebyshev offset distance from the anchor
  int n_offsets = 0;  // ring positions inside the image
  double uncond = 0;  // lower median of ring correlations
  double cond = 0;    // same, conditioned on the neighbor pixel
};

// Correlations between the anchor and every pixel on the Chebyshev ring of
// each distance 1..max_offset, conditioned on the fixed neighbor.
std::vector<ProfileRow> correlation_profile(const ImageCorpus& corpus, PixelRef anchor,
                                            PixelRef neighbor, int max_offset,
                                            std::optional<double> tolerance = std::nullopt);

// Synthetic grid-Markov corpus: one chain of length rows*cols laid along the
// boustrophedon (snake) path of the grid, sampled exactly and reshaped. The
// snake path is a grid subgraph, so the image is Markov for the grid.
ImageCorpus synth_snake_corpus(int rows, int cols, std::size_t n_images,
                               const PairPotential& psi, std::uint64_t seed, int q = 256);

}  // namespace mrfdens
