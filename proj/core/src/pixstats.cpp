#include "mrfdens/pixstats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "mrfdens/stats.hpp"

namespace mrfdens {

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int pgm_int(std::istream& in) {
  const std::string tok = pgm_token(in);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument("pgm: malformed header");
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    throw std::invalid_argument("pgm: malformed header");
  }
}

}  // namespace

PgmImage read_pgm(std::istream& in) {
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (!in || m0 != 'P' || m1 != '5') throw std::invalid_argument("pgm: malformed header");
  PgmImage img;
  img.cols = pgm_int(in);
  img.rows = pgm_int(in);
  const int maxval = pgm_int(in);
  if (img.cols < 1 || img.rows < 1) throw std::invalid_argument("pgm: malformed header");
  if (maxval != 255) throw std::invalid_argument("pgm: unsupported maxval (only 255)");
  // pgm_token consumed the single whitespace after the maxval; payload starts here
  const std::size_t count = static_cast<std::size_t>(img.rows) * static_cast<std::size_t>(img.cols);
  img.bytes.resize(count);
  in.read(reinterpret_cast<char*>(img.bytes.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count)
    throw std::invalid_argument("pgm: truncated payload");
  return img;
}

PgmImage read_pgm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("pgm: cannot open " + path);
  return read_pgm(in);
}

void write_pgm(std::ostream& out, const PgmImage& img) {
  if (img.rows < 1 || img.cols < 1 ||
      img.bytes.size() != static_cast<std::size_t>(img.rows) * static_cast<std::size_t>(img.cols))
    throw std::invalid_argument("pgm: inconsistent image");
  out << "P5\n" << img.cols << " " << img.rows << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.bytes.data()),
            static_cast<std::streamsize>(img.bytes.size()));
}

void write_pgm_file(const std::string& path, const PgmImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("pgm: cannot write " + path);
  write_pgm(out, img);
}

double ImageCorpus::at(std::size_t img, PixelRef p) const {
  if (img >= images.size()) throw std::invalid_argument("corpus: image index out of range");
  if (p.row < 1 || p.row > rows || p.col < 1 || p.col > cols)
    throw std::invalid_argument("corpus: pixel out of range");
  return images[img][static_cast<std::size_t>(p.row - 1) * static_cast<std::size_t>(cols) +
                     static_cast<std::size_t>(p.col - 1)];
}

void ImageCorpus::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument("corpus: empty dimensions");
  const std::size_t count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  for (const auto& img : images) {
    if (img.size() != count) throw std::invalid_argument("corpus: image size mismatch");
    for (double v : img)
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("corpus: intensity outside [0,1]");
  }
}

ImageCorpus load_pgm_corpus(const std::vector<std::string>& paths, int target_rows,
                            int target_cols, DimPolicy policy) {
  if (paths.empty()) throw std::invalid_argument("corpus: empty path list");
  if (target_rows < 1 || target_cols < 1)
    throw std::invalid_argument("corpus: target dimensions must be positive");
  ImageCorpus corpus;
  corpus.rows = target_rows;
  corpus.cols = target_cols;
  for (const auto& path : paths) {
    const PgmImage img = read_pgm_file(path);
    if (img.rows < target_rows || img.cols < target_cols)
      throw std::invalid_argument("corpus: " + path + " smaller than target dims");
    if ((img.rows != target_rows || img.cols != target_cols) && policy == DimPolicy::reject)
      throw std::invalid_argument("corpus: " + path + " does not match target dims");
    std::vector<double> pix(static_cast<std::size_t>(target_rows) *
                            static_cast<std::size_t>(target_cols));
    for (int r = 0; r < target_rows; ++r)
      for (int c = 0; c < target_cols; ++c)
        pix[static_cast<std::size_t>(r) * target_cols + c] =
            img.bytes[static_cast<std::size_t>(r) * img.cols + c] / 255.0;
    corpus.images.push_back(std::move(pix));
    corpus.sources.push_back(path);
  }
  corpus.validate();
  return corpus;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) throw std::invalid_argument("pearson: need >= 2 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

namespace {

// Lower-rank quartiles; IQR of the conditioning pixel sets the default
// tolerance window, wider windows leak spurious correlation.
double half_iqr(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double q1 = values[(n - 1) / 4];
  const double q3 = values[3 * (n - 1) / 4];
  return 0.5 * (q3 - q1);
}

}  // namespace

ScatterResult pair_scatter(const ImageCorpus& corpus, PixelRef a, PixelRef b,
                           const std::optional<Condition>& cond) {
  if (corpus.size() < 2) throw std::invalid_argument("pair_scatter: fewer than 2 images");
  std::vector<std::size_t> keep;
  ScatterResult out;
  if (cond) {
    std::vector<double> cvals(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) cvals[i] = corpus.at(i, cond->pixel);
    out.conditioned = true;
    out.median_used = lower_median(cvals);
    if (cond->mode == Condition::Mode::tolerance) {
      out.tolerance_used = cond->tolerance >= 0 ? cond->tolerance : half_iqr(cvals);
      for (std::size_t i = 0; i < corpus.size(); ++i)
        if (std::abs(cvals[i] - out.median_used) <= out.tolerance_used) keep.push_back(i);
    } else {
      std::vector<std::size_t> order(corpus.size());
      for (std::size_t i = 0; i < corpus.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::abs(cvals[i] - out.median_used) < std::abs(cvals[j] - out.median_used);
      });
      const std::size_t k = std::min<std::size_t>(cond->k, order.size());
      keep.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(keep.begin(), keep.end());
    }
    if (keep.size() < 2) throw std::invalid_argument("pair_scatter: fewer than 2 surviving images");
  } else {
    keep.resize(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) keep[i] = i;
  }

  std::vector<double> xs, ys;
  xs.reserve(keep.size());
  ys.reserve(keep.size());
  for (std::size_t i : keep) {
    xs.push_back(corpus.at(i, a));
    ys.push_back(corpus.at(i, b));
    out.pairs.emplace_back(xs.back(), ys.back());
  }
  out.count = keep.size();
  out.correlation = pearson(xs, ys);
  return out;
}

std::vector<ProfileRow> correlation_profile(const ImageCorpus& corpus, PixelRef anchor,
                                            PixelRef neighbor, int max_offset,
                                            std::optional<double> tolerance) {
  if (max_offset < 1) throw std::invalid_argument("correlation_profile: max_offset must be >= 1");
  corpus.at(0, anchor);  // bounds check
  Condition cond;
  cond.pixel = neighbor;
  cond.mode = Condition::Mode::tolerance;
  cond.tolerance = tolerance.value_or(-1.0);

  std::vector<ProfileRow> rows;
  for (int t = 1; t <= max_offset; ++t) {
    std::vector<double> uncond, condv;
    int count = 0;
    for (int dr = -t; dr <= t; ++dr) {
      for (int dc = -t; dc <= t; ++dc) {
        if (std::max(std::abs(dr), std::abs(dc)) != t) continue;
        const PixelRef b{anchor.row + dr, anchor.col + dc};
        if (b.row < 1 || b.row > corpus.rows || b.col < 1 || b.col > corpus.cols) continue;
        uncond.push_back(pair_scatter(corpus, anchor, b).correlation);
        condv.push_back(pair_scatter(corpus, anchor, b, cond).correlation);
        ++count;
      }
    }
    if (count == 0) continue;
    ProfileRow row;
    row.dist = t;
    row.n_offsets = count;
    row.uncond = lower_median(uncond);
    row.cond = lower_median(condv);
    rows.push_back(row);
  }
  return rows;
}

ImageCorpus synth_snake_corpus(int rows, int cols, std::size_t n_images,
                               const PairPotential& psi, std::uint64_t seed, int q) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("snake corpus: dims must be positive");
  if (n_images < 1) throw std::invalid_argument("snake corpus: need >= 1 image");
  const int d = rows * cols;
  const ChainDensity chain(d, psi, q);
  Rng rng(seed);
  ImageCorpus corpus;
  corpus.rows = rows;
  corpus.cols = cols;
  for (std::size_t img = 0; img < n_images; ++img) {
    const std::vector<double> x = chain.sample(rng);
    std::vector<double> pix(static_cast<std::size_t>(d));
    for (int i = 1; i <= rows; ++i) {
      for (int j = 1; j <= cols; ++j) {
        const int snake_col = (i % 2 == 1) ? j : cols + 1 - j;
        const int chain_pos = (i - 1) * cols + snake_col;  // 1-based
        pix[static_cast<std::size_t>(i - 1) * cols + (j - 1)] =
            x[static_cast<std::size_t>(chain_pos - 1)];
      }
    }
    corpus.images.push_back(std::move(pix));
    corpus.sources.push_back("synth-snake");
  }
  corpus.validate();
  return corpus;
}

}  // namespace mrfdens
