#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "mrfdens/pixstats.hpp"
#include "mrfdens/rng.hpp"
#include "mrfdens/stats.hpp"
#include "test_util.hpp"

using namespace mrfdens;

namespace {

std::string pgm_bytes(int cols, int rows, const std::vector<unsigned char>& payload,
                      const std::string& maxval = "255") {
  std::string s = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n" + maxval + "\n";
  s.append(payload.begin(), payload.end());
  return s;
}

ImageCorpus corpus_1x3(const std::vector<std::vector<double>>& images) {
  ImageCorpus c;
  c.rows = 1;
  c.cols = 3;
  c.images = images;
  c.sources.assign(images.size(), "test");
  c.validate();
  return c;
}

}  // namespace

TEST_SUITE("pixstats") {

TEST_CASE("pgm reader decodes a hand-built stream") {
  std::istringstream in(pgm_bytes(2, 2, {0, 255, 128, 64}));
  const PgmImage img = read_pgm(in);
  CHECK(img.rows == 2);
  CHECK(img.cols == 2);
  CHECK(img.bytes == std::vector<std::uint8_t>{0, 255, 128, 64});
}

TEST_CASE("pgm reader skips comments anywhere in the header") {
  std::istringstream in("P5\n# made by hand\n2 1\n# depth note\n255\n\x10\x20");
  const PgmImage img = read_pgm(in);
  CHECK(img.cols == 2);
  CHECK(img.rows == 1);
  CHECK(img.bytes == std::vector<std::uint8_t>{0x10, 0x20});
}

TEST_CASE("pgm reader raises distinct errors") {
  std::istringstream bad_magic(pgm_bytes(1, 1, {7}).replace(1, 1, "6"));
  CHECK_THROWS_WITH_AS(read_pgm(bad_magic), "pgm: malformed header", std::invalid_argument);

  std::istringstream bad_dims("P5\ntwo 2\n255\n");
  CHECK_THROWS_WITH_AS(read_pgm(bad_dims), "pgm: malformed header", std::invalid_argument);

  std::istringstream zero_dims(pgm_bytes(0, 2, {}));
  CHECK_THROWS_WITH_AS(read_pgm(zero_dims), "pgm: malformed header", std::invalid_argument);

  std::istringstream deep(pgm_bytes(1, 1, {7}, "65535"));
  CHECK_THROWS_WITH_AS(read_pgm(deep), "pgm: unsupported maxval (only 255)",
                       std::invalid_argument);

  std::istringstream short_payload(pgm_bytes(2, 2, {1, 2, 3}));
  CHECK_THROWS_WITH_AS(read_pgm(short_payload), "pgm: truncated payload", std::invalid_argument);
}

TEST_CASE("pgm file roundtrip preserves every byte") {
  const std::string dir = testutil::temp_dir("pgm");
  const std::string path = dir + "/img.pgm";
  PgmImage img;
  img.rows = 3;
  img.cols = 2;
  img.bytes = {0, 1, 2, 253, 254, 255};
  write_pgm_file(path, img);
  const PgmImage back = read_pgm_file(path);
  CHECK(back.rows == img.rows);
  CHECK(back.cols == img.cols);
  CHECK(back.bytes == img.bytes);

  PgmImage broken = img;
  broken.bytes.pop_back();
  std::ostringstream sink;
  CHECK_THROWS_AS(write_pgm(sink, broken), std::invalid_argument);
  CHECK_THROWS_AS(read_pgm_file(dir + "/missing.pgm"), std::invalid_argument);
}

TEST_CASE("corpus load scales, crops, and rejects") {
  const std::string dir = testutil::temp_dir("corpus");
  PgmImage big;
  big.rows = 3;
  big.cols = 3;
  big.bytes = {255, 0, 0, 0, 51, 0, 0, 0, 0};
  write_pgm_file(dir + "/big.pgm", big);
  PgmImage exact;
  exact.rows = 2;
  exact.cols = 2;
  exact.bytes = {0, 102, 204, 255};
  write_pgm_file(dir + "/exact.pgm", exact);

  const ImageCorpus crop =
      load_pgm_corpus({dir + "/big.pgm", dir + "/exact.pgm"}, 2, 2, DimPolicy::crop);
  CHECK(crop.size() == 2);
  CHECK(crop.at(0, {1, 1}) == doctest::Approx(1.0));
  CHECK(crop.at(0, {2, 2}) == doctest::Approx(51.0 / 255.0));  // top-left window of big
  CHECK(crop.at(1, {1, 2}) == doctest::Approx(102.0 / 255.0));
  CHECK(crop.sources[0] == dir + "/big.pgm");

  CHECK_THROWS_AS(load_pgm_corpus({dir + "/big.pgm"}, 2, 2, DimPolicy::reject),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_pgm_corpus({dir + "/exact.pgm"}, 3, 3, DimPolicy::crop),
                  std::invalid_argument);  // smaller than target
  CHECK_THROWS_AS(load_pgm_corpus({}, 2, 2, DimPolicy::crop), std::invalid_argument);
}

TEST_CASE("pearson correlation on hand data") {
  CHECK(pearson({1, 2, 3, 4}, {3, 5, 7, 9}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(pearson({1, 1, 1}, {1, 2, 3}) == 0.0);  // zero variance
  CHECK(pearson({0.1, 0.9, 0.4}, {0.3, 0.3, 0.3}) == 0.0);

  const std::vector<double> xs{0.2, 0.8, 0.5, 0.1};
  const std::vector<double> ys{0.7, 0.2, 0.9, 0.4};
  std::vector<double> ax, cy;
  for (double x : xs) ax.push_back(3.0 * x + 0.25);
  for (double y : ys) cy.push_back(0.5 * y - 0.1);
  CHECK(pearson(ax, cy) == doctest::Approx(pearson(xs, ys)).epsilon(1e-12));

  CHECK_THROWS_AS(pearson({1, 2}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(pearson({1}, {1}), std::invalid_argument);
}

TEST_CASE("pair scatter conditions on the median window") {
  // conditioning pixel (1,3) values: {0.0, 0.1, 0.5, 0.5, 0.9, 1.0}
  // lower median 0.5; lower-rank quartiles q1 = 0.1, q3 = 0.5, so the
  // default window is 0.2 and exactly the two 0.5-images survive.
  const ImageCorpus c = corpus_1x3({{0.9, 0.8, 0.0},
                                    {0.7, 0.6, 0.1},
                                    {0.2, 0.3, 0.5},
                                    {0.4, 0.1, 0.5},
                                    {0.3, 0.9, 0.9},
                                    {0.1, 0.5, 1.0}});
  const PixelRef a{1, 1}, b{1, 2}, cpix{1, 3};

  const ScatterResult uncond = pair_scatter(c, a, b);
  CHECK_FALSE(uncond.conditioned);
  CHECK(uncond.count == 6);
  CHECK(uncond.correlation ==
        doctest::Approx(pearson({0.9, 0.7, 0.2, 0.4, 0.3, 0.1}, {0.8, 0.6, 0.3, 0.1, 0.9, 0.5}))
            .epsilon(1e-12));
  REQUIRE(uncond.pairs.size() == 6);
  CHECK(uncond.pairs[0].first == 0.9);
  CHECK(uncond.pairs[0].second == 0.8);

  Condition cond;
  cond.pixel = cpix;
  const ScatterResult def = pair_scatter(c, a, b, cond);
  CHECK(def.conditioned);
  CHECK(def.median_used == 0.5);
  CHECK(def.tolerance_used == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(def.count == 2);
  // two surviving points (0.2,0.3), (0.4,0.1): perfectly anti-correlated
  CHECK(def.correlation == doctest::Approx(-1.0).epsilon(1e-12));

  cond.tolerance = 1.0;  // window covers everything
  CHECK(pair_scatter(c, a, b, cond).count == 6);

  cond.tolerance = 0.0;  // only the exact-median images survive
  CHECK(pair_scatter(c, a, b, cond).count == 2);
}

TEST_CASE("pair scatter tolerance-zero with distinct values is an error") {
  const ImageCorpus c = corpus_1x3({{0.1, 0.2, 0.0},
                                    {0.3, 0.4, 0.3},
                                    {0.5, 0.6, 0.7},
                                    {0.7, 0.8, 1.0}});
  Condition cond;
  cond.pixel = {1, 3};
  cond.tolerance = 0.0;
  CHECK_THROWS_AS(pair_scatter(c, {1, 1}, {1, 2}, cond), std::invalid_argument);
}

TEST_CASE("pair scatter nearest mode keeps exactly k images") {
  const ImageCorpus c = corpus_1x3({{0.9, 0.8, 0.0},
                                    {0.7, 0.6, 0.1},
                                    {0.2, 0.3, 0.5},
                                    {0.4, 0.1, 0.5},
                                    {0.3, 0.9, 0.9},
                                    {0.1, 0.5, 1.0}});
  Condition cond;
  cond.pixel = {1, 3};
  cond.mode = Condition::Mode::nearest;
  cond.k = 3;
  const ScatterResult res = pair_scatter(c, {1, 1}, {1, 2}, cond);
  CHECK(res.count == 3);
  CHECK(res.median_used == 0.5);
  CHECK(res.tolerance_used == 0.0);
  // ties at distance 0.4 resolve by original order: images 2, 3 (dist 0) then 1
  REQUIRE(res.pairs.size() == 3);
  CHECK(res.pairs[0].first == 0.7);
  CHECK(res.pairs[1].first == 0.2);
  CHECK(res.pairs[2].first == 0.4);

  cond.k = 100;  // capped at the corpus size
  CHECK(pair_scatter(c, {1, 1}, {1, 2}, cond).count == 6);
}

TEST_CASE("pair scatter needs two images and in-range pixels") {
  const ImageCorpus c = corpus_1x3({{0.1, 0.2, 0.3}});
  CHECK_THROWS_AS(pair_scatter(c, {1, 1}, {1, 2}), std::invalid_argument);
  const ImageCorpus c2 = corpus_1x3({{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}});
  CHECK_THROWS_AS(pair_scatter(c2, {1, 4}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(pair_scatter(c2, {2, 1}, {1, 1}), std::invalid_argument);
}

TEST_CASE("correlation profile walks chebyshev rings inside the image") {
  Rng rng(99);
  ImageCorpus c;
  c.rows = 4;
  c.cols = 4;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> img(16);
    for (double& v : img) v = rng.u01();
    c.images.push_back(std::move(img));
    c.sources.push_back("test");
  }
  c.validate();

  // anchor in the corner: ring t=1 has 3 in-bounds offsets, t=2 has 5
  const auto rows = correlation_profile(c, {1, 1}, {1, 2}, 3, 0.4);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].dist == 1);
  CHECK(rows[0].n_offsets == 3);
  CHECK(rows[1].dist == 2);
  CHECK(rows[1].n_offsets == 5);
  CHECK(rows[2].n_offsets == 7);
  for (const auto& row : rows) {
    CHECK(std::abs(row.uncond) <= 1.0);
    CHECK(std::abs(row.cond) <= 1.0);
  }
  CHECK_THROWS_AS(correlation_profile(c, {1, 1}, {1, 2}, 0), std::invalid_argument);
}

TEST_CASE("snake corpus lays the chain along the boustrophedon path") {
  const PairPotential psi = gauss_potential(20.0);
  const ImageCorpus c = synth_snake_corpus(2, 3, 4, psi, 77, 64);
  CHECK(c.rows == 2);
  CHECK(c.cols == 3);
  CHECK(c.size() == 4);

  // re-derive the first chain state with the same generator
  const ChainDensity chain(6, psi, 64);
  Rng rng(77);
  const std::vector<double> x = chain.sample(rng);
  CHECK(c.at(0, {1, 1}) == x[0]);
  CHECK(c.at(0, {1, 2}) == x[1]);
  CHECK(c.at(0, {1, 3}) == x[2]);
  CHECK(c.at(0, {2, 3}) == x[3]);  // even row runs right to left
  CHECK(c.at(0, {2, 2}) == x[4]);
  CHECK(c.at(0, {2, 1}) == x[5]);

  const ImageCorpus again = synth_snake_corpus(2, 3, 4, psi, 77, 64);
  CHECK(again.images == c.images);
  const ImageCorpus other = synth_snake_corpus(2, 3, 4, psi, 78, 64);
  CHECK(other.images != c.images);

  CHECK_THROWS_AS(synth_snake_corpus(0, 3, 4, psi, 1), std::invalid_argument);
  CHECK_THROWS_AS(synth_snake_corpus(2, 3, 0, psi, 1), std::invalid_argument);
}

TEST_CASE("snake corpus neighbors are strongly correlated under gauss coupling") {
  const ImageCorpus c = synth_snake_corpus(6, 6, 300, gauss_potential(20.0), 5, 96);
  const double adj = pair_scatter(c, {3, 3}, {3, 4}).correlation;
  CHECK(adj > 0.3);
  const double far = pair_scatter(c, {3, 3}, {6, 6}).correlation;
  CHECK(std::abs(far) < adj);
}

}  // TEST_SUITE
