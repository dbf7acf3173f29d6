#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include <doctest.h>

#include "mrfdens/errors.hpp"
#include "mrfdens/graph.hpp"
#include "mrfdens/histogram.hpp"
#include "mrfdens/rng.hpp"
#include "mrfdens/scheffe.hpp"

using namespace mrfdens;

namespace {

ProductHistogram density_1d(std::vector<double> w, double C = 2.0) {
  HistogramFactor f;
  f.d = 1;
  f.V = {1};
  f.b = static_cast<int>(w.size());
  f.C = C;
  f.w = std::move(w);
  ProductHistogram h;
  h.d = 1;
  h.b = f.b;
  h.factors.push_back(std::move(f));
  return h;
}

SampleMatrix matrix_from(std::vector<std::vector<double>> rows) {
  SampleMatrix m;
  m.d = rows.empty() ? 1 : static_cast<int>(rows[0].size());
  m.rows = std::move(rows);
  return m;
}

}  // namespace

TEST_SUITE("scheffe") {

TEST_CASE("required sample counts") {
  CHECK(required_samples(1, 0.1, 0.05) == 205);
  CHECK(required_samples(10, 0.05, 0.1) == 1602);
  CHECK(required_samples(20, 0.05, 0.1) >= required_samples(10, 0.05, 0.1));
  CHECK_THROWS_AS(required_samples(0, 0.1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(required_samples(5, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(required_samples(5, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("hand-computed tournament at d = 1, b = 2") {
  CandidateSet cands;
  cands.d = 1;
  cands.b = 2;
  cands.densities.push_back(density_1d({0.5, 1.5}));
  cands.densities.push_back(density_1d({1.5, 0.5}));
  const SampleMatrix samples = matrix_from({{0.25}, {0.75}, {0.75}, {0.75}});

  const SelectionResult sel = scheffe_select(cands, samples);
  CHECK(sel.winner_index == 1);
  REQUIRE(sel.deltas.size() == 2);
  CHECK(std::abs(sel.deltas[0] - 0.0) < 1e-12);
  CHECK(std::abs(sel.deltas[1] - 0.5) < 1e-12);
}

TEST_CASE("single candidate wins by default") {
  CandidateSet cands;
  cands.d = 1;
  cands.b = 2;
  cands.densities.push_back(density_1d({1.0, 1.0}));
  const SelectionResult sel = scheffe_select(cands, matrix_from({{0.5}}));
  CHECK(sel.winner_index == 1);
  CHECK(sel.deltas == std::vector<double>{0.0});
}

TEST_CASE("selection is deterministic and covariant under permutation") {
  Rng rng(313);
  CandidateSet cands;
  cands.d = 1;
  cands.b = 4;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> w(4);
    for (double& x : w) x = 0.2 + 1.6 * rng.u01();
    ProductHistogram h = normalize(density_1d(std::move(w), 10.0));
    cands.densities.push_back(std::move(h));
  }
  Rng srng(99);
  const auto rows = sample_histogram(cands.densities[0], 500, srng);
  const SampleMatrix samples = matrix_from(rows);

  const SelectionResult sel1 = scheffe_select(cands, samples);
  const SelectionResult sel2 = scheffe_select(cands, samples);
  CHECK(sel1.winner_index == sel2.winner_index);
  CHECK(sel1.deltas == sel2.deltas);

  // permute candidates [2, 0, 1]; deltas only depend on the candidate
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = i + 1; k < 3; ++k)
      REQUIRE(std::abs(sel1.deltas[i] - sel1.deltas[k]) > 1e-9);
  CandidateSet perm;
  perm.d = 1;
  perm.b = 4;
  perm.densities = {cands.densities[2], cands.densities[0], cands.densities[1]};
  const SelectionResult sep = scheffe_select(perm, samples);
  const int mapping[3] = {1, 2, 0};  // new index of old candidate i
  for (int i = 0; i < 3; ++i)
    CHECK(sep.deltas[static_cast<std::size_t>(mapping[i])] ==
          doctest::Approx(sel1.deltas[static_cast<std::size_t>(i)]).epsilon(1e-12));
  CHECK(sep.winner_index == mapping[sel1.winner_index - 1] + 1);
}

TEST_CASE("candidate validation rejects unnormalized and mixed sets") {
  CandidateSet cands;
  cands.d = 1;
  cands.b = 2;
  cands.densities.push_back(density_1d({2.0, 2.0}));  // mass 2
  CHECK_THROWS_AS(cands.validate(), std::invalid_argument);
  CHECK_THROWS_AS(scheffe_select(cands, matrix_from({{0.5}})), std::invalid_argument);

  CandidateSet empty;
  empty.d = 1;
  empty.b = 2;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("candidate tables respect the cell budget") {
  CandidateSet cands;
  cands.d = 1;
  cands.b = 64;
  std::vector<double> w(64, 1.0);
  for (int i = 0; i < 4; ++i) cands.densities.push_back(density_1d(w));
  CHECK_THROWS_AS(scheffe_select(cands, matrix_from({{0.5}}), 128), ResourceError);
}

TEST_CASE("vn candidate family on the single-edge path, b = 1") {
  const MrfGraph g = make_path(2);
  const VnCandidates vc = build_vn_candidates(g, 1, 1.0, 1.0, 1000, 0, 1);
  CHECK_FALSE(vc.sampled);
  CHECK(vc.set.densities.size() == 1);
  CHECK(vc.zero_dropped == 1);
  CHECK(vc.log_member_count == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(vc.set.densities[0].eval({0.4, 0.6}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exhaustive-only enumeration reports the exact member count") {
  const MrfGraph g = make_path(2);
  // b = 2, C = 2, eps = 1: 3^4 = 81 members exceeds the tiny budget
  try {
    build_vn_candidates(g, 2, 2.0, 1.0, 10, 0, 1);
    FAIL("expected ResourceError");
  } catch (const ResourceError& e) {
    CHECK(std::string(e.what()).find("81") != std::string::npos);
  }
}

TEST_CASE("sampling fallback draws valid normalized members") {
  const MrfGraph g = make_path(2);
  const VnCandidates vc = build_vn_candidates(g, 2, 2.0, 1.0, 10, 25, 5);
  CHECK(vc.sampled);
  CHECK(vc.set.densities.size() <= 25);
  CHECK(vc.set.densities.size() >= 1);
  for (const auto& h : vc.set.densities)
    CHECK(hist_mass(h) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("planted truth is recovered from the enumerated family") {
  const MrfGraph g = make_path(2);
  const VnCandidates vc = build_vn_candidates(g, 2, 2.0, 1.0, 1000, 0, 1);
  CHECK(vc.set.densities.size() == 80);  // 81 minus the zero member

  ProductHistogram truth;
  truth.d = 2;
  truth.b = 2;
  HistogramFactor f = make_constant_factor(2, {1, 2}, 2, 2.0, 0.0);
  f.w = {2.0, 0.0, 0.0, 2.0};
  truth.factors.push_back(f);
  REQUIRE(hist_mass(truth) == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(2025);
  const SampleMatrix samples = matrix_from(sample_histogram(truth, 2000, rng));
  const SelectionResult sel = scheffe_select(vc.set, samples);
  const ProductHistogram& win = vc.set.densities[static_cast<std::size_t>(sel.winner_index - 1)];
  CHECK(l1_distance(win, truth) < 0.25);
}

TEST_CASE("estimate_vn wires the schedule together") {
  const MrfGraph g = make_path(2);
  Rng rng(6);
  SampleMatrix samples;
  samples.d = 2;
  for (int i = 0; i < 16; ++i) samples.rows.push_back({rng.u01(), rng.u01()});

  const VnEstimate est = estimate_vn(g, samples);
  CHECK(est.params.n == 16);
  CHECK(est.params.r == 2);
  CHECK(est.params.b == 2);  // ceil(16^{1/4})
  CHECK(est.params.eps == doctest::Approx(std::pow(16.0, -0.25) * std::log(16.0)).epsilon(1e-12));
  CHECK(est.params.delta == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
  CHECK(est.params.eps_cover == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(est.params.C == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(est.params.M == 624);  // 5^4 members minus the zero product
  CHECK_FALSE(est.params.sampled);
  CHECK(est.params.required_n == 5);
  CHECK(hist_mass(est.density) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(est.winner_index >= 1);
  CHECK(est.deltas.size() == 624);

  SampleMatrix tiny;
  tiny.d = 2;
  tiny.rows = {{0.5, 0.5}};
  CHECK_THROWS_AS(estimate_vn(g, tiny), std::invalid_argument);
}

}  // TEST_SUITE
