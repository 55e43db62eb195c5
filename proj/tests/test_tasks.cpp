#include <cmath>
#include <random>

#include "doctest.h"
#include "hypgw/geometry.hpp"
#include "hypgw/tape_ops.hpp"
#include "hypgw/tasks.hpp"
#include "test_util.hpp"

using namespace hypgw;
using namespace hypgw::tasks;
using ad::Tape;
using ad::Var;

namespace {

const Curvature kUnit(1.0);

std::vector<ad::VarVec> rows_on(Tape& t, const std::vector<Vec>& rows) {
  std::vector<ad::VarVec> out;
  for (const auto& r : rows) out.push_back(t.variables(r));
  return out;
}

}  // namespace

TEST_CASE("class scores from embeddings") {
  Tape t;
  const auto w = t.variables(Vec{0.3, -0.7, 1.1, 0.4});
  const auto zero_b = t.variables(Vec{0, 0});
  const auto s0 = nc_logits(rows_on(t, {{0, 0}}), w, zero_b, kUnit);
  CHECK(tape_ops::values(s0[0]) == Vec{0, 0});

  const auto eye = t.variables(Vec{1, 0, 0, 1});
  const Vec v{0.4, -0.9};
  const auto s1 = nc_logits(rows_on(t, {geometry::exp0(v, kUnit)}), eye, zero_b, kUnit);
  CHECK(testing::max_abs_diff(tape_ops::values(s1[0]), v) <= 1e-12);

  // hand case: z = exp0((1, 2)), W = [[1, 1], [2, -1]], b = (0.5, 0) -> (3.5, 0)
  const auto w2 = t.variables(Vec{1, 1, 2, -1});
  const auto b2 = t.variables(Vec{0.5, 0});
  const auto s2 = nc_logits(rows_on(t, {geometry::exp0(Vec{1, 2}, kUnit)}), w2, b2, kUnit);
  CHECK(s2[0][0].value() == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(std::abs(s2[0][1].value()) <= 1e-12);
  CHECK_THROWS_AS(nc_logits(rows_on(t, {{0, 0, 0}}), w2, b2, kUnit), InvalidInput);
}

TEST_CASE("negative log-likelihood") {
  Tape t;
  const auto uniform = rows_on(t, {{0.3, 0.3, 0.3}, {-1, -1, -1}});
  const std::vector<int> labels{2, 0};
  CHECK(nll_loss(uniform, labels).value() == doctest::Approx(std::log(3.0)).epsilon(1e-14));

  double prev = 1e9;
  for (double margin : {1.0, 5.0, 20.0, 60.0}) {
    const auto s = rows_on(t, {{margin, 0.0}});
    const double v = nll_loss(s, std::vector<int>{0}).value();
    CHECK(v < prev);
    CHECK(v >= 0.0);
    prev = v;
  }
  CHECK(prev < 1e-20);

  // three samples against a plain log-sum-exp oracle
  const std::vector<Vec> sc{{1.0, 2.0, 0.5}, {0.0, -1.0, 3.0}, {2.0, 2.0, -2.0}};
  const std::vector<int> y{1, 0, 2};
  double ref = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    double z = 0.0;
    for (double v : sc[i]) z += std::exp(v);
    ref += std::log(z) - sc[i][static_cast<std::size_t>(y[i])];
  }
  CHECK(nll_loss(rows_on(t, sc), y).value() == doctest::Approx(ref / 3.0).epsilon(1e-13));

  const std::vector<std::uint32_t> subset{1};
  CHECK(nll_loss(rows_on(t, sc), y, subset).value() ==
        doctest::Approx(std::log(std::exp(0.0) + std::exp(-1.0) + std::exp(3.0))).epsilon(1e-13));
  CHECK_THROWS_AS(nll_loss(rows_on(t, sc), std::vector<int>{1, 0, 3}), InvalidInput);
  CHECK_THROWS_AS(nll_loss({}, std::vector<int>{}), InvalidInput);
}

TEST_CASE("fermi-dirac probability") {
  CHECK(fermi_dirac_prob(2.0, {2.0, 1.0}) == 0.5);
  CHECK(fermi_dirac_prob(0.0, {2.0, 1.0}) == doctest::Approx(0.8807971).epsilon(1e-7));
  double prev = 1.0;
  for (double d = 0.0; d < 40.0; d += 0.37) {
    const double p = fermi_dirac_prob(d, {2.0, 1.5});
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    CHECK(p < prev);
    prev = p;
  }
  CHECK_THROWS_AS(fermi_dirac_prob(1.0, {2.0, 0.0}), InvalidInput);
  Tape t;
  CHECK(fermi_dirac_prob(t.variable(0.0), t.variable(2.0), t.variable(1.0)).value() ==
        doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
}

TEST_CASE("link prediction loss") {
  Tape t;
  // all pairs at distance r: every term is ln 2
  const Vec a{0, 0}, b{0.5, 0};
  const double d = geometry::poincare_distance(a, b, kUnit);
  const auto z = rows_on(t, {a, b, a, b});
  EdgeBatch batch{{{0, 1}}, {{2, 3}}};
  CHECK(lp_loss(z, batch, t.variable(d), t.variable(1.0), kUnit).value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // separated: positives coincide, negatives far apart
  const auto far = rows_on(t, {{0.0, 0.0}, {0.0, 0.0}, {-0.999, 0.0}, {0.999, 0.0}});
  const double sep = lp_loss(far, batch, t.variable(2.0), t.variable(0.05), kUnit).value();
  CHECK(sep < 1e-10);

  // two-edge hand case against the plain formula
  const std::vector<Vec> pts{{0.1, 0.2}, {-0.3, 0.1}, {0.4, -0.4}};
  const EdgeBatch hand{{{0, 1}}, {{0, 2}}};
  const double d01 = geometry::poincare_distance(pts[0], pts[1], kUnit);
  const double d02 = geometry::poincare_distance(pts[0], pts[2], kUnit);
  const double ref = -0.5 * (std::log(fermi_dirac_prob(d01, {1.5, 0.7})) + std::log(1.0 - fermi_dirac_prob(d02, {1.5, 0.7})));
  CHECK(lp_loss(rows_on(t, pts), hand, t.variable(1.5), t.variable(0.7), kUnit).value() ==
        doctest::Approx(ref).epsilon(1e-13));
  CHECK_THROWS_AS(lp_loss(rows_on(t, pts), EdgeBatch{}, t.variable(1.5), t.variable(0.7), kUnit), InvalidInput);
  CHECK_THROWS_AS(lp_loss(rows_on(t, pts), EdgeBatch{{{0, 3}}, {}}, t.variable(1.5), t.variable(0.7), kUnit),
                  InvalidInput);
}

TEST_CASE("loss gradients match finite differences") {
  std::mt19937_64 rng(17);
  const ad::Function nll = [](Tape&, std::span<const Var> p) {
    std::vector<ad::VarVec> s{{p[0], p[1], p[2]}, {p[3], p[4], p[5]}};
    return nll_loss(s, std::vector<int>{2, 1});
  };
  CHECK(ad::grad_check(nll, Vec{0.3, -1.2, 0.8, 2.0, 0.1, -0.5}) <= 1e-5);

  const EdgeBatch batch{{{0, 1}, {1, 2}}, {{0, 3}, {2, 3}}};
  for (bool squared : {false, true}) {
    const ad::Function lp = [&](Tape&, std::span<const Var> p) {
      std::vector<ad::VarVec> z;
      for (std::size_t i = 0; i < 4; ++i) z.push_back({p[2 * i], p[2 * i + 1]});
      return lp_loss(z, batch, p[8], p[9], kUnit, squared);
    };
    Vec point;
    for (int i = 0; i < 4; ++i) {
      const Vec q = testing::random_ball_point(rng, 2, 1.0, 0.7);
      point.insert(point.end(), q.begin(), q.end());
    }
    point.push_back(1.2);
    point.push_back(0.8);
    CHECK(ad::grad_check(lp, point) <= 1e-5);
  }
}

TEST_CASE("f1 score") {
  const std::vector<int> truth{0, 1, 2, 2, 1, 0, 0};
  CHECK(f1_score(truth, truth, Averaging::Micro) == 1.0);
  CHECK(f1_score(truth, truth, Averaging::Macro) == 1.0);
  const std::vector<int> pred{0, 2, 2, 1, 1, 0, 1};
  CHECK(f1_score(pred, truth, Averaging::Micro) == doctest::Approx(4.0 / 7.0));
  // per class: 0 -> 2*2/(4+0+1), 1 -> 2*1/(2+2+1), 2 -> 2*1/(2+1+1)
  CHECK(f1_score(pred, truth, Averaging::Macro) == doctest::Approx((0.8 + 0.4 + 0.5) / 3.0));
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<int> p(50), y(50);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < 50; ++i) {
      p[i] = static_cast<int>(rng() % 4);
      y[i] = static_cast<int>(rng() % 4);
      hits += p[i] == y[i];
    }
    CHECK(f1_score(p, y, Averaging::Micro) == static_cast<double>(hits) / 50.0);
  }
  CHECK_THROWS_AS(f1_score(std::vector<int>{1}, std::vector<int>{1, 2}, Averaging::Micro), InvalidInput);
  CHECK_THROWS_AS(f1_score(std::vector<int>{}, std::vector<int>{}, Averaging::Micro), InvalidInput);
}

TEST_CASE("auc score") {
  CHECK(auc_score(Vec{0.9, 0.8, 0.4, 0.3}, std::vector<int>{1, 0, 1, 0}) == 0.75);
  CHECK(auc_score(Vec{0.9, 0.8, 0.4, 0.3}, std::vector<int>{1, 1, 0, 0}) == 1.0);
  CHECK(auc_score(Vec{0.5, 0.5, 0.5, 0.5}, std::vector<int>{1, 0, 1, 0}) == 0.5);
  CHECK_THROWS_AS(auc_score(Vec{0.5, 0.2}, std::vector<int>{1, 1}), InvalidInput);
  CHECK_THROWS_AS(auc_score(Vec{0.5, 0.2}, std::vector<int>{1, 2}), InvalidInput);

  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    Vec s(40), ts(40);
    std::vector<int> y(40);
    for (std::size_t i = 0; i < 40; ++i) {
      s[i] = std::round(std::normal_distribution<double>(0, 1)(rng) * 4.0) / 4.0;  // ties included
      y[i] = static_cast<int>(i % 2);
      ts[i] = std::exp(3.0 * s[i]) - 7.0;
    }
    // brute-force pair count oracle
    double conc = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < 40; ++i)
      for (std::size_t j = 0; j < 40; ++j)
        if (y[i] == 1 && y[j] == 0) {
          pairs += 1.0;
          conc += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    CHECK(auc_score(s, y) == doctest::Approx(conc / pairs).epsilon(1e-14));
    CHECK(auc_score(ts, y) == auc_score(s, y));
  }
}

TEST_CASE("edge scores and argmax") {
  const Matrix z = Matrix::from_rows({{0, 0}, {0.5, 0}, {0, 0.2}});
  const std::vector<Edge> e{{0, 1}, {0, 2}};
  const auto s = edge_scores(z, e, kUnit);
  CHECK(s[0] == doctest::Approx(-std::log(3.0)).epsilon(1e-13));
  CHECK(s[1] > s[0]);
  CHECK(edge_scores(z, e, kUnit, true)[0] == doctest::Approx(-std::log(3.0) * std::log(3.0)).epsilon(1e-13));
  const Matrix sc = Matrix::from_rows({{1, 3, 3}, {5, 0, 1}});
  CHECK(argmax_rows(sc) == std::vector<int>{1, 0});
}
