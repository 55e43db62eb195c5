#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hypgw/bounds.hpp"
#include "hypgw/geometry.hpp"
#include "test_util.hpp"

using namespace hypgw;
using namespace hypgw::bounds;

namespace {

const Curvature kUnit(1.0);

Matrix exp0_rows(const Matrix& v, double scale) {
  Matrix out(v.rows(), v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    Vec s(v.row(i).begin(), v.row(i).end());
    for (double& x : s) x *= scale;
    const Vec e = geometry::exp0(s, kUnit);
    std::copy(e.begin(), e.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

TEST_CASE("alpha estimation") {
  // c_X = 1 between the two points, d(0, exp0((0.5, 0))) = 1
  const gm::EmpiricalDistribution x(Matrix::from_rows({{0, 0}, {1, 0}}));
  CHECK(estimate_alpha(x, exp0_rows(x.points(), 0.5), {}, kUnit) == doctest::Approx(1.0).epsilon(1e-12));
  // target distance exactly 2 = 2 * c_X
  CHECK(estimate_alpha(x, exp0_rows(x.points(), 1.0), {}, kUnit) == doctest::Approx(0.5).epsilon(1e-12));

  const gm::EmpiricalDistribution dup(Matrix::from_rows({{0, 0}, {1, 0}, {1, 0}}));
  const Matrix z = exp0_rows(dup.points(), 0.5);
  CHECK(estimate_alpha(dup, z, {}, kUnit) == doctest::Approx(1.0).epsilon(1e-12));

  // a coincident source pair sent to distinct targets violates the condition
  Matrix bad = z;
  bad(2, 1) = 0.1;
  CHECK(estimate_alpha(dup, bad, {}, kUnit) == 0.0);
}

TEST_CASE("alpha is unchanged by target isometries") {
  std::mt19937_64 rng(3);
  const gm::EmpiricalDistribution x(testing::random_matrix(rng, 20, 2, 1.0));
  const Matrix z = exp0_rows(x.points(), 0.3);
  const double a = estimate_alpha(x, z, {}, kUnit);
  // Mobius translation by a fixed point is an isometry of the ball
  const Vec shift{0.3, -0.2};
  Matrix moved(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const Vec m = geometry::mobius_add(shift, z.row(i), kUnit);
    std::copy(m.begin(), m.end(), moved.row(i).begin());
  }
  CHECK(std::abs(estimate_alpha(x, moved, {}, kUnit) - a) <= 1e-9);
}

TEST_CASE("R and C estimates") {
  const gm::EmpiricalDistribution two(Matrix::from_rows({{0, 0}, {1, 0}}));
  CHECK(estimate_R(two, SourceCost::SquaredEuclidean) == 1.0);
  CHECK(estimate_C(two, SourceCost::SquaredEuclidean) == 1.0);

  const gm::EmpiricalDistribution same(Matrix::from_rows({{1, 1}, {1, 1}, {1, 1}}));
  CHECK(estimate_R(same, SourceCost::SquaredEuclidean) == 0.0);
  CHECK(estimate_C(same, SourceCost::SquaredEuclidean) == 0.0);
  CHECK_THROWS_AS(theorem_bound(1.0, 0.0, 0.0, 10), InvalidInput);

  const gm::EmpiricalDistribution line(Matrix::from_rows({{0}, {1}, {2}}));
  CHECK(estimate_R(line, SourceCost::SquaredEuclidean) == 4.0);
  CHECK(estimate_C(line, SourceCost::SquaredEuclidean) == doctest::Approx(86.0).epsilon(1e-14));
}

TEST_CASE("theorem bound arithmetic") {
  CHECK(theorem_bound(1.0, 2.0, 16.0, 100).deviation == 0.0);
  const auto b = theorem_bound(0.5, 2.0, 16.0, 100);
  CHECK(b.deviation == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(std::abs(b.confidence - (1.0 - 2.0 * std::exp(-12.5))) <= 1e-15);
  CHECK(std::abs(b.confidence - 0.9999926) <= 1e-6);
  double prev = 0.0;
  for (std::size_t m = 2; m < 2000; m += 37) {
    const double p = theorem_bound(0.7, 1.5, 2.0, m).confidence;
    CHECK(p >= prev);
    prev = p;
  }
  CHECK_THROWS_AS(theorem_bound(0.0, 1.0, 1.0, 10), InvalidInput);
  CHECK_THROWS_AS(theorem_bound(1.5, 1.0, 1.0, 10), InvalidInput);
  CHECK_THROWS_AS(theorem_bound(0.5, 1.0, 1.0, 1), InvalidInput);
  CHECK(bernstein_confidence(0.5, 2.0, 16.0, 100) >= 0.0);
  CHECK(bernstein_confidence(0.5, 2.0, 16.0, 100) <= 1.0);
}

TEST_CASE("monte carlo verification") {
  const gm::Sampler two_point = [](std::mt19937_64& rng) {
    return std::uniform_int_distribution<int>(0, 1)(rng) ? Vec{1.0, 0.0} : Vec{0.0, 0.0};
  };
  const gm::TransportMap iso = [](const Matrix& x) { return exp0_rows(x, 0.5); };
  const auto r = verify_bound_mc(iso, two_point, 20, 30, 1, {}, kUnit);
  CHECK(r.violations == 0);
  CHECK(r.violation_rate == 0.0);
  CHECK(r.bound.alpha == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.reference_size == 1000);

  const gm::Sampler square = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    return Vec{u(rng), u(rng)};
  };
  const gm::TransportMap shrink = [](const Matrix& x) { return exp0_rows(x, 0.2); };
  const auto a = verify_bound_mc(shrink, square, 30, 20, 7, {}, kUnit);
  const auto b = verify_bound_mc(shrink, square, 30, 20, 7, {}, kUnit);
  std::ostringstream sa, sb;
  write_report(sa, a);
  write_report(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().find("violation_rate: ") != std::string::npos);
  CHECK(sa.str().find("R_empirical: ") != std::string::npos);
}

TEST_CASE("report flags a bi-Lipschitz violation") {
  const gm::EmpiricalDistribution dup(Matrix::from_rows({{0, 0}, {0, 0}, {1, 0}}));
  const Matrix z = Matrix::from_rows({{0, 0}, {0.1, 0}, {0.4, 0}});
  const auto r = make_report(dup, z, {}, kUnit);
  CHECK(r.alpha_violation);
  CHECK(std::isinf(r.deviation_bound));
}
