#include "hypgw/gm.hpp"

#include <algorithm>
#include <numeric>

#include "hypgw/geometry.hpp"

namespace hypgw {

std::string to_string(SourceCost k) {
  return k == SourceCost::SquaredEuclidean ? "sqeuclidean" : "log1p-sqeuclidean";
}
std::string to_string(TargetCost k) { return k == TargetCost::Geodesic ? "geodesic" : "log1p-geodesic"; }
std::string to_string(Model m) { return m == Model::Poincare ? "poincare" : "lorentz"; }

SourceCost parse_source_cost(const std::string& s) {
  if (s == "sqeuclidean") return SourceCost::SquaredEuclidean;
  if (s == "log1p-sqeuclidean") return SourceCost::Log1pSquaredEuclidean;
  throw InvalidInput("unknown source cost '" + s + "'");
}

TargetCost parse_target_cost(const std::string& s) {
  if (s == "geodesic") return TargetCost::Geodesic;
  if (s == "log1p-geodesic") return TargetCost::Log1pGeodesic;
  throw InvalidInput("unknown target cost '" + s + "'");
}

Model parse_model(const std::string& s) {
  if (s == "poincare") return Model::Poincare;
  if (s == "lorentz") return Model::Lorentz;
  throw InvalidInput("unknown model '" + s + "'");
}

double cost_x(std::span<const double> x, std::span<const double> xp, SourceCost kind) {
  if (x.size() != xp.size()) throw InvalidInput("cost_x: dimension mismatch");
  const double base = squared_distance(x, xp);
  return kind == SourceCost::SquaredEuclidean ? base : std::log1p(base);
}

double cost_h(std::span<const double> z, std::span<const double> zp, const CostKind& kind, Curvature c) {
  if (z.size() != zp.size()) throw InvalidInput("cost_h: dimension mismatch");
  double d = 0.0;
  if (kind.model == Model::Poincare) {
    if (!geometry::in_ball(z, c) || !geometry::in_ball(zp, c)) {
      throw InvalidInput("cost_h: point is not in the Poincare ball");
    }
    d = geometry::poincare_distance(z, zp, c);
  } else {
    if (!geometry::on_hyperboloid(z, c, 1e-6) || !geometry::on_hyperboloid(zp, c, 1e-6)) {
      throw InvalidInput("cost_h: point is not on the hyperboloid");
    }
    d = geometry::lorentz_distance(z, zp, c);
  }
  return kind.target == TargetCost::Geodesic ? d : std::log1p(d);
}

namespace gm {

EmpiricalDistribution::EmpiricalDistribution(Matrix points) : points_(std::move(points)) {
  if (points_.rows() < 2) throw InvalidInput("empirical distribution needs at least 2 points");
  if (!all_finite(points_.data())) throw InvalidInput("empirical distribution has non-finite entries");
}

double gm_empirical(const EmpiricalDistribution& x, const Matrix& z, const CostKind& kind, Curvature c,
                    const kernels::GmOptions& opts) {
  return kernels::gm(x.points(), z, kind, c, false, false, nullptr, opts).value;
}

kernels::GmResult gm_empirical_grad(const EmpiricalDistribution& x, const Matrix& z,
                                    const CostKind& kind, Curvature c) {
  return kernels::gm(x.points(), z, kind, c, true, true);
}

double gm_bruteforce_optimal(const EmpiricalDistribution& x, const Matrix& y, const CostKind& kind,
                             Curvature c) {
  const std::size_t n = x.size();
  if (y.rows() != n) throw InvalidInput("bruteforce: point sets differ in size");
  if (n > kBruteForceMax) {
    throw InvalidInput("bruteforce: n = " + std::to_string(n) + " exceeds " +
                       std::to_string(kBruteForceMax));
  }
  Matrix cx(n, n), ch(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cx(i, j) = cost_x(x.points().row(i), x.points().row(j), kind.source);
      ch(i, j) = cost_h(y.row(i), y.row(j), kind, c);
    }
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double diff = cx(i, j) - ch(perm[i], perm[j]);
        total += diff * diff;
      }
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / (static_cast<double>(n) * static_cast<double>(n - 1));
}

Matrix draw(const Sampler& sampler, std::size_t m, std::mt19937_64& rng) {
  std::vector<Vec> rows;
  rows.reserve(m);
  for (std::size_t i = 0; i < m; ++i) rows.push_back(sampler(rng));
  return Matrix::from_rows(rows);
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
  // splitmix64 finalizer
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (trial + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

MonteCarloStats gm_monte_carlo(const TransportMap& t, const Sampler& sampler, std::size_t m,
                               std::size_t trials, std::uint64_t seed, const CostKind& kind,
                               Curvature c) {
  if (m < 2) throw InvalidInput("monte carlo: m must be at least 2");
  if (trials == 0) throw InvalidInput("monte carlo: trials must be positive");
  MonteCarloStats out;
  out.samples.resize(trials);
  for (std::size_t k = 0; k < trials; ++k) {
    std::mt19937_64 rng(trial_seed(seed, k));
    const EmpiricalDistribution x(draw(sampler, m, rng));
    out.samples[k] = gm_empirical(x, t(x.points()), kind, c);
  }
  out.mean = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) / static_cast<double>(trials);
  double var = 0.0;
  for (double v : out.samples) var += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(var / static_cast<double>(trials));
  return out;
}

}  // namespace gm
}  // namespace hypgw
