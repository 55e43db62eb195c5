#pragma once

// Empirical Gromov-Monge cost between a Euclidean sample and its image
// under a transport map into hyperbolic space:
//
//   GM(T; {x_i}) = 1/(m(m-1)) * sum_{i,j} |c_X(x_i, x_j) - c_H(T x_i, T x_j)|^2

#include <cstdint>
#include <functional>
#include <random>

#include "hypgw/common.hpp"
#include "hypgw/cost.hpp"
#include "hypgw/kernels.hpp"

namespace hypgw::gm {

/// Uniformly weighted point sample; rows are points.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(Matrix points);
  const Matrix& points() const { return points_; }
  std::size_t size() const { return points_.rows(); }

 private:
  Matrix points_;
};

/// Index-aligned: z.row(i) is the image of x.row(i).
double gm_empirical(const EmpiricalDistribution& x, const Matrix& z, const CostKind& kind, Curvature c,
                    const kernels::GmOptions& opts = {});

kernels::GmResult gm_empirical_grad(const EmpiricalDistribution& x, const Matrix& z,
                                    const CostKind& kind, Curvature c);

/// Minimum over all bijections sigma of the empirical cost with z_i := y_sigma(i).
/// Limited to n <= 8.
double gm_bruteforce_optimal(const EmpiricalDistribution& x, const Matrix& y, const CostKind& kind,
                             Curvature c);

inline constexpr std::size_t kBruteForceMax = 8;

using Sampler = std::function<Vec(std::mt19937_64&)>;
using TransportMap = std::function<Matrix(const Matrix&)>;

/// Draws m points with `sampler`, one generator per call.
Matrix draw(const Sampler& sampler, std::size_t m, std::mt19937_64& rng);

/// Deterministic per-trial seed derived from a master seed.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial);

struct MonteCarloStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> samples;
};

/// Mean and (population) standard deviation of the empirical cost over
/// `trials` independent m-samples.
MonteCarloStats gm_monte_carlo(const TransportMap& t, const Sampler& sampler, std::size_t m,
                               std::size_t trials, std::uint64_t seed, const CostKind& kind,
                               Curvature c);

}  // namespace hypgw::gm
