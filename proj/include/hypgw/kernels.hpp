#pragma once

// Pairwise O(n m^2) kernels behind the Gromov-Monge regularizer.
//
// Each kernel has an OpenMP implementation and a serial reference. The
// parallel kernels partition work by row: row i owns every ordered pair
// (i, j) and (j, i), so per-row partial results are written without
// synchronization and reduced serially in row order. Output is therefore
// bit-identical for any thread count. The serial references walk ordered
// pairs in the textbook double loop and are kept for testing and
// benchmarking.

#include <cstdint>
#include <optional>

#include "hypgw/common.hpp"
#include "hypgw/cost.hpp"

namespace hypgw::kernels {

/// Above kSampleThreshold points the optional pair sampler draws
/// m * ceil(log2 m) unordered pairs instead of the full double sum.
inline constexpr std::size_t kSampleThreshold = 2048;

struct GmOptions {
  bool sample_large = false;
  std::uint64_t seed = 0;
};

struct GmResult {
  double value = 0.0;
  Matrix grad_x;  // empty unless requested
  Matrix grad_z;  // empty unless requested
};

/// Symmetric matrix of source costs c_X(x_i, x_j).
Matrix source_cost_matrix(const Matrix& x, SourceCost kind);

/// Symmetric matrix of target costs c_H(z_i, z_j), closed-form evaluation.
Matrix target_cost_matrix(const Matrix& z, const CostKind& kind, Curvature c);

/// Empirical GM value and optional gradients. When `source_costs` is given it
/// replaces evaluation of c_X (and grad_x is not produced).
GmResult gm(const Matrix& x, const Matrix& z, const CostKind& kind, Curvature c, bool want_grad_x,
            bool want_grad_z, const Matrix* source_costs = nullptr, const GmOptions& opts = {});

/// Textbook ordered double loop over geometry-module distances (value only).
double gm_value_serial(const Matrix& x, const Matrix& z, const CostKind& kind, Curvature c);

/// Ordered double loop with per-pair gradient scattering into both endpoints.
GmResult gm_serial(const Matrix& x, const Matrix& z, const CostKind& kind, Curvature c,
                   bool want_grad_x, bool want_grad_z);

/// min over pairs with c_X > 0 of min(r, 1/r), r = c_H / c_X. Pairs with both
/// costs zero are skipped; c_X == 0 < c_H gives 0. Returns 1 when no pair
/// qualifies.
double min_cost_ratio(const Matrix& x, const Matrix& z, const CostKind& kind, Curvature c);
double min_cost_ratio_serial(const Matrix& x, const Matrix& z, const CostKind& kind, Curvature c);

/// Closed-form target distance and its gradient with respect to `a`.
/// `grad` may be empty to skip the gradient.
double target_distance(std::span<const double> a, std::span<const double> b, Model model,
                       Curvature c, std::span<double> grad);

}  // namespace hypgw::kernels
