#include "hypgw/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hypgw/geometry.hpp"

namespace hypgw::kernels {

namespace {

void check_pair_sets(const Matrix& x, const Matrix& z) {
  if (x.rows() != z.rows()) {
    throw InvalidInput("source and target sets differ in size (" + std::to_string(x.rows()) +
                       " vs " + std::to_string(z.rows()) + ")");
  }
  if (x.rows() < 2) throw InvalidInput("at least two points are required");
}

inline double source_base(std::span<const double> a, std::span<const double> b) {
  return squared_distance(a, b);
}

inline double apply_source(double base, SourceCost kind) {
  return kind == SourceCost::SquaredEuclidean ? base : std::log1p(base);
}

// d(cost)/d(base) for the source transform.
inline double source_slope(double base, SourceCost kind) {
  return kind == SourceCost::SquaredEuclidean ? 1.0 : 1.0 / (1.0 + base);
}

// Poincare distance from precomputed squared norms. Writes d/da into grad when non-empty.
inline double poincare_pair(std::span<const double> a, std::span<const double> b, double a2,
                            double b2, double c, std::span<double> grad) {
  const double r2 = squared_distance(a, b);
  const double aa = std::max(1.0 - c * a2, 1e-15);
  const double ab = std::max(1.0 - c * b2, 1e-15);
  const double s = std::sqrt(c * r2 / (aa * ab));
  const double sc = std::sqrt(c);
  const double d = 2.0 / sc * std::asinh(s);
  if (!grad.empty()) {
    if (r2 == 0.0) {
      std::fill(grad.begin(), grad.end(), 0.0);
    } else {
      const double h = std::sqrt(1.0 + s * s);
      const double coef_diff = 2.0 / (h * std::sqrt(r2) * std::sqrt(aa * ab));
      const double coef_self = 2.0 * sc * s / (h * aa);
      for (std::size_t k = 0; k < a.size(); ++k) grad[k] = coef_diff * (a[k] - b[k]) + coef_self * a[k];
    }
  }
  return d;
}

inline double lorentz_pair(std::span<const double> a, std::span<const double> b, double c,
                           std::span<double> grad) {
  double q = -(a[0] - b[0]) * (a[0] - b[0]);
  for (std::size_t k = 1; k < a.size(); ++k) q += (a[k] - b[k]) * (a[k] - b[k]);
  q *= 0.25 * c;
  const double sc = std::sqrt(c);
  if (q <= 0.0) {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    return 0.0;
  }
  const double sq = std::sqrt(q);
  if (!grad.empty()) {
    const double coef = sc / (2.0 * sq * std::sqrt(1.0 + q));
    grad[0] = -coef * (a[0] - b[0]);
    for (std::size_t k = 1; k < a.size(); ++k) grad[k] = coef * (a[k] - b[k]);
  }
  return 2.0 / sc * std::asinh(sq);
}

struct TargetEval {
  const Matrix& z;
  const CostKind& kind;
  double c;
  Vec sqnorms;

  TargetEval(const Matrix& z_, const CostKind& k, Curvature curv) : z(z_), kind(k), c(curv.value()) {
    if (kind.model == Model::Poincare) {
      sqnorms.resize(z.rows());
      for (std::size_t i = 0; i < z.rows(); ++i) sqnorms[i] = squared_norm(z.row(i));
    }
  }

  // Returns c_H(z_i, z_j); grad (if non-empty) receives d c_H / d z_i.
  double operator()(std::size_t i, std::size_t j, std::span<double> grad) const {
    const double d = kind.model == Model::Poincare
                         ? poincare_pair(z.row(i), z.row(j), sqnorms[i], sqnorms[j], c, grad)
                         : lorentz_pair(z.row(i), z.row(j), c, grad);
    if (kind.target == TargetCost::Geodesic) return d;
    if (!grad.empty()) {
      const double s = 1.0 / (1.0 + d);
      for (double& g : grad) g *= s;
    }
    return std::log1p(d);
  }
};

void scale_matrix(Matrix& m, double s) {
  for (double& v : m.data()) v *= s;
}

GmResult gm_sampled(const Matrix& x, const Matrix& z, const CostKind& kind, Curvature c,
                    bool want_grad_x, bool want_grad_z, const Matrix* source_costs,
                    std::uint64_t seed) {
  const std::size_t m = x.rows();
  const auto log2m = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(m))));
  const std::size_t k = m * log2m;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  const TargetEval target(z, kind, c);
  GmResult out;
  if (want_grad_z) out.grad_z = Matrix(m, z.cols());
  if (want_grad_x && source_costs == nullptr) out.grad_x = Matrix(m, x.cols());
  Vec gi(z.cols()), gj(z.cols());
  double total = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    std::size_t i = pick(rng), j = pick(rng);
    while (j == i) j = pick(rng);
    const double base = source_costs ? 0.0 : source_base(x.row(i), x.row(j));
    const double cx = source_costs ? (*source_costs)(i, j) : apply_source(base, kind.source);
    const double ch = target(i, j, want_grad_z ? std::span<double>(gi) : std::span<double>{});
    const double diff = cx - ch;
    total += diff * diff;
    if (want_grad_z) {
      target(j, i, gj);
      for (std::size_t q = 0; q < z.cols(); ++q) {
        out.grad_z(i, q) += -2.0 * diff * gi[q];
        out.grad_z(j, q) += -2.0 * diff * gj[q];
      }
    }
    if (!out.grad_x.empty()) {
      const double w = 2.0 * diff * source_slope(base, kind.source) * 2.0;
      for (std::size_t q = 0; q < x.cols(); ++q) {
        const double dq = x(i, q) - x(j, q);
        out.grad_x(i, q) += w * dq;
        out.grad_x(j, q) -= w * dq;
      }
    }
  }
  const double norm = 1.0 / static_cast<double>(k);
  out.value = total * norm;
  if (!out.grad_z.empty()) scale_matrix(out.grad_z, norm);
  if (!out.grad_x.empty()) scale_matrix(out.grad_x, norm);
  return out;
}

}  // namespace

double target_distance(std::span<const double> a, std::span<const double> b, Model model,
                       Curvature c, std::span<double> grad) {
  if (a.size() != b.size()) throw InvalidInput("target_distance: dimension mismatch");
  if (model == Model::Poincare) {
    return poincare_pair(a, b, squared_norm(a), squared_norm(b), c.value(), grad);
  }
  return lorentz_pair(a, b, c.value(), grad);
}

Matrix source_cost_matrix(const Matrix& x, SourceCost kind) {
  const std::size_t m = x.rows();
  Matrix out(m, m);
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < m; ++j) {
      out(i, j) = i == j ? 0.0 : apply_source(source_base(x.row(i), x.row(j)), kind);
    }
  }
  return out;
}

Matrix target_cost_matrix(const Matrix& z, const CostKind& kind, Curvature c) {
  const std::size_t m = z.rows();
  Matrix out(m, m);
  const TargetEval target(z, kind, c);
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < m; ++j) out(i, j) = i == j ? 0.0 : target(i, j, {});
  }
  return out;
}

GmResult gm(const Matrix& x, const Matrix& z, const CostKind& kind, Curvature c, bool want_grad_x,
            bool want_grad_z, const Matrix* source_costs, const GmOptions& opts) {
  check_pair_sets(x, z);
  const std::size_t m = x.rows();
  if (source_costs != nullptr && (source_costs->rows() != m || source_costs->cols() != m)) {
    throw InvalidInput("source cost matrix has the wrong shape");
  }
  if (opts.sample_large && m > kSampleThreshold) {
    return gm_sampled(x, z, kind, c, want_grad_x, want_grad_z, source_costs, opts.seed);
  }

  const TargetEval target(z, kind, c);
  GmResult out;
  if (want_grad_z) out.grad_z = Matrix(m, z.cols());
  const bool grad_x = want_grad_x && source_costs == nullptr;
  if (grad_x) out.grad_x = Matrix(m, x.cols());
  Vec row_value(m, 0.0);
  const auto rows = static_cast<std::ptrdiff_t>(m);

#pragma omp parallel
  {
    Vec g(want_grad_z ? z.cols() : 0);
#pragma omp for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        const double base = source_costs ? 0.0 : source_base(x.row(i), x.row(j));
        const double cx = source_costs ? (*source_costs)(i, j) : apply_source(base, kind.source);
        const double ch = target(i, j, g);
        const double diff = cx - ch;
        acc += diff * diff;
        // (i, j) and (j, i) contribute equally to the derivative in row i.
        if (want_grad_z) {
          const double w = -4.0 * diff;
          auto gz = out.grad_z.row(i);
          for (std::size_t q = 0; q < g.size(); ++q) gz[q] += w * g[q];
        }
        if (grad_x) {
          const double w = 8.0 * diff * source_slope(base, kind.source);
          auto gx = out.grad_x.row(i);
          const auto xi = x.row(i), xj = x.row(j);
          for (std::size_t q = 0; q < gx.size(); ++q) gx[q] += w * (xi[q] - xj[q]);
        }
      }
      row_value[i] = acc;
    }
  }

  double total = 0.0;
  for (double v : row_value) total += v;
  const double norm = 1.0 / (static_cast<double>(m) * static_cast<double>(m - 1));
  out.value = total * norm;
  if (!out.grad_z.empty()) scale_matrix(out.grad_z, norm);
  if (!out.grad_x.empty()) scale_matrix(out.grad_x, norm);
  return out;
}

double gm_value_serial(const Matrix& x, const Matrix& z, const CostKind& kind, Curvature c) {
  check_pair_sets(x, z);
  const std::size_t m = x.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double diff = cost_x(x.row(i), x.row(j), kind.source) - cost_h(z.row(i), z.row(j), kind, c);
      total += diff * diff;
    }
  }
  return total / (static_cast<double>(m) * static_cast<double>(m - 1));
}

GmResult gm_serial(const Matrix& x, const Matrix& z, const CostKind& kind, Curvature c,
                   bool want_grad_x, bool want_grad_z) {
  check_pair_sets(x, z);
  const std::size_t m = x.rows();
  GmResult out;
  if (want_grad_z) out.grad_z = Matrix(m, z.cols());
  if (want_grad_x) out.grad_x = Matrix(m, x.cols());
  Vec gi(z.cols()), gj(z.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const double base = squared_distance(x.row(i), x.row(j));
      const double cx = apply_source(base, kind.source);
      double ch = target_distance(z.row(i), z.row(j), kind.model, c, gi);
      target_distance(z.row(j), z.row(i), kind.model, c, gj);
      if (kind.target == TargetCost::Log1pGeodesic) {
        const double s = 1.0 / (1.0 + ch);
        for (std::size_t q = 0; q < gi.size(); ++q) {
          gi[q] *= s;
          gj[q] *= s;
        }
        ch = std::log1p(ch);
      }
      const double diff = cx - ch;
      total += diff * diff;
      if (want_grad_z) {
        for (std::size_t q = 0; q < z.cols(); ++q) {
          out.grad_z(i, q) -= 2.0 * diff * gi[q];
          out.grad_z(j, q) -= 2.0 * diff * gj[q];
        }
      }
      if (want_grad_x) {
        const double w = 4.0 * diff * source_slope(base, kind.source);
        for (std::size_t q = 0; q < x.cols(); ++q) {
          const double dq = x(i, q) - x(j, q);
          out.grad_x(i, q) += w * dq;
          out.grad_x(j, q) -= w * dq;
        }
      }
    }
  }
  const double norm = 1.0 / (static_cast<double>(m) * static_cast<double>(m - 1));
  out.value = total * norm;
  if (want_grad_z) scale_matrix(out.grad_z, norm);
  if (want_grad_x) scale_matrix(out.grad_x, norm);
  return out;
}

namespace {

inline double pair_ratio(double cx, double ch) {
  if (cx <= 0.0) return ch > 0.0 ? 0.0 : 1.0;
  const double r = ch / cx;
  return std::min(r, 1.0 / r);
}

}  // namespace

double min_cost_ratio(const Matrix& x, const Matrix& z, const CostKind& kind, Curvature c) {
  check_pair_sets(x, z);
  const std::size_t m = x.rows();
  const TargetEval target(z, kind, c);
  Vec row_min(m, 1.0);
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double best = 1.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      const double cx = apply_source(source_base(x.row(i), x.row(j)), kind.source);
      best = std::min(best, pair_ratio(cx, target(i, j, {})));
    }
    row_min[i] = best;
  }
  return *std::min_element(row_min.begin(), row_min.end());
}

double min_cost_ratio_serial(const Matrix& x, const Matrix& z, const CostKind& kind, Curvature c) {
  check_pair_sets(x, z);
  double best = 1.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = i + 1; j < x.rows(); ++j) {
      best = std::min(best, pair_ratio(cost_x(x.row(i), x.row(j), kind.source),
                                       cost_h(z.row(i), z.row(j), kind, c)));
    }
  }
  return best;
}

}  // namespace hypgw::kernels
