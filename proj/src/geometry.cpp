#include "hypgw/geometry.hpp"

#include <algorithm>

namespace hypgw::geometry {

namespace {

void require_same_dim(std::span<const double> x, std::span<const double> y, const char* what) {
  if (x.size() != y.size()) {
    throw InvalidInput(std::string(what) + ": dimension mismatch (" + std::to_string(x.size()) +
                       " vs " + std::to_string(y.size()) + ")");
  }
}

Vec reproject_if_needed(Vec r, Curvature c) {
  if (c.value() * squared_norm(r) > 1.0 - kBallEps) return project_to_ball(r, c);
  return r;
}

}  // namespace

bool in_ball(std::span<const double> x, Curvature c) {
  return all_finite(x) && c.value() * squared_norm(x) <= 1.0 - kBallEps;
}

bool on_hyperboloid(std::span<const double> x, Curvature c, double tol) {
  if (x.empty() || !all_finite(x) || !(x[0] > 0.0)) return false;
  return std::abs(lorentz_inner(x, x) + 1.0 / c.value()) <= tol;
}

double conformal_factor(std::span<const double> x, Curvature c) {
  return 2.0 / (1.0 - c.value() * squared_norm(x));
}

Vec mobius_add(std::span<const double> x, std::span<const double> y, Curvature c) {
  require_same_dim(x, y, "mobius_add");
  const double k = c.value();
  const double xy = dot(x, y);
  const double x2 = squared_norm(x);
  const double y2 = squared_norm(y);
  const double a = 1.0 + 2.0 * k * xy + k * y2;
  const double b = 1.0 - k * x2;
  const double den = 1.0 + 2.0 * k * xy + k * k * x2 * y2;
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = (a * x[i] + b * y[i]) / den;
  return reproject_if_needed(std::move(r), c);
}

Vec mobius_matvec(const Matrix& m, std::span<const double> x, Curvature c) {
  if (m.cols() != x.size()) {
    throw InvalidInput("mobius_matvec: matrix has " + std::to_string(m.cols()) +
                       " columns, point has " + std::to_string(x.size()) + " entries");
  }
  Vec mx(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) mx[r] = dot(m.row(r), x);
  const double xn = std::sqrt(squared_norm(x));
  const double mxn = std::sqrt(squared_norm(mx));
  if (xn == 0.0 || mxn == 0.0) return Vec(m.rows(), 0.0);
  const double sc = c.sqrt();
  const double scale = std::tanh(mxn / xn * guarded_artanh(sc * xn)) / (sc * mxn);
  for (double& v : mx) v *= scale;
  return reproject_if_needed(std::move(mx), c);
}

double poincare_distance(std::span<const double> x, std::span<const double> y, Curvature c) {
  require_same_dim(x, y, "poincare_distance");
  Vec neg(x.begin(), x.end());
  for (double& v : neg) v = -v;
  // -x (+) y without re-projection: the norm is only fed to artanh.
  const double k = c.value();
  const double xy = dot(neg, y);
  const double x2 = squared_norm(neg);
  const double y2 = squared_norm(y);
  const double a = 1.0 + 2.0 * k * xy + k * y2;
  const double b = 1.0 - k * x2;
  const double den = 1.0 + 2.0 * k * xy + k * k * x2 * y2;
  double n2 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = (a * neg[i] + b * y[i]) / den;
    n2 += v * v;
  }
  const double sc = c.sqrt();
  return 2.0 / sc * guarded_artanh(sc * std::sqrt(n2));
}

Vec exp0(std::span<const double> v, Curvature c) {
  const double n = std::sqrt(squared_norm(v));
  if (n == 0.0) return Vec(v.size(), 0.0);
  const double sc = c.sqrt();
  const double scale = std::tanh(sc * n) / (sc * n);
  Vec r(v.begin(), v.end());
  for (double& e : r) e *= scale;
  return project_to_ball(r, c);
}

Vec log0(std::span<const double> y, Curvature c) {
  const double n = std::sqrt(squared_norm(y));
  if (n == 0.0) return Vec(y.size(), 0.0);
  const double sc = c.sqrt();
  const double scale = guarded_artanh(sc * n) / (sc * n);
  Vec r(y.begin(), y.end());
  for (double& e : r) e *= scale;
  return r;
}

Vec project_to_ball(std::span<const double> x, Curvature c) {
  if (!all_finite(x)) throw InvalidInput("project_to_ball: non-finite coordinates");
  Vec r(x.begin(), x.end());
  const double n2 = squared_norm(x);
  if (c.value() * n2 <= 1.0 - kBallEps) return r;
  const double target = (1.0 - kBallEps) / c.sqrt();
  const double scale = target / std::sqrt(n2);
  for (double& e : r) e *= scale;
  return r;
}

double lorentz_inner(std::span<const double> x, std::span<const double> y) {
  require_same_dim(x, y, "lorentz_inner");
  if (x.empty()) throw InvalidInput("lorentz_inner: empty vectors");
  double s = -x[0] * y[0];
  for (std::size_t i = 1; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double lorentz_distance(std::span<const double> x, std::span<const double> y, Curvature c) {
  require_same_dim(x, y, "lorentz_distance");
  // On the hyperboloid -c<x,y> = 1 + (c/2)<x-y,x-y>, and acosh(1 + 2q) =
  // 2 asinh(sqrt(q)); this form keeps full precision for nearby points.
  double q = -(x[0] - y[0]) * (x[0] - y[0]);
  for (std::size_t i = 1; i < x.size(); ++i) q += (x[i] - y[i]) * (x[i] - y[i]);
  q *= 0.25 * c.value();
  return 2.0 * std::asinh(std::sqrt(q > 0.0 ? q : 0.0)) / c.sqrt();
}

Vec lift_to_lorentz(std::span<const double> v, Curvature c) {
  Vec r(v.size() + 1);
  r[0] = std::sqrt(1.0 / c.value() + squared_norm(v));
  std::copy(v.begin(), v.end(), r.begin() + 1);
  return r;
}

Vec poincare_to_lorentz(std::span<const double> x, Curvature c) {
  const double u = c.value() * squared_norm(x);
  const double den = 1.0 - u;
  Vec r(x.size() + 1);
  r[0] = (1.0 + u) / (den * c.sqrt());
  for (std::size_t i = 0; i < x.size(); ++i) r[i + 1] = 2.0 * x[i] / den;
  return r;
}

Vec lorentz_to_poincare(std::span<const double> y, Curvature c) {
  if (y.empty()) throw InvalidInput("lorentz_to_poincare: empty point");
  const double den = 1.0 + c.sqrt() * y[0];
  Vec r(y.size() - 1);
  for (std::size_t i = 1; i < y.size(); ++i) r[i - 1] = y[i] / den;
  return reproject_if_needed(std::move(r), c);
}

}  // namespace hypgw::geometry
