#include "hypgw/tape_ops.hpp"

#include "hypgw/geometry.hpp"

namespace hypgw::tape_ops {

std::vector<double> values(std::span<const Var> v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const Var& x : v) out.push_back(x.value());
  return out;
}

Var squared_norm(std::span<const Var> v) { return ad::dot(v, v); }

VarVec scale(std::span<const Var> v, Var s) {
  VarVec out;
  out.reserve(v.size());
  for (const Var& x : v) out.push_back(x * s);
  return out;
}

VarVec add(std::span<const Var> a, std::span<const Var> b) {
  if (a.size() != b.size()) throw InvalidInput("add: dimension mismatch");
  VarVec out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a[i] + b[i]);
  return out;
}

VarVec project_to_ball(std::span<const Var> x, Curvature c) {
  double n2 = 0.0;
  for (const Var& v : x) n2 += v.value() * v.value();
  if (!std::isfinite(n2)) throw NumericalError("project_to_ball: non-finite coordinates on tape");
  if (c.value() * n2 <= 1.0 - geometry::kBallEps) return VarVec(x.begin(), x.end());
  const Var s = ((1.0 - geometry::kBallEps) / c.sqrt()) / ad::norm(x);
  return scale(x, s);
}

VarVec exp0(std::span<const Var> v, Curvature c) {
  const Var n = ad::norm(v);
  // exp0 has Jacobian I at the origin; passing the zero vector through keeps that.
  if (n.value() == 0.0) return VarVec(v.begin(), v.end());
  const double sc = c.sqrt();
  const Var s = ad::tanh(sc * n) / (sc * n);
  return project_to_ball(scale(v, s), c);
}

VarVec log0(std::span<const Var> y, Curvature c) {
  const Var n = ad::norm(y);
  if (n.value() == 0.0) return VarVec(y.begin(), y.end());
  const double sc = c.sqrt();
  const Var s = ad::artanh(ad::clamp(sc * n, 0.0, geometry::kArtanhClamp)) / (sc * n);
  return scale(y, s);
}

VarVec mobius_add(std::span<const Var> x, std::span<const Var> y, Curvature c) {
  if (x.size() != y.size()) throw InvalidInput("mobius_add: dimension mismatch");
  const double k = c.value();
  const Var xy = ad::dot(x, y);
  const Var x2 = ad::dot(x, x);
  const Var y2 = ad::dot(y, y);
  const Var a = 1.0 + 2.0 * k * xy + k * y2;
  const Var b = 1.0 - k * x2;
  const Var den = 1.0 + 2.0 * k * xy + (k * k) * (x2 * y2);
  const Var inv = 1.0 / den;
  VarVec r;
  r.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r.push_back((a * x[i] + b * y[i]) * inv);
  return project_to_ball(r, c);
}

VarVec mobius_matvec(std::span<const Var> weight, std::size_t rows, std::span<const Var> x, Curvature c) {
  const std::size_t cols = x.size();
  if (weight.size() != rows * cols) throw InvalidInput("mobius_matvec: weight shape mismatch");
  VarVec mx;
  mx.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) mx.push_back(ad::dot(weight.subspan(r * cols, cols), x));
  const Var xn = ad::norm(x);
  const Var mxn = ad::norm(mx);
  // Near x = 0 the map is x -> Mx, so returning Mx keeps the right Jacobian.
  if (xn.value() == 0.0 || mxn.value() == 0.0) return mx;
  const double sc = c.sqrt();
  const Var inner = (mxn / xn) * ad::artanh(ad::clamp(sc * xn, 0.0, geometry::kArtanhClamp));
  const Var s = ad::tanh(inner) / (sc * mxn);
  return project_to_ball(scale(mx, s), c);
}

VarVec affine(std::span<const Var> weight, std::span<const Var> bias, std::span<const Var> x) {
  const std::size_t rows = bias.size();
  const std::size_t cols = x.size();
  if (weight.size() != rows * cols) throw InvalidInput("affine: weight shape mismatch");
  VarVec out;
  out.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) out.push_back(ad::dot(weight.subspan(r * cols, cols), x) + bias[r]);
  return out;
}

Var poincare_distance(std::span<const Var> x, std::span<const Var> y, Curvature c) {
  if (x.size() != y.size()) throw InvalidInput("poincare_distance: dimension mismatch");
  VarVec neg;
  neg.reserve(x.size());
  for (const Var& v : x) neg.push_back(-v);
  const double k = c.value();
  const Var xy = ad::dot(neg, y);
  const Var x2 = ad::dot(neg, neg);
  const Var y2 = ad::dot(y, y);
  const Var a = 1.0 + 2.0 * k * xy + k * y2;
  const Var b = 1.0 - k * x2;
  const Var den = 1.0 + 2.0 * k * xy + (k * k) * (x2 * y2);
  VarVec r;
  r.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r.push_back((a * neg[i] + b * y[i]) / den);
  const double sc = c.sqrt();
  return (2.0 / sc) * ad::artanh(ad::clamp(sc * ad::norm(r), 0.0, geometry::kArtanhClamp));
}

VarVec poincare_to_lorentz(std::span<const Var> x, Curvature c) {
  const Var u = c.value() * ad::dot(x, x);
  const Var inv = 1.0 / (1.0 - u);
  VarVec out;
  out.reserve(x.size() + 1);
  out.push_back((1.0 + u) * inv / c.sqrt());
  for (const Var& v : x) out.push_back(2.0 * v * inv);
  return out;
}

}  // namespace hypgw::tape_ops
