#pragma once

// Closed-form operations on the Poincare ball and the Lorentz hyperboloid.
//
// All functions are pure and operate in double precision. Poincare points
// satisfy c*|x|^2 <= 1 - kBallEps; Lorentz points satisfy <x,x>_L = -1/c
// with x[0] > 0.

#include <span>

#include "hypgw/common.hpp"

namespace hypgw::geometry {

inline constexpr double kBallEps = 1e-5;
inline constexpr double kArtanhClamp = 1.0 - 1e-15;
inline constexpr double kLorentzTol = 1e-9;

bool in_ball(std::span<const double> x, Curvature c);
bool on_hyperboloid(std::span<const double> x, Curvature c, double tol = kLorentzTol);

double conformal_factor(std::span<const double> x, Curvature c);

Vec mobius_add(std::span<const double> x, std::span<const double> y, Curvature c);

/// Mobius matrix action. `m` is k x n, `x` has n entries.
Vec mobius_matvec(const Matrix& m, std::span<const double> x, Curvature c);

double poincare_distance(std::span<const double> x, std::span<const double> y, Curvature c);

Vec exp0(std::span<const double> v, Curvature c);
Vec log0(std::span<const double> y, Curvature c);

/// Rescales onto the ball of norm (1 - kBallEps)/sqrt(c) when outside the
/// admissible region. Throws InvalidInput on non-finite entries.
Vec project_to_ball(std::span<const double> x, Curvature c);

double lorentz_inner(std::span<const double> x, std::span<const double> y);
double lorentz_distance(std::span<const double> x, std::span<const double> y, Curvature c);

/// Prepends x0 = sqrt(1/c + |v|^2).
Vec lift_to_lorentz(std::span<const double> v, Curvature c);

Vec poincare_to_lorentz(std::span<const double> x, Curvature c);
Vec lorentz_to_poincare(std::span<const double> y, Curvature c);

// numerically guarded scalar helpers shared with the pairwise kernels
inline double guarded_artanh(double a) {
  if (a > kArtanhClamp) a = kArtanhClamp;
  if (a < -kArtanhClamp) a = -kArtanhClamp;
  return std::atanh(a);
}

inline double guarded_acosh(double a) { return std::acosh(a < 1.0 ? 1.0 : a); }

}  // namespace hypgw::geometry
