#pragma once

// Poincare-ball operations composed from tape primitives. These mirror the
// double-precision versions in geometry.hpp, which serve as their oracle.

#include <span>

#include "hypgw/ad.hpp"
#include "hypgw/common.hpp"

namespace hypgw::tape_ops {

using ad::Var;
using ad::VarVec;

std::vector<double> values(std::span<const Var> v);

Var squared_norm(std::span<const Var> v);
VarVec scale(std::span<const Var> v, Var s);
VarVec add(std::span<const Var> a, std::span<const Var> b);

VarVec project_to_ball(std::span<const Var> x, Curvature c);
VarVec exp0(std::span<const Var> v, Curvature c);
VarVec log0(std::span<const Var> y, Curvature c);
VarVec mobius_add(std::span<const Var> x, std::span<const Var> y, Curvature c);

/// `weight` is row-major with `rows` rows and x.size() columns.
VarVec mobius_matvec(std::span<const Var> weight, std::size_t rows, std::span<const Var> x, Curvature c);

/// Affine map weight * x + bias (weight row-major, rows = bias.size()).
VarVec affine(std::span<const Var> weight, std::span<const Var> bias, std::span<const Var> x);

Var poincare_distance(std::span<const Var> x, std::span<const Var> y, Curvature c);

VarVec poincare_to_lorentz(std::span<const Var> x, Curvature c);

}  // namespace hypgw::tape_ops
