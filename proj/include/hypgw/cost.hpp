#pragma once

#include <span>
#include <string>

#include "hypgw/common.hpp"

namespace hypgw {

enum class SourceCost { SquaredEuclidean, Log1pSquaredEuclidean };
enum class TargetCost { Geodesic, Log1pGeodesic };
enum class Model { Poincare, Lorentz };

struct CostKind {
  SourceCost source = SourceCost::SquaredEuclidean;
  TargetCost target = TargetCost::Geodesic;
  Model model = Model::Poincare;

  bool operator==(const CostKind&) const = default;
};

std::string to_string(SourceCost k);
std::string to_string(TargetCost k);
std::string to_string(Model m);
SourceCost parse_source_cost(const std::string& s);
TargetCost parse_target_cost(const std::string& s);
Model parse_model(const std::string& s);

/// |x - x'|^2 or log(1 + |x - x'|^2).
double cost_x(std::span<const double> x, std::span<const double> xp, SourceCost kind);

/// d or log(1 + d), with d the geodesic distance of the declared model.
/// Points must carry the model's coordinate count (n for Poincare, n + 1 for
/// Lorentz); a mismatch is reported as InvalidInput.
double cost_h(std::span<const double> z, std::span<const double> zp, const CostKind& kind, Curvature c);

}  // namespace hypgw
