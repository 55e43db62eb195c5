#pragma once

// Sampling-error bound for the empirical GM cost under a bi-Lipschitz map:
// with probability at least p = 1 - 2 exp(-m C / (8 R^4)),
//   |GM(T; sample) - GM(T; mu)| <= t = C (1/alpha - 1)^2 / R^2.
// R and C are estimated from samples ("empirical" in reports).

#include <cstdint>
#include <iosfwd>
#include <string>

#include "hypgw/common.hpp"
#include "hypgw/cost.hpp"
#include "hypgw/gm.hpp"

namespace hypgw::bounds {

struct BoundReport {
  double alpha = 1.0;
  double R = 0.0;
  double C = 0.0;
  std::size_t m = 0;
  double deviation_bound = 0.0;
  double confidence = 0.0;
  // Bernstein form before substitution, with sigma^2 <= (1/alpha-1)^4 C and
  // b = (1/alpha-1)^2 R^2; reported for diagnostics only.
  double bernstein_confidence = 0.0;
  bool alpha_violation = false;
};

/// Largest alpha in (0, 1] for which the sample satisfies the bi-Lipschitz
/// inequality. A pair with c_X = 0 < c_H yields 0 (a violation).
double estimate_alpha(const gm::EmpiricalDistribution& x, const Matrix& z, const CostKind& kind,
                      Curvature c);

double estimate_R(const gm::EmpiricalDistribution& x, SourceCost kind);

/// Mean of c_X^4 over ordered pairs i != j.
double estimate_C(const gm::EmpiricalDistribution& x, SourceCost kind);

struct TheoremBound {
  double deviation = 0.0;
  double confidence = 0.0;
};

TheoremBound theorem_bound(double alpha, double R, double C, std::size_t m);

double bernstein_confidence(double alpha, double R, double C, std::size_t m);

BoundReport make_report(const gm::EmpiricalDistribution& x, const Matrix& z, const CostKind& kind,
                        Curvature c);

struct VerificationReport {
  BoundReport bound;          // alpha, R, C from the reference sample; m = trial size
  std::size_t reference_size = 0;
  double gm_reference = 0.0;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double violation_rate = 0.0;
  double max_deviation = 0.0;
  double mean_deviation = 0.0;
  /// sqrt(q (1 - q) / trials) with q = 1 - confidence.
  double binomial_sigma = 0.0;
};

/// Monte-Carlo check of the deviation inequality. The reference GM(T; mu) is
/// the empirical cost on one sample of size max(50 m, reference_size).
VerificationReport verify_bound_mc(const gm::TransportMap& t, const gm::Sampler& sampler, std::size_t m,
                                   std::size_t trials, std::uint64_t seed, const CostKind& kind,
                                   Curvature c, std::size_t reference_size = 0);

/// "field: value" lines.
void write_report(std::ostream& os, const BoundReport& r);
void write_report(std::ostream& os, const VerificationReport& r);

}  // namespace hypgw::bounds
