#include "hypgw/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "hypgw/kernels.hpp"
#include "hypgw/text.hpp"

namespace hypgw::bounds {

double estimate_alpha(const gm::EmpiricalDistribution& x, const Matrix& z, const CostKind& kind,
                      Curvature c) {
  return kernels::min_cost_ratio(x.points(), z, kind, c);
}

double estimate_R(const gm::EmpiricalDistribution& x, SourceCost kind) {
  const Matrix& p = x.points();
  double r = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = i + 1; j < p.rows(); ++j) r = std::max(r, cost_x(p.row(i), p.row(j), kind));
  return r;
}

double estimate_C(const gm::EmpiricalDistribution& x, SourceCost kind) {
  const Matrix& p = x.points();
  const std::size_t m = p.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double v = cost_x(p.row(i), p.row(j), kind);
      total += 2.0 * v * v * v * v;
    }
  }
  return total / (static_cast<double>(m) * static_cast<double>(m - 1));
}

namespace {

void check_bound_args(double alpha, double R, double C, std::size_t m) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in (0, 1]");
  if (!(R > 0.0)) throw InvalidInput("R must be positive (degenerate support)");
  if (!(C >= 0.0)) throw InvalidInput("C must be nonnegative");
  if (m < 2) throw InvalidInput("m must be at least 2");
}

}  // namespace

TheoremBound theorem_bound(double alpha, double R, double C, std::size_t m) {
  check_bound_args(alpha, R, C, m);
  const double g = 1.0 / alpha - 1.0;
  TheoremBound b;
  b.deviation = C * g * g / (R * R);
  const double r4 = R * R * R * R;
  b.confidence = std::max(0.0, 1.0 - 2.0 * std::exp(-static_cast<double>(m) * C / (8.0 * r4)));
  return b;
}

double bernstein_confidence(double alpha, double R, double C, std::size_t m) {
  check_bound_args(alpha, R, C, m);
  const double g = 1.0 / alpha - 1.0;
  const double t = C * g * g / (R * R);
  const double sigma2 = g * g * g * g * C;
  const double b = g * g * R * R;
  const double den = 6.0 * (sigma2 + b * t / 3.0);
  if (den == 0.0) return 1.0;
  return std::max(0.0, 1.0 - 2.0 * std::exp(-static_cast<double>(m) * t * t / den));
}

BoundReport make_report(const gm::EmpiricalDistribution& x, const Matrix& z, const CostKind& kind,
                        Curvature c) {
  BoundReport r;
  r.m = x.size();
  r.alpha = estimate_alpha(x, z, kind, c);
  r.R = estimate_R(x, kind.source);
  r.C = estimate_C(x, kind.source);
  r.alpha_violation = r.alpha <= 0.0;
  if (!r.alpha_violation && r.R > 0.0) {
    const auto tb = theorem_bound(r.alpha, r.R, r.C, r.m);
    r.deviation_bound = tb.deviation;
    r.confidence = tb.confidence;
    r.bernstein_confidence = bernstein_confidence(r.alpha, r.R, r.C, r.m);
  } else {
    r.deviation_bound = std::numeric_limits<double>::infinity();
  }
  return r;
}

VerificationReport verify_bound_mc(const gm::TransportMap& t, const gm::Sampler& sampler, std::size_t m,
                                   std::size_t trials, std::uint64_t seed, const CostKind& kind,
                                   Curvature c, std::size_t reference_size) {
  if (m < 2 || trials == 0) throw InvalidInput("verify_bound_mc: need m >= 2 and trials >= 1");
  VerificationReport out;
  out.trials = trials;
  out.reference_size = std::max(50 * m, reference_size);

  std::mt19937_64 ref_rng(gm::trial_seed(seed, ~std::uint64_t{0}));
  const gm::EmpiricalDistribution ref(gm::draw(sampler, out.reference_size, ref_rng));
  const Matrix ref_z = t(ref.points());
  out.gm_reference = gm::gm_empirical(ref, ref_z, kind, c);

  BoundReport& b = out.bound;
  b.m = m;
  b.alpha = estimate_alpha(ref, ref_z, kind, c);
  b.R = estimate_R(ref, kind.source);
  b.C = estimate_C(ref, kind.source);
  b.alpha_violation = b.alpha <= 0.0;
  if (b.alpha_violation) throw InvalidInput("verify_bound_mc: map violates the bi-Lipschitz condition");
  const auto tb = theorem_bound(b.alpha, b.R, b.C, m);
  b.deviation_bound = tb.deviation;
  b.confidence = tb.confidence;
  b.bernstein_confidence = bernstein_confidence(b.alpha, b.R, b.C, m);

  const auto stats = gm::gm_monte_carlo(t, sampler, m, trials, seed, kind, c);
  double dev_sum = 0.0;
  for (double v : stats.samples) {
    const double dev = std::abs(v - out.gm_reference);
    dev_sum += dev;
    out.max_deviation = std::max(out.max_deviation, dev);
    if (dev > b.deviation_bound) ++out.violations;
  }
  out.mean_deviation = dev_sum / static_cast<double>(trials);
  out.violation_rate = static_cast<double>(out.violations) / static_cast<double>(trials);
  const double q = 1.0 - b.confidence;
  out.binomial_sigma = std::sqrt(q * (1.0 - q) / static_cast<double>(trials));
  return out;
}

void write_report(std::ostream& os, const BoundReport& r) {
  os << "alpha: " << text::format_double(r.alpha) << '\n'
     << "alpha_violation: " << (r.alpha_violation ? "true" : "false") << '\n'
     << "R_empirical: " << text::format_double(r.R) << '\n'
     << "C_empirical: " << text::format_double(r.C) << '\n'
     << "m: " << r.m << '\n'
     << "deviation_bound: " << text::format_double(r.deviation_bound) << '\n'
     << "confidence: " << text::format_double(r.confidence) << '\n'
     << "bernstein_confidence: " << text::format_double(r.bernstein_confidence) << '\n';
}

void write_report(std::ostream& os, const VerificationReport& r) {
  write_report(os, r.bound);
  os << "reference_size: " << r.reference_size << '\n'
     << "gm_reference: " << text::format_double(r.gm_reference) << '\n'
     << "trials: " << r.trials << '\n'
     << "violations: " << r.violations << '\n'
     << "violation_rate: " << text::format_double(r.violation_rate) << '\n'
     << "max_deviation: " << text::format_double(r.max_deviation) << '\n'
     << "mean_deviation: " << text::format_double(r.mean_deviation) << '\n'
     << "binomial_sigma: " << text::format_double(r.binomial_sigma) << '\n';
}

}  // namespace hypgw::bounds
