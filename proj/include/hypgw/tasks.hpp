#pragma once

// Node-classification and link-prediction heads, losses and metrics.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hypgw/ad.hpp"
#include "hypgw/common.hpp"

namespace hypgw::tasks {

using Edge = std::pair<std::uint32_t, std::uint32_t>;

struct FermiDiracParams {
  double r = 2.0;
  double t = 1.0;
};

struct EdgeBatch {
  std::vector<Edge> positives;
  std::vector<Edge> negatives;

  std::size_t size() const { return positives.size() + negatives.size(); }
};

/// scores_i = W log0(z_i) + b, with W row-major (classes x dim).
std::vector<ad::VarVec> nc_logits(const std::vector<ad::VarVec>& z, std::span<const ad::Var> weight,
                                  std::span<const ad::Var> bias, Curvature c);

/// Mean negative log-softmax of the true class over `rows` (all rows when empty).
ad::Var nll_loss(const std::vector<ad::VarVec>& scores, std::span<const int> labels,
                 std::span<const std::uint32_t> rows = {});

double fermi_dirac_prob(double d, const FermiDiracParams& p);
ad::Var fermi_dirac_prob(ad::Var d, ad::Var r, ad::Var t);

inline constexpr double kProbClamp = 1e-12;

/// Mean binary cross-entropy of Fermi-Dirac edge probabilities. When
/// `squared` is set the decoder sees d^2 instead of d.
ad::Var lp_loss(const std::vector<ad::VarVec>& z, const EdgeBatch& batch, ad::Var r, ad::Var t,
                Curvature c, bool squared = false);

/// Edge scores (negated distances) for ranking metrics, from plain values.
std::vector<double> edge_scores(const Matrix& z, std::span<const Edge> edges, Curvature c, bool squared = false);

enum class Averaging { Micro, Macro };

double f1_score(std::span<const int> predicted, std::span<const int> truth, Averaging avg);

/// Rank-statistic AUC with mid-ranks for ties. Labels are 0/1; both classes
/// must be present.
double auc_score(std::span<const double> scores, std::span<const int> labels);

/// Row-wise argmax (first maximum wins).
std::vector<int> argmax_rows(const Matrix& scores);

}  // namespace hypgw::tasks
