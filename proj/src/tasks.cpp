#include "hypgw/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "hypgw/geometry.hpp"
#include "hypgw/tape_ops.hpp"

namespace hypgw::tasks {

using ad::Var;
using ad::VarVec;

std::vector<VarVec> nc_logits(const std::vector<VarVec>& z, std::span<const Var> weight,
                              std::span<const Var> bias, Curvature c) {
  std::vector<VarVec> out;
  out.reserve(z.size());
  for (const auto& p : z) {
    if (weight.size() != bias.size() * p.size()) throw InvalidInput("nc_logits: head shape mismatch");
    out.push_back(tape_ops::affine(weight, bias, tape_ops::log0(p, c)));
  }
  return out;
}

Var nll_loss(const std::vector<VarVec>& scores, std::span<const int> labels,
             std::span<const std::uint32_t> rows) {
  std::vector<std::uint32_t> all;
  if (rows.empty()) {
    all.resize(scores.size());
    std::iota(all.begin(), all.end(), 0u);
    rows = all;
  }
  if (rows.empty()) throw InvalidInput("nll_loss: empty batch");
  if (labels.size() != scores.size()) throw InvalidInput("nll_loss: label count mismatch");
  VarVec terms;
  terms.reserve(rows.size());
  VarVec shifted;
  for (std::uint32_t i : rows) {
    const auto& s = scores[i];
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= s.size()) {
      throw InvalidInput("nll_loss: label " + std::to_string(y) + " out of range");
    }
    double top = s.front().value();
    for (const Var& v : s) top = std::max(top, v.value());
    shifted.clear();
    for (const Var& v : s) shifted.push_back(ad::exp(v - top));
    // -log softmax_y = log sum exp(s - top) + top - s_y
    terms.push_back(ad::log(ad::sum(shifted)) + top - s[static_cast<std::size_t>(y)]);
  }
  return ad::sum(terms) / static_cast<double>(rows.size());
}

double fermi_dirac_prob(double d, const FermiDiracParams& p) {
  if (!(p.t > 0.0)) throw InvalidInput("fermi-dirac temperature must be positive");
  return 1.0 / (std::exp((d - p.r) / p.t) + 1.0);
}

Var fermi_dirac_prob(Var d, Var r, Var t) { return ad::sigmoid((r - d) / t); }

Var lp_loss(const std::vector<VarVec>& z, const EdgeBatch& batch, Var r, Var t, Curvature c, bool squared) {
  if (batch.size() == 0) throw InvalidInput("lp_loss: empty batch");
  VarVec terms;
  terms.reserve(batch.size());
  auto add = [&](const Edge& e, bool positive) {
    if (e.first >= z.size() || e.second >= z.size()) throw InvalidInput("lp_loss: edge endpoint out of range");
    Var d = tape_ops::poincare_distance(z[e.first], z[e.second], c);
    if (squared) d = d * d;
    const Var p = ad::clamp(fermi_dirac_prob(d, r, t), kProbClamp, 1.0 - kProbClamp);
    terms.push_back(positive ? -ad::log(p) : -ad::log(1.0 - p));
  };
  for (const auto& e : batch.positives) add(e, true);
  for (const auto& e : batch.negatives) add(e, false);
  return ad::sum(terms) / static_cast<double>(terms.size());
}

std::vector<double> edge_scores(const Matrix& z, std::span<const Edge> edges, Curvature c, bool squared) {
  std::vector<double> out;
  out.reserve(edges.size());
  for (const auto& [u, v] : edges) {
    double d = geometry::poincare_distance(z.row(u), z.row(v), c);
    if (squared) d *= d;
    out.push_back(-d);
  }
  return out;
}

double f1_score(std::span<const int> predicted, std::span<const int> truth, Averaging avg) {
  if (predicted.size() != truth.size()) throw InvalidInput("f1_score: length mismatch");
  if (predicted.empty()) throw InvalidInput("f1_score: empty input");
  std::set<int> classes(truth.begin(), truth.end());
  classes.insert(predicted.begin(), predicted.end());
  std::map<int, std::size_t> tp, fp, fn;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == truth[i]) {
      ++tp[truth[i]];
    } else {
      ++fp[predicted[i]];
      ++fn[truth[i]];
    }
  }
  if (avg == Averaging::Micro) {
    std::size_t t = 0, f = 0;
    for (int k : classes) {
      t += tp[k];
      f += fp[k];
    }
    // Single-label: micro precision = micro recall = accuracy.
    return static_cast<double>(t) / static_cast<double>(t + f);
  }
  double total = 0.0;
  for (int k : classes) {
    const double denom = 2.0 * static_cast<double>(tp[k]) + static_cast<double>(fp[k] + fn[k]);
    total += denom > 0.0 ? 2.0 * static_cast<double>(tp[k]) / denom : 0.0;
  }
  return total / static_cast<double>(classes.size());
}

double auc_score(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidInput("auc_score: length mismatch");
  if (scores.empty()) throw InvalidInput("auc_score: empty input");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) {
        pos_rank_sum += mid;
        ++n_pos;
      } else if (labels[idx[k]] != 0) {
        throw InvalidInput("auc_score: labels must be 0 or 1");
      }
    }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InvalidInput("auc_score: both classes must be present");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto r = scores.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

}  // namespace hypgw::tasks
