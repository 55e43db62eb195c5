#include "hypgw/nn.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "hypgw/geometry.hpp"
#include "hypgw/tape_ops.hpp"

namespace hypgw::nn {

using ad::Var;
using ad::VarVec;

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::EuclidLinear: return "euclid-linear";
    case LayerKind::ToHyperbolic: return "to-hyperbolic";
    case LayerKind::HypLinear: return "hyp-linear";
    case LayerKind::HypActivation: return "hyp-activation";
    case LayerKind::TangentAggregate: return "tangent-aggregate";
  }
  return "?";
}

LayerKind parse_layer_kind(const std::string& s) {
  for (auto k : {LayerKind::EuclidLinear, LayerKind::ToHyperbolic, LayerKind::HypLinear,
                 LayerKind::HypActivation, LayerKind::TangentAggregate}) {
    if (to_string(k) == s) return k;
  }
  throw InvalidInput("unknown layer kind '" + s + "'");
}

std::vector<LayerSpec> parse_layers(const std::string& spec_text, std::size_t input_dim) {
  std::vector<LayerSpec> out;
  std::size_t dim = input_dim;
  for (auto item : text::split(spec_text, ',')) {
    item = text::trim(item);
    if (item.empty()) continue;
    const auto parts = text::split(item, ':');
    const LayerKind kind = parse_layer_kind(std::string(text::trim(parts[0])));
    LayerSpec spec{kind, dim, dim};
    if (parts.size() > 1) {
      spec.out_dim = text::to_int<std::size_t>(parts[1], "layer '" + std::string(item) + "'");
    }
    if (!spec.has_params() && spec.out_dim != spec.in_dim) {
      throw InvalidInput("layer '" + std::string(item) + "' cannot change dimension");
    }
    dim = spec.out_dim;
    out.push_back(spec);
  }
  validate_layers(out);
  return out;
}

std::string format_layers(const std::vector<LayerSpec>& specs) {
  std::string out;
  for (const auto& s : specs) {
    if (!out.empty()) out += ',';
    out += to_string(s.kind);
    if (s.has_params()) out += ':' + std::to_string(s.out_dim);
  }
  return out;
}

void validate_layers(const std::vector<LayerSpec>& specs) {
  if (specs.empty()) throw InvalidInput("network has no layers");
  bool hyperbolic = false;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    const std::string where = "layer " + std::to_string(i) + " (" + to_string(s.kind) + ")";
    if (s.in_dim == 0 || s.out_dim == 0) throw InvalidInput(where + ": zero dimension");
    if (i > 0 && specs[i - 1].out_dim != s.in_dim) {
      throw InvalidInput(where + ": input dimension " + std::to_string(s.in_dim) +
                         " does not match previous output " + std::to_string(specs[i - 1].out_dim));
    }
    if (!s.has_params() && s.in_dim != s.out_dim) throw InvalidInput(where + ": cannot change dimension");
    switch (s.kind) {
      case LayerKind::EuclidLinear:
        if (hyperbolic) throw InvalidInput(where + ": Euclidean layer after to-hyperbolic");
        break;
      case LayerKind::ToHyperbolic:
        if (hyperbolic) throw InvalidInput(where + ": to-hyperbolic appears more than once");
        hyperbolic = true;
        break;
      default:
        if (!hyperbolic) throw InvalidInput(where + ": hyperbolic layer before to-hyperbolic");
    }
  }
  if (!hyperbolic) throw InvalidInput("network has no to-hyperbolic layer");
}

GraphAdjacency GraphAdjacency::from_edges(
    std::size_t nodes, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  GraphAdjacency g;
  g.neighbors_.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) g.neighbors_[i].push_back(static_cast<std::uint32_t>(i));
  for (const auto& [u, v] : edges) {
    if (u >= nodes || v >= nodes) {
      throw InvalidInput("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") out of range for " +
                         std::to_string(nodes) + " nodes");
    }
    if (u == v) continue;
    g.neighbors_[u].push_back(v);
    g.neighbors_[v].push_back(u);
  }
  for (auto& n : g.neighbors_) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return g;
}

GraphAdjacency GraphAdjacency::identity(std::size_t nodes) { return from_edges(nodes, {}); }

namespace {

std::vector<std::size_t> compute_offsets(const std::vector<LayerSpec>& specs) {
  std::vector<std::size_t> off;
  std::size_t total = 0;
  for (const auto& s : specs) {
    off.push_back(total);
    total += s.param_count();
  }
  off.push_back(total);
  return off;
}

void check_ball(const std::vector<VarVec>& z, Curvature c, std::size_t layer) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    double n2 = 0.0;
    for (const Var& v : z[i]) n2 += v.value() * v.value();
    if (!std::isfinite(n2) || c.value() * n2 > 1.0 - geometry::kBallEps) {
      throw NumericalError("layer " + std::to_string(layer) + ": point " + std::to_string(i) +
                           " left the Poincare ball");
    }
  }
}

}  // namespace

Network::Network(std::vector<LayerSpec> specs, Curvature c, std::vector<double> params)
    : specs_(std::move(specs)), c_(c), params_(std::move(params)) {
  validate_layers(specs_);
  offsets_ = compute_offsets(specs_);
  if (params_.size() != offsets_.back()) {
    throw InvalidInput("network expects " + std::to_string(offsets_.back()) + " parameters, got " +
                       std::to_string(params_.size()));
  }
  if (!all_finite(params_)) throw InvalidInput("network parameters are not finite");
}

Network Network::init(std::vector<LayerSpec> specs, Curvature c, std::uint64_t seed) {
  validate_layers(specs);
  std::mt19937_64 rng(seed);
  std::vector<double> params;
  for (const auto& s : specs) {
    if (!s.has_params()) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in_dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t k = 0; k < s.out_dim * s.in_dim; ++k) params.push_back(u(rng));
    params.insert(params.end(), s.out_dim, 0.0);
  }
  return Network(std::move(specs), c, std::move(params));
}

std::size_t Network::encoder_dim() const {
  for (const auto& s : specs_)
    if (s.kind == LayerKind::ToHyperbolic) return s.in_dim;
  return input_dim();
}

bool Network::operator==(const Network& o) const {
  return specs_ == o.specs_ && c_.value() == o.c_.value() && params_ == o.params_;
}

VarVec euclid_linear(std::span<const Var> weight, std::span<const Var> bias, std::span<const Var> x) {
  return tape_ops::affine(weight, bias, x);
}

VarVec to_hyperbolic(std::span<const Var> x, Curvature c) { return tape_ops::exp0(x, c); }

VarVec hyp_linear(std::span<const Var> weight, std::span<const Var> bias, std::span<const Var> z,
                  Curvature c) {
  const VarVec mz = tape_ops::mobius_matvec(weight, bias.size(), z, c);
  return tape_ops::mobius_add(mz, tape_ops::exp0(bias, c), c);
}

VarVec hyp_activation(std::span<const Var> z, Curvature c) {
  VarVec t = tape_ops::log0(z, c);
  for (Var& v : t) v = ad::relu(v);
  return tape_ops::exp0(t, c);
}

std::vector<VarVec> tangent_aggregate(const std::vector<VarVec>& z, const GraphAdjacency& adj, Curvature c) {
  if (z.size() != adj.node_count()) {
    throw InvalidInput("tangent_aggregate: " + std::to_string(z.size()) + " points but " +
                       std::to_string(adj.node_count()) + " graph nodes");
  }
  std::vector<VarVec> tangent;
  tangent.reserve(z.size());
  std::vector<Vec> tangent_values;
  tangent_values.reserve(z.size());
  for (const auto& p : z) {
    tangent.push_back(tape_ops::log0(p, c));
    tangent_values.push_back(tape_ops::values(tangent.back()));
  }
  const std::size_t dim = z.empty() ? 0 : z.front().size();
  std::vector<VarVec> out;
  out.reserve(z.size());
  std::vector<std::uint32_t> order;
  VarVec column;
  for (std::size_t i = 0; i < z.size(); ++i) {
    // Summation order is fixed by the tangent vectors' values, not node ids,
    // so relabeling the graph permutes the output exactly.
    order = adj.neighbors(i);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return tangent_values[a] < tangent_values[b];
    });
    const double inv = 1.0 / static_cast<double>(order.size());
    VarVec mean;
    mean.reserve(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      column.clear();
      for (std::uint32_t j : order) column.push_back(tangent[j][k]);
      mean.push_back(ad::sum(column) * inv);
    }
    out.push_back(tape_ops::exp0(mean, c));
  }
  return out;
}

ForwardTrace network_forward(const Network& net, std::span<const Var> params,
                             const std::vector<VarVec>& inputs, const GraphAdjacency* adj) {
  if (params.size() != net.params().size()) throw InvalidInput("network_forward: parameter count mismatch");
  const Curvature c = net.curvature();
  std::vector<VarVec> h = inputs;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].size() != net.input_dim()) {
      throw InvalidInput("network_forward: input row " + std::to_string(i) + " has " +
                         std::to_string(h[i].size()) + " features, layer 0 expects " +
                         std::to_string(net.input_dim()));
    }
  }
  ForwardTrace trace;
  const auto& specs = net.layers();
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto& s = specs[l];
    const std::size_t off = net.param_offset(l);
    const auto weight = params.subspan(off, s.out_dim * s.in_dim);
    const auto bias = params.subspan(off + s.out_dim * s.in_dim, s.has_params() ? s.out_dim : 0);
    switch (s.kind) {
      case LayerKind::EuclidLinear:
        for (auto& row : h) row = euclid_linear(weight, bias, row);
        break;
      case LayerKind::ToHyperbolic:
        trace.encoder = h;
        for (auto& row : h) row = to_hyperbolic(row, c);
        break;
      case LayerKind::HypLinear: {
        const VarVec b = tape_ops::exp0(bias, c);
        for (auto& row : h) row = tape_ops::mobius_add(tape_ops::mobius_matvec(weight, s.out_dim, row, c), b, c);
        break;
      }
      case LayerKind::HypActivation:
        for (auto& row : h) row = hyp_activation(row, c);
        break;
      case LayerKind::TangentAggregate: {
        if (adj == nullptr) {
          const auto self = GraphAdjacency::identity(h.size());
          h = tangent_aggregate(h, self, c);
        } else {
          h = tangent_aggregate(h, *adj, c);
        }
        break;
      }
    }
    if (s.kind != LayerKind::EuclidLinear) check_ball(h, c, l);
  }
  trace.embeddings = std::move(h);
  return trace;
}

Matrix embed(const Network& net, const Matrix& x, const GraphAdjacency* adj) {
  ad::Tape tape;
  const auto params = tape.variables(net.params());
  std::vector<VarVec> inputs;
  inputs.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) inputs.push_back(tape.variables(x.row(i)));
  const auto trace = network_forward(net, params, inputs, adj);
  Matrix out(x.rows(), net.output_dim());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t k = 0; k < out.cols(); ++k) out(i, k) = trace.embeddings[i][k].value();
  return out;
}

void write_network(std::ostream& os, const Network& net) {
  os << "format_version: " << kCheckpointFormatVersion << '\n';
  os << "curvature: " << text::format_double(net.curvature().value()) << '\n';
  os << "layer_count: " << net.layers().size() << '\n';
  for (const auto& s : net.layers()) {
    os << "layer: " << to_string(s.kind) << ' ' << s.in_dim << ' ' << s.out_dim << '\n';
  }
  os << "parameter_count: " << net.params().size() << '\n';
  os << "parameters:";
  for (double v : net.params()) os << ' ' << text::format_double(v);
  os << '\n';
}

Network read_network(const text::Document& doc) {
  const int version = text::to_int<int>(doc.get("format_version"), "format_version");
  if (version != kCheckpointFormatVersion) {
    throw InvalidInput("unsupported checkpoint format version " + std::to_string(version));
  }
  const Curvature c(text::to_double(doc.get("curvature"), "curvature"));
  const auto count = text::to_int<std::size_t>(doc.get("layer_count"), "layer_count");
  std::vector<LayerSpec> specs;
  for (const auto& line : doc.get_all("layer")) {
    std::istringstream ls(line);
    std::string kind;
    std::size_t in = 0, out = 0;
    if (!(ls >> kind >> in >> out)) throw InvalidInput("malformed layer line '" + line + "'");
    specs.push_back({parse_layer_kind(kind), in, out});
  }
  if (specs.size() != count) throw InvalidInput("layer_count does not match layer lines");
  auto params = text::parse_numbers(doc.get("parameters"), "parameters");
  const auto pc = text::to_int<std::size_t>(doc.get("parameter_count"), "parameter_count");
  if (params.size() != pc) throw InvalidInput("parameter_count does not match parameter list");
  return Network(std::move(specs), c, std::move(params));
}

Network read_network(std::istream& is) { return read_network(text::Document::parse(is)); }

}  // namespace hypgw::nn
