#pragma once

// The transport map T as a layer stack: Euclidean encoder, one
// Euclidean-to-hyperbolic projection, then Mobius linear layers,
// tangent-space activations and tangent-space graph aggregation.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hypgw/ad.hpp"
#include "hypgw/common.hpp"
#include "hypgw/text.hpp"

namespace hypgw::nn {

enum class LayerKind { EuclidLinear, ToHyperbolic, HypLinear, HypActivation, TangentAggregate };

std::string to_string(LayerKind k);
LayerKind parse_layer_kind(const std::string& s);

struct LayerSpec {
  LayerKind kind;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;

  bool has_params() const { return kind == LayerKind::EuclidLinear || kind == LayerKind::HypLinear; }
  std::size_t param_count() const { return has_params() ? out_dim * in_dim + out_dim : 0; }
  bool operator==(const LayerSpec&) const = default;
};

/// Parses "euclid-linear:16,to-hyperbolic,hyp-linear:16,hyp-activation" with
/// dimensions chained from `input_dim`.
std::vector<LayerSpec> parse_layers(const std::string& text, std::size_t input_dim);
std::string format_layers(const std::vector<LayerSpec>& specs);

/// Throws InvalidInput naming the offending layer index.
void validate_layers(const std::vector<LayerSpec>& specs);

/// Undirected neighbor lists with a self-loop at every node.
class GraphAdjacency {
 public:
  GraphAdjacency() = default;
  static GraphAdjacency from_edges(std::size_t nodes,
                                   const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);
  /// Self-loops only.
  static GraphAdjacency identity(std::size_t nodes);

  std::size_t node_count() const { return neighbors_.size(); }
  const std::vector<std::uint32_t>& neighbors(std::size_t i) const { return neighbors_[i]; }

 private:
  std::vector<std::vector<std::uint32_t>> neighbors_;
};

/// Row-major weight (out x in) followed by bias (out) for each parametric layer.
class Network {
 public:
  Network() = default;
  Network(std::vector<LayerSpec> specs, Curvature c, std::vector<double> params);

  /// Weights uniform in [-1/sqrt(in), 1/sqrt(in)], biases zero.
  static Network init(std::vector<LayerSpec> specs, Curvature c, std::uint64_t seed);

  const std::vector<LayerSpec>& layers() const { return specs_; }
  Curvature curvature() const { return c_; }
  std::size_t input_dim() const { return specs_.front().in_dim; }
  std::size_t output_dim() const { return specs_.back().out_dim; }
  std::size_t encoder_dim() const;

  const std::vector<double>& params() const { return params_; }
  std::vector<double>& params() { return params_; }
  std::size_t param_offset(std::size_t layer) const { return offsets_[layer]; }

  bool operator==(const Network& o) const;

 private:
  std::vector<LayerSpec> specs_;
  Curvature c_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
};

struct ForwardTrace {
  std::vector<ad::VarVec> embeddings;  // network output, one point per row
  std::vector<ad::VarVec> encoder;     // input to the to-hyperbolic layer
};

/// Builds the forward pass on `tape`. `params` must be the network's
/// parameters registered on the same tape, `inputs` one row per point.
/// Hyperbolic points are checked against the ball invariant after every
/// layer; a violation raises NumericalError naming the layer.
ForwardTrace network_forward(const Network& net, std::span<const ad::Var> params,
                             const std::vector<ad::VarVec>& inputs, const GraphAdjacency* adj);

/// Plain-value convenience wrapper over network_forward.
Matrix embed(const Network& net, const Matrix& x, const GraphAdjacency* adj = nullptr);

// Individual layers on the tape.
ad::VarVec euclid_linear(std::span<const ad::Var> weight, std::span<const ad::Var> bias,
                         std::span<const ad::Var> x);
ad::VarVec to_hyperbolic(std::span<const ad::Var> x, Curvature c);
ad::VarVec hyp_linear(std::span<const ad::Var> weight, std::span<const ad::Var> bias,
                      std::span<const ad::Var> z, Curvature c);
ad::VarVec hyp_activation(std::span<const ad::Var> z, Curvature c);
std::vector<ad::VarVec> tangent_aggregate(const std::vector<ad::VarVec>& z, const GraphAdjacency& adj,
                                          Curvature c);

/// Text serialization: "key: value" lines; parameters are written in
/// shortest round-trip form so save/load is bit-exact.
void write_network(std::ostream& os, const Network& net);
Network read_network(const text::Document& doc);
Network read_network(std::istream& is);

inline constexpr int kCheckpointFormatVersion = 1;

}  // namespace hypgw::nn
