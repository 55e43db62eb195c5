#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hypgw/geometry.hpp"
#include "hypgw/nn.hpp"
#include "hypgw/tape_ops.hpp"
#include "test_util.hpp"

using namespace hypgw;
using namespace hypgw::nn;
using ad::Tape;
using ad::Var;
using hypgw::testing::max_abs_diff;

namespace {

const Curvature kUnit(1.0);
const std::string kLayers =
    "euclid-linear:16,to-hyperbolic,hyp-linear:16,hyp-activation,tangent-aggregate,hyp-linear:16";

Vec vals(const ad::VarVec& v) { return tape_ops::values(v); }

}  // namespace

TEST_CASE("layer spec parsing") {
  const auto specs = parse_layers(kLayers, 5);
  REQUIRE(specs.size() == 6);
  CHECK(specs[0] == LayerSpec{LayerKind::EuclidLinear, 5, 16});
  CHECK(specs[5] == LayerSpec{LayerKind::HypLinear, 16, 16});
  CHECK(format_layers(specs) == kLayers);
  CHECK_THROWS_AS(parse_layers("hyp-linear:4,to-hyperbolic", 3), InvalidInput);
  CHECK_THROWS_AS(parse_layers("euclid-linear:4", 3), InvalidInput);
  CHECK_THROWS_AS(parse_layers("to-hyperbolic,euclid-linear:2", 3), InvalidInput);
  CHECK_THROWS_AS(parse_layers("to-hyperbolic,to-hyperbolic", 3), InvalidInput);
  CHECK_THROWS_AS(parse_layers("to-hyperbolic:4", 3), InvalidInput);
  CHECK_THROWS_AS(parse_layers("conv:3,to-hyperbolic", 3), InvalidInput);
  try {
    validate_layers({{LayerKind::ToHyperbolic, 3, 3}, {LayerKind::HypLinear, 4, 2}});
    FAIL("expected rejection");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
}

TEST_CASE("euclidean linear layer") {
  Tape t;
  const auto x = t.variables(Vec{2.0, -1.0});
  const auto eye = t.variables(Vec{1, 0, 0, 1});
  const auto zero_b = t.variables(Vec{0, 0});
  CHECK(vals(euclid_linear(eye, zero_b, x)) == Vec{2.0, -1.0});
  const auto zero_w = t.variables(Vec{0, 0, 0, 0});
  const auto b = t.variables(Vec{0.5, 0.25});
  CHECK(vals(euclid_linear(zero_w, b, x)) == Vec{0.5, 0.25});
  const auto w = t.variables(Vec{1, 2, 3, 4});
  CHECK(vals(euclid_linear(w, zero_b, x)) == Vec{0.0, 2.0});
}

TEST_CASE("hyperbolic linear layer") {
  Tape t;
  const auto eye = t.variables(Vec{1, 0, 0, 1});
  const auto zero_b = t.variables(Vec{0, 0});
  const Vec zv{0.3, -0.4};
  CHECK(max_abs_diff(vals(hyp_linear(eye, zero_b, t.variables(zv), kUnit)), zv) <= 1e-10);

  const auto w = t.variables(Vec{0.7, -1.2, 2.0, 0.1});
  const Vec bias{0.2, 0.1};
  const auto b = t.variables(bias);
  CHECK(max_abs_diff(vals(hyp_linear(w, b, t.variables(Vec{0, 0}), kUnit)), geometry::exp0(bias, kUnit)) <= 1e-15);

  const auto two = t.variables(Vec{2, 0, 0, 2});
  const Vec r = vals(hyp_linear(two, zero_b, t.variables(Vec{0.5, 0}), kUnit));
  CHECK(r[0] == doctest::Approx(0.8).epsilon(1e-13));
  CHECK(r[1] == 0.0);
}

TEST_CASE("hyperbolic activation") {
  Tape t;
  const Vec pos = geometry::exp0(Vec{0.2, 0.7}, kUnit);
  CHECK(max_abs_diff(vals(hyp_activation(t.variables(pos), kUnit)), pos) <= 1e-10);
  const Vec r = vals(hyp_activation(t.variables(geometry::exp0(Vec{-1, 2}, kUnit)), kUnit));
  CHECK(max_abs_diff(r, geometry::exp0(Vec{0, 2}, kUnit)) <= 1e-12);
  CHECK(vals(hyp_activation(t.variables(Vec{0, 0}), kUnit)) == Vec{0, 0});
}

TEST_CASE("tangent aggregation") {
  Tape t;
  const Vec a = geometry::exp0(Vec{0.5, 0}, kUnit), b = geometry::exp0(Vec{-0.5, 0}, kUnit);
  const auto adj = GraphAdjacency::from_edges(2, {{0, 1}});
  const auto out = tangent_aggregate({t.variables(a), t.variables(b)}, adj, kUnit);
  CHECK(max_abs_diff(vals(out[0]), Vec{0, 0}) <= 1e-15);
  CHECK(max_abs_diff(vals(out[1]), Vec{0, 0}) <= 1e-15);

  const auto same = tangent_aggregate({t.variables(a), t.variables(a)}, adj, kUnit);
  CHECK(max_abs_diff(vals(same[0]), a) <= 1e-12);

  const auto alone = tangent_aggregate({t.variables(a)}, GraphAdjacency::identity(1), kUnit);
  CHECK(max_abs_diff(vals(alone[0]), a) <= 1e-12);

  CHECK_THROWS_AS(tangent_aggregate({t.variables(a)}, adj, kUnit), InvalidInput);
  CHECK_THROWS_AS(GraphAdjacency::from_edges(2, {{0, 2}}), InvalidInput);
}

TEST_CASE("tangent aggregation is permutation-equivariant") {
  std::mt19937_64 rng(5);
  const std::size_t n = 12;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j)
      if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.3) edges.emplace_back(i, j);
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(testing::random_ball_point(rng, 3, 1.0, 0.7));
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);  // node i is relabeled perm[i]

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pedges;
  for (auto [u, v] : edges) pedges.emplace_back(perm[u], perm[v]);
  std::vector<Vec> ppts(n);
  for (std::size_t i = 0; i < n; ++i) ppts[perm[i]] = pts[i];

  Tape t;
  std::vector<ad::VarVec> z, pz;
  for (std::size_t i = 0; i < n; ++i) {
    z.push_back(t.variables(pts[i]));
    pz.push_back(t.variables(ppts[i]));
  }
  const auto out = tangent_aggregate(z, GraphAdjacency::from_edges(n, edges), kUnit);
  const auto pout = tangent_aggregate(pz, GraphAdjacency::from_edges(n, pedges), kUnit);
  for (std::size_t i = 0; i < n; ++i) CHECK(vals(out[i]) == vals(pout[perm[i]]));
}

TEST_CASE("network forward conventions") {
  std::mt19937_64 rng(7);
  const Matrix x = testing::random_matrix(rng, 5, 3, 0.5);
  const Network single(parse_layers("to-hyperbolic", 3), kUnit, {});
  const Matrix z = embed(single, x);
  for (std::size_t i = 0; i < 5; ++i) CHECK(max_abs_diff(z.row(i), geometry::exp0(x.row(i), kUnit)) <= 1e-15);

  // hyp-linear layers with identity weights and zero bias
  const auto specs = parse_layers("to-hyperbolic,hyp-linear:3,hyp-linear:3", 3);
  Vec params;
  for (int l = 0; l < 2; ++l) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) params.push_back(r == c ? 1.0 : 0.0);
    for (int r = 0; r < 3; ++r) params.push_back(0.0);
  }
  const Matrix zi = embed(Network(specs, kUnit, params), x);
  for (std::size_t i = 0; i < 5; ++i) CHECK(max_abs_diff(zi.row(i), geometry::exp0(x.row(i), kUnit)) <= 1e-10);

  const Network net = Network::init(parse_layers(kLayers, 3), kUnit, 11);
  CHECK(embed(net, x) == embed(net, x));
  const Matrix out = embed(net, x);
  for (std::size_t i = 0; i < out.rows(); ++i) CHECK(geometry::in_ball(out.row(i), kUnit));
  CHECK_THROWS_AS(embed(net, testing::random_matrix(rng, 5, 4, 0.5)), InvalidInput);
}

TEST_CASE("initialization") {
  const auto specs = parse_layers("euclid-linear:8,to-hyperbolic,hyp-linear:4", 16);
  const Network a = Network::init(specs, kUnit, 3), b = Network::init(specs, kUnit, 3), c = Network::init(specs, kUnit, 4);
  CHECK(a == b);
  CHECK(!(a == c));
  CHECK(a.params().size() == 8 * 16 + 8 + 4 * 8 + 4);
  for (std::size_t k = 0; k < 8 * 16; ++k) CHECK(std::abs(a.params()[k]) <= 0.25);
  for (std::size_t k = 8 * 16; k < 8 * 16 + 8; ++k) CHECK(a.params()[k] == 0.0);
  CHECK(a.encoder_dim() == 8);
  CHECK_THROWS_AS(Network(specs, kUnit, Vec(3, 0.0)), InvalidInput);
}

TEST_CASE("network gradient matches finite differences") {
  std::mt19937_64 rng(13);
  const auto specs = parse_layers("euclid-linear:3,to-hyperbolic,hyp-linear:3,hyp-activation,hyp-linear:2", 4);
  const Network net = Network::init(specs, kUnit, 5);
  const Matrix x = testing::random_matrix(rng, 5, 4, 1.0);
  const ad::Function f = [&](Tape& t, std::span<const Var> p) {
    std::vector<ad::VarVec> in;
    for (std::size_t i = 0; i < x.rows(); ++i) in.push_back(t.variables(x.row(i)));
    const auto tr = network_forward(net, p, in, nullptr);
    ad::VarVec terms;
    for (std::size_t i = 0; i + 1 < tr.embeddings.size(); ++i)
      terms.push_back(tape_ops::poincare_distance(tr.embeddings[i], tr.embeddings[i + 1], kUnit));
    return ad::sum(terms);
  };
  CHECK(ad::grad_check(f, net.params()) <= 1e-4);
}

TEST_CASE("text serialization round-trips bit-exactly") {
  const auto specs = parse_layers(kLayers, 6);
  const Network net = Network::init(specs, Curvature(0.7), 99);
  std::stringstream ss;
  write_network(ss, net);
  const Network back = read_network(ss);
  CHECK(back == net);
  CHECK(back.curvature().value() == 0.7);

  std::istringstream bad("format_version: 99\n");
  CHECK_THROWS_AS(read_network(bad), InvalidInput);
}
