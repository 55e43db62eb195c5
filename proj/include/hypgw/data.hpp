#pragma once

// Graph datasets: file formats, deterministic splits, synthetic generators.
//
// On disk a dataset is a directory holding
//   edges.tsv      "u<TAB>v" per line, 0-based ids, '#' comments
//   features.csv   header row, then one row per node in id order
//   labels.csv     header "label", then one integer per node (optional)
//   manifest.txt   "key: value" counts and an FNV-1a checksum of the three files

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hypgw/common.hpp"
#include "hypgw/tasks.hpp"

namespace hypgw::data {

using tasks::Edge;

struct GraphDataset {
  std::string name;
  std::size_t node_count = 0;
  std::vector<Edge> edges;  // canonical u < v, sorted, unique
  Matrix features;
  std::vector<int> labels;  // empty when unlabeled

  std::size_t class_count() const;
  void validate() const;
  bool operator==(const GraphDataset&) const = default;
};

/// Canonicalizes (u < v), sorts and deduplicates; drops self-loops.
std::vector<Edge> canonical_edges(std::vector<Edge> edges);

/// `node_count` bounds ids when given.
std::vector<Edge> load_edge_list(const std::filesystem::path& path,
                                 std::optional<std::size_t> node_count = std::nullopt);
Matrix load_features_csv(const std::filesystem::path& path);
std::vector<int> load_labels_csv(const std::filesystem::path& path);

std::vector<Edge> parse_edge_list(std::istream& is, std::optional<std::size_t> node_count = std::nullopt);
Matrix parse_features_csv(std::istream& is);
std::vector<int> parse_labels_csv(std::istream& is);

void save_dataset(const GraphDataset& ds, const std::filesystem::path& dir);
GraphDataset load_dataset(const std::filesystem::path& dir);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

enum class SplitKind { EdgeLp, NodeNc };

struct SplitSpec {
  SplitKind kind = SplitKind::EdgeLp;
  double train = 0.85;
  double val = 0.05;
  double test = 0.10;
  std::uint64_t seed = 0;
};

struct EdgeSplit {
  std::vector<Edge> train;
  std::vector<Edge> val;
  std::vector<Edge> test;
  std::vector<Edge> val_negatives;
  std::vector<Edge> test_negatives;
};

struct NodeSplit {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;
};

EdgeSplit split_edges(const GraphDataset& ds, const SplitSpec& spec);
NodeSplit split_nodes(const GraphDataset& ds, const SplitSpec& spec);

/// Uniform non-edges avoiding self-loops, every edge in `exclude` and
/// duplicates among themselves.
std::vector<Edge> sample_negatives(std::size_t node_count, const std::vector<Edge>& exclude,
                                   std::size_t count, std::uint64_t seed);

struct TreeParams {
  std::size_t branching = 2;
  std::size_t depth = 3;
  std::size_t dim = 0;  // 0: branching * depth; larger values pad with noise-only columns
  double noise = 0.05;
  std::uint64_t seed = 0;
};

/// Complete b-ary tree in breadth-first id order; labels are depths.
/// Features encode the root-to-node path as one one-hot block of size b per
/// level (the branch taken at that level), plus Gaussian noise.
GraphDataset gen_balanced_tree(const TreeParams& p);

struct SirParams {
  std::size_t population = 100;
  double infection_prob = 0.5;
  std::size_t dim = 16;
  std::uint64_t seed = 0;
};

/// Contact tree grown by uniform attachment from patient zero; infection
/// spreads along contacts with probability infection_prob * susceptibility.
/// Feature 0 is susceptibility, the rest a contact-location random walk.
GraphDataset gen_sir_graph(const SirParams& p);

struct GaussianParams {
  std::size_t clusters = 2;  // per level
  std::size_t levels = 1;
  std::size_t dim = 8;
  double spread = 1.0;
  std::size_t points_per_cluster = 10;
  std::size_t knn = 5;
  std::uint64_t seed = 0;
};

/// Nested Gaussian clusters; labels are leaf clusters; k-nearest-neighbor edges.
GraphDataset gen_hier_gaussians(const GaussianParams& p);

/// Offset scale of cluster means at `level` (1-based): spread * 3^(levels - level).
double level_scale(const GaussianParams& p, std::size_t level);

/// Cluster means per level, exposed for tests: means[l] holds clusters^(l+1) rows.
std::vector<Matrix> hier_gaussian_means(const GaussianParams& p);

}  // namespace hypgw::data
