#include "hypgw/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "hypgw/text.hpp"

namespace hypgw::data {

namespace fs = std::filesystem;

std::size_t GraphDataset::class_count() const {
  if (labels.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

void GraphDataset::validate() const {
  if (features.rows() != node_count) {
    throw InvalidInput("dataset '" + name + "': " + std::to_string(features.rows()) +
                       " feature rows for " + std::to_string(node_count) + " nodes");
  }
  if (!labels.empty() && labels.size() != node_count) {
    throw InvalidInput("dataset '" + name + "': label count does not match node count");
  }
  for (int l : labels)
    if (l < 0) throw InvalidInput("dataset '" + name + "': negative label");
  for (const auto& [u, v] : edges) {
    if (u >= node_count || v >= node_count) {
      throw InvalidInput("dataset '" + name + "': edge (" + std::to_string(u) + ", " + std::to_string(v) +
                         ") references a missing node");
    }
    if (u >= v) throw InvalidInput("dataset '" + name + "': edges must be canonical (u < v)");
  }
  if (!all_finite(features.data())) throw InvalidInput("dataset '" + name + "': non-finite feature");
}

std::vector<Edge> canonical_edges(std::vector<Edge> edges) {
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    out.emplace_back(u, v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  return in;
}

std::string line_tag(std::size_t lineno) { return "line " + std::to_string(lineno); }

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::uint64_t edge_key(std::uint32_t u, std::uint32_t v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + p.string() + "'");
  out << content;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace

std::vector<Edge> parse_edge_list(std::istream& is, std::optional<std::size_t> node_count) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto parts = split_ws(t);
    if (parts.size() != 2) throw InvalidInput(line_tag(lineno) + ": expected two node ids");
    const auto u = text::to_int<std::uint32_t>(parts[0], line_tag(lineno));
    const auto v = text::to_int<std::uint32_t>(parts[1], line_tag(lineno));
    if (node_count && (u >= *node_count || v >= *node_count)) {
      throw InvalidInput(line_tag(lineno) + ": node id out of range (" + std::to_string(*node_count) +
                         " nodes)");
    }
    edges.emplace_back(u, v);
  }
  return canonical_edges(std::move(edges));
}

Matrix parse_features_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw InvalidInput("features: missing header");
  ++lineno;
  const std::size_t width = text::split(text::trim(line), ',').size();
  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    const auto cells = text::split(t, ',');
    if (cells.size() != width) {
      throw InvalidInput("features " + line_tag(lineno) + ": expected " + std::to_string(width) +
                         " columns, got " + std::to_string(cells.size()));
    }
    for (auto cell : cells) data.push_back(text::to_double(cell, "features " + line_tag(lineno)));
    ++rows;
  }
  Matrix m(rows, width);
  m.data() = std::move(data);
  return m;
}

std::vector<int> parse_labels_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw InvalidInput("labels: missing header");
  ++lineno;
  std::vector<int> labels;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    const int l = text::to_int<int>(t, "labels " + line_tag(lineno));
    if (l < 0) throw InvalidInput("labels " + line_tag(lineno) + ": negative label");
    labels.push_back(l);
  }
  return labels;
}

std::vector<Edge> load_edge_list(const fs::path& path, std::optional<std::size_t> node_count) {
  auto in = open_input(path);
  try {
    return parse_edge_list(in, node_count);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

Matrix load_features_csv(const fs::path& path) {
  auto in = open_input(path);
  try {
    return parse_features_csv(in);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

std::vector<int> load_labels_csv(const fs::path& path) {
  auto in = open_input(path);
  try {
    return parse_labels_csv(in);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_dataset(const GraphDataset& ds, const fs::path& dir) {
  ds.validate();
  fs::create_directories(dir);
  std::string edges;
  for (const auto& [u, v] : ds.edges) edges += std::to_string(u) + '\t' + std::to_string(v) + '\n';
  std::string features;
  for (std::size_t k = 0; k < ds.features.cols(); ++k) {
    if (k) features += ',';
    features += 'f' + std::to_string(k);
  }
  features += '\n';
  for (std::size_t i = 0; i < ds.features.rows(); ++i) {
    for (std::size_t k = 0; k < ds.features.cols(); ++k) {
      if (k) features += ',';
      features += text::format_double(ds.features(i, k));
    }
    features += '\n';
  }
  std::string labels;
  if (!ds.labels.empty()) {
    labels = "label\n";
    for (int l : ds.labels) labels += std::to_string(l) + '\n';
  }
  write_file(dir / "edges.tsv", edges);
  write_file(dir / "features.csv", features);
  if (!ds.labels.empty()) {
    write_file(dir / "labels.csv", labels);
  } else {
    fs::remove(dir / "labels.csv");
  }
  const std::uint64_t sum = fnv1a64(labels, fnv1a64(features, fnv1a64(edges)));
  std::ostringstream manifest;
  manifest << "format_version: 1\n"
           << "name: " << ds.name << '\n'
           << "nodes: " << ds.node_count << '\n'
           << "edges: " << ds.edges.size() << '\n'
           << "features: " << ds.features.cols() << '\n'
           << "classes: " << ds.class_count() << '\n'
           << "checksum: " << hex64(sum) << '\n';
  write_file(dir / "manifest.txt", manifest.str());
}

GraphDataset load_dataset(const fs::path& dir) {
  GraphDataset ds;
  std::optional<text::Document> manifest;
  if (fs::exists(dir / "manifest.txt")) {
    std::ifstream in(dir / "manifest.txt");
    manifest = text::Document::parse(in);
  }
  const std::string edges_raw = read_file(dir / "edges.tsv");
  const std::string features_raw = read_file(dir / "features.csv");
  const bool has_labels = fs::exists(dir / "labels.csv");
  const std::string labels_raw = has_labels ? read_file(dir / "labels.csv") : std::string();

  std::istringstream fin(features_raw);
  try {
    ds.features = parse_features_csv(fin);
  } catch (const InvalidInput& e) {
    throw InvalidInput((dir / "features.csv").string() + ": " + e.what());
  }
  ds.node_count = ds.features.rows();
  std::istringstream ein(edges_raw);
  try {
    ds.edges = parse_edge_list(ein, ds.node_count);
  } catch (const InvalidInput& e) {
    throw InvalidInput((dir / "edges.tsv").string() + ": " + e.what());
  }
  if (has_labels) {
    std::istringstream lin(labels_raw);
    try {
      ds.labels = parse_labels_csv(lin);
    } catch (const InvalidInput& e) {
      throw InvalidInput((dir / "labels.csv").string() + ": " + e.what());
    }
  }
  ds.name = dir.filename().string();
  if (manifest) {
    ds.name = manifest->has("name") ? manifest->get("name") : ds.name;
    const auto nodes = text::to_int<std::size_t>(manifest->get("nodes"), "manifest nodes");
    if (nodes != ds.node_count) throw InvalidInput("manifest node count does not match features.csv");
    if (manifest->has("checksum")) {
      const std::uint64_t sum = fnv1a64(labels_raw, fnv1a64(features_raw, fnv1a64(edges_raw)));
      if (manifest->get("checksum") != hex64(sum)) throw InvalidInput("dataset checksum mismatch in " + dir.string());
    }
  }
  ds.validate();
  return ds;
}

namespace {

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
};

SplitCounts split_counts(std::size_t total, const SplitSpec& spec, const char* what) {
  if (!(spec.train > 0.0 && spec.val > 0.0 && spec.test > 0.0)) {
    throw InvalidInput(std::string(what) + ": split fractions must be positive");
  }
  const double sum = spec.train + spec.val + spec.test;
  if (sum > 1.0 + 1e-9) throw InvalidInput(std::string(what) + ": split fractions sum above 1");
  SplitCounts c;
  const double n = static_cast<double>(total);
  c.val = static_cast<std::size_t>(std::llround(spec.val * n));
  c.test = static_cast<std::size_t>(std::llround(spec.test * n));
  if (std::abs(sum - 1.0) <= 1e-9) {
    if (c.val + c.test >= total) throw InvalidInput(std::string(what) + ": too few items to split");
    c.train = total - c.val - c.test;
  } else {
    c.train = static_cast<std::size_t>(std::llround(spec.train * n));
  }
  if (c.train == 0 || c.val == 0 || c.test == 0 || c.train + c.val + c.test > total) {
    throw InvalidInput(std::string(what) + ": fractions infeasible for " + std::to_string(total) + " items");
  }
  return c;
}

}  // namespace

std::vector<Edge> sample_negatives(std::size_t node_count, const std::vector<Edge>& exclude,
                                   std::size_t count, std::uint64_t seed) {
  std::unordered_set<std::uint64_t> taken;
  taken.reserve(exclude.size() + count);
  for (const auto& [u, v] : exclude) taken.insert(edge_key(u, v));
  const std::size_t pairs = node_count * (node_count - 1) / 2;
  if (node_count < 2 || taken.size() + count > pairs) {
    throw InvalidInput("not enough non-edges to sample " + std::to_string(count) + " negatives");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(node_count - 1));
  std::vector<Edge> out;
  out.reserve(count);
  while (out.size() < count) {
    std::uint32_t u = pick(rng), v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (!taken.insert(edge_key(u, v)).second) continue;
    out.emplace_back(u, v);
  }
  return out;
}

EdgeSplit split_edges(const GraphDataset& ds, const SplitSpec& spec) {
  const auto counts = split_counts(ds.edges.size(), spec, "edge split");
  std::vector<Edge> shuffled = ds.edges;
  std::mt19937_64 rng(spec.seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EdgeSplit s;
  auto it = shuffled.begin();
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(counts.train));
  it += static_cast<std::ptrdiff_t>(counts.train);
  s.val.assign(it, it + static_cast<std::ptrdiff_t>(counts.val));
  it += static_cast<std::ptrdiff_t>(counts.val);
  s.test.assign(it, it + static_cast<std::ptrdiff_t>(counts.test));
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());

  auto negatives = sample_negatives(ds.node_count, ds.edges, counts.val + counts.test, rng());
  s.val_negatives.assign(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(counts.val));
  s.test_negatives.assign(negatives.begin() + static_cast<std::ptrdiff_t>(counts.val), negatives.end());
  return s;
}

NodeSplit split_nodes(const GraphDataset& ds, const SplitSpec& spec) {
  const std::size_t n = ds.node_count;
  const auto counts = split_counts(n, spec, "node split");
  std::mt19937_64 rng(spec.seed);
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);

  if (!ds.labels.empty()) {
    // Stratify: rank each node within its class and sort by quantile
    // (rank + 0.5) / class_size, so every prefix takes a proportional share
    // of each class.
    std::vector<std::size_t> class_size(ds.class_count(), 0);
    for (int l : ds.labels) ++class_size[static_cast<std::size_t>(l)];
    std::vector<std::size_t> seen(class_size.size(), 0);
    std::vector<std::pair<double, std::uint32_t>> keyed;
    keyed.reserve(n);
    for (std::uint32_t node : order) {
      const auto cls = static_cast<std::size_t>(ds.labels[node]);
      const double q = (static_cast<double>(seen[cls]++) + 0.5) / static_cast<double>(class_size[cls]);
      keyed.emplace_back(q, node);
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < n; ++i) order[i] = keyed[i].second;
  }

  NodeSplit s;
  auto it = order.begin();
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(counts.train));
  it += static_cast<std::ptrdiff_t>(counts.train);
  s.val.assign(it, it + static_cast<std::ptrdiff_t>(counts.val));
  it += static_cast<std::ptrdiff_t>(counts.val);
  s.test.assign(it, it + static_cast<std::ptrdiff_t>(counts.test));
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

GraphDataset gen_balanced_tree(const TreeParams& p) {
  if (p.branching < 2 || p.depth < 1) throw InvalidInput("tree: need branching >= 2 and depth >= 1");
  std::size_t nodes = 0, level = 1;
  for (std::size_t d = 0; d <= p.depth; ++d) {
    nodes += level;
    level *= p.branching;
  }
  const std::size_t path_dim = p.branching * p.depth;
  const std::size_t dim = p.dim == 0 ? path_dim : p.dim;
  if (dim < path_dim) {
    throw InvalidInput("tree: feature dim " + std::to_string(dim) + " below branching * depth = " +
                       std::to_string(path_dim));
  }
  GraphDataset ds;
  ds.name = "tree-b" + std::to_string(p.branching) + "-d" + std::to_string(p.depth);
  ds.node_count = nodes;
  ds.features = Matrix(nodes, dim);
  ds.labels.assign(nodes, 0);
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> noise(0.0, p.noise);
  for (std::size_t v = 1; v < nodes; ++v) {
    const std::size_t parent = (v - 1) / p.branching;
    const std::size_t branch = (v - 1) % p.branching;
    ds.edges.emplace_back(static_cast<std::uint32_t>(parent), static_cast<std::uint32_t>(v));
    const int level = ds.labels[parent];
    ds.labels[v] = level + 1;
    std::copy(ds.features.row(parent).begin(), ds.features.row(parent).end(), ds.features.row(v).begin());
    ds.features(v, static_cast<std::size_t>(level) * p.branching + branch) = 1.0;
  }
  if (p.noise > 0.0)
    for (double& f : ds.features.data()) f += noise(rng);
  ds.edges = canonical_edges(std::move(ds.edges));
  return ds;
}

GraphDataset gen_sir_graph(const SirParams& p) {
  if (p.population < 10) throw InvalidInput("sir: population must be at least 10");
  if (p.dim < 2) throw InvalidInput("sir: feature dimension must be at least 2");
  if (!(p.infection_prob >= 0.0 && p.infection_prob <= 1.0)) {
    throw InvalidInput("sir: infection probability must lie in [0, 1]");
  }
  GraphDataset ds;
  ds.name = "sir-" + std::to_string(p.population);
  ds.node_count = p.population;
  ds.features = Matrix(p.population, p.dim);
  ds.labels.assign(p.population, 0);
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> step(0.0, 1.0 / std::sqrt(static_cast<double>(p.dim - 1)));
  ds.labels[0] = 1;
  ds.features(0, 0) = unit(rng);
  for (std::size_t v = 1; v < p.population; ++v) {
    std::uniform_int_distribution<std::size_t> pick(0, v - 1);
    const std::size_t parent = pick(rng);
    ds.edges.emplace_back(static_cast<std::uint32_t>(parent), static_cast<std::uint32_t>(v));
    const double susceptibility = unit(rng);
    ds.features(v, 0) = susceptibility;
    for (std::size_t k = 1; k < p.dim; ++k) ds.features(v, k) = ds.features(parent, k) + step(rng);
    const double u = unit(rng);
    ds.labels[v] = ds.labels[parent] == 1 && u < p.infection_prob * susceptibility ? 1 : 0;
  }
  ds.edges = canonical_edges(std::move(ds.edges));
  return ds;
}

double level_scale(const GaussianParams& p, std::size_t level) {
  return p.spread * std::pow(3.0, static_cast<double>(p.levels - level));
}

namespace {

// Unit directions with pairwise distance >= 1 (angles >= 60 degrees).
std::vector<Vec> sibling_directions(std::size_t count, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vec> dirs;
  std::size_t attempts = 0;
  while (dirs.size() < count) {
    if (++attempts > 100000) throw InvalidInput("gaussians: cannot place separated sibling clusters");
    Vec u(dim);
    for (double& x : u) x = g(rng);
    const double n = std::sqrt(squared_norm(u));
    if (n == 0.0) continue;
    for (double& x : u) x /= n;
    bool ok = true;
    for (const auto& d : dirs) ok = ok && squared_distance(u, d) >= 1.0;
    if (ok) dirs.push_back(std::move(u));
  }
  return dirs;
}

}  // namespace

std::vector<Matrix> hier_gaussian_means(const GaussianParams& p) {
  if (p.levels < 1 || p.clusters < 1 || p.dim < 1) throw InvalidInput("gaussians: invalid shape");
  std::mt19937_64 rng(p.seed);
  std::vector<Matrix> means;
  Matrix parents(1, p.dim);
  for (std::size_t level = 1; level <= p.levels; ++level) {
    const double scale = level_scale(p, level);
    Matrix next(parents.rows() * p.clusters, p.dim);
    for (std::size_t a = 0; a < parents.rows(); ++a) {
      const auto dirs = sibling_directions(p.clusters, p.dim, rng);
      for (std::size_t k = 0; k < p.clusters; ++k) {
        for (std::size_t q = 0; q < p.dim; ++q) {
          next(a * p.clusters + k, q) = parents(a, q) + (p.clusters == 1 ? 0.0 : scale * dirs[k][q]);
        }
      }
    }
    means.push_back(next);
    parents = std::move(next);
  }
  return means;
}

GraphDataset gen_hier_gaussians(const GaussianParams& p) {
  if (p.points_per_cluster < 1) throw InvalidInput("gaussians: need at least one point per cluster");
  const auto means = hier_gaussian_means(p);
  const Matrix& leaves = means.back();
  GraphDataset ds;
  ds.name = "gaussians-k" + std::to_string(p.clusters) + "-l" + std::to_string(p.levels);
  ds.node_count = leaves.rows() * p.points_per_cluster;
  ds.features = Matrix(ds.node_count, p.dim);
  ds.labels.resize(ds.node_count);
  std::mt19937_64 rng(p.seed ^ 0x5bd1e995ULL);
  std::normal_distribution<double> noise(0.0, 0.25 * p.spread);
  for (std::size_t leaf = 0; leaf < leaves.rows(); ++leaf) {
    for (std::size_t k = 0; k < p.points_per_cluster; ++k) {
      const std::size_t i = leaf * p.points_per_cluster + k;
      ds.labels[i] = static_cast<int>(leaf);
      for (std::size_t q = 0; q < p.dim; ++q) ds.features(i, q) = leaves(leaf, q) + noise(rng);
    }
  }
  const std::size_t n = ds.node_count;
  const std::size_t k = std::min(p.knn, n - 1);
  std::vector<std::pair<double, std::uint32_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) cand.emplace_back(squared_distance(ds.features.row(i), ds.features.row(j)), static_cast<std::uint32_t>(j));
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::size_t r = 0; r < k; ++r) ds.edges.emplace_back(static_cast<std::uint32_t>(i), cand[r].second);
  }
  ds.edges = canonical_edges(std::move(ds.edges));
  return ds;
}

}  // namespace hypgw::data
