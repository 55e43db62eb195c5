#include "hypgw/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

#include "hypgw/geometry.hpp"
#include "hypgw/gm.hpp"
#include "hypgw/kernels.hpp"
#include "hypgw/tape_ops.hpp"
#include "hypgw/tasks.hpp"
#include "hypgw/text.hpp"

namespace hypgw::train {

using ad::Var;
using ad::VarVec;
using data::GraphDataset;
using tasks::Edge;

inline constexpr double kMinTemperature = 1e-3;

double total_loss(double task_loss, double gm_value, double beta) { return task_loss + beta * gm_value; }

Var total_loss(Var task_loss, Var gm_value, double beta) { return task_loss + beta * gm_value; }

void adam_step(AdamState& s, std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != grads.size()) throw InvalidInput("adam_step: size mismatch");
  if (s.m.empty()) {
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  ++s.step;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grads[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grads[i] * grads[i];
    const double mhat = s.m[i] / bc1;
    const double vhat = s.v[i] / bc2;
    if (lr != 0.0) params[i] -= lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

double clip_by_global_norm(std::span<double> g, double max_norm) {
  double sq = 0.0;
  for (double x : g) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double k = max_norm / norm;
    for (double& x : g) x *= k;
  }
  return norm;
}

namespace {

data::SplitSpec split_spec(const TrainConfig& cfg) {
  data::SplitSpec s;
  s.kind = cfg.task == Task::Nc ? data::SplitKind::NodeNc : data::SplitKind::EdgeLp;
  s.seed = cfg.seed;
  if (cfg.train_frac > 0.0) {
    s.train = cfg.train_frac;
    s.val = cfg.val_frac;
    s.test = cfg.test_frac;
  } else if (cfg.task == Task::Nc) {
    s.train = 0.70;
    s.val = 0.15;
    s.test = 0.15;
  }
  return s;
}

std::size_t head_size(const TrainConfig& cfg, std::size_t dim, std::size_t classes) {
  return cfg.task == Task::Nc ? classes * dim + classes : 2;
}

// Everything about a (config, dataset) pair that stays fixed during training.
struct Problem {
  TrainConfig cfg;
  const GraphDataset* ds = nullptr;
  Curvature c;
  std::size_t classes = 0;
  data::NodeSplit nodes;
  data::EdgeSplit edges;
  nn::GraphAdjacency adj;
  std::vector<Edge> negative_exclude;  // every positive plus fixed eval negatives
  Matrix source_costs;                 // raw-features only
};

Problem prepare(const TrainConfig& cfg, const GraphDataset& ds) {
  cfg.validate();
  ds.validate();
  Problem p;
  p.cfg = cfg;
  p.ds = &ds;
  p.c = Curvature(cfg.curvature);
  if (ds.node_count < 2) throw InvalidInput("dataset needs at least two nodes");
  if (cfg.task == Task::Nc) {
    if (ds.labels.empty()) throw InvalidInput("task nc needs a labeled dataset");
    p.classes = ds.class_count();
    if (p.classes < 2) throw InvalidInput("task nc needs at least two classes");
    p.nodes = data::split_nodes(ds, split_spec(cfg));
    p.adj = nn::GraphAdjacency::from_edges(ds.node_count, ds.edges);
  } else {
    if (ds.edges.empty()) throw InvalidInput("task lp needs a dataset with edges");
    p.edges = data::split_edges(ds, split_spec(cfg));
    p.adj = nn::GraphAdjacency::from_edges(ds.node_count, p.edges.train);
    p.negative_exclude = ds.edges;
    p.negative_exclude.insert(p.negative_exclude.end(), p.edges.val_negatives.begin(), p.edges.val_negatives.end());
    p.negative_exclude.insert(p.negative_exclude.end(), p.edges.test_negatives.begin(), p.edges.test_negatives.end());
  }
  if (cfg.gm_source == GmSource::RawFeatures) p.source_costs = kernels::source_cost_matrix(ds.features, cfg.cost.source);
  return p;
}

void check_compatible(const Checkpoint& ck, const Problem& p) {
  if (ck.net.input_dim() != p.ds->features.cols()) {
    throw InvalidInput("checkpoint expects " + std::to_string(ck.net.input_dim()) + " features, dataset has " +
                       std::to_string(p.ds->features.cols()));
  }
  if (ck.head.size() != head_size(ck.config, ck.net.output_dim(), p.classes)) {
    throw InvalidInput("checkpoint head does not match the dataset's task shape");
  }
}

struct Forward {
  nn::ForwardTrace trace;
  std::vector<VarVec> logits;  // nc
  Var r, t;                    // lp
};

Forward run_forward(ad::Tape& tape, const Problem& p, std::span<const Var> vars, const nn::Network& net) {
  const Matrix& x = p.ds->features;
  std::vector<VarVec> inputs;
  inputs.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) inputs.push_back(tape.variables(x.row(i)));
  const std::size_t np = net.params().size();
  Forward f;
  f.trace = nn::network_forward(net, vars.subspan(0, np), inputs, &p.adj);
  const auto head = vars.subspan(np);
  if (p.cfg.task == Task::Nc) {
    const std::size_t dim = net.output_dim();
    f.logits = tasks::nc_logits(f.trace.embeddings, head.subspan(0, p.classes * dim),
                                head.subspan(p.classes * dim, p.classes), p.c);
  } else {
    f.r = head[0];
    f.t = head[1];
  }
  return f;
}

Matrix to_matrix(const std::vector<VarVec>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) = rows[i][k].value();
  return m;
}

Matrix target_points(const Matrix& z, const CostKind& kind, Curvature c) {
  if (kind.model == Model::Poincare) return z;
  Matrix out(z.rows(), z.cols() + 1);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const Vec l = geometry::poincare_to_lorentz(z.row(i), c);
    std::copy(l.begin(), l.end(), out.row(i).begin());
  }
  return out;
}

const Matrix* fixed_source_costs(const Problem& p) {
  return p.cfg.gm_source == GmSource::RawFeatures ? &p.source_costs : nullptr;
}

const Matrix& source_points(const Problem& p, const Matrix& encoder) {
  return p.cfg.gm_source == GmSource::RawFeatures ? p.ds->features : encoder;
}

double gm_value(const Problem& p, const Forward& f) {
  const Matrix enc = p.cfg.gm_source == GmSource::EncoderOutput ? to_matrix(f.trace.encoder) : Matrix();
  const Matrix z = target_points(to_matrix(f.trace.embeddings), p.cfg.cost, p.c);
  return kernels::gm(source_points(p, enc), z, p.cfg.cost, p.c, false, false, fixed_source_costs(p)).value;
}

// The regularizer as a single tape node whose partials come from the kernel.
Var gm_node(ad::Tape& tape, const Problem& p, const Forward& f) {
  std::vector<VarVec> target_rows;
  if (p.cfg.cost.model == Model::Lorentz) {
    target_rows.reserve(f.trace.embeddings.size());
    for (const auto& z : f.trace.embeddings) target_rows.push_back(tape_ops::poincare_to_lorentz(z, p.c));
  }
  const auto& zrows = p.cfg.cost.model == Model::Lorentz ? target_rows : f.trace.embeddings;
  const bool enc = p.cfg.gm_source == GmSource::EncoderOutput;
  const Matrix encoder = enc ? to_matrix(f.trace.encoder) : Matrix();
  const auto res =
      kernels::gm(source_points(p, encoder), to_matrix(zrows), p.cfg.cost, p.c, enc, true, fixed_source_costs(p));
  VarVec operands;
  std::vector<double> partials;
  for (std::size_t i = 0; i < zrows.size(); ++i) {
    for (std::size_t k = 0; k < zrows[i].size(); ++k) {
      operands.push_back(zrows[i][k]);
      partials.push_back(res.grad_z(i, k));
    }
  }
  if (enc) {
    for (std::size_t i = 0; i < f.trace.encoder.size(); ++i) {
      for (std::size_t k = 0; k < f.trace.encoder[i].size(); ++k) {
        operands.push_back(f.trace.encoder[i][k]);
        partials.push_back(res.grad_x(i, k));
      }
    }
  }
  return tape.push_fused(res.value, operands, partials);
}

std::vector<int> predict(const std::vector<VarVec>& logits) {
  std::vector<int> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto& s = logits[i];
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.size(); ++k)
      if (s[k].value() > s[best].value()) best = k;
    out[i] = static_cast<int>(best);
  }
  return out;
}

double nc_metric(const Problem& p, const Forward& f, std::span<const std::uint32_t> rows) {
  const auto pred = predict(f.logits);
  std::vector<int> yp, yt;
  for (std::uint32_t i : rows) {
    yp.push_back(pred[i]);
    yt.push_back(p.ds->labels[i]);
  }
  return tasks::f1_score(yp, yt, p.cfg.f1_average);
}

double lp_metric(const Problem& p, const Matrix& z, const std::vector<Edge>& pos, const std::vector<Edge>& neg) {
  auto scores = tasks::edge_scores(z, pos, p.c, p.cfg.fd_squared);
  const auto ns = tasks::edge_scores(z, neg, p.c, p.cfg.fd_squared);
  scores.insert(scores.end(), ns.begin(), ns.end());
  std::vector<int> labels(pos.size(), 1);
  labels.resize(pos.size() + neg.size(), 0);
  return tasks::auc_score(scores, labels);
}

std::vector<Edge> train_eval_negatives(const Problem& p) {
  return data::sample_negatives(p.ds->node_count, p.negative_exclude, p.edges.train.size(),
                                gm::trial_seed(p.cfg.seed, ~std::uint64_t{1}));
}

double split_metric(const Problem& p, const Forward& f, const std::string& split) {
  if (p.cfg.task == Task::Nc) {
    if (split == "train") return nc_metric(p, f, p.nodes.train);
    if (split == "val") return nc_metric(p, f, p.nodes.val);
    if (split == "test") return nc_metric(p, f, p.nodes.test);
  } else {
    const Matrix z = to_matrix(f.trace.embeddings);
    if (split == "train") return lp_metric(p, z, p.edges.train, train_eval_negatives(p));
    if (split == "val") return lp_metric(p, z, p.edges.val, p.edges.val_negatives);
    if (split == "test") return lp_metric(p, z, p.edges.test, p.edges.test_negatives);
  }
  throw InvalidInput("unknown split '" + split + "' (expected train, val or test)");
}

std::string metric_name(Task t) { return t == Task::Nc ? "f1" : "auc"; }

Checkpoint fresh_checkpoint(const Problem& p) {
  Checkpoint ck;
  ck.config = p.cfg;
  auto specs = nn::parse_layers(p.cfg.layers, p.ds->features.cols());
  ck.net = nn::Network::init(std::move(specs), p.c, p.cfg.seed);
  const std::size_t dim = ck.net.output_dim();
  if (p.cfg.task == Task::Nc) {
    std::mt19937_64 rng(gm::trial_seed(p.cfg.seed, 0));
    const double a = 1.0 / std::sqrt(static_cast<double>(dim));
    std::uniform_real_distribution<double> u(-a, a);
    ck.head.assign(head_size(p.cfg, dim, p.classes), 0.0);
    for (std::size_t i = 0; i < p.classes * dim; ++i) ck.head[i] = u(rng);
  } else {
    ck.head = {p.cfg.fd_r, p.cfg.fd_t};
  }
  return ck;
}

std::vector<double> flatten(const Checkpoint& ck) {
  std::vector<double> flat = ck.net.params();
  flat.insert(flat.end(), ck.head.begin(), ck.head.end());
  return flat;
}

void unflatten(Checkpoint& ck, std::span<const double> flat) {
  const std::size_t np = ck.net.params().size();
  std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(np), ck.net.params().begin());
  ck.head.assign(flat.begin() + static_cast<std::ptrdiff_t>(np), flat.end());
}

struct EpochLoss {
  Forward f;
  Var task_loss;
  Var total;
  double gm = 0.0;
};

EpochLoss epoch_loss(ad::Tape& tape, const Problem& p, std::span<const Var> vars, const nn::Network& net,
                     std::size_t epoch) {
  EpochLoss out;
  out.f = run_forward(tape, p, vars, net);
  if (p.cfg.task == Task::Nc) {
    out.task_loss = tasks::nll_loss(out.f.logits, p.ds->labels, p.nodes.train);
  } else {
    tasks::EdgeBatch batch;
    batch.positives = p.edges.train;
    batch.negatives = data::sample_negatives(p.ds->node_count, p.negative_exclude, p.edges.train.size(),
                                             gm::trial_seed(p.cfg.seed, epoch + 1));
    out.task_loss = tasks::lp_loss(out.f.trace.embeddings, batch, out.f.r, out.f.t, p.c, p.cfg.fd_squared);
  }
  if (p.cfg.beta > 0.0) {
    const Var g = gm_node(tape, p, out.f);
    out.gm = g.value();
    out.total = total_loss(out.task_loss, g, p.cfg.beta);
  } else {
    // Diagnostic only: the value is computed off the tape, so no gradient work.
    out.gm = gm_value(p, out.f);
    out.total = out.task_loss;
  }
  return out;
}

}  // namespace

LossFunction make_loss_function(const TrainConfig& cfg, const GraphDataset& ds, std::size_t epoch) {
  auto p = std::make_shared<const Problem>(prepare(cfg, ds));
  const Checkpoint ck = fresh_checkpoint(*p);
  LossFunction lf;
  lf.point = flatten(ck);
  lf.f = [p, net = ck.net, epoch](ad::Tape& tape, std::span<const Var> vars) {
    return epoch_loss(tape, *p, vars, net, epoch).total;
  };
  return lf;
}

Checkpoint init_checkpoint(const TrainConfig& cfg, const GraphDataset& ds) { return fresh_checkpoint(prepare(cfg, ds)); }

TrainResult train(const TrainConfig& cfg, const GraphDataset& ds) {
  const Problem p = prepare(cfg, ds);
  Checkpoint current = fresh_checkpoint(p);
  std::vector<double> flat = flatten(current);
  const std::size_t np = current.net.params().size();

  TrainResult result;
  result.log.run_id = cfg.run_id;
  result.log.metric = metric_name(cfg.task);
  result.best = current;
  AdamState adam;
  ad::Tape tape;
  bool have_best = false;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    tape.clear();
    const auto vars = tape.variables(flat);
    EpochLoss el;
    try {
      el = epoch_loss(tape, p, vars, current.net, epoch);
    } catch (const NumericalError& e) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    const Forward& f = el.f;
    rec.gm = el.gm;
    rec.task_loss = el.task_loss.value();
    rec.total = total_loss(rec.task_loss, rec.gm, cfg.beta);
    if (!std::isfinite(rec.task_loss) || !std::isfinite(rec.gm) || !std::isfinite(rec.total)) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": non-finite loss");
    }
    rec.val_metric = split_metric(p, f, "val");
    rec.tape_size = tape.size();

    if (!have_best || rec.val_metric > result.log.best_val) {
      have_best = true;
      result.log.best_epoch = epoch;
      result.log.best_val = rec.val_metric;
      unflatten(current, flat);
      result.best = current;
      result.best.best_epoch = epoch;
      result.best.best_val = rec.val_metric;
    }

    const bool stop = epoch - result.log.best_epoch >= cfg.patience;
    if (!stop && epoch + 1 < cfg.epochs) {
      tape.backward(el.total);
      std::vector<double> grads = tape.grads(vars);
      if (cfg.weight_decay > 0.0)
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += cfg.weight_decay * flat[i];
      if (!all_finite(grads)) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": non-finite gradient");
      }
      clip_by_global_norm(grads, cfg.grad_clip);
      adam_step(adam, flat, grads, cfg.lr);
      if (cfg.task == Task::Lp) flat[np + 1] = std::max(flat[np + 1], kMinTemperature);
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(rec);
    if (stop) break;
  }
  return result;
}

MetricRecord evaluate(const Checkpoint& ckpt, const GraphDataset& ds, const std::string& split) {
  const Problem p = prepare(ckpt.config, ds);
  check_compatible(ckpt, p);
  ad::Tape tape;
  const auto vars = tape.variables(flatten(ckpt));
  const Forward f = run_forward(tape, p, vars, ckpt.net);
  return {split, metric_name(ckpt.config.task), split_metric(p, f, split)};
}

Matrix checkpoint_embeddings(const Checkpoint& ckpt, const GraphDataset& ds) {
  const Problem p = prepare(ckpt.config, ds);
  check_compatible(ckpt, p);
  return nn::embed(ckpt.net, ds.features, &p.adj);
}

double checkpoint_gm(const Checkpoint& ckpt, const GraphDataset& ds) {
  const Problem p = prepare(ckpt.config, ds);
  check_compatible(ckpt, p);
  ad::Tape tape;
  const auto vars = tape.variables(flatten(ckpt));
  const Forward f = run_forward(tape, p, vars, ckpt.net);
  return gm_value(p, f);
}

void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  os << "# hypgw checkpoint\n";
  for (const auto& [k, v] : config_entries(ck.config)) os << "config." << k << ": " << v << '\n';
  nn::write_network(os, ck.net);
  os << "head_count: " << ck.head.size() << '\n';
  os << "head:";
  for (double v : ck.head) os << ' ' << text::format_double(v);
  os << '\n';
  os << "best_epoch: " << ck.best_epoch << '\n';
  os << "best_val: " << text::format_double(ck.best_val) << '\n';
}

Checkpoint read_checkpoint(std::istream& is) {
  const auto doc = text::Document::parse(is);
  Checkpoint ck;
  for (const auto& [k, v] : doc.entries()) {
    if (k.rfind("config.", 0) == 0) set_config_value(ck.config, k.substr(7), v);
  }
  ck.config.validate();
  ck.net = nn::read_network(doc);
  ck.head = text::parse_numbers(doc.get("head"), "head");
  if (ck.head.size() != text::to_int<std::size_t>(doc.get("head_count"), "head_count")) {
    throw InvalidInput("head_count does not match head values");
  }
  ck.best_epoch = text::to_int<std::size_t>(doc.get("best_epoch"), "best_epoch");
  ck.best_val = text::to_double(doc.get("best_val"), "best_val");
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write checkpoint '" + path.string() + "'");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open checkpoint '" + path.string() + "'");
  try {
    return read_checkpoint(in);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void write_log_csv(std::ostream& os, const RunLog& log) {
  os << "run_id,epoch,split,metric,value\n";
  for (const auto& r : log.epochs) {
    const std::string prefix = log.run_id + ',' + std::to_string(r.epoch) + ',';
    os << prefix << "train,task_loss," << text::format_double(r.task_loss) << '\n';
    os << prefix << "train,gm," << text::format_double(r.gm) << '\n';
    os << prefix << "train,total_loss," << text::format_double(r.total) << '\n';
    os << prefix << "val," << log.metric << ',' << text::format_double(r.val_metric) << '\n';
  }
}

void write_timing_csv(std::ostream& os, const RunLog& log) {
  os << "run_id,epoch,wall_seconds\n";
  for (const auto& r : log.epochs) {
    os << log.run_id << ',' << r.epoch << ',' << text::format_double(r.wall_seconds) << '\n';
  }
}

}  // namespace hypgw::train
