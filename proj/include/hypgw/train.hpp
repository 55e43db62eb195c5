#pragma once

// Training loop: task loss plus beta times the GM regularizer, Adam updates,
// early stopping on the validation metric, text checkpoints and CSV logs.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hypgw/ad.hpp"
#include "hypgw/config.hpp"
#include "hypgw/data.hpp"
#include "hypgw/nn.hpp"

namespace hypgw::train {

struct EpochRecord {
  std::size_t epoch = 0;
  double task_loss = 0.0;
  double gm = 0.0;
  double total = 0.0;
  double val_metric = 0.0;
  std::size_t tape_size = 0;
  double wall_seconds = 0.0;
};

struct RunLog {
  std::string run_id;
  std::string metric;  // "f1" or "auc"
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val = 0.0;

  const EpochRecord& best() const { return epochs.at(best_epoch); }
};

/// Network and task head at the best validation epoch. The head holds
/// W (classes x dim, row-major) then b for nc, and (r, t) for lp.
struct Checkpoint {
  TrainConfig config;
  nn::Network net;
  std::vector<double> head;
  std::size_t best_epoch = 0;
  double best_val = 0.0;

  bool operator==(const Checkpoint& o) const {
    return config == o.config && net == o.net && head == o.head && best_epoch == o.best_epoch &&
           best_val == o.best_val;
  }
};

struct TrainResult {
  RunLog log;
  Checkpoint best;
};

double total_loss(double task_loss, double gm_value, double beta);
ad::Var total_loss(ad::Var task_loss, ad::Var gm_value, double beta);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

/// One Adam update in place; zero learning rate leaves `params` unchanged.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr);

/// Rescales `g` to norm `max_norm` when larger; returns the original norm.
double clip_by_global_norm(std::span<double> g, double max_norm);

/// Fresh network and head for `cfg` on `ds`, before any update.
Checkpoint init_checkpoint(const TrainConfig& cfg, const data::GraphDataset& ds);

/// Total training loss as a function of the flattened parameters (network
/// then head), with the epoch-`epoch` negative sample for lp. `point` is the
/// initial parameter vector; `ds` must outlive the function.
struct LossFunction {
  ad::Function f;
  std::vector<double> point;
};
LossFunction make_loss_function(const TrainConfig& cfg, const data::GraphDataset& ds, std::size_t epoch = 0);

/// Deterministic given cfg.seed. Throws NumericalError naming the epoch when
/// the loss becomes non-finite.
TrainResult train(const TrainConfig& cfg, const data::GraphDataset& ds);

struct MetricRecord {
  std::string split;
  std::string metric;
  double value = 0.0;
};

/// F1 (nc) or AUC (lp) of the checkpoint on "train", "val" or "test".
MetricRecord evaluate(const Checkpoint& ckpt, const data::GraphDataset& ds, const std::string& split);

/// Poincare embeddings of every node under the checkpoint's network.
Matrix checkpoint_embeddings(const Checkpoint& ckpt, const data::GraphDataset& ds);

/// Empirical GM between the configured source features and the embeddings,
/// the quantity logged per epoch.
double checkpoint_gm(const Checkpoint& ckpt, const data::GraphDataset& ds);

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// "run_id,epoch,split,metric,value" rows; no timing, so reruns are byte-identical.
void write_log_csv(std::ostream& os, const RunLog& log);
/// "run_id,epoch,wall_seconds" rows.
void write_timing_csv(std::ostream& os, const RunLog& log);

}  // namespace hypgw::train
