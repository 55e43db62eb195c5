#pragma once

// Training configuration: flat "key = value" files, CLI overrides.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hypgw/cost.hpp"
#include "hypgw/tasks.hpp"

namespace hypgw {

enum class Task { Nc, Lp };
enum class GmSource { RawFeatures, EncoderOutput };

std::string to_string(Task t);
std::string to_string(GmSource s);
std::string to_string(tasks::Averaging a);
Task parse_task(const std::string& s);
GmSource parse_gm_source(const std::string& s);
tasks::Averaging parse_averaging(const std::string& s);

inline constexpr const char* kDefaultLayers =
    "euclid-linear:16,to-hyperbolic,hyp-linear:16,hyp-activation,tangent-aggregate,hyp-linear:16";

struct TrainConfig {
  Task task = Task::Nc;
  double lr = 0.01;
  std::size_t epochs = 1000;
  double beta = 0.0;
  double curvature = 1.0;
  std::string layers = kDefaultLayers;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  GmSource gm_source = GmSource::RawFeatures;
  CostKind cost;
  std::size_t patience = 100;
  double fd_r = 2.0;
  double fd_t = 1.0;
  bool fd_squared = false;
  // Split fractions; zero selects the task default (nc 0.7/0.15/0.15,
  // lp 0.85/0.05/0.10).
  double train_frac = 0.0;
  double val_frac = 0.0;
  double test_frac = 0.0;
  tasks::Averaging f1_average = tasks::Averaging::Micro;
  double grad_clip = 10.0;
  std::string run_id = "run";

  /// Throws InvalidInput on violated invariants.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Sets one field from its text form. Unknown keys are rejected.
void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);

/// Every key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& cfg);

/// Flat "key = value" text; '#' starts a comment line.
TrainConfig parse_config(std::istream& is, TrainConfig base = {});
TrainConfig load_config(const std::string& path, TrainConfig base = {});
void write_config(std::ostream& os, const TrainConfig& cfg);

}  // namespace hypgw
