#include "hypgw/config.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "hypgw/text.hpp"

namespace hypgw {

std::string to_string(Task t) { return t == Task::Nc ? "nc" : "lp"; }

std::string to_string(GmSource s) { return s == GmSource::RawFeatures ? "raw-features" : "encoder-output"; }

std::string to_string(tasks::Averaging a) { return a == tasks::Averaging::Micro ? "micro" : "macro"; }

Task parse_task(const std::string& s) {
  if (s == "nc") return Task::Nc;
  if (s == "lp") return Task::Lp;
  throw InvalidInput("unknown task '" + s + "' (expected nc or lp)");
}

GmSource parse_gm_source(const std::string& s) {
  if (s == "raw-features") return GmSource::RawFeatures;
  if (s == "encoder-output") return GmSource::EncoderOutput;
  throw InvalidInput("unknown gm source '" + s + "' (expected raw-features or encoder-output)");
}

tasks::Averaging parse_averaging(const std::string& s) {
  if (s == "micro") return tasks::Averaging::Micro;
  if (s == "macro") return tasks::Averaging::Macro;
  throw InvalidInput("unknown f1 averaging '" + s + "' (expected micro or macro)");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidInput("lr must be positive");
  if (epochs < 1) throw InvalidInput("epochs must be at least 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidInput("beta must be non-negative");
  (void)Curvature(curvature);
  if (!(weight_decay >= 0.0)) throw InvalidInput("weight_decay must be non-negative");
  if (patience < 1) throw InvalidInput("patience must be at least 1");
  if (!(fd_t > 0.0)) throw InvalidInput("fd_t must be positive");
  if (!(grad_clip > 0.0)) throw InvalidInput("grad_clip must be positive");
  const double fracs[] = {train_frac, val_frac, test_frac};
  const bool any = train_frac != 0.0 || val_frac != 0.0 || test_frac != 0.0;
  if (any) {
    for (double f : fracs)
      if (!(f > 0.0)) throw InvalidInput("split fractions must all be positive when any is set");
    if (train_frac + val_frac + test_frac > 1.0 + 1e-9) throw InvalidInput("split fractions sum above 1");
  }
  if (run_id.empty() || run_id.find_first_of(",\n") != std::string::npos) {
    throw InvalidInput("run_id must be non-empty and free of commas and newlines");
  }
}

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidInput(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  const auto num = [&] { return text::to_double(value, key); };
  const auto count = [&] { return text::to_int<std::size_t>(value, key); };
  if (key == "task") cfg.task = parse_task(value);
  else if (key == "lr") cfg.lr = num();
  else if (key == "epochs") cfg.epochs = count();
  else if (key == "beta") cfg.beta = num();
  else if (key == "curvature") cfg.curvature = num();
  else if (key == "layers") cfg.layers = value;
  else if (key == "weight_decay") cfg.weight_decay = num();
  else if (key == "seed") cfg.seed = text::to_int<std::uint64_t>(value, key);
  else if (key == "gm_source") cfg.gm_source = parse_gm_source(value);
  else if (key == "source_cost") cfg.cost.source = parse_source_cost(value);
  else if (key == "target_cost") cfg.cost.target = parse_target_cost(value);
  else if (key == "model") cfg.cost.model = parse_model(value);
  else if (key == "patience") cfg.patience = count();
  else if (key == "fd_r") cfg.fd_r = num();
  else if (key == "fd_t") cfg.fd_t = num();
  else if (key == "fd_squared") cfg.fd_squared = parse_bool(key, value);
  else if (key == "train_frac") cfg.train_frac = num();
  else if (key == "val_frac") cfg.val_frac = num();
  else if (key == "test_frac") cfg.test_frac = num();
  else if (key == "f1_average") cfg.f1_average = parse_averaging(value);
  else if (key == "grad_clip") cfg.grad_clip = num();
  else if (key == "run_id") cfg.run_id = value;
  else throw InvalidInput("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& cfg) {
  using text::format_double;
  return {
      {"task", to_string(cfg.task)},
      {"lr", format_double(cfg.lr)},
      {"epochs", std::to_string(cfg.epochs)},
      {"beta", format_double(cfg.beta)},
      {"curvature", format_double(cfg.curvature)},
      {"layers", cfg.layers},
      {"weight_decay", format_double(cfg.weight_decay)},
      {"seed", std::to_string(cfg.seed)},
      {"gm_source", to_string(cfg.gm_source)},
      {"source_cost", to_string(cfg.cost.source)},
      {"target_cost", to_string(cfg.cost.target)},
      {"model", to_string(cfg.cost.model)},
      {"patience", std::to_string(cfg.patience)},
      {"fd_r", format_double(cfg.fd_r)},
      {"fd_t", format_double(cfg.fd_t)},
      {"fd_squared", cfg.fd_squared ? "true" : "false"},
      {"train_frac", format_double(cfg.train_frac)},
      {"val_frac", format_double(cfg.val_frac)},
      {"test_frac", format_double(cfg.test_frac)},
      {"f1_average", to_string(cfg.f1_average)},
      {"grad_clip", format_double(cfg.grad_clip)},
      {"run_id", cfg.run_id},
  };
}

TrainConfig parse_config(std::istream& is, TrainConfig base) {
  const auto doc = text::Document::parse(is, '=');
  for (const auto& [k, v] : doc.entries()) set_config_value(base, k, v);
  base.validate();
  return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config '" + path + "'");
  try {
    return parse_config(in, std::move(base));
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

void write_config(std::ostream& os, const TrainConfig& cfg) {
  for (const auto& [k, v] : config_entries(cfg)) os << k << " = " << v << '\n';
}

}  // namespace hypgw
