#include "hypgw/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "hypgw/bounds.hpp"
#include "hypgw/config.hpp"
#include "hypgw/data.hpp"
#include "hypgw/geometry.hpp"
#include "hypgw/gm.hpp"
#include "hypgw/text.hpp"
#include "hypgw/train.hpp"

namespace hypgw::cli {

namespace fs = std::filesystem;

namespace {

enum class Level { Quiet, Info, Debug };

Level log_level() {
  const char* v = std::getenv("HYPGW_LOG");
  if (v == nullptr) return Level::Info;
  const std::string s(v);
  if (s == "quiet") return Level::Quiet;
  if (s == "debug") return Level::Debug;
  return Level::Info;
}

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err), level_(log_level()) {}
  void info(const std::string& msg) const {
    if (level_ != Level::Quiet) err_ << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level_ == Level::Debug) err_ << msg << '\n';
  }

 private:
  std::ostream& err_;
  Level level_;
};

std::string percent(double v) { return text::format_fixed(100.0 * v, 2) + "%"; }

struct TrainFlags {
  std::string config;
  std::vector<std::string> sets;
  std::string task, model;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<std::size_t> epochs;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--config", f.config, "flat key = value training config")->check(CLI::ExistingFile);
  cmd->add_option("--set", f.sets, "override a config key (key=value), repeatable");
  cmd->add_option("--task", f.task, "nc or lp");
  cmd->add_option("--model", f.model, "poincare or lorentz (GM target coordinates)");
  cmd->add_option("--seed", f.seed, "random seed (default 0)");
  cmd->add_option("--beta", f.beta, "GM regularization weight");
  cmd->add_option("--epochs", f.epochs, "maximum epochs");
}

TrainConfig build_config_unchecked(const TrainFlags& f, TrainConfig base) {
  TrainConfig cfg = f.config.empty() ? base : load_config(f.config, base);
  for (const auto& kv : f.sets) {
    const auto pos = kv.find('=');
    if (pos == std::string::npos) throw InvalidInput("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, std::string(text::trim(kv.substr(0, pos))), std::string(text::trim(kv.substr(pos + 1))));
  }
  if (!f.task.empty()) cfg.task = parse_task(f.task);
  if (!f.model.empty()) cfg.cost.model = parse_model(f.model);
  if (f.seed) cfg.seed = *f.seed;
  if (f.beta) cfg.beta = *f.beta;
  if (f.epochs) cfg.epochs = *f.epochs;
  cfg.validate();
  return cfg;
}

// A bad configuration is a usage error, not a data error.
TrainConfig build_config(const TrainFlags& f, TrainConfig base = {}) {
  try {
    return build_config_unchecked(f, std::move(base));
  } catch (const InvalidInput& e) {
    throw CLI::ValidationError("config", e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out << content;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (auto part : text::split(s, ',')) out.push_back(text::to_double(part, what));
  if (out.empty()) throw InvalidInput(what + ": empty list");
  return out;
}

Matrix model_points(const Matrix& z, Model model, Curvature c) {
  if (model == Model::Poincare) return z;
  Matrix out(z.rows(), z.cols() + 1);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const Vec l = geometry::poincare_to_lorentz(z.row(i), c);
    std::copy(l.begin(), l.end(), out.row(i).begin());
  }
  return out;
}

struct SweepRow {
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  double gm = 0.0;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Log log(err);
  CLI::App app{"Hyperbolic embeddings with a Gromov-Monge regularizer"};
  app.name("hypgw");
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string kind, out_dir;
  std::uint64_t seed = 0;
  data::TreeParams tree;
  data::SirParams sir;
  data::GaussianParams gauss;
  std::size_t dim = 0;
  double noise = tree.noise;
  synth->add_option("--kind", kind, "tree, sir or gaussians")->required()->check(CLI::IsMember({"tree", "sir", "gaussians"}));
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--seed", seed, "random seed (default 0)");
  synth->add_option("--branching", tree.branching, "tree branching factor");
  synth->add_option("--depth", tree.depth, "tree depth");
  synth->add_option("--noise", noise, "tree feature noise standard deviation");
  synth->add_option("--population", sir.population, "sir population");
  synth->add_option("--infection-prob", sir.infection_prob, "sir transmission probability");
  synth->add_option("--clusters", gauss.clusters, "gaussian clusters per level");
  synth->add_option("--levels", gauss.levels, "gaussian hierarchy levels");
  synth->add_option("--spread", gauss.spread, "gaussian leaf spread");
  synth->add_option("--points", gauss.points_per_cluster, "gaussian points per leaf cluster");
  synth->add_option("--knn", gauss.knn, "gaussian nearest neighbors per point");
  synth->add_option("--dim", dim, "feature dimension (0: generator default)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model and write R/best, R/log.csv, R/timing.csv");
  TrainFlags tflags;
  std::string data_dir;
  add_train_flags(train_cmd, tflags);
  train_cmd->add_option("--data", data_dir, "dataset directory")->required();
  train_cmd->add_option("--out", out_dir, "run directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  std::string ckpt_path, split = "test";
  eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--data", data_dir, "dataset directory")->required();
  eval_cmd->add_option("--split", split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--out", out_dir, "also write the CSV row to this directory");

  // gm
  auto* gm_cmd = app.add_subcommand("gm", "empirical GM between input features and embeddings");
  gm_cmd->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  gm_cmd->add_option("--data", data_dir, "dataset directory")->required();
  gm_cmd->add_option("--out", out_dir, "also write the CSV row to this directory");

  // bound
  auto* bound_cmd = app.add_subcommand("bound", "sampling-error bound report");
  std::optional<double> alpha, radius, moment;
  std::optional<std::size_t> sample_size;
  bound_cmd->add_option("--alpha", alpha, "bi-Lipschitz constant in (0, 1]");
  bound_cmd->add_option("--R", radius, "source cost bound");
  bound_cmd->add_option("--C", moment, "fourth-moment constant");
  bound_cmd->add_option("--m", sample_size, "sample size");
  bound_cmd->add_option("--ckpt", ckpt_path, "checkpoint file (estimate constants from data)");
  bound_cmd->add_option("--data", data_dir, "dataset directory (with --ckpt)");
  bound_cmd->add_option("--out", out_dir, "also write the report to this directory");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "train over a grid of betas and seeds");
  TrainFlags sflags;
  std::string betas_text = "0", seeds_text = "0";
  std::size_t jobs = 1;
  add_train_flags(sweep_cmd, sflags);
  sweep_cmd->add_option("--data", data_dir, "dataset directory")->required();
  sweep_cmd->add_option("--betas", betas_text, "comma-separated beta values");
  sweep_cmd->add_option("--seeds", seeds_text, "comma-separated seeds");
  sweep_cmd->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--split", split, "split for the reported metric")->check(CLI::IsMember({"train", "val", "test"}));
  sweep_cmd->add_option("--out", out_dir, "also write sweep.csv to this directory");

  // gradcheck
  auto* gc_cmd = app.add_subcommand("gradcheck", "compare analytic and finite-difference loss gradients");
  TrainFlags gflags;
  double tolerance = 1e-4;
  add_train_flags(gc_cmd, gflags);
  gc_cmd->add_option("--data", data_dir, "dataset directory (default: 10-node sir graph)");
  gc_cmd->add_option("--tolerance", tolerance, "maximum accepted relative error");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (synth->parsed()) {
      data::GraphDataset ds;
      if (kind == "tree") {
        tree.dim = dim;
        tree.noise = noise;
        tree.seed = seed;
        ds = data::gen_balanced_tree(tree);
      } else if (kind == "sir") {
        if (dim != 0) sir.dim = dim;
        sir.seed = seed;
        ds = data::gen_sir_graph(sir);
      } else {
        if (dim != 0) gauss.dim = dim;
        gauss.seed = seed;
        ds = data::gen_hier_gaussians(gauss);
      }
      data::save_dataset(ds, out_dir);
      out << "name,nodes,edges,features,classes\n"
          << ds.name << ',' << ds.node_count << ',' << ds.edges.size() << ',' << ds.features.cols() << ','
          << ds.class_count() << '\n';
      log.info("wrote " + ds.name + " to " + out_dir);
      return kOk;
    }

    if (train_cmd->parsed()) {
      const TrainConfig cfg = build_config(tflags);
      const auto ds = data::load_dataset(data_dir);
      log.info("training " + to_string(cfg.task) + " on " + ds.name + " (beta " + text::format_double(cfg.beta) +
               ", seed " + std::to_string(cfg.seed) + ")");
      const auto result = train::train(cfg, ds);
      for (const auto& r : result.log.epochs) {
        log.debug("epoch " + std::to_string(r.epoch) + " loss " + text::format_double(r.task_loss) + " gm " +
                  text::format_double(r.gm) + " val " + text::format_double(r.val_metric));
      }
      const fs::path dir(out_dir);
      fs::create_directories(dir);
      train::save_checkpoint(result.best, dir / "best");
      std::ostringstream logcsv, timing;
      train::write_log_csv(logcsv, result.log);
      train::write_timing_csv(timing, result.log);
      write_text_file(dir / "log.csv", logcsv.str());
      write_text_file(dir / "timing.csv", timing.str());
      const auto& best = result.log.best();
      out << "run_id,best_epoch,split,metric,value,gm\n"
          << cfg.run_id << ',' << best.epoch << ",val," << result.log.metric << ','
          << text::format_double(best.val_metric) << ',' << text::format_double(best.gm) << '\n';
      log.info("best epoch " + std::to_string(best.epoch) + ": val " + result.log.metric + " " +
               percent(best.val_metric) + ", gm " + text::format_fixed(best.gm, 4));
      return kOk;
    }

    if (eval_cmd->parsed()) {
      const auto ck = train::load_checkpoint(ckpt_path);
      const auto ds = data::load_dataset(data_dir);
      const auto rec = train::evaluate(ck, ds, split);
      const std::string csv =
          "split,metric,value\n" + rec.split + ',' + rec.metric + ',' + text::format_double(rec.value) + '\n';
      out << csv;
      if (!out_dir.empty()) write_text_file(fs::path(out_dir) / ("eval_" + split + ".csv"), csv);
      log.info(rec.split + " " + rec.metric + ": " + percent(rec.value));
      return kOk;
    }

    if (gm_cmd->parsed()) {
      const auto ck = train::load_checkpoint(ckpt_path);
      const auto ds = data::load_dataset(data_dir);
      const double v = train::checkpoint_gm(ck, ds);
      const std::string csv = "metric,value\ngm," + text::format_double(v) + '\n';
      out << csv;
      if (!out_dir.empty()) write_text_file(fs::path(out_dir) / "gm.csv", csv);
      log.info("gm: " + text::format_fixed(v, 4));
      return kOk;
    }

    if (bound_cmd->parsed()) {
      std::ostringstream report;
      if (!ckpt_path.empty()) {
        if (data_dir.empty()) throw CLI::RequiredError("--data");
        const auto ck = train::load_checkpoint(ckpt_path);
        const auto ds = data::load_dataset(data_dir);
        const Curvature c(ck.config.curvature);
        const Matrix source =
            ck.config.gm_source == GmSource::RawFeatures ? ds.features : Matrix();
        if (source.empty()) throw InvalidInput("bound: only raw-features checkpoints are supported");
        const Matrix z = model_points(train::checkpoint_embeddings(ck, ds), ck.config.cost.model, c);
        bounds::write_report(report, bounds::make_report(gm::EmpiricalDistribution(source), z, ck.config.cost, c));
      } else {
        if (!alpha || !radius || !moment || !sample_size) {
          throw CLI::RequiredError("--alpha, --R, --C and --m (or --ckpt with --data)");
        }
        bounds::BoundReport r;
        r.alpha = *alpha;
        r.R = *radius;
        r.C = *moment;
        r.m = *sample_size;
        const auto t = bounds::theorem_bound(r.alpha, r.R, r.C, r.m);
        r.deviation_bound = t.deviation;
        r.confidence = t.confidence;
        r.bernstein_confidence = bounds::bernstein_confidence(r.alpha, r.R, r.C, r.m);
        bounds::write_report(report, r);
      }
      out << report.str();
      if (!out_dir.empty()) write_text_file(fs::path(out_dir) / "bound.txt", report.str());
      return kOk;
    }

    if (sweep_cmd->parsed()) {
      const TrainConfig base = build_config(sflags);
      const auto ds = data::load_dataset(data_dir);
      const auto betas = parse_list(betas_text, "--betas");
      std::vector<std::uint64_t> seeds;
      for (double s : parse_list(seeds_text, "--seeds")) {
        if (s < 0 || s != std::floor(s)) throw InvalidInput("--seeds: expected non-negative integers");
        seeds.push_back(static_cast<std::uint64_t>(s));
      }
      std::vector<SweepRow> rows;
      for (double b : betas)
        for (std::uint64_t s : seeds) rows.push_back({b, s, "", 0.0, 0.0});
      std::vector<std::exception_ptr> errors(rows.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
          try {
            TrainConfig cfg = base;
            cfg.beta = rows[i].beta;
            cfg.seed = rows[i].seed;
            const auto res = train::train(cfg, ds);
            const auto rec = train::evaluate(res.best, ds, split);
            rows[i].metric = rec.metric;
            rows[i].value = rec.value;
            rows[i].gm = res.log.best().gm;
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      };
      std::vector<std::thread> pool;
      const std::size_t n = std::min(jobs, rows.size());
      for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();
      for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
      std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return a.beta != b.beta ? a.beta < b.beta : a.seed < b.seed;
      });
      std::ostringstream csv;
      csv << "beta,seed,split,metric,value,gm\n";
      for (const auto& r : rows) {
        csv << text::format_double(r.beta) << ',' << r.seed << ',' << split << ',' << r.metric << ','
            << text::format_double(r.value) << ',' << text::format_double(r.gm) << '\n';
      }
      out << csv.str();
      if (!out_dir.empty()) write_text_file(fs::path(out_dir) / "sweep.csv", csv.str());
      for (const auto& r : rows) {
        log.info("beta " + text::format_double(r.beta) + " seed " + std::to_string(r.seed) + ": " + split + " " +
                 r.metric + " " + percent(r.value) + ", gm " + text::format_fixed(r.gm, 4));
      }
      return kOk;
    }

    if (gc_cmd->parsed()) {
      TrainConfig base;
      base.task = Task::Lp;
      base.beta = 0.5;
      base.layers = "euclid-linear:4,to-hyperbolic,hyp-linear:4,hyp-activation,tangent-aggregate,hyp-linear:3";
      base.train_frac = 0.6;
      base.val_frac = 0.2;
      base.test_frac = 0.2;
      const TrainConfig cfg = build_config(gflags, base);
      data::GraphDataset ds;
      if (data_dir.empty()) {
        data::SirParams p;
        p.population = 10;
        p.dim = 4;
        p.seed = cfg.seed;
        ds = data::gen_sir_graph(p);
      } else {
        ds = data::load_dataset(data_dir);
      }
      const auto lf = train::make_loss_function(cfg, ds);
      const double e = ad::grad_check(lf.f, lf.point);
      out << "metric,value\nmax_rel_error," << text::format_double(e) << '\n';
      const bool ok = e <= tolerance;
      log.info(std::string(ok ? "gradient check passed" : "gradient check FAILED") + ": max relative error " +
               text::format_double(e) + " over " + std::to_string(lf.point.size()) + " parameters");
      return ok ? kOk : kNumericalError;
    }
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const InvalidInput& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace hypgw::cli
