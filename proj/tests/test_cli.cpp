#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hypgw/bounds.hpp"
#include "hypgw/cli.hpp"
#include "hypgw/data.hpp"
#include "hypgw/text.hpp"
#include "hypgw/train.hpp"

using namespace hypgw;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(HYPGW_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / "hypgw-test-cli";
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string operator/(const std::string& name) const { return (root / name).string(); }
};

const std::string kSmallLayers =
    "layers=euclid-linear:4,to-hyperbolic,hyp-linear:4,hyp-activation,tangent-aggregate,hyp-linear:3";

}  // namespace

TEST_CASE("usage errors") {
  setenv("HYPGW_LOG", "quiet", 1);
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"synth", "--kind", "tree"}).code == cli::kUsage);
  CHECK(run({"synth", "--kind", "tree", "--out", "x", "--bogus", "1"}).code == cli::kUsage);
  CHECK(run({"synth", "--kind", "lattice", "--out", "x"}).code == cli::kUsage);
  CHECK(run({"bound", "--alpha", "0.5"}).code == cli::kUsage);
  const auto help = run({"--help"});
  CHECK(help.code == cli::kOk);
  CHECK(help.out.find("synth") != std::string::npos);
}

TEST_CASE("synth writes the dataset and manifest") {
  setenv("HYPGW_LOG", "quiet", 1);
  Workspace ws;
  const auto r = run({"synth", "--kind", "tree", "--branching", "2", "--depth", "3", "--out", ws / "tree"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out == "name,nodes,edges,features,classes\ntree-b2-d3,15,14,6,4\n");
  CHECK(r.err.empty());
  const auto ds = data::load_dataset(ws / "tree");
  CHECK(ds == data::gen_balanced_tree({2, 3, 0, 0.05, 0}));
  CHECK(slurp(ws / "tree/manifest.txt").find("nodes: 15") != std::string::npos);

  CHECK(run({"synth", "--kind", "sir", "--population", "30", "--seed", "4", "--out", ws / "sir"}).code == cli::kOk);
  CHECK(data::load_dataset(ws / "sir") == data::gen_sir_graph({30, 0.5, 16, 4}));
  CHECK(run({"synth", "--kind", "gaussians", "--clusters", "3", "--points", "5", "--out", ws / "g"}).code == cli::kOk);
  CHECK(run({"synth", "--kind", "sir", "--population", "3", "--out", ws / "bad"}).code == cli::kDataError);
}

TEST_CASE("train, eval and gm match the library") {
  setenv("HYPGW_LOG", "info", 1);
  Workspace ws;
  REQUIRE(run({"synth", "--kind", "tree", "--branching", "2", "--depth", "3", "--out", ws / "d"}).code == 0);
  {
    std::ofstream cfg(ws / "c.txt");
    cfg << "task = nc\nepochs = 20\nbeta = 0.1\n" << kSmallLayers.substr(0, 6) << " = " << kSmallLayers.substr(7) << "\n";
  }
  const auto tr = run({"train", "--config", ws / "c.txt", "--data", ws / "d", "--out", ws / "r", "--seed", "3"});
  REQUIRE(tr.code == cli::kOk);
  CHECK(tr.out.rfind("run_id,best_epoch,split,metric,value,gm\nrun,", 0) == 0);
  CHECK(tr.err.find("best epoch") != std::string::npos);
  CHECK(fs::exists(ws / "r/best"));
  CHECK(slurp(ws / "r/log.csv").rfind("run_id,epoch,split,metric,value\n", 0) == 0);
  CHECK(slurp(ws / "r/timing.csv").rfind("run_id,epoch,wall_seconds\n", 0) == 0);

  // the library run with the same configuration
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.beta = 0.1;
  cfg.seed = 3;
  cfg.layers = kSmallLayers.substr(7);
  const auto ds = data::load_dataset(ws / "d");
  const auto lib = train::train(cfg, ds);
  CHECK(train::load_checkpoint(ws / "r/best") == lib.best);
  std::ostringstream csv;
  train::write_log_csv(csv, lib.log);
  CHECK(slurp(ws / "r/log.csv") == csv.str());

  const auto ev = run({"eval", "--ckpt", ws / "r/best", "--data", ws / "d", "--split", "test"});
  CHECK(ev.code == cli::kOk);
  const auto rec = train::evaluate(lib.best, ds, "test");
  CHECK(ev.out == "split,metric,value\ntest,f1," + text::format_double(rec.value) + "\n");

  const auto g = run({"gm", "--data", ws / "d", "--ckpt", ws / "r/best", "--out", ws / "r"});
  CHECK(g.code == cli::kOk);
  CHECK(g.out == "metric,value\ngm," + text::format_double(train::checkpoint_gm(lib.best, ds)) + "\n");
  CHECK(slurp(ws / "r/gm.csv") == g.out);

  const auto b = run({"bound", "--ckpt", ws / "r/best", "--data", ws / "d"});
  CHECK(b.code == cli::kOk);
  CHECK(b.out.find("alpha: ") != std::string::npos);

  CHECK(run({"eval", "--ckpt", ws / "missing", "--data", ws / "d"}).code == cli::kDataError);
  CHECK(run({"eval", "--ckpt", ws / "r/best", "--data", ws / "nowhere"}).code == cli::kDataError);
  CHECK(run({"train", "--data", ws / "d", "--out", ws / "r2", "--set", "beta=-2"}).code == cli::kUsage);
  CHECK(run({"train", "--data", ws / "d", "--out", ws / "r2", "--set", "nonsense=1"}).code == cli::kUsage);
}

TEST_CASE("bound hand case") {
  setenv("HYPGW_LOG", "quiet", 1);
  const auto r = run({"bound", "--alpha", "0.5", "--R", "2", "--C", "16", "--m", "100"});
  CHECK(r.code == cli::kOk);
  bounds::BoundReport ref;
  ref.alpha = 0.5;
  ref.R = 2;
  ref.C = 16;
  ref.m = 100;
  const auto t = bounds::theorem_bound(0.5, 2, 16, 100);
  ref.deviation_bound = t.deviation;
  ref.confidence = t.confidence;
  ref.bernstein_confidence = bounds::bernstein_confidence(0.5, 2, 16, 100);
  std::ostringstream os;
  bounds::write_report(os, ref);
  CHECK(r.out == os.str());
  CHECK(r.out.find("deviation_bound: 4\n") != std::string::npos);
  CHECK(run({"bound", "--alpha", "0", "--R", "2", "--C", "16", "--m", "100"}).code == cli::kDataError);
}

TEST_CASE("sweep rows and the unregularized column") {
  setenv("HYPGW_LOG", "quiet", 1);
  Workspace ws;
  REQUIRE(run({"synth", "--kind", "tree", "--branching", "2", "--depth", "3", "--out", ws / "d"}).code == 0);
  const std::vector<std::string> common{"--data", ws / "d", "--epochs", "10", "--set", kSmallLayers};
  std::vector<std::string> args{"sweep", "--betas", "0,0.5", "--seeds", "0,1,2", "--jobs", "2", "--out", ws / "s"};
  args.insert(args.end(), common.begin(), common.end());
  const auto sw = run(args);
  REQUIRE(sw.code == cli::kOk);
  std::istringstream lines(sw.out);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  REQUIRE(rows.size() == 1 + 2 * 3);
  CHECK(rows[0] == "beta,seed,split,metric,value,gm");
  CHECK(rows[1].rfind("0,0,test,f1,", 0) == 0);
  CHECK(rows[6].rfind("0.5,2,test,f1,", 0) == 0);
  CHECK(slurp(ws / "s/sweep.csv") == sw.out);

  // beta = 0 rows equal separate train + eval invocations
  for (int seed = 0; seed < 3; ++seed) {
    std::vector<std::string> targs{"train", "--out", ws / ("r" + std::to_string(seed)), "--seed", std::to_string(seed),
                                   "--beta", "0"};
    targs.insert(targs.end(), common.begin(), common.end());
    REQUIRE(run(targs).code == cli::kOk);
    const auto ev = run({"eval", "--ckpt", ws / ("r" + std::to_string(seed)) + "/best", "--data", ws / "d"});
    const std::string value = ev.out.substr(ev.out.rfind(',') + 1);
    CHECK(rows[1 + static_cast<std::size_t>(seed)].find(",test,f1," + value.substr(0, value.size() - 1) + ",") !=
          std::string::npos);
  }

  // a single (beta, seed) pair is one train + eval run
  std::vector<std::string> one{"sweep", "--betas", "0.5", "--seeds", "1"};
  one.insert(one.end(), common.begin(), common.end());
  const auto single = run(one);
  CHECK(single.out == "beta,seed,split,metric,value,gm\n" + rows[5] + "\n");
}

TEST_CASE("gradcheck") {
  setenv("HYPGW_LOG", "quiet", 1);
  const auto ok = run({"gradcheck"});
  CHECK(ok.code == cli::kOk);
  CHECK(ok.out.rfind("metric,value\nmax_rel_error,", 0) == 0);
  CHECK(run({"gradcheck", "--task", "nc", "--beta", "0", "--seed", "2"}).code == cli::kOk);
  CHECK(run({"gradcheck", "--data", "/nonexistent/hypgw"}).code == cli::kDataError);
  CHECK(run({"gradcheck", "--tolerance", "0"}).code == cli::kNumericalError);
}

TEST_CASE("binary exit codes") {
  Workspace ws;
  CHECK(run_binary("") == 1);
  CHECK(run_binary("synth --kind tree --depth 2 --out " + ws / "t") == 0);
  CHECK(fs::exists(ws / "t/edges.tsv"));
  CHECK(run_binary("eval --ckpt " + ws / "none" + " --data " + ws / "t") == 2);
  CHECK(run_binary("gradcheck --tolerance 0") == 3);
}
