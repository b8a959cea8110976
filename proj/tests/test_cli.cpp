#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "head/data.hpp"
#include "head/evaluation.hpp"
#include "head/checkpoint.hpp"
#include "head/synthetic.hpp"
#include "head/training.hpp"

using namespace head;
namespace fs = std::filesystem;

namespace {

const char* cli_path() { return HEAD_CLI_PATH; }

int run_cli(const std::string& args, std::string* output = nullptr) {
  const fs::path log = fs::temp_directory_path() / "head_cli_test_output.txt";
  const std::string cmd = std::string(cli_path()) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) {
    if (c == '\n') ++n;
  }
  return n;
}

// One shared workspace for the whole CLI suite: raw review files plus small
// training artifacts, built once.
struct Workspace {
  fs::path root;
  fs::path source_file, target_file, prepared, run_dir;
  std::string common_flags;

  Workspace() {
    root = fs::temp_directory_path() / "head_cli_suite";
    fs::remove_all(root);
    fs::create_directories(root);

    eval::SyntheticSpec spec;
    spec.source_users = 14;
    spec.source_items = 10;
    spec.target_users = 10;
    spec.target_items = 10;
    spec.source_per_user = 5;
    spec.target_per_user = 5;  // 50 target interactions -> 40/5/5 split
    spec.review_min_tokens = 4;
    spec.review_max_tokens = 8;
    spec.seed = 21;
    const auto pair = eval::generate_synthetic(spec);
    source_file = root / "source.jsonl";
    target_file = root / "target.jsonl";
    data::write_jsonl(pair.source, source_file.string());
    data::write_jsonl(pair.target, target_file.string());

    prepared = root / "prepared";
    run_dir = root / "run";
    common_flags =
        " --seed 9 --embed-dim 6 --feature-dim 6 --doc-cap 10 --batch-size 4 --candidates 8";
  }
};

Workspace& workspace() {
  static Workspace ws;
  return ws;
}

}  // namespace

TEST_CASE("cli usage errors exit with the usage code") {
  CHECK(run_cli("definitely-not-a-command") == 2);
  CHECK(run_cli("train --no-such-flag x") == 2);
  CHECK(run_cli("") == 2);
}

TEST_CASE("cli prepare splits, fingerprints and is idempotent") {
  Workspace& ws = workspace();
  const std::string args = "prepare --source " + ws.source_file.string() + " --target " +
                           ws.target_file.string() + " --out " + ws.prepared.string() +
                           " --seed 9";
  std::string output;
  REQUIRE(run_cli(args, &output) == 0);

  // 50 target interactions -> 40/5/5
  CHECK(output.find("40/5/5 target") != std::string::npos);
  CHECK(fs::exists(ws.prepared / "manifest.json"));
  CHECK(fs::exists(ws.prepared / "vocab.txt"));

  const std::string train_before = slurp(ws.prepared / "target_train.jsonl");
  const std::string degrees_before = slurp(ws.prepared / "degrees_target.csv");

  // rerun with the same seed: byte-identical partition files
  REQUIRE(run_cli(args) == 0);
  CHECK(slurp(ws.prepared / "target_train.jsonl") == train_before);
  CHECK(slurp(ws.prepared / "degrees_target.csv") == degrees_before);

  // degree rows agree with a brute count over the written train partition
  const auto split = data::load_split((ws.prepared / "target_train.jsonl").string(),
                                      (ws.prepared / "target_valid.jsonl").string(),
                                      (ws.prepared / "target_test.jsonl").string(),
                                      data::Domain::kTarget);
  std::istringstream csv(degrees_before);
  std::string line;
  std::getline(csv, line);  // header
  std::size_t checked = 0;
  while (std::getline(csv, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const std::string kind = line.substr(0, c1);
    const std::string id = line.substr(c1 + 1, c2 - c1 - 1);
    const auto degree = static_cast<std::uint32_t>(std::stoul(line.substr(c2 + 1)));
    if (kind == "user" && split.train.user_index.contains(id)) {
      CHECK(split.train.user_degree[split.train.user_index.at(id)] == degree);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("cli prepare surfaces i/o errors") {
  Workspace& ws = workspace();
  CHECK(run_cli("prepare --source /nonexistent.jsonl --target " + ws.target_file.string() +
                " --out " + (ws.root / "x").string()) == 3);
}

TEST_CASE("cli train writes a checkpoint and one curve row per iteration") {
  Workspace& ws = workspace();
  const std::string args = "train --prepared " + ws.prepared.string() + " --out " +
                           ws.run_dir.string() + ws.common_flags +
                           " --max-iters 10 --eval-every 5 --embedding synthetic";
  std::string output;
  REQUIRE(run_cli(args, &output) == 0);

  CHECK(fs::exists(ws.run_dir / "checkpoint.json"));
  CHECK(fs::exists(ws.run_dir / "embedding.txt"));
  CHECK(fs::exists(ws.run_dir / "manifest.json"));
  const std::string curves = slurp(ws.run_dir / "curves.csv");
  CHECK(count_lines(curves) == 11);  // header + 10 iterations
  CHECK(curves.rfind("epoch,L_emb,L_d,L_pred,L_total", 0) == 0);
}

TEST_CASE("cli train with lr 0 never leaves the initial parameters") {
  Workspace& ws = workspace();
  const fs::path run_a = ws.root / "run_lr0_a";
  const fs::path run_b = ws.root / "run_lr0_b";
  const std::string base = "train --prepared " + ws.prepared.string() + ws.common_flags +
                           " --lr 0 --embedding synthetic --eval-every 5";
  REQUIRE(run_cli(base + " --max-iters 1 --out " + run_a.string()) == 0);
  REQUIRE(run_cli(base + " --max-iters 10 --out " + run_b.string()) == 0);
  // both checkpoints hold the (identical) initial parameters
  const auto a = ckpt::load_checkpoint((run_a / "checkpoint.json").string());
  const auto b = ckpt::load_checkpoint((run_b / "checkpoint.json").string());
  model::for_each_param(a.params, [&](const std::string& name, const ad::Tensor& t) {
    const ad::Tensor* other = nullptr;
    model::for_each_param(b.params, [&](const std::string& n, const ad::Tensor& u) {
      if (n == name) other = &u;
    });
    REQUIRE(other != nullptr);
    CHECK(t.data == other->data);
  });
}

TEST_CASE("cli eval reports metrics that match the library") {
  Workspace& ws = workspace();
  const fs::path report_path = ws.root / "eval_report.txt";
  const std::string args = "eval --checkpoint " + (ws.run_dir / "checkpoint.json").string() +
                           " --prepared " + ws.prepared.string() + " --out " +
                           report_path.string() + " --seed 9 --candidates 8" +
                           " --embed-dim 6 --feature-dim 6 --doc-cap 10";
  std::string output;
  REQUIRE(run_cli(args, &output) == 0);
  CHECK(output.find("ndcg@10=") != std::string::npos);
  CHECK(output.find("theorem_checks=pass") != std::string::npos);

  // deterministic report bytes
  std::string output2;
  REQUIRE(run_cli(args, &output2) == 0);
  CHECK(output == output2);

  // parity with direct library calls
  const auto ckpt = ckpt::load_checkpoint((ws.run_dir / "checkpoint.json").string());
  train::Corpus corpus;
  corpus.source = data::load_split((ws.prepared / "source_train.jsonl").string(),
                                   (ws.prepared / "source_valid.jsonl").string(),
                                   (ws.prepared / "source_test.jsonl").string(),
                                   data::Domain::kSource);
  corpus.target = data::load_split((ws.prepared / "target_train.jsonl").string(),
                                   (ws.prepared / "target_valid.jsonl").string(),
                                   (ws.prepared / "target_test.jsonl").string(),
                                   data::Domain::kTarget);
  corpus.table = emb::load_table((ws.run_dir / "embedding.txt").string(),
                                 emb::TableGeometry::kEuclidean);
  corpus.finalize();
  const auto metrics = eval::evaluate_ranking(ckpt.params, corpus.target.train,
                                              corpus.target.test, corpus.target_known_items,
                                              corpus.table, data::Domain::kTarget, 10, 8, 9);
  std::ostringstream expect;
  expect.precision(6);
  expect << std::fixed << "ndcg@10=" << metrics.ndcg;
  CHECK(output.find(expect.str()) != std::string::npos);
}

TEST_CASE("cli eval rejects a mismatched checkpoint") {
  Workspace& ws = workspace();
  // a checkpoint trained on different table sizes
  const fs::path other_prepared = ws.root / "prepared_other";
  eval::SyntheticSpec spec;
  spec.source_users = 6;
  spec.source_items = 5;
  spec.target_users = 5;
  spec.target_items = 4;
  spec.source_per_user = 3;
  spec.target_per_user = 3;
  spec.seed = 77;
  const auto pair = eval::generate_synthetic(spec);
  const fs::path s = ws.root / "small_source.jsonl";
  const fs::path t = ws.root / "small_target.jsonl";
  data::write_jsonl(pair.source, s.string());
  data::write_jsonl(pair.target, t.string());
  REQUIRE(run_cli("prepare --source " + s.string() + " --target " + t.string() + " --out " +
                  other_prepared.string() + " --seed 9") == 0);

  CHECK(run_cli("eval --checkpoint " + (ws.run_dir / "checkpoint.json").string() +
                " --prepared " + other_prepared.string() +
                " --seed 9 --embed-dim 6 --feature-dim 6 --doc-cap 10") == 2);
}

TEST_CASE("cli viz exports one row per item inside the ball") {
  Workspace& ws = workspace();
  const fs::path csv = ws.root / "viz.csv";
  const fs::path svg = ws.root / "viz.svg";
  const std::string args = "viz --checkpoint " + (ws.run_dir / "checkpoint.json").string() +
                           " --prepared " + ws.prepared.string() + " --out " + csv.string() +
                           " --svg " + svg.string() +
                           " --seed 9 --embed-dim 6 --feature-dim 6 --doc-cap 10";
  REQUIRE(run_cli(args) == 0);

  const std::string body = slurp(csv);
  CHECK(count_lines(body) == 11);  // header + 10 items
  CHECK(body.rfind("item,degree,radius,x,y", 0) == 0);
  std::istringstream rows(body);
  std::string line;
  std::getline(rows, line);
  while (std::getline(rows, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto c3 = line.find(',', c2 + 1);
    const double radius = std::stod(line.substr(c2 + 1, c3 - c2 - 1));
    CHECK(radius >= 0.0);
    CHECK(radius < 1.0);
  }
  CHECK(fs::exists(svg));

  // seeded rerun produces identical bytes
  const fs::path csv2 = ws.root / "viz2.csv";
  REQUIRE(run_cli("viz --checkpoint " + (ws.run_dir / "checkpoint.json").string() +
                  " --prepared " + ws.prepared.string() + " --out " + csv2.string() +
                  " --seed 9 --embed-dim 6 --feature-dim 6 --doc-cap 10") == 0);
  CHECK(slurp(csv2) == body);
}

TEST_CASE("cli check passes on a stock build") {
  std::string output;
  CHECK(run_cli("check --seed 5", &output) == 0);
  CHECK(output.find("[PASS] theorem/degree-gradient-ratio") != std::string::npos);
  CHECK(output.find("[FAIL]") == std::string::npos);
}

TEST_CASE("cli grid writes the score matrix") {
  Workspace& ws = workspace();
  const fs::path grid_dir = ws.root / "grid";
  const std::string args = "grid --prepared " + ws.prepared.string() + " --out " +
                           grid_dir.string() + ws.common_flags +
                           " --embedding synthetic --max-iters 6 --eval-every 3" +
                           " --lambda1-grid 0.01,0.1 --lambda2-grid 0.05,0.5 --workers 1";
  std::string output;
  REQUIRE(run_cli(args, &output) == 0);
  CHECK(output.find("best ndcg") != std::string::npos);

  const std::string body = slurp(grid_dir / "grid.csv");
  CHECK(count_lines(body) == 3);  // header + two lambda1 rows
  CHECK(body.rfind("lambda1\\lambda2,0.05,0.5", 0) == 0);
}

TEST_CASE("HEAD_SEED is the seed fallback") {
  Workspace& ws = workspace();
  const fs::path env_a = ws.root / "env_run_a";
  const fs::path env_b = ws.root / "env_run_b";
  const std::string flags = " --embed-dim 6 --feature-dim 6 --doc-cap 10 --batch-size 4"
                            " --candidates 8 --max-iters 2 --eval-every 2 --embedding synthetic";
  auto run_with_env = [&](const fs::path& out) {
    const std::string cmd = "env HEAD_SEED=33 " + std::string(cli_path()) + " train --prepared " +
                            ws.prepared.string() + flags + " --out " + out.string() +
                            " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  REQUIRE(run_with_env(env_a) == 0);
  REQUIRE(run_with_env(env_b) == 0);
  // same env seed twice -> identical checkpoints; and the manifest records it
  CHECK(slurp(env_a / "checkpoint.json") == slurp(env_b / "checkpoint.json"));
  CHECK(slurp(env_a / "manifest.json").find("\"seed\": 33") != std::string::npos);
}
