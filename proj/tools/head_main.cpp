// Batch CLI over the head_core library: prepare / train / eval / viz / check
// / grid. Every command is idempotent given identical inputs and seeds.
//
// Exit codes: 0 success, 2 usage, 3 I/O or format, 4 numerical abort,
// 5 self-check failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "head/checkpoint.hpp"
#include "head/data.hpp"
#include "head/embedding.hpp"
#include "head/errors.hpp"
#include "head/evaluation.hpp"
#include "head/model.hpp"
#include "head/objectives.hpp"
#include "head/selfcheck.hpp"
#include "head/synthetic.hpp"
#include "head/training.hpp"
#include "head/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitCheckFailed = 5;

struct Options {
  head::model::ModelConfig model;
  head::train::TrainConfig train;
  head::obj::LossWeights weights;
  head::data::SplitSpec split;
  std::string embedding = "synthetic";  // path or the literal "synthetic"
  head::emb::TableGeometry embedding_geometry = head::emb::TableGeometry::kEuclidean;
  bool seed_set = false;

  void set_seed(std::uint64_t seed) {
    train.seed = seed;
    split.seed = seed;
    seed_set = true;
  }
};

bool parse_bool(const std::string& raw, const std::string& key) {
  if (raw == "on" || raw == "true" || raw == "1") return true;
  if (raw == "off" || raw == "false" || raw == "0") return false;
  throw head::FormatError("config: boolean key '" + key + "' has invalid value '" + raw + "'");
}

void apply_config_entry(Options& opt, const std::string& key, const std::string& value) {
  try {
    if (key == "lr") opt.train.lr = std::stod(value);
    else if (key == "beta1") opt.train.beta1 = std::stod(value);
    else if (key == "beta2") opt.train.beta2 = std::stod(value);
    else if (key == "adam_eps") opt.train.adam_eps = std::stod(value);
    else if (key == "batch_size") opt.train.batch_size = std::stoull(value);
    else if (key == "max_iters") opt.train.max_iters = std::stoull(value);
    else if (key == "patience") opt.train.patience = std::stoull(value);
    else if (key == "eval_every") opt.train.eval_every = std::stoull(value);
    else if (key == "seed") opt.set_seed(std::stoull(value));
    else if (key == "aligned") opt.train.aligned = parse_bool(value, key);
    else if (key == "degree_norm") opt.train.degree_normalized = parse_bool(value, key);
    else if (key == "candidates") opt.train.candidates = std::stoull(value);
    else if (key == "eval_k") opt.train.eval_k = std::stoull(value);
    else if (key == "target_only") opt.train.target_only = parse_bool(value, key);
    else if (key == "lambda1") opt.weights.lambda1 = std::stod(value);
    else if (key == "lambda2") opt.weights.lambda2 = std::stod(value);
    else if (key == "delta") opt.weights.delta = std::stod(value);
    else if (key == "margin") opt.weights.margin = std::stod(value);
    else if (key == "curvature") {
      opt.weights.curvature = std::stod(value);
      opt.model.curvature = opt.weights.curvature;
    } else if (key == "embed_dim") opt.model.embed_dim = std::stoull(value);
    else if (key == "feature_dim") opt.model.feature_dim = std::stoull(value);
    else if (key == "doc_cap") opt.model.doc_cap = std::stoull(value);
    else if (key == "widths") {
      std::vector<std::size_t> widths;
      std::stringstream ss(value);
      std::string part;
      while (std::getline(ss, part, ',')) widths.push_back(std::stoull(part));
      opt.model.widths = widths;
    } else if (key == "embedding") opt.embedding = value;
    else if (key == "embedding_geometry") {
      opt.embedding_geometry = value == "poincare" ? head::emb::TableGeometry::kPoincare
                                                   : head::emb::TableGeometry::kEuclidean;
    } else {
      throw head::FormatError("config: unknown key '" + key + "'");
    }
  } catch (const std::invalid_argument&) {
    throw head::FormatError("config: invalid value '" + value + "' for key '" + key + "'");
  } catch (const std::out_of_range&) {
    throw head::FormatError("config: out-of-range value '" + value + "' for key '" + key + "'");
  }
}

void apply_config_file(Options& opt, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw head::IoError("config: cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw head::FormatError("config: line " + std::to_string(line_no) + " is not key=value");
    }
    apply_config_entry(opt, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw head::IoError("fingerprint: cannot open " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buffer[1 << 14];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buffer[i]);
      h *= 1099511628211ull;
    }
  }
  std::ostringstream ss;
  ss << std::hex << h;
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << v;
  return ss.str();
}

json options_to_json(const Options& opt) {
  return json{{"lr", opt.train.lr},
              {"beta1", opt.train.beta1},
              {"beta2", opt.train.beta2},
              {"adam_eps", opt.train.adam_eps},
              {"batch_size", opt.train.batch_size},
              {"max_iters", opt.train.max_iters},
              {"patience", opt.train.patience},
              {"eval_every", opt.train.eval_every},
              {"seed", opt.train.seed},
              {"aligned", opt.train.aligned},
              {"degree_norm", opt.train.degree_normalized},
              {"candidates", opt.train.candidates},
              {"eval_k", opt.train.eval_k},
              {"target_only", opt.train.target_only},
              {"lambda1", opt.weights.lambda1},
              {"lambda2", opt.weights.lambda2},
              {"delta", opt.weights.delta},
              {"margin", opt.weights.margin},
              {"curvature", opt.weights.curvature},
              {"embed_dim", opt.model.embed_dim},
              {"feature_dim", opt.model.feature_dim},
              {"doc_cap", opt.model.doc_cap},
              {"widths", opt.model.widths},
              {"embedding", opt.embedding}};
}

void write_manifest(const fs::path& out_dir, const std::string& command, const Options& opt,
                    const std::vector<std::string>& input_files,
                    const std::vector<std::string>& output_files) {
  json manifest;
  manifest["tool_version"] = head::kVersion;
  manifest["command"] = command;
  manifest["seed"] = opt.train.seed;
  manifest["config"] = options_to_json(opt);
  json inputs = json::object();
  for (const std::string& path : input_files) inputs[path] = hex64(fnv1a_file(path));
  manifest["inputs"] = std::move(inputs);
  manifest["outputs"] = output_files;

  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw head::IoError("manifest: cannot write into " + out_dir.string());
  out << manifest.dump(1) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw head::IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_degrees_csv(const fs::path& path, const head::data::DomainDataset& train) {
  std::ofstream out(path);
  if (!out) throw head::IoError("cannot write " + path.string());
  out << "kind,id,degree\n";
  for (std::size_t u = 0; u < train.num_users(); ++u) {
    out << "user," << train.user_ids[u] << "," << train.user_degree[u] << "\n";
  }
  for (std::size_t i = 0; i < train.num_items(); ++i) {
    out << "item," << train.item_ids[i] << "," << train.item_degree[i] << "\n";
  }
}

void write_embedding_table(const fs::path& path, const head::emb::EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw head::IoError("cannot write " + path.string());
  out.precision(17);
  std::vector<const std::string*> tokens(table.vocab_size());
  for (const auto& [token, row] : table.vocabulary) tokens[row] = &token;
  for (std::size_t row = 0; row < tokens.size(); ++row) {
    out << *tokens[row];
    for (std::size_t c = 0; c < table.dim; ++c) out << ' ' << table.matrix[row * table.dim + c];
    out << '\n';
  }
}

std::vector<std::string> read_vocab(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw head::IoError("cannot open vocabulary file " + path.string());
  std::vector<std::string> vocab;
  std::string token;
  while (std::getline(in, token)) {
    if (!token.empty()) vocab.push_back(token);
  }
  return vocab;
}

head::train::Corpus load_corpus(const fs::path& prepared, const Options& opt) {
  head::train::Corpus corpus;
  corpus.source = head::data::load_split((prepared / "source_train.jsonl").string(),
                                         (prepared / "source_valid.jsonl").string(),
                                         (prepared / "source_test.jsonl").string(),
                                         head::data::Domain::kSource);
  corpus.target = head::data::load_split((prepared / "target_train.jsonl").string(),
                                         (prepared / "target_valid.jsonl").string(),
                                         (prepared / "target_test.jsonl").string(),
                                         head::data::Domain::kTarget);
  if (opt.embedding == "synthetic") {
    const auto vocab = read_vocab(prepared / "vocab.txt");
    corpus.table = head::emb::synthetic_table(vocab, opt.model.embed_dim, opt.train.seed,
                                              opt.embedding_geometry);
  } else {
    corpus.table = head::emb::load_table(opt.embedding, opt.embedding_geometry);
    if (corpus.table.dim != opt.model.embed_dim) {
      throw head::UsageError("embedding table dimension " + std::to_string(corpus.table.dim) +
                             " does not match embed_dim " + std::to_string(opt.model.embed_dim));
    }
  }
  corpus.finalize();
  return corpus;
}

// --- Commands -------------------------------------------------------------

int cmd_prepare(const std::string& source, const std::string& target, const std::string& out,
                Options& opt) {
  const fs::path out_dir(out);
  ensure_dir(out_dir);

  head::data::LoadReport source_report, target_report;
  head::data::DomainDataset source_ds =
      head::data::load_reviews(source, head::data::Domain::kSource, {}, &source_report);
  head::data::DomainDataset target_ds =
      head::data::load_reviews(target, head::data::Domain::kTarget, {}, &target_report);

  head::data::SplitResult source_split = head::data::split_dataset(source_ds, opt.split);
  head::data::SplitResult target_split = head::data::split_dataset(target_ds, opt.split);

  const struct {
    const char* name;
    const head::data::DomainDataset* ds;
  } files[] = {
      {"source_train.jsonl", &source_split.train}, {"source_valid.jsonl", &source_split.valid},
      {"source_test.jsonl", &source_split.test},   {"target_train.jsonl", &target_split.train},
      {"target_valid.jsonl", &target_split.valid}, {"target_test.jsonl", &target_split.test},
  };
  std::vector<std::string> outputs;
  for (const auto& f : files) {
    const fs::path path = out_dir / f.name;
    head::data::write_jsonl(*f.ds, path.string());
    outputs.push_back(f.name);
  }

  write_degrees_csv(out_dir / "degrees_source.csv", source_split.train);
  write_degrees_csv(out_dir / "degrees_target.csv", target_split.train);
  outputs.push_back("degrees_source.csv");
  outputs.push_back("degrees_target.csv");

  const head::data::DomainDataset* trains[] = {&source_split.train, &target_split.train};
  const auto vocab = head::eval::collect_vocabulary(trains);
  {
    std::ofstream vf(out_dir / "vocab.txt");
    if (!vf) throw head::IoError("cannot write vocab.txt");
    for (const std::string& token : vocab) vf << token << '\n';
  }
  outputs.push_back("vocab.txt");

  write_manifest(out_dir, "prepare", opt, {source, target}, outputs);
  std::cout << "prepared " << source_split.train.interactions.size() << "/"
            << source_split.valid.interactions.size() << "/"
            << source_split.test.interactions.size() << " source and "
            << target_split.train.interactions.size() << "/"
            << target_split.valid.interactions.size() << "/"
            << target_split.test.interactions.size() << " target interactions ("
            << source_report.skipped + target_report.skipped << " lines skipped), vocab "
            << vocab.size() << "\n";
  return kExitOk;
}

int cmd_train(const std::string& prepared, const std::string& out, Options& opt) {
  const fs::path out_dir(out);
  ensure_dir(out_dir);
  head::train::Corpus corpus = load_corpus(prepared, opt);

  head::train::FitResult result = head::train::fit(corpus, opt.model, opt.train, opt.weights);

  const fs::path ckpt_path = out_dir / "checkpoint.json";
  head::ckpt::save_checkpoint(ckpt_path.string(), result.best_params, opt.train, opt.weights);
  write_embedding_table(out_dir / "embedding.txt", corpus.table);

  {
    std::ofstream curves(out_dir / "curves.csv");
    if (!curves) throw head::IoError("cannot write curves.csv");
    curves << "epoch,L_emb,L_d,L_pred,L_total\n";
    curves.precision(10);
    for (std::size_t i = 0; i < result.history.size(); ++i) {
      const auto& row = result.history[i];
      curves << (i + 1) << ',' << row.embedding << ',' << row.domain << ',' << row.prediction
             << ',' << row.total << '\n';
    }
  }
  {
    std::ofstream val(out_dir / "validation.csv");
    if (!val) throw head::IoError("cannot write validation.csv");
    val << "iteration,ndcg\n";
    val.precision(10);
    for (const auto& [iter, ndcg] : result.validation_curve) {
      val << iter << ',' << ndcg << '\n';
    }
  }

  write_manifest(out_dir, "train", opt,
                 {(fs::path(prepared) / "source_train.jsonl").string(),
                  (fs::path(prepared) / "target_train.jsonl").string()},
                 {"checkpoint.json", "curves.csv", "validation.csv", "embedding.txt"});
  std::cout << "trained " << result.executed_iterations << " iterations, best validation ndcg@"
            << opt.train.eval_k << " " << result.best_validation << " at iteration "
            << result.best_iteration << "\n";
  return kExitOk;
}

Options options_for_checkpoint(const head::ckpt::Checkpoint& ckpt, const Options& cli_opt) {
  Options opt = cli_opt;
  opt.model = ckpt.params.config;
  opt.weights = ckpt.weights;
  // evaluation knobs (candidates, k, seed) stay CLI-controlled
  opt.train.aligned = ckpt.train_config.aligned;
  opt.train.degree_normalized = ckpt.train_config.degree_normalized;
  return opt;
}

int cmd_eval(const std::string& checkpoint, const std::string& prepared,
             const std::string& out_file, Options& cli_opt) {
  head::ckpt::Checkpoint ckpt = head::ckpt::load_checkpoint(checkpoint);
  Options opt = options_for_checkpoint(ckpt, cli_opt);
  if (opt.embedding == "synthetic") {
    // default to the table written next to the checkpoint
    const fs::path sibling = fs::path(checkpoint).parent_path() / "embedding.txt";
    if (fs::exists(sibling)) opt.embedding = sibling.string();
  }
  head::train::Corpus corpus = load_corpus(prepared, opt);

  if (corpus.target.train.num_users() != ckpt.params.target_user_latent.rows() ||
      corpus.target.train.num_items() != ckpt.params.target_item_latent.rows() ||
      corpus.source.train.num_users() != ckpt.params.source_user_latent.rows() ||
      corpus.source.train.num_items() != ckpt.params.source_item_latent.rows()) {
    throw head::UsageError("checkpoint latent tables do not match the prepared datasets");
  }

  const head::eval::RankingMetrics metrics = head::eval::evaluate_ranking(
      ckpt.params, corpus.target.train, corpus.target.test, corpus.target_known_items,
      corpus.table, head::data::Domain::kTarget, opt.train.eval_k, opt.train.candidates,
      opt.train.seed);

  std::vector<std::uint32_t> items(corpus.target.train.num_items());
  for (std::uint32_t i = 0; i < items.size(); ++i) items[i] = i;
  const auto features = head::eval::item_mixed_features(
      ckpt.params, corpus.target.train, corpus.table, head::data::Domain::kTarget, items);
  const head::eval::FidelityResult fidelity =
      head::eval::hierarchy_fidelity(features, corpus.target.train.item_degree);

  const double bce = head::eval::discriminator_bce(ckpt.params, corpus.source.train,
                                                   corpus.target.train, corpus.table, 64,
                                                   opt.train.aligned);

  const head::selfcheck::SuiteReport theorems = head::selfcheck::theorem_suite(opt.train.seed);

  std::ostringstream report;
  report.precision(6);
  report << std::fixed;
  report << "ndcg@" << opt.train.eval_k << "=" << metrics.ndcg << "\n";
  report << "hr@" << opt.train.eval_k << "=" << metrics.hr << "\n";
  report << "hierarchy_rho=" << fidelity.rho << "\n";
  report << "hierarchy_rho_degenerate=" << (fidelity.degenerate ? "yes" : "no") << "\n";
  report << "discriminator_bce=" << bce << "\n";
  report << "theorem_checks=" << (theorems.all_passed() ? "pass" : "fail") << "\n";
  report << "lists=" << metrics.lists << "\n";
  report << "cold_users=" << metrics.cold_users << "\n";
  report << "cold_items=" << metrics.cold_items << "\n";

  std::cout << report.str();
  if (!out_file.empty()) {
    std::ofstream out(out_file);
    if (!out) throw head::IoError("cannot write " + out_file);
    out << report.str();
  }
  return theorems.all_passed() ? kExitOk : kExitCheckFailed;
}

int cmd_viz(const std::string& checkpoint, const std::string& prepared, const std::string& out_csv,
            const std::string& out_svg, std::size_t max_items, Options& cli_opt) {
  head::ckpt::Checkpoint ckpt = head::ckpt::load_checkpoint(checkpoint);
  Options opt = options_for_checkpoint(ckpt, cli_opt);
  if (opt.embedding == "synthetic") {
    const fs::path sibling = fs::path(checkpoint).parent_path() / "embedding.txt";
    if (fs::exists(sibling)) opt.embedding = sibling.string();
  }
  head::train::Corpus corpus = load_corpus(prepared, opt);

  const auto rows = head::eval::degree_radius_rows(ckpt.params, corpus.target.train, corpus.table,
                                                   head::data::Domain::kTarget, max_items,
                                                   opt.train.seed);
  {
    std::ofstream out(out_csv);
    if (!out) throw head::IoError("cannot write " + out_csv);
    out << "item,degree,radius,x,y\n";
    out.precision(10);
    for (const auto& row : rows) {
      out << corpus.target.train.item_ids[row.item] << ',' << row.degree << ',' << row.radius
          << ',' << row.x << ',' << row.y << '\n';
    }
  }

  if (!out_svg.empty()) {
    std::ofstream svg(out_svg);
    if (!svg) throw head::IoError("cannot write " + out_svg);
    const int size = 560, c = size / 2, r = size / 2 - 20;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << size << "' height='" << size
        << "'>\n<circle cx='" << c << "' cy='" << c << "' r='" << r
        << "' fill='none' stroke='black'/>\n";
    std::uint32_t max_degree = 1;
    for (const auto& row : rows) max_degree = std::max(max_degree, row.degree);
    for (const auto& row : rows) {
      const double shade = 1.0 - static_cast<double>(row.degree) / max_degree;
      const int tone = static_cast<int>(40 + 180 * shade);
      svg << "<circle cx='" << c + row.x * r << "' cy='" << c - row.y * r
          << "' r='3' fill='rgb(" << 220 - tone / 2 << ',' << tone << ',' << tone
          << ")' fill-opacity='0.8'/>\n";
    }
    svg << "</svg>\n";
  }
  std::cout << "wrote " << rows.size() << " rows to " << out_csv << "\n";
  return kExitOk;
}

int cmd_check(std::uint64_t seed) {
  const head::selfcheck::SuiteReport report = head::selfcheck::run_all(seed);
  for (const auto& result : report.results) {
    std::cout << (result.passed ? "[PASS] " : "[FAIL] ") << result.name;
    if (!result.detail.empty()) std::cout << " - " << result.detail;
    std::cout << "\n";
  }
  std::cout << (report.all_passed() ? "all checks passed" : "CHECK FAILURES PRESENT") << "\n";
  return report.all_passed() ? kExitOk : kExitCheckFailed;
}

int cmd_grid(const std::string& prepared, const std::string& out, const std::string& grid1,
             const std::string& grid2, std::size_t workers, Options& opt) {
  const fs::path out_dir(out);
  ensure_dir(out_dir);
  head::train::Corpus corpus = load_corpus(prepared, opt);

  auto parse_grid = [](const std::string& raw) {
    std::vector<double> grid;
    std::stringstream ss(raw);
    std::string part;
    while (std::getline(ss, part, ',')) grid.push_back(std::stod(part));
    return grid;
  };
  const auto l1 = parse_grid(grid1);
  const auto l2 = parse_grid(grid2);

  const head::train::GridResult result =
      head::train::grid_search(corpus, opt.model, opt.train, opt.weights, l1, l2, workers);

  const fs::path csv_path = out_dir / "grid.csv";
  {
    std::ofstream csv(csv_path);
    if (!csv) throw head::IoError("cannot write grid.csv");
    csv << "lambda1\\lambda2";
    for (double v : result.lambda2_grid) csv << ',' << v;
    csv << '\n';
    csv.precision(10);
    for (std::size_t i = 0; i < result.lambda1_grid.size(); ++i) {
      csv << result.lambda1_grid[i];
      for (std::size_t j = 0; j < result.lambda2_grid.size(); ++j) {
        csv << ',' << result.ndcg[i][j];
      }
      csv << '\n';
    }
  }
  write_manifest(out_dir, "grid", opt,
                 {(fs::path(prepared) / "target_train.jsonl").string()}, {"grid.csv"});
  std::cout << "best ndcg " << result.best_score << " at lambda1=" << result.best_lambda1
            << " lambda2=" << result.best_lambda2 << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Review-based cross-domain recommender in hyperbolic space"};
  app.set_version_flag("--version", head::kVersion);
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  Options opt;
  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  std::optional<double> lambda1_flag, lambda2_flag, margin_flag, lr_flag;
  std::optional<std::string> aligned_flag, degree_norm_flag, embedding_flag;
  std::optional<std::size_t> candidates_flag, max_iters_flag, patience_flag, batch_flag;
  std::optional<std::size_t> feature_dim_flag, embed_dim_flag, doc_cap_flag, eval_every_flag;

  app.add_option("--config", config_path, "flat key=value configuration file");
  app.add_option("--seed", seed_flag, "global seed (env HEAD_SEED is the fallback)");
  app.add_option("--lambda1", lambda1_flag, "hierarchy embedding weight");
  app.add_option("--lambda2", lambda2_flag, "domain loss weight");
  app.add_option("--margin", margin_flag, "ranking margin (default 0.1)");
  app.add_option("--lr", lr_flag, "learning rate");
  app.add_option("--aligned", aligned_flag, "scale alignment on/off")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_option("--degree-norm", degree_norm_flag, "degree normalization on/off")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_option("--embedding", embedding_flag, "word-vector file path or 'synthetic'");
  app.add_option("--candidates", candidates_flag, "ranking candidates per list (default 99)");
  app.add_option("--max-iters", max_iters_flag, "maximum training iterations");
  app.add_option("--patience", patience_flag, "early-stopping patience in iterations");
  app.add_option("--batch-size", batch_flag, "mini-batch size per domain");
  app.add_option("--eval-every", eval_every_flag, "validation cadence in iterations");
  app.add_option("--feature-dim", feature_dim_flag, "extractor output dimension");
  app.add_option("--embed-dim", embed_dim_flag, "word-vector dimension");
  app.add_option("--doc-cap", doc_cap_flag, "document token cap");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "split review files and write degree tables");
  std::string source_path, target_path, out_dir;
  prepare->add_option("--source", source_path, "source-domain review file")->required();
  prepare->add_option("--target", target_path, "target-domain review file")->required();
  prepare->add_option("--out", out_dir, "output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train on a prepared directory");
  std::string prepared_dir, train_out;
  train_cmd->add_option("--prepared", prepared_dir, "prepared directory")->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ckpt_path, eval_prepared, eval_out;
  eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--prepared", eval_prepared, "prepared directory")->required();
  eval_cmd->add_option("--out", eval_out, "also write the report to this file");

  // viz
  auto* viz_cmd = app.add_subcommand("viz", "export the degree/radius scatter");
  std::string viz_ckpt, viz_prepared, viz_csv, viz_svg;
  std::size_t viz_max_items = 1000;
  viz_cmd->add_option("--checkpoint", viz_ckpt, "checkpoint file")->required();
  viz_cmd->add_option("--prepared", viz_prepared, "prepared directory")->required();
  viz_cmd->add_option("--out", viz_csv, "output CSV path")->required();
  viz_cmd->add_option("--svg", viz_svg, "optional scatter image (SVG)");
  viz_cmd->add_option("--max-items", viz_max_items, "item sample size (default 1000)");

  // check
  auto* check_cmd = app.add_subcommand("check", "run the property and theorem self-checks");

  // grid
  auto* grid_cmd = app.add_subcommand("grid", "grid search over lambda1 x lambda2");
  std::string grid_prepared, grid_out;
  std::string grid1 = "0.01,0.05,0.1,0.5,1.0";
  std::string grid2 = "0.01,0.05,0.1,0.5,1.0";
  std::size_t grid_workers = 0;
  grid_cmd->add_option("--prepared", grid_prepared, "prepared directory")->required();
  grid_cmd->add_option("--out", grid_out, "output directory")->required();
  grid_cmd->add_option("--lambda1-grid", grid1, "comma-separated lambda1 grid");
  grid_cmd->add_option("--lambda2-grid", grid2, "comma-separated lambda2 grid");
  grid_cmd->add_option("--workers", grid_workers, "parallel cells (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (!config_path.empty()) apply_config_file(opt, config_path);

    if (seed_flag) {
      opt.set_seed(*seed_flag);
    } else if (!opt.seed_set) {
      if (const char* env = std::getenv("HEAD_SEED")) {
        try {
          opt.set_seed(std::stoull(env));
        } catch (const std::exception&) {
          throw head::UsageError("HEAD_SEED is not an integer: " + std::string(env));
        }
      }
    }
    if (lambda1_flag) opt.weights.lambda1 = *lambda1_flag;
    if (lambda2_flag) opt.weights.lambda2 = *lambda2_flag;
    if (margin_flag) opt.weights.margin = *margin_flag;
    if (lr_flag) opt.train.lr = *lr_flag;
    if (aligned_flag) opt.train.aligned = *aligned_flag == "on";
    if (degree_norm_flag) opt.train.degree_normalized = *degree_norm_flag == "on";
    if (embedding_flag) opt.embedding = *embedding_flag;
    if (candidates_flag) opt.train.candidates = *candidates_flag;
    if (max_iters_flag) opt.train.max_iters = *max_iters_flag;
    if (patience_flag) opt.train.patience = *patience_flag;
    if (batch_flag) opt.train.batch_size = *batch_flag;
    if (eval_every_flag) opt.train.eval_every = *eval_every_flag;
    if (feature_dim_flag) opt.model.feature_dim = *feature_dim_flag;
    if (embed_dim_flag) opt.model.embed_dim = *embed_dim_flag;
    if (doc_cap_flag) opt.model.doc_cap = *doc_cap_flag;

    if (prepare->parsed()) return cmd_prepare(source_path, target_path, out_dir, opt);
    if (train_cmd->parsed()) return cmd_train(prepared_dir, train_out, opt);
    if (eval_cmd->parsed()) return cmd_eval(ckpt_path, eval_prepared, eval_out, opt);
    if (viz_cmd->parsed()) {
      return cmd_viz(viz_ckpt, viz_prepared, viz_csv, viz_svg, viz_max_items, opt);
    }
    if (check_cmd->parsed()) return cmd_check(opt.train.seed);
    if (grid_cmd->parsed()) return cmd_grid(grid_prepared, grid_out, grid1, grid2, grid_workers, opt);
    return kExitUsage;
  } catch (const head::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const head::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const head::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const head::NumericError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const head::SamplingExhaustedError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
