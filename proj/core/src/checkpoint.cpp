#include "head/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "head/errors.hpp"
#include "head/version.hpp"

namespace head::ckpt {

namespace {

using nlohmann::json;

json config_to_json(const model::ModelConfig& c) {
  return json{{"embed_dim", c.embed_dim},
              {"feature_dim", c.feature_dim},
              {"widths", c.widths},
              {"doc_cap", c.doc_cap},
              {"curvature", c.curvature}};
}

model::ModelConfig config_from_json(const json& j) {
  model::ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  c.widths = j.at("widths").get<std::vector<std::size_t>>();
  c.doc_cap = j.at("doc_cap").get<std::size_t>();
  c.curvature = j.at("curvature").get<double>();
  return c;
}

json train_config_to_json(const train::TrainConfig& c) {
  return json{{"lr", c.lr},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_eps", c.adam_eps},
              {"batch_size", c.batch_size},
              {"max_iters", c.max_iters},
              {"patience", c.patience},
              {"eval_every", c.eval_every},
              {"seed", c.seed},
              {"aligned", c.aligned},
              {"degree_normalized", c.degree_normalized},
              {"candidates", c.candidates},
              {"eval_k", c.eval_k},
              {"target_only", c.target_only}};
}

train::TrainConfig train_config_from_json(const json& j) {
  train::TrainConfig c;
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_iters = j.at("max_iters").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.eval_every = j.at("eval_every").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.aligned = j.at("aligned").get<bool>();
  c.degree_normalized = j.at("degree_normalized").get<bool>();
  c.candidates = j.at("candidates").get<std::size_t>();
  c.eval_k = j.at("eval_k").get<std::size_t>();
  c.target_only = j.at("target_only").get<bool>();
  return c;
}

json weights_to_json(const obj::LossWeights& w) {
  return json{{"lambda1", w.lambda1},
              {"lambda2", w.lambda2},
              {"delta", w.delta},
              {"margin", w.margin},
              {"curvature", w.curvature}};
}

obj::LossWeights weights_from_json(const json& j) {
  obj::LossWeights w;
  w.lambda1 = j.at("lambda1").get<double>();
  w.lambda2 = j.at("lambda2").get<double>();
  w.delta = j.at("delta").get<double>();
  w.margin = j.at("margin").get<double>();
  w.curvature = j.at("curvature").get<double>();
  return w;
}

}  // namespace

void save_checkpoint(const std::string& path, const model::ModelParams& params,
                     const train::TrainConfig& train_config, const obj::LossWeights& weights) {
  json root;
  root["format"] = "head-checkpoint";
  root["version"] = 1;
  root["tool_version"] = kVersion;
  root["model_config"] = config_to_json(params.config);
  root["train_config"] = train_config_to_json(train_config);
  root["loss_weights"] = weights_to_json(weights);

  json tensors = json::object();
  model::for_each_param(params, [&tensors](const std::string& name, const ad::Tensor& t) {
    tensors[name] = json{{"shape", t.shape}, {"data", t.data}};
  });
  root["params"] = std::move(tensors);

  std::ofstream out(path);
  if (!out) throw IoError("save_checkpoint: cannot open " + path + " for writing");
  out << root.dump(1) << '\n';
  if (!out) throw IoError("save_checkpoint: failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_checkpoint: cannot open " + path);
  json root = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded() || !root.is_object()) {
    throw FormatError("load_checkpoint: not a JSON object: " + path);
  }
  if (root.value("format", "") != "head-checkpoint" || root.value("version", 0) != 1) {
    throw FormatError("load_checkpoint: unsupported format or version in " + path);
  }

  Checkpoint ckpt;
  try {
    const model::ModelConfig config = config_from_json(root.at("model_config"));
    ckpt.train_config = train_config_from_json(root.at("train_config"));
    ckpt.weights = weights_from_json(root.at("loss_weights"));

    const json& tensors = root.at("params");
    auto table_rows = [&tensors](const char* name) {
      return tensors.at(name).at("shape").at(0).get<std::size_t>();
    };
    ckpt.params = model::init_params(config, table_rows("source_user_latent"),
                                     table_rows("source_item_latent"),
                                     table_rows("target_user_latent"),
                                     table_rows("target_item_latent"), /*seed=*/0);

    model::for_each_param(ckpt.params, [&tensors, &path](const std::string& name, ad::Tensor& t) {
      if (!tensors.contains(name)) {
        throw FormatError("load_checkpoint: missing tensor " + name + " in " + path);
      }
      const json& entry = tensors.at(name);
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (shape != t.shape) {
        throw FormatError("load_checkpoint: shape mismatch for " + name + " in " + path);
      }
      const auto data = entry.at("data").get<std::vector<double>>();
      if (data.size() != t.size()) {
        throw FormatError("load_checkpoint: data size mismatch for " + name + " in " + path);
      }
      t.data = data;
    });
  } catch (const json::exception& e) {
    throw FormatError(std::string("load_checkpoint: ") + e.what());
  }
  return ckpt;
}

}  // namespace head::ckpt
