#pragma once

#include <string>

#include "head/model.hpp"
#include "head/objectives.hpp"
#include "head/training.hpp"

namespace head::ckpt {

// Keyed-text (JSON) dump of every parameter tensor with its shape, plus the
// model/train configuration that produced it. Stable bytes across runs.
// Layout (format "head-checkpoint", version 1):
//   { "format", "version", "tool_version",
//     "model_config": {embed_dim, feature_dim, widths, doc_cap, curvature},
//     "train_config": {...}, "loss_weights": {...},
//     "params": { "<name>": {"shape": [...], "data": [...]}, ... } }
struct Checkpoint {
  model::ModelParams params;
  train::TrainConfig train_config;
  obj::LossWeights weights;
};

void save_checkpoint(const std::string& path, const model::ModelParams& params,
                     const train::TrainConfig& train_config, const obj::LossWeights& weights);

// Throws IoError if unreadable, FormatError on schema or shape mismatches.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace head::ckpt
