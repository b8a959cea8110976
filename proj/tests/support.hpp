#pragma once

// Shared fixtures for the unit tests: a tiny synthetic corpus and model
// configuration that train in milliseconds.

#include "head/data.hpp"
#include "head/embedding.hpp"
#include "head/model.hpp"
#include "head/synthetic.hpp"
#include "head/training.hpp"

namespace head::testsupport {

inline model::ModelConfig tiny_model_config() {
  model::ModelConfig config;
  config.embed_dim = 6;
  config.feature_dim = 6;
  config.widths = {2, 3};
  config.doc_cap = 10;
  return config;
}

inline train::Corpus tiny_corpus(std::uint64_t seed, std::size_t shared_dims = 3) {
  eval::SyntheticSpec spec;
  spec.source_users = 14;
  spec.source_items = 10;
  spec.target_users = 12;
  spec.target_items = 9;
  spec.source_per_user = 5;
  spec.target_per_user = 4;
  spec.shared_dims = shared_dims;
  spec.domain_dims = 3;
  spec.review_min_tokens = 4;
  spec.review_max_tokens = 10;
  spec.seed = seed;

  eval::SyntheticPair pair = eval::generate_synthetic(spec);
  train::Corpus corpus;
  data::SplitSpec split;
  split.seed = seed;
  corpus.source = data::split_dataset(pair.source, split);
  corpus.target = data::split_dataset(pair.target, split);
  const data::DomainDataset* trains[] = {&corpus.source.train, &corpus.target.train};
  corpus.table =
      emb::synthetic_table(eval::collect_vocabulary(trains), tiny_model_config().embed_dim, seed);
  corpus.finalize();
  return corpus;
}

inline train::TrainConfig tiny_train_config(std::uint64_t seed) {
  train::TrainConfig config;
  config.batch_size = 4;
  config.max_iters = 20;
  config.patience = 300;
  config.eval_every = 10;
  config.candidates = 8;
  config.seed = seed;
  return config;
}

}  // namespace head::testsupport
