// Microbenchmarks for the numeric core plus the training-iteration scaling
// check: per-iteration cost should stay flat as the target domain grows,
// with the document cap fixed.

#include <benchmark/benchmark.h>

#include <random>

#include "head/autodiff.hpp"
#include "head/data.hpp"
#include "head/embedding.hpp"
#include "head/geometry.hpp"
#include "head/model.hpp"
#include "head/objectives.hpp"
#include "head/synthetic.hpp"
#include "head/training.hpp"

using namespace head;

namespace {

geo::TangentVec random_tangent(std::mt19937_64& rng, std::size_t dim) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> space(dim);
  for (double& x : space) x = unit(rng);
  return geo::tangent_at_origin(space);
}

void BM_exp_log_roundtrip(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const auto v = random_tangent(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(geo::log_origin(geo::exp_origin(v)));
  }
}
BENCHMARK(BM_exp_log_roundtrip)->Arg(16)->Arg(100);

void BM_lorentz_dist(benchmark::State& state) {
  std::mt19937_64 rng(11);
  const auto x = geo::exp_origin(random_tangent(rng, 100));
  const auto y = geo::exp_origin(random_tangent(rng, 100));
  for (auto _ : state) {
    benchmark::DoNotOptimize(geo::lorentz_dist(x, y));
  }
}
BENCHMARK(BM_lorentz_dist);

void BM_conv_extract_backward(benchmark::State& state) {
  model::ModelConfig config;
  config.embed_dim = 8;
  config.feature_dim = 12;
  config.widths = {2, 3, 4};
  config.doc_cap = static_cast<std::size_t>(state.range(0));
  model::ModelParams params = model::init_params(config, 4, 4, 4, 4, 3);

  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < config.doc_cap; ++i) tokens.push_back("w" + std::to_string(i % 40));
  const auto table = emb::synthetic_table(tokens, config.embed_dim, 5);
  const auto doc = emb::embed_document(tokens, table, config.doc_cap);

  for (auto _ : state) {
    ad::Tape tape;
    model::ParamBinding binding(tape, params);
    ad::Var feature = model::extract(tape, binding, doc, model::Extractor::kShared);
    tape.backward(tape.mean(feature));
    benchmark::DoNotOptimize(tape.grad(feature));
  }
}
BENCHMARK(BM_conv_extract_backward)->Arg(16)->Arg(32)->Arg(64);

// One full optimization step at several target-domain sizes; the per-item
// cost must not grow with the dataset.
void BM_train_step(benchmark::State& state) {
  eval::SyntheticSpec spec;
  spec.source_users = 50;
  spec.source_items = 30;
  spec.source_per_user = 8;
  spec.target_users = static_cast<std::size_t>(state.range(0));
  spec.target_items = 24;
  spec.target_per_user = 5;
  spec.seed = 13;
  eval::SyntheticPair pair = eval::generate_synthetic(spec);

  train::Corpus corpus;
  data::SplitSpec split;
  split.seed = 13;
  corpus.source = data::split_dataset(pair.source, split);
  corpus.target = data::split_dataset(pair.target, split);

  model::ModelConfig config;
  config.embed_dim = 8;
  config.feature_dim = 12;
  config.widths = {2, 3, 4};
  config.doc_cap = 32;
  const data::DomainDataset* trains[] = {&corpus.source.train, &corpus.target.train};
  corpus.table = emb::synthetic_table(eval::collect_vocabulary(trains), config.embed_dim, 13);
  corpus.finalize();

  train::TrainConfig tc;
  tc.batch_size = 8;
  tc.seed = 13;
  obj::LossWeights weights;
  train::TrainState st = train::make_train_state(corpus, config, tc);

  for (auto _ : state) {
    train::TrainBatch batch = train::sample_batch(corpus, tc.batch_size, false, st.rng);
    benchmark::DoNotOptimize(train::train_step(st, corpus, batch, weights, tc));
  }
}
BENCHMARK(BM_train_step)->Arg(30)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
