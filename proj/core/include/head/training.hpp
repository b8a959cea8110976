#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "head/data.hpp"
#include "head/embedding.hpp"
#include "head/model.hpp"
#include "head/objectives.hpp"

namespace head::train {

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 64;
  std::size_t max_iters = 2000;
  std::size_t patience = 300;    // iterations without validation improvement
  std::size_t eval_every = 50;   // validation cadence, in iterations
  std::uint64_t seed = 1;
  bool aligned = true;           // scale alignment before the discriminator
  bool degree_normalized = true; // degree weights in the hierarchy loss
  std::size_t candidates = 99;   // ranking candidates per validation list
  std::size_t eval_k = 10;
  bool target_only = false;      // drop the source batch and the domain loss
  bool collect_grad_norms = false;

  void validate() const;
};

// Both domains' splits plus the shared word-vector table.
struct Corpus {
  data::SplitResult source;
  data::SplitResult target;
  emb::EmbeddingTable table;
  // Items each user interacted with in any split; candidate exclusion.
  std::vector<std::vector<std::uint32_t>> source_known_items;
  std::vector<std::vector<std::uint32_t>> target_known_items;

  void finalize();  // fills the known-item tables
};

struct AdamState {
  std::map<std::string, ad::Tensor> first_moment;
  std::map<std::string, ad::Tensor> second_moment;
  std::size_t step = 0;
};

AdamState make_adam_state(const model::ModelParams& params);

// One bias-corrected Adam update over every parameter tensor.
void adam_update(model::ModelParams& params, AdamState& adam,
                 const std::map<std::string, ad::Tensor>& grads, const TrainConfig& config);

struct TrainSample {
  std::uint32_t user;
  std::uint32_t pos_item;
  std::uint32_t neg_item;
};

struct TrainBatch {
  std::vector<TrainSample> source;
  std::vector<TrainSample> target;
};

// Uniform interactions with one sampled negative each; source and target are
// drawn independently with equal size (empty source when target_only).
TrainBatch sample_batch(const Corpus& corpus, std::size_t batch_size, bool target_only,
                        std::mt19937_64& rng);

struct TrainState {
  model::ModelParams params;
  AdamState adam;
  std::mt19937_64 rng;
  std::size_t iteration = 0;
};

TrainState make_train_state(const Corpus& corpus, const model::ModelConfig& model_config,
                            const TrainConfig& config);

// Forward, backward and one Adam step on the weighted total loss.
// Deterministic given the state. Throws NumericError (naming the term) on a
// non-finite loss.
obj::BatchLossReport train_step(TrainState& state, const Corpus& corpus, const TrainBatch& batch,
                                const obj::LossWeights& weights, const TrainConfig& config,
                                model::DiscInputStats* disc_stats = nullptr);

struct FitResult {
  model::ModelParams best_params;   // the best-validation checkpoint
  model::ModelParams final_params;  // the state after the last executed iteration
  std::vector<obj::BatchLossReport> history;                    // one row per iteration
  std::vector<std::pair<std::size_t, double>> validation_curve; // (iteration, ndcg@k)
  double best_validation = 0.0;
  std::size_t best_iteration = 0;
  std::size_t executed_iterations = 0;
  model::DiscInputStats disc_stats;
};

// Trains until max_iters or until validation NDCG@k has not improved for
// `patience` iterations; returns the best-validation checkpoint. Iteration 0
// (initial parameters) is always evaluated first.
FitResult fit(const Corpus& corpus, const model::ModelConfig& model_config,
              const TrainConfig& config, const obj::LossWeights& weights);

struct GridResult {
  std::vector<double> lambda1_grid;
  std::vector<double> lambda2_grid;
  std::vector<std::vector<double>> ndcg;  // [i][j] for (lambda1[i], lambda2[j])
  double best_lambda1 = 0.0;
  double best_lambda2 = 0.0;
  double best_score = 0.0;
};

// One fit per grid cell; rows are lambda1, columns lambda2. Ties go to the
// smaller (lambda1, lambda2) pair, assuming ascending grids. `workers` > 1
// fans cells out across threads; results do not depend on the schedule.
GridResult grid_search(const Corpus& corpus, const model::ModelConfig& model_config,
                       const TrainConfig& config, const obj::LossWeights& base,
                       const std::vector<double>& lambda1_grid,
                       const std::vector<double>& lambda2_grid, std::size_t workers = 0);

}  // namespace head::train
