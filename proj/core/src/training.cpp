#include "head/training.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "head/errors.hpp"
#include "head/evaluation.hpp"

namespace head::train {

namespace {

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double grad_map_norm(const std::map<std::string, ad::Tensor>& grads) {
  double s = 0.0;
  for (const auto& [name, g] : grads) {
    for (double x : g.data) s += x * x;
  }
  return std::sqrt(s);
}

}  // namespace

void TrainConfig::validate() const {
  if (lr < 0.0) throw UsageError("TrainConfig: lr must be nonnegative");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw UsageError("TrainConfig: betas must be in [0, 1)");
  }
  if (adam_eps <= 0.0) throw UsageError("TrainConfig: adam_eps must be positive");
  if (batch_size == 0) throw UsageError("TrainConfig: batch_size must be positive");
  if (eval_every == 0) throw UsageError("TrainConfig: eval_every must be positive");
  if (candidates == 0) throw UsageError("TrainConfig: candidates must be positive");
}

void Corpus::finalize() {
  source_known_items = eval::build_known_items(source);
  target_known_items = eval::build_known_items(target);
}

AdamState make_adam_state(const model::ModelParams& params) {
  AdamState adam;
  model::for_each_param(params, [&](const std::string& name, const ad::Tensor& t) {
    adam.first_moment.emplace(name, ad::Tensor::zeros(t.shape));
    adam.second_moment.emplace(name, ad::Tensor::zeros(t.shape));
  });
  return adam;
}

void adam_update(model::ModelParams& params, AdamState& adam,
                 const std::map<std::string, ad::Tensor>& grads, const TrainConfig& config) {
  ++adam.step;
  const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(adam.step));
  const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam.step));
  model::for_each_param(params, [&](const std::string& name, ad::Tensor& t) {
    const ad::Tensor& g = grads.at(name);
    ad::Tensor& m = adam.first_moment.at(name);
    ad::Tensor& v = adam.second_moment.at(name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      m.data[i] = config.beta1 * m.data[i] + (1.0 - config.beta1) * g.data[i];
      v.data[i] = config.beta2 * v.data[i] + (1.0 - config.beta2) * g.data[i] * g.data[i];
      const double m_hat = m.data[i] / bias1;
      const double v_hat = v.data[i] / bias2;
      t.data[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
  });
}

TrainBatch sample_batch(const Corpus& corpus, std::size_t batch_size, bool target_only,
                        std::mt19937_64& rng) {
  TrainBatch batch;
  auto draw = [&rng, batch_size](const data::DomainDataset& ds, std::vector<TrainSample>& out) {
    if (ds.interactions.empty()) throw UsageError("sample_batch: empty training split");
    std::uniform_int_distribution<std::size_t> pick(0, ds.interactions.size() - 1);
    out.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
      const data::Interaction& it = ds.interactions[pick(rng)];
      TrainSample s;
      s.user = it.user;
      s.pos_item = it.item;
      s.neg_item = data::sample_negative(ds, it.user, it.item, rng);
      out.push_back(s);
    }
  };
  if (!target_only) draw(corpus.source.train, batch.source);
  draw(corpus.target.train, batch.target);
  return batch;
}

TrainState make_train_state(const Corpus& corpus, const model::ModelConfig& model_config,
                            const TrainConfig& config) {
  TrainState state;
  state.params = model::init_params(model_config, corpus.source.train.num_users(),
                                    corpus.source.train.num_items(),
                                    corpus.target.train.num_users(),
                                    corpus.target.train.num_items(), config.seed);
  state.adam = make_adam_state(state.params);
  state.rng.seed(config.seed ^ 0x5851f42d4c957f2dull);
  return state;
}

namespace {

struct SampleGraph {
  ad::Var specific_user, shared_user;
  ad::Var specific_item, shared_item;
  ad::Var rank_loss;
};

// Extractor outputs plus the pairwise ranking loss for one (u, i+, i-)
// sample of one domain.
SampleGraph build_sample(ad::Tape& tape, model::ParamBinding& binding, const Corpus& corpus,
                         const data::DomainDataset& ds, const TrainSample& sample,
                         data::Domain domain, double margin, double* max_feature_norm) {
  const model::ModelConfig& mc = binding.params().config;
  const bool source = domain == data::Domain::kSource;
  const model::Extractor specific_fe =
      source ? model::Extractor::kSource : model::Extractor::kTarget;
  const model::LatentTable user_table =
      source ? model::LatentTable::kSourceUser : model::LatentTable::kTargetUser;
  const model::LatentTable item_table =
      source ? model::LatentTable::kSourceItem : model::LatentTable::kTargetItem;

  const auto pos_docs = data::aggregate_documents(
      ds, sample.user, sample.pos_item, std::make_pair(sample.user, sample.pos_item), mc.doc_cap);
  const auto neg_docs = data::aggregate_documents(
      ds, sample.user, sample.neg_item, std::make_pair(sample.user, sample.neg_item), mc.doc_cap);

  const auto user_doc = emb::embed_document(pos_docs.user_tokens, corpus.table, mc.doc_cap);
  const auto pos_doc = emb::embed_document(pos_docs.item_tokens, corpus.table, mc.doc_cap);
  const auto neg_doc = emb::embed_document(neg_docs.item_tokens, corpus.table, mc.doc_cap);

  SampleGraph g;
  g.specific_user = model::extract(tape, binding, user_doc, specific_fe);
  g.shared_user = model::extract(tape, binding, user_doc, model::Extractor::kShared);
  g.specific_item = model::extract(tape, binding, pos_doc, specific_fe);
  g.shared_item = model::extract(tape, binding, pos_doc, model::Extractor::kShared);
  ad::Var neg_specific = model::extract(tape, binding, neg_doc, specific_fe);
  ad::Var neg_shared = model::extract(tape, binding, neg_doc, model::Extractor::kShared);

  for (ad::Var v : {g.specific_user, g.shared_user, g.specific_item, g.shared_item,
                    neg_specific, neg_shared}) {
    *max_feature_norm = std::max(*max_feature_norm, vec_norm(tape.value(v).data));
  }

  model::ScoreParts pos =
      model::score_on_tape(tape, binding, g.specific_user, g.shared_user, g.specific_item,
                           g.shared_item, user_table, sample.user, item_table, sample.pos_item);
  model::ScoreParts neg =
      model::score_on_tape(tape, binding, g.specific_user, g.shared_user, neg_specific,
                           neg_shared, user_table, sample.user, item_table, sample.neg_item);
  g.rank_loss = obj::ranking_loss(tape, pos.score, neg.score, margin);
  return g;
}

void add_hierarchy_nodes(ad::Tape& tape, std::vector<obj::NodeFeature>& users,
                         std::vector<obj::NodeFeature>& items, const data::DomainDataset& ds,
                         const TrainSample& sample, const SampleGraph& g) {
  obj::NodeFeature u;
  u.node = sample.user;
  u.degree = ds.user_degree[sample.user];
  u.specific = g.specific_user;
  u.shared = g.shared_user;
  users.push_back(u);
  obj::NodeFeature i;
  i.node = sample.pos_item;
  i.degree = ds.item_degree[sample.pos_item];
  i.specific = g.specific_item;
  i.shared = g.shared_item;
  items.push_back(i);
  (void)tape;
}

}  // namespace

obj::BatchLossReport train_step(TrainState& state, const Corpus& corpus, const TrainBatch& batch,
                                const obj::LossWeights& weights, const TrainConfig& config,
                                model::DiscInputStats* disc_stats) {
  if (batch.target.empty()) throw UsageError("train_step: batch has no target samples");
  if (!config.target_only && batch.source.empty()) {
    throw UsageError("train_step: batch has no source samples");
  }

  ad::Tape tape;
  model::ParamBinding binding(tape, state.params);
  obj::BatchLossReport report;

  std::vector<SampleGraph> source_graphs, target_graphs;
  source_graphs.reserve(batch.source.size());
  target_graphs.reserve(batch.target.size());
  for (const TrainSample& s : batch.source) {
    source_graphs.push_back(build_sample(tape, binding, corpus, corpus.source.train, s,
                                         data::Domain::kSource, weights.margin,
                                         &report.max_feature_norm));
  }
  for (const TrainSample& s : batch.target) {
    target_graphs.push_back(build_sample(tape, binding, corpus, corpus.target.train, s,
                                         data::Domain::kTarget, weights.margin,
                                         &report.max_feature_norm));
  }

  // Prediction loss: mean ranking loss over every sample of the step.
  std::vector<ad::Var> rank_terms;
  for (const SampleGraph& g : source_graphs) rank_terms.push_back(g.rank_loss);
  for (const SampleGraph& g : target_graphs) rank_terms.push_back(g.rank_loss);
  ad::Var l_pred = tape.mean(tape.concat(std::span<const ad::Var>(rank_terms)));

  // Hierarchy loss over the distinct batch nodes.
  obj::HierarchyBatch hier;
  hier.max_source_user_degree = corpus.source.train.max_user_degree;
  hier.max_source_item_degree = corpus.source.train.max_item_degree;
  hier.max_target_user_degree = corpus.target.train.max_user_degree;
  hier.max_target_item_degree = corpus.target.train.max_item_degree;
  for (std::size_t k = 0; k < source_graphs.size(); ++k) {
    add_hierarchy_nodes(tape, hier.source_users, hier.source_items, corpus.source.train,
                        batch.source[k], source_graphs[k]);
  }
  for (std::size_t k = 0; k < target_graphs.size(); ++k) {
    add_hierarchy_nodes(tape, hier.target_users, hier.target_items, corpus.target.train,
                        batch.target[k], target_graphs[k]);
  }
  ad::Var l_emb = obj::hierarchy_embedding_loss(tape, hier, config.degree_normalized,
                                                &report.embedding_denominator_clamped);

  // Domain loss over per-pair discriminator logits.
  model::DiscInputStats step_stats;
  ad::Var l_domain;
  if (!config.target_only) {
    const std::size_t pairs = std::min(source_graphs.size(), target_graphs.size());
    std::vector<ad::Var> d_src, d_src_sh, d_tgt, d_tgt_sh;
    for (std::size_t k = 0; k < pairs; ++k) {
      const SampleGraph& s = source_graphs[k];
      const SampleGraph& tg = target_graphs[k];
      model::FeatureBundle bundle = model::make_bundle(
          tape, s.specific_user, s.specific_item, s.shared_user, s.shared_item, tg.specific_user,
          tg.specific_item, tg.shared_user, tg.shared_item);
      model::DomainLogits logits =
          model::discriminate(tape, binding, bundle, config.aligned, &step_stats);
      d_src.push_back(logits.source);
      d_src_sh.push_back(logits.source_shared);
      d_tgt.push_back(logits.target);
      d_tgt_sh.push_back(logits.target_shared);
    }
    l_domain = obj::domain_loss(tape, d_src, d_src_sh, d_tgt, d_tgt_sh);
  } else {
    l_domain = ad::scalar_leaf(tape, 0.0);
  }

  ad::Var theta = obj::parameter_norm(tape, binding);
  ad::Var total = obj::total_loss(tape, l_emb, l_domain, l_pred, theta, weights);

  report.embedding = tape.value(l_emb).data[0];
  report.domain = tape.value(l_domain).data[0];
  report.prediction = tape.value(l_pred).data[0];
  report.regularizer = tape.value(theta).data[0];
  report.total = tape.value(total).data[0];
  report.degenerate_alignments = step_stats.degenerate;
  if (!std::isfinite(report.total)) {
    throw NumericError("train_step: non-finite total loss", "L_total");
  }

  if (config.collect_grad_norms) {
    tape.backward(l_emb);
    report.grad_norm_embedding = grad_map_norm(binding.collect_gradients());
    tape.backward(l_domain);
    report.grad_norm_domain = grad_map_norm(binding.collect_gradients());
    tape.backward(l_pred);
    report.grad_norm_prediction = grad_map_norm(binding.collect_gradients());
  }

  tape.backward(total);
  adam_update(state.params, state.adam, binding.collect_gradients(), config);
  ++state.iteration;
  if (disc_stats) disc_stats->merge(step_stats);
  return report;
}

namespace {

double validation_ndcg(const Corpus& corpus, const model::ModelParams& params,
                       const TrainConfig& config) {
  const eval::RankingMetrics metrics = eval::evaluate_ranking(
      params, corpus.target.train, corpus.target.valid, corpus.target_known_items, corpus.table,
      data::Domain::kTarget, config.eval_k, config.candidates, config.seed ^ 0xda3e39cb94b95bdbull);
  return metrics.ndcg;
}

}  // namespace

FitResult fit(const Corpus& corpus, const model::ModelConfig& model_config,
              const TrainConfig& config, const obj::LossWeights& weights) {
  config.validate();
  weights.validate();
  TrainState state = make_train_state(corpus, model_config, config);

  FitResult out;
  out.best_validation = validation_ndcg(corpus, state.params, config);
  out.best_iteration = 0;
  out.best_params = state.params;
  out.validation_curve.emplace_back(0, out.best_validation);

  for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
    TrainBatch batch = sample_batch(corpus, config.batch_size, config.target_only, state.rng);
    out.history.push_back(train_step(state, corpus, batch, weights, config, &out.disc_stats));
    out.executed_iterations = iter;

    if (iter % config.eval_every == 0) {
      const double val = validation_ndcg(corpus, state.params, config);
      out.validation_curve.emplace_back(iter, val);
      if (val > out.best_validation) {
        out.best_validation = val;
        out.best_iteration = iter;
        out.best_params = state.params;
      } else if (iter - out.best_iteration >= config.patience) {
        break;
      }
    }
  }
  out.final_params = std::move(state.params);
  return out;
}

GridResult grid_search(const Corpus& corpus, const model::ModelConfig& model_config,
                       const TrainConfig& config, const obj::LossWeights& base,
                       const std::vector<double>& lambda1_grid,
                       const std::vector<double>& lambda2_grid, std::size_t workers) {
  if (lambda1_grid.empty() || lambda2_grid.empty()) {
    throw UsageError("grid_search: grids must not be empty");
  }
  GridResult out;
  out.lambda1_grid = lambda1_grid;
  out.lambda2_grid = lambda2_grid;
  out.ndcg.assign(lambda1_grid.size(), std::vector<double>(lambda2_grid.size(), 0.0));

  const std::size_t cells = lambda1_grid.size() * lambda2_grid.size();
  if (workers == 0) workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, cells);

  auto run_cell = [&](std::size_t cell) {
    const std::size_t i = cell / lambda2_grid.size();
    const std::size_t j = cell % lambda2_grid.size();
    obj::LossWeights w = base;
    w.lambda1 = lambda1_grid[i];
    w.lambda2 = lambda2_grid[j];
    out.ndcg[i][j] = fit(corpus, model_config, config, w).best_validation;
  };

  if (workers <= 1) {
    for (std::size_t cell = 0; cell < cells; ++cell) run_cell(cell);
  } else {
    std::vector<std::future<void>> inflight;
    for (std::size_t cell = 0; cell < cells; ++cell) {
      if (inflight.size() >= workers) {
        inflight.front().get();
        inflight.erase(inflight.begin());
      }
      inflight.push_back(std::async(std::launch::async, run_cell, cell));
    }
    for (auto& f : inflight) f.get();
  }

  out.best_score = -1.0;
  for (std::size_t i = 0; i < lambda1_grid.size(); ++i) {
    for (std::size_t j = 0; j < lambda2_grid.size(); ++j) {
      if (out.ndcg[i][j] > out.best_score) {
        out.best_score = out.ndcg[i][j];
        out.best_lambda1 = lambda1_grid[i];
        out.best_lambda2 = lambda2_grid[j];
      }
    }
  }
  return out;
}

}  // namespace head::train
