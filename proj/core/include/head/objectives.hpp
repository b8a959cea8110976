#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "head/autodiff.hpp"
#include "head/model.hpp"

namespace head::obj {

struct LossWeights {
  double lambda1 = 0.05;  // hierarchy embedding weight
  double lambda2 = 0.05;  // domain loss weight
  double delta = 0.0;     // L2 regularization
  double margin = 0.1;    // ranking margin epsilon, > 0
  double curvature = 1.0;

  void validate() const;
};

struct BatchLossReport {
  double embedding = 0.0;
  double domain = 0.0;
  double prediction = 0.0;
  double regularizer = 0.0;  // ||theta||
  double total = 0.0;
  bool embedding_denominator_clamped = false;
  std::size_t degenerate_alignments = 0;
  double max_feature_norm = 0.0;
  // Filled only when the caller requests per-term diagnostics.
  double grad_norm_embedding = 0.0;
  double grad_norm_domain = 0.0;
  double grad_norm_prediction = 0.0;
};

// One node's extractor outputs inside a batch; `shared` enters only the root.
struct NodeFeature {
  std::uint32_t node = 0;
  std::uint32_t degree = 0;
  ad::Var specific;
  ad::Var shared;
};

struct HierarchyBatch {
  std::vector<NodeFeature> source_users;
  std::vector<NodeFeature> source_items;
  std::vector<NodeFeature> target_users;
  std::vector<NodeFeature> target_items;
  std::uint32_t max_source_user_degree = 0;
  std::uint32_t max_source_item_degree = 0;
  std::uint32_t max_target_user_degree = 0;
  std::uint32_t max_target_item_degree = 0;
};

// 1/sqrt(sum of the four per-group deviation terms). Roots are the batch
// means of (specific + shared)/2, entered as gradient-detached constants.
// Each node's squared deviation from its group root is weighted by
// (max(d) - d)/max(d) when degree_normalized is set, by 1 otherwise. A zero
// denominator is clamped to 1e-8 and flagged.
ad::Var hierarchy_embedding_loss(ad::Tape& t, const HierarchyBatch& batch,
                                 bool degree_normalized, bool* denominator_clamped = nullptr);

// Eq.-style binary cross-entropy over the four streams: source toward 0,
// target toward 1, averaged per stream over its batch.
ad::Var domain_loss(ad::Tape& t, std::span<const ad::Var> d_source,
                    std::span<const ad::Var> d_source_shared, std::span<const ad::Var> d_target,
                    std::span<const ad::Var> d_target_shared);

// max(p_pos^2 - p_neg^2 + margin, 0); the corner subgradient takes the zero
// branch.
ad::Var ranking_loss(ad::Tape& t, ad::Var p_pos, ad::Var p_neg, double margin);

// lambda1 * L_emb + lambda2 * L_d + L_pred + delta * ||theta||. Throws
// NumericError naming the first non-finite part.
ad::Var total_loss(ad::Tape& t, ad::Var embedding, ad::Var domain, ad::Var prediction,
                   ad::Var parameter_norm, const LossWeights& weights);

// norm2 of the concatenation of every parameter tensor (binds all of them).
ad::Var parameter_norm(ad::Tape& t, model::ParamBinding& binding);

}  // namespace head::obj
