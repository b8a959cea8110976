#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "head/data.hpp"
#include "head/embedding.hpp"
#include "head/model.hpp"

namespace head::eval {

// Candidate items ordered by ascending score (lower = closer = better); ties
// broken by item id ascending.
struct RankedList {
  std::vector<std::uint32_t> items;
  std::size_t positive_rank = 0;  // 1-based
};

// `scored` must contain the positive item exactly once.
RankedList make_ranked_list(std::span<const std::pair<std::uint32_t, double>> scored,
                            std::uint32_t positive_item);

// Single-relevant NDCG: 1/log2(rank+1) inside the cutoff, 0 beyond it.
double ndcg_at_k(const RankedList& list, std::size_t k = 10);
// 1 if the positive ranks inside the cutoff, else 0.
double hr_at_k(const RankedList& list, std::size_t k = 10);

struct RankingMetrics {
  double ndcg = 0.0;
  double hr = 0.0;
  std::size_t lists = 0;
  std::size_t cold_users = 0;  // heldout users without training interactions
  std::size_t cold_items = 0;
};

// Items each user touched in any split, sorted; used to exclude candidates.
std::vector<std::vector<std::uint32_t>> build_known_items(const data::SplitResult& split);

// Held-out protocol: every heldout interaction is ranked against `candidates`
// sampled items the user never interacted with (or the whole pool when it is
// smaller). Documents come from the training split with nothing excluded.
RankingMetrics evaluate_ranking(const model::ModelParams& params,
                                const data::DomainDataset& train,
                                const data::DomainDataset& heldout,
                                const std::vector<std::vector<std::uint32_t>>& known_items,
                                const emb::EmbeddingTable& table, data::Domain domain,
                                std::size_t k, std::size_t candidates, std::uint64_t seed);

// Spearman rank correlation with average ranks on ties.
double spearman(std::span<const double> a, std::span<const double> b);

struct FidelityResult {
  double rho = 0.0;
  bool degenerate = false;  // constant radii or degrees
};

// Rank correlation between node degree and negative Poincare radius of the
// lifted (specific + shared)/2 item features.
FidelityResult hierarchy_fidelity(const std::vector<std::vector<double>>& item_features,
                                  std::span<const std::uint32_t> degrees);

// (S_i + S_hat_i)/2 for the given items, extracted from training documents.
std::vector<std::vector<double>> item_mixed_features(const model::ModelParams& params,
                                                     const data::DomainDataset& train,
                                                     const emb::EmbeddingTable& table,
                                                     data::Domain domain,
                                                     std::span<const std::uint32_t> items);

// The discriminator's domain-classification binary cross-entropy over all
// four feature streams (specific and shareable, source toward 0, target
// toward 1), averaged per stream over the first `sample_count` training
// pairs of each domain. Forward only; the gradient-reversal wrapper plays no
// role in the measurement.
double discriminator_bce(const model::ModelParams& params,
                         const data::DomainDataset& source_train,
                         const data::DomainDataset& target_train,
                         const emb::EmbeddingTable& table, std::size_t sample_count,
                         bool aligned);

struct VizRow {
  std::uint32_t item = 0;
  std::uint32_t degree = 0;
  double radius = 0.0;  // full-dimensional Poincare radius
  double x = 0.0;       // ball coordinates of the 2-d principal projection
  double y = 0.0;
};

// Samples up to max_items items (seeded, without replacement), projects their
// tangent features onto the top-2 principal directions and lifts the 2-d
// projection into the ball.
std::vector<VizRow> degree_radius_rows(const model::ModelParams& params,
                                       const data::DomainDataset& train,
                                       const emb::EmbeddingTable& table, data::Domain domain,
                                       std::size_t max_items, std::uint64_t seed);

}  // namespace head::eval
