#include "head/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "head/autodiff.hpp"
#include "head/errors.hpp"
#include "head/geometry.hpp"

namespace head::eval {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a + 0x9e3779b97f4a7c15ull + (b << 6) + (b >> 2);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

struct FeaturePair {
  std::vector<double> specific;
  std::vector<double> shared;
};

// Per-node extractor outputs with training documents; memoized per call site.
class FeatureCache {
 public:
  FeatureCache(const model::ModelParams& params, const data::DomainDataset& train,
               const emb::EmbeddingTable& table, data::Domain domain)
      : params_(params), train_(train), table_(table) {
    specific_fe_ = domain == data::Domain::kSource ? model::Extractor::kSource
                                                   : model::Extractor::kTarget;
  }

  const FeaturePair& user(std::uint32_t u) { return get(users_, u, /*is_user=*/true); }
  const FeaturePair& item(std::uint32_t i) { return get(items_, i, /*is_user=*/false); }

 private:
  const FeaturePair& get(std::unordered_map<std::uint32_t, FeaturePair>& cache,
                         std::uint32_t id, bool is_user) {
    auto it = cache.find(id);
    if (it != cache.end()) return it->second;
    const std::size_t cap = params_.config.doc_cap;
    // Documents from the training split, nothing excluded: heldout reviews
    // are not part of the training data in the first place.
    data::DocumentPair docs = data::aggregate_documents(
        train_, is_user ? id : 0u, is_user ? 0u : id, std::nullopt, cap);
    const auto& tokens = is_user ? docs.user_tokens : docs.item_tokens;
    const emb::DocumentEmbedding doc = emb::embed_document(tokens, table_, cap);
    FeaturePair fp;
    fp.specific = model::extract_value(params_, doc, specific_fe_);
    fp.shared = model::extract_value(params_, doc, model::Extractor::kShared);
    return cache.emplace(id, std::move(fp)).first->second;
  }

  const model::ModelParams& params_;
  const data::DomainDataset& train_;
  const emb::EmbeddingTable& table_;
  model::Extractor specific_fe_;
  std::unordered_map<std::uint32_t, FeaturePair> users_;
  std::unordered_map<std::uint32_t, FeaturePair> items_;
};

}  // namespace

RankedList make_ranked_list(std::span<const std::pair<std::uint32_t, double>> scored,
                            std::uint32_t positive_item) {
  if (scored.empty()) throw UsageError("make_ranked_list: empty candidate list");
  std::vector<std::pair<std::uint32_t, double>> order(scored.begin(), scored.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  RankedList list;
  list.items.reserve(order.size());
  std::size_t rank = 0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    list.items.push_back(order[pos].first);
    if (order[pos].first == positive_item) rank = pos + 1;
  }
  if (rank == 0) throw UsageError("make_ranked_list: positive item not among candidates");
  list.positive_rank = rank;
  return list;
}

double ndcg_at_k(const RankedList& list, std::size_t k) {
  if (list.items.empty()) throw UsageError("ndcg_at_k: empty list");
  if (list.positive_rank == 0 || list.positive_rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(list.positive_rank) + 1.0);
}

double hr_at_k(const RankedList& list, std::size_t k) {
  if (list.items.empty()) throw UsageError("hr_at_k: empty list");
  return list.positive_rank != 0 && list.positive_rank <= k ? 1.0 : 0.0;
}

std::vector<std::vector<std::uint32_t>> build_known_items(const data::SplitResult& split) {
  std::vector<std::vector<std::uint32_t>> known(split.train.num_users());
  auto absorb = [&known](const data::DomainDataset& ds) {
    for (const data::Interaction& it : ds.interactions) known[it.user].push_back(it.item);
  };
  absorb(split.train);
  absorb(split.valid);
  absorb(split.test);
  for (auto& items : known) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
  return known;
}

RankingMetrics evaluate_ranking(const model::ModelParams& params,
                                const data::DomainDataset& train,
                                const data::DomainDataset& heldout,
                                const std::vector<std::vector<std::uint32_t>>& known_items,
                                const emb::EmbeddingTable& table, data::Domain domain,
                                std::size_t k, std::size_t candidates, std::uint64_t seed) {
  const bool source = domain == data::Domain::kSource;
  const model::LatentTable user_table =
      source ? model::LatentTable::kSourceUser : model::LatentTable::kTargetUser;
  const model::LatentTable item_table =
      source ? model::LatentTable::kSourceItem : model::LatentTable::kTargetItem;

  FeatureCache cache(params, train, table, domain);
  RankingMetrics metrics;
  const std::size_t n_items = train.num_items();

  for (const data::Interaction& pair : heldout.interactions) {
    const std::uint32_t u = pair.user;
    const std::uint32_t positive = pair.item;
    if (train.user_degree[u] == 0) ++metrics.cold_users;
    if (train.item_degree[positive] == 0) ++metrics.cold_items;

    static const std::vector<std::uint32_t> kNoKnownItems;
    const auto& known = u < known_items.size() ? known_items[u] : kNoKnownItems;
    std::vector<std::uint32_t> pool;
    pool.reserve(n_items);
    for (std::uint32_t i = 0; i < n_items; ++i) {
      if (i == positive) continue;
      if (std::binary_search(known.begin(), known.end(), i)) continue;
      pool.push_back(i);
    }

    std::vector<std::uint32_t> chosen;
    if (pool.size() <= candidates) {
      chosen = pool;
    } else {
      std::mt19937_64 rng(mix(seed, mix(u, positive)));
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      std::vector<bool> used(pool.size(), false);
      while (chosen.size() < candidates) {
        const std::size_t at = pick(rng);
        if (used[at]) continue;
        used[at] = true;
        chosen.push_back(pool[at]);
      }
    }
    if (chosen.empty() && pool.empty()) continue;  // nothing to rank against

    const FeaturePair& uf = cache.user(u);
    std::vector<std::pair<std::uint32_t, double>> scored;
    scored.reserve(chosen.size() + 1);
    auto score_item = [&](std::uint32_t i) {
      const FeaturePair& itf = cache.item(i);
      const double s = model::score_value(params, uf.specific, uf.shared, itf.specific,
                                          itf.shared, user_table, u, item_table, i);
      scored.emplace_back(i, s);
    };
    score_item(positive);
    for (std::uint32_t i : chosen) score_item(i);

    const RankedList list = make_ranked_list(scored, positive);
    metrics.ndcg += ndcg_at_k(list, k);
    metrics.hr += hr_at_k(list, k);
    ++metrics.lists;
  }

  if (metrics.lists > 0) {
    metrics.ndcg /= static_cast<double>(metrics.lists);
    metrics.hr /= static_cast<double>(metrics.lists);
  }
  return metrics;
}

namespace {

std::vector<double> ranks_with_ties(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&values](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t pos = 0;
  while (pos < n) {
    std::size_t end = pos;
    while (end + 1 < n && values[order[end + 1]] == values[order[pos]]) ++end;
    const double avg = (static_cast<double>(pos) + static_cast<double>(end)) / 2.0 + 1.0;
    for (std::size_t q = pos; q <= end; ++q) ranks[order[q]] = avg;
    pos = end + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw UsageError("spearman: need two equal-size series");
  const std::vector<double> ra = ranks_with_ties(a);
  const std::vector<double> rb = ranks_with_ties(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = ra[i] - ma;
    const double db = rb[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

FidelityResult hierarchy_fidelity(const std::vector<std::vector<double>>& item_features,
                                  std::span<const std::uint32_t> degrees) {
  if (item_features.size() != degrees.size() || item_features.size() < 2) {
    throw UsageError("hierarchy_fidelity: need matching feature/degree lists (>= 2 items)");
  }
  std::vector<double> radius(item_features.size());
  for (std::size_t i = 0; i < item_features.size(); ++i) {
    const geo::LorentzVec lifted = geo::exp_origin(geo::tangent_at_origin(item_features[i]));
    const geo::PoincareVec ball = geo::lorentz_to_poincare(lifted);
    double s = 0.0;
    for (double c : ball.coords) s += c * c;
    radius[i] = std::sqrt(s);
  }

  const bool constant_radius =
      std::all_of(radius.begin(), radius.end(), [&](double r) { return r == radius.front(); });
  const bool constant_degree = std::all_of(degrees.begin(), degrees.end(),
                                           [&](std::uint32_t d) { return d == degrees.front(); });
  FidelityResult out;
  if (constant_radius || constant_degree) {
    out.degenerate = true;
    out.rho = 0.0;
    return out;
  }
  std::vector<double> deg(degrees.size());
  std::vector<double> neg_radius(radius.size());
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    deg[i] = static_cast<double>(degrees[i]);
    neg_radius[i] = -radius[i];
  }
  out.rho = spearman(deg, neg_radius);
  return out;
}

std::vector<std::vector<double>> item_mixed_features(const model::ModelParams& params,
                                                     const data::DomainDataset& train,
                                                     const emb::EmbeddingTable& table,
                                                     data::Domain domain,
                                                     std::span<const std::uint32_t> items) {
  FeatureCache cache(params, train, table, domain);
  std::vector<std::vector<double>> out;
  out.reserve(items.size());
  for (std::uint32_t i : items) {
    const FeaturePair& fp = cache.item(i);
    std::vector<double> mixed(fp.specific.size());
    for (std::size_t c = 0; c < mixed.size(); ++c) {
      mixed[c] = 0.5 * (fp.specific[c] + fp.shared[c]);
    }
    out.push_back(std::move(mixed));
  }
  return out;
}

double discriminator_bce(const model::ModelParams& params,
                         const data::DomainDataset& source_train,
                         const data::DomainDataset& target_train,
                         const emb::EmbeddingTable& table, std::size_t sample_count,
                         bool aligned) {
  static constexpr double kLo = 1e-7;
  static constexpr double kHi = 1.0 - 1e-7;

  // Classification probability of one user||item stream.
  auto head_probability = [&params, aligned](const std::vector<double>& user_f,
                                             const std::vector<double>& item_f) {
    ad::Tape tape;
    model::ParamBinding binding(tape, const_cast<model::ModelParams&>(params));
    ad::Var x = tape.concat({tape.leaf(ad::Tensor::vector(user_f)),
                             tape.leaf(ad::Tensor::vector(item_f))});
    if (aligned) x = model::scale_align(tape, x);
    ad::Var h = tape.relu(ad::affine(tape, binding.named("discriminator.w1"), x,
                                     binding.named("discriminator.b1")));
    ad::Var p = tape.sigmoid(ad::affine(tape, binding.named("discriminator.w2"), h,
                                        binding.named("discriminator.b2")));
    return std::clamp(tape.value(p).data[0], kLo, kHi);
  };

  // Per-stream means, source streams toward label 0 and target streams
  // toward 1, specific and shareable features both.
  auto domain_bce = [&](const data::DomainDataset& ds, data::Domain domain, bool is_target) {
    FeatureCache cache(params, ds, table, domain);
    const std::size_t n = std::min(sample_count, ds.interactions.size());
    if (n == 0) throw UsageError("discriminator_bce: empty training split");
    double specific = 0.0, shared = 0.0;
    for (std::size_t idx = 0; idx < n; ++idx) {
      const data::Interaction& it = ds.interactions[idx];
      const FeaturePair& uf = cache.user(it.user);
      const FeaturePair& itf = cache.item(it.item);
      const double p_specific = head_probability(uf.specific, itf.specific);
      const double p_shared = head_probability(uf.shared, itf.shared);
      specific += is_target ? -std::log(p_specific) : -std::log(1.0 - p_specific);
      shared += is_target ? -std::log(p_shared) : -std::log(1.0 - p_shared);
    }
    return (specific + shared) / static_cast<double>(n);
  };

  return domain_bce(source_train, data::Domain::kSource, false) +
         domain_bce(target_train, data::Domain::kTarget, true);
}

namespace {

// Top-2 principal directions via deflated power iteration; deterministic
// start vectors.
std::vector<std::vector<double>> principal_directions(const std::vector<std::vector<double>>& rows,
                                                      std::size_t count) {
  const std::size_t d = rows.empty() ? 0 : rows.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += r[c];
  }
  for (double& m : mean) m /= static_cast<double>(rows.size());

  std::vector<std::vector<double>> centered(rows.size(), std::vector<double>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) centered[i][c] = rows[i][c] - mean[c];
  }

  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (const auto& r : centered) {
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) cov[a][b] += r[a] * r[b];
    }
  }

  std::vector<std::vector<double>> dirs;
  for (std::size_t pc = 0; pc < count && pc < d; ++pc) {
    std::vector<double> v(d, 0.0);
    v[pc % d] = 1.0;
    for (int iter = 0; iter < 200; ++iter) {
      // project out previous directions
      for (const auto& prev : dirs) {
        double dp = 0.0;
        for (std::size_t c = 0; c < d; ++c) dp += v[c] * prev[c];
        for (std::size_t c = 0; c < d; ++c) v[c] -= dp * prev[c];
      }
      std::vector<double> next(d, 0.0);
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) next[a] += cov[a][b] * v[b];
      }
      double norm = 0.0;
      for (double x : next) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-200) break;
      for (std::size_t c = 0; c < d; ++c) v[c] = next[c] / norm;
    }
    dirs.push_back(v);
  }
  return dirs;
}

}  // namespace

std::vector<VizRow> degree_radius_rows(const model::ModelParams& params,
                                       const data::DomainDataset& train,
                                       const emb::EmbeddingTable& table, data::Domain domain,
                                       std::size_t max_items, std::uint64_t seed) {
  const std::size_t n_items = train.num_items();
  if (n_items == 0) throw UsageError("degree_radius_rows: no items");

  std::vector<std::uint32_t> items(n_items);
  std::iota(items.begin(), items.end(), 0u);
  if (items.size() > max_items) {
    std::mt19937_64 rng(seed);
    std::shuffle(items.begin(), items.end(), rng);
    items.resize(max_items);
    std::sort(items.begin(), items.end());
  }

  const auto features = item_mixed_features(params, train, table, domain, items);
  const auto dirs = principal_directions(features, 2);

  std::vector<VizRow> rows;
  rows.reserve(items.size());
  for (std::size_t idx = 0; idx < items.size(); ++idx) {
    VizRow row;
    row.item = items[idx];
    row.degree = train.item_degree[items[idx]];

    const geo::LorentzVec lifted = geo::exp_origin(geo::tangent_at_origin(features[idx]));
    const geo::PoincareVec ball = geo::lorentz_to_poincare(lifted);
    double s = 0.0;
    for (double c : ball.coords) s += c * c;
    row.radius = std::sqrt(s);

    std::vector<double> proj(2, 0.0);
    for (std::size_t pc = 0; pc < dirs.size(); ++pc) {
      for (std::size_t c = 0; c < features[idx].size(); ++c) {
        proj[pc] += dirs[pc][c] * features[idx][c];
      }
    }
    const geo::LorentzVec lifted2 = geo::exp_origin(geo::tangent_at_origin(proj));
    const geo::PoincareVec ball2 = geo::lorentz_to_poincare(lifted2);
    row.x = ball2.coords[0];
    row.y = ball2.coords[1];
    rows.push_back(row);
  }
  return rows;
}

}  // namespace head::eval
