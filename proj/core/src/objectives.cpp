#include "head/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "head/errors.hpp"

namespace head::obj {

namespace {

constexpr double kDenominatorFloor = 1e-8;

// Distinct nodes in first-seen order.
std::vector<const NodeFeature*> distinct_nodes(const std::vector<NodeFeature>& group) {
  std::vector<const NodeFeature*> out;
  std::map<std::uint32_t, bool> seen;
  for (const NodeFeature& nf : group) {
    if (!seen.emplace(nf.node, true).second) continue;
    out.push_back(&nf);
  }
  return out;
}

// Weighted mean deviation of one group from its detached root, or nothing
// when the group is empty.
ad::Var group_deviation(ad::Tape& t, const std::vector<NodeFeature>& group,
                        std::uint32_t max_degree, bool degree_normalized, bool* has_nodes) {
  const auto nodes = distinct_nodes(group);
  if (nodes.empty()) {
    *has_nodes = false;
    return ad::Var();
  }
  *has_nodes = true;

  const std::size_t dim = t.value(nodes.front()->specific).size();
  std::vector<double> root(dim, 0.0);
  for (const NodeFeature* nf : nodes) {
    const auto& s = t.value(nf->specific).data;
    const auto& h = t.value(nf->shared).data;
    for (std::size_t i = 0; i < dim; ++i) root[i] += 0.5 * (s[i] + h[i]);
  }
  for (double& v : root) v /= static_cast<double>(nodes.size());
  ad::Var root_const = t.leaf(ad::Tensor::vector(std::move(root)));

  std::vector<ad::Var> terms;
  terms.reserve(nodes.size());
  for (const NodeFeature* nf : nodes) {
    ad::Var dev = t.square(t.norm2(t.sub(nf->specific, root_const)));
    double w = 1.0;
    if (degree_normalized) {
      w = max_degree == 0
              ? 1.0
              : static_cast<double>(max_degree - std::min(nf->degree, max_degree)) /
                    static_cast<double>(max_degree);
    }
    terms.push_back(t.mul(dev, ad::scalar_leaf(t, w)));
  }
  return t.mean(t.concat(std::span<const ad::Var>(terms)));
}

}  // namespace

void LossWeights::validate() const {
  if (margin <= 0.0) throw UsageError("LossWeights: margin must be positive");
  if (lambda1 < 0.0 || lambda2 < 0.0 || delta < 0.0) {
    throw UsageError("LossWeights: lambda1, lambda2, delta must be nonnegative");
  }
  if (curvature != 1.0) throw UsageError("LossWeights: curvature is fixed to 1");
}

ad::Var hierarchy_embedding_loss(ad::Tape& t, const HierarchyBatch& batch,
                                 bool degree_normalized, bool* denominator_clamped) {
  if (denominator_clamped) *denominator_clamped = false;

  struct Group {
    const std::vector<NodeFeature>* nodes;
    std::uint32_t max_degree;
  };
  const Group groups[4] = {
      {&batch.source_users, batch.max_source_user_degree},
      {&batch.source_items, batch.max_source_item_degree},
      {&batch.target_users, batch.max_target_user_degree},
      {&batch.target_items, batch.max_target_item_degree},
  };

  ad::Var sum_term;
  bool any = false;
  for (const Group& g : groups) {
    bool has_nodes = false;
    ad::Var term = group_deviation(t, *g.nodes, g.max_degree, degree_normalized, &has_nodes);
    if (!has_nodes) continue;
    sum_term = any ? t.add(sum_term, term) : term;
    any = true;
  }
  if (!any) throw UsageError("hierarchy_embedding_loss: batch has no nodes");

  if (t.value(sum_term).data[0] < kDenominatorFloor && denominator_clamped) {
    *denominator_clamped = true;
  }
  return ad::inv_sqrt(t, ad::clamp_min(t, sum_term, kDenominatorFloor));
}

namespace {

ad::Var stream_mean_log(ad::Tape& t, std::span<const ad::Var> stream, bool one_minus) {
  std::vector<ad::Var> items(stream.begin(), stream.end());
  ad::Var v = t.concat(std::span<const ad::Var>(items));
  if (one_minus) {
    ad::Var ones = t.leaf(ad::Tensor::vector(std::vector<double>(items.size(), 1.0)));
    v = t.sub(ones, v);
  }
  return t.mean(t.log(v));
}

}  // namespace

ad::Var domain_loss(ad::Tape& t, std::span<const ad::Var> d_source,
                    std::span<const ad::Var> d_source_shared, std::span<const ad::Var> d_target,
                    std::span<const ad::Var> d_target_shared) {
  if (d_source.empty() || d_source_shared.empty() || d_target.empty() ||
      d_target_shared.empty()) {
    throw UsageError("domain_loss: every stream needs at least one logit");
  }
  ad::Var acc = stream_mean_log(t, d_source, true);
  acc = t.add(acc, stream_mean_log(t, d_source_shared, true));
  acc = t.add(acc, stream_mean_log(t, d_target, false));
  acc = t.add(acc, stream_mean_log(t, d_target_shared, false));
  return t.mul(acc, ad::scalar_leaf(t, -1.0));
}

ad::Var ranking_loss(ad::Tape& t, ad::Var p_pos, ad::Var p_neg, double margin) {
  if (margin <= 0.0) throw UsageError("ranking_loss: margin must be positive");
  ad::Var gap = t.sub(t.square(p_pos), t.square(p_neg));
  return t.max_zero(t.add(gap, ad::scalar_leaf(t, margin)));
}

ad::Var total_loss(ad::Tape& t, ad::Var embedding, ad::Var domain, ad::Var prediction,
                   ad::Var parameter_norm, const LossWeights& weights) {
  weights.validate();
  const struct {
    const char* name;
    ad::Var var;
  } parts[] = {{"L_emb", embedding}, {"L_d", domain}, {"L_pred", prediction},
               {"theta_norm", parameter_norm}};
  for (const auto& part : parts) {
    if (!std::isfinite(t.value(part.var).data[0])) {
      throw NumericError(std::string("total_loss: non-finite ") + part.name, part.name);
    }
  }
  ad::Var acc = t.mul(embedding, ad::scalar_leaf(t, weights.lambda1));
  acc = t.add(acc, t.mul(domain, ad::scalar_leaf(t, weights.lambda2)));
  acc = t.add(acc, prediction);
  acc = t.add(acc, t.mul(parameter_norm, ad::scalar_leaf(t, weights.delta)));
  return acc;
}

ad::Var parameter_norm(ad::Tape& t, model::ParamBinding& binding) {
  std::vector<ad::Var> leaves;
  model::for_each_param(binding.params(),
                        [&](const std::string& name, const ad::Tensor&) {
                          leaves.push_back(binding.named(name));
                        });
  return t.norm2(t.concat(std::span<const ad::Var>(leaves)));
}

}  // namespace head::obj
