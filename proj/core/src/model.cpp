#include "head/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "head/errors.hpp"
#include "head/geometry.hpp"

namespace head::model {

namespace {

constexpr double kDegenerateNorm = 1e-12;
constexpr double kLogitLo = 1e-7;
constexpr double kLogitHi = 1.0 - 1e-7;

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

void ModelConfig::validate() const {
  if (widths.empty()) throw UsageError("ModelConfig: widths must not be empty");
  if (feature_dim == 0 || feature_dim % widths.size() != 0) {
    throw UsageError("ModelConfig: feature_dim must be a positive multiple of widths.size()");
  }
  if (embed_dim == 0) throw UsageError("ModelConfig: embed_dim must be positive");
  for (std::size_t w : widths) {
    if (w == 0 || w > doc_cap) throw UsageError("ModelConfig: width must be in [1, doc_cap]");
  }
  if (curvature != 1.0) throw UsageError("ModelConfig: curvature is fixed to 1");
}

namespace {

ad::Tensor glorot(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out,
                  std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(rows * cols);
  for (double& x : data) x = dist(rng);
  return ad::Tensor::matrix(rows, cols, std::move(data));
}

ad::Tensor gaussian_rows(std::size_t rows, std::size_t cols, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> data(rows * cols);
  for (double& x : data) x = dist(rng);
  return ad::Tensor::matrix(rows, cols, std::move(data));
}

ConvBank init_bank(const ModelConfig& config, std::mt19937_64& rng) {
  ConvBank bank;
  const std::size_t f = config.filters_per_width();
  for (std::size_t w : config.widths) {
    const std::size_t in = w * config.embed_dim;
    bank.filters.push_back(glorot(f, in, in, f, rng));
    bank.biases.push_back(ad::Tensor::zeros({f}));
  }
  return bank;
}

Mlp init_mlp(std::size_t in, std::size_t hidden, std::mt19937_64& rng) {
  Mlp mlp;
  mlp.w1 = glorot(hidden, in, in, hidden, rng);
  mlp.b1 = ad::Tensor::zeros({hidden});
  mlp.w2 = glorot(1, hidden, hidden, 1, rng);
  mlp.b2 = ad::Tensor::zeros({1});
  return mlp;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::size_t source_users,
                        std::size_t source_items, std::size_t target_users,
                        std::size_t target_items, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.config = config;
  p.source_extractor = init_bank(config, rng);
  p.target_extractor = init_bank(config, rng);
  p.shared_extractor = init_bank(config, rng);
  p.discriminator = init_mlp(2 * config.feature_dim, config.feature_dim, rng);
  p.gate = init_mlp(2 * (config.feature_dim + 1), config.feature_dim, rng);
  p.source_user_latent = gaussian_rows(std::max<std::size_t>(source_users, 1), config.feature_dim, 0.01, rng);
  p.source_item_latent = gaussian_rows(std::max<std::size_t>(source_items, 1), config.feature_dim, 0.01, rng);
  p.target_user_latent = gaussian_rows(std::max<std::size_t>(target_users, 1), config.feature_dim, 0.01, rng);
  p.target_item_latent = gaussian_rows(std::max<std::size_t>(target_items, 1), config.feature_dim, 0.01, rng);
  return p;
}

namespace {

const char* extractor_name(Extractor e) {
  switch (e) {
    case Extractor::kSource: return "source_extractor";
    case Extractor::kTarget: return "target_extractor";
    case Extractor::kShared: return "shared_extractor";
  }
  return "?";
}

const char* latent_name(LatentTable t) {
  switch (t) {
    case LatentTable::kSourceUser: return "source_user_latent";
    case LatentTable::kSourceItem: return "source_item_latent";
    case LatentTable::kTargetUser: return "target_user_latent";
    case LatentTable::kTargetItem: return "target_item_latent";
  }
  return "?";
}

template <typename Params, typename Fn>
void walk_params(Params& p, const Fn& fn) {
  auto bank = [&fn](const char* prefix, auto& b) {
    for (std::size_t i = 0; i < b.filters.size(); ++i) {
      fn(std::string(prefix) + ".w" + std::to_string(i), b.filters[i]);
      fn(std::string(prefix) + ".b" + std::to_string(i), b.biases[i]);
    }
  };
  bank("source_extractor", p.source_extractor);
  bank("target_extractor", p.target_extractor);
  bank("shared_extractor", p.shared_extractor);
  auto mlp = [&fn](const char* prefix, auto& m) {
    fn(std::string(prefix) + ".w1", m.w1);
    fn(std::string(prefix) + ".b1", m.b1);
    fn(std::string(prefix) + ".w2", m.w2);
    fn(std::string(prefix) + ".b2", m.b2);
  };
  mlp("discriminator", p.discriminator);
  mlp("gate", p.gate);
  fn("source_user_latent", p.source_user_latent);
  fn("source_item_latent", p.source_item_latent);
  fn("target_user_latent", p.target_user_latent);
  fn("target_item_latent", p.target_item_latent);
}

}  // namespace

void for_each_param(ModelParams& params,
                    const std::function<void(const std::string&, ad::Tensor&)>& fn) {
  walk_params(params, fn);
}

void for_each_param(const ModelParams& params,
                    const std::function<void(const std::string&, const ad::Tensor&)>& fn) {
  walk_params(params, fn);
}

ParamBinding::ParamBinding(ad::Tape& tape, ModelParams& params) : tape_(tape), params_(params) {}

ad::Var ParamBinding::named(const std::string& name) {
  auto it = named_.find(name);
  if (it != named_.end()) return it->second;
  ad::Var var;
  bool found = false;
  for_each_param(params_, [&](const std::string& n, ad::Tensor& t) {
    if (n == name && !found) {
      var = tape_.leaf(t);
      found = true;
    }
  });
  if (!found) throw UsageError("ParamBinding: unknown parameter " + name);
  named_.emplace(name, var);
  return var;
}

ad::Var ParamBinding::latent_row(LatentTable table, std::uint32_t index) {
  const auto key = std::make_pair(static_cast<int>(table), index);
  auto it = latent_.find(key);
  if (it != latent_.end()) return it->second;

  ad::Tensor* full = nullptr;
  switch (table) {
    case LatentTable::kSourceUser: full = &params_.source_user_latent; break;
    case LatentTable::kSourceItem: full = &params_.source_item_latent; break;
    case LatentTable::kTargetUser: full = &params_.target_user_latent; break;
    case LatentTable::kTargetItem: full = &params_.target_item_latent; break;
  }
  if (index >= full->rows()) throw UsageError("ParamBinding: latent row out of range");
  const std::size_t d = full->cols();
  std::vector<double> row(full->data.begin() + index * d, full->data.begin() + (index + 1) * d);
  ad::Var var = tape_.leaf(ad::Tensor::vector(std::move(row)));
  latent_.emplace(key, var);
  return var;
}

ad::Var ParamBinding::conv_filter(Extractor which, std::size_t width_index) {
  return named(std::string(extractor_name(which)) + ".w" + std::to_string(width_index));
}

ad::Var ParamBinding::conv_bias(Extractor which, std::size_t width_index) {
  return named(std::string(extractor_name(which)) + ".b" + std::to_string(width_index));
}

std::vector<ad::Var> ParamBinding::bound_leaves() const {
  std::vector<ad::Var> out;
  out.reserve(named_.size() + latent_.size());
  for (const auto& [name, var] : named_) out.push_back(var);
  for (const auto& [key, var] : latent_) out.push_back(var);
  return out;
}

std::map<std::string, ad::Tensor> ParamBinding::collect_gradients() const {
  std::map<std::string, ad::Tensor> grads;
  for_each_param(params_, [&](const std::string& name, const ad::Tensor& t) {
    grads.emplace(name, ad::Tensor::zeros(t.shape));
  });
  for (const auto& [name, var] : named_) {
    const ad::Tensor& g = tape_.grad(var);
    ad::Tensor& dst = grads.at(name);
    for (std::size_t i = 0; i < g.size(); ++i) dst.data[i] += g.data[i];
  }
  for (const auto& [key, var] : latent_) {
    const auto table = static_cast<LatentTable>(key.first);
    const std::uint32_t index = key.second;
    ad::Tensor& dst = grads.at(latent_name(table));
    const ad::Tensor& g = tape_.grad(var);
    const std::size_t d = g.size();
    for (std::size_t i = 0; i < d; ++i) dst.data[index * d + i] += g.data[i];
  }
  return grads;
}

// --- Taped building blocks ----------------------------------------------

ad::Var lift_to_hyperboloid(ad::Tape& t, ad::Var v) {
  const ad::Tensor& tv = t.value(v);
  const double n = vec_norm(tv.data);
  if (n < kDegenerateNorm) {
    // exp at the base point: time coordinate cosh(0)=1, space part ~ v.
    ad::Var one = ad::scalar_leaf(t, 1.0);
    return t.concat({one, v});
  }
  ad::Var a = t.norm2(v);
  ad::Var unit = t.div_scalar(v, a);
  ad::Var space = t.mul(unit, t.sinh(a));
  return t.concat({t.cosh(a), space});
}

ad::Var lorentz_distance_tangents(ad::Tape& t, ad::Var u, ad::Var v) {
  const double nu = vec_norm(t.value(u).data);
  const double nv = vec_norm(t.value(v).data);
  if (nu < kDegenerateNorm && nv < kDegenerateNorm) return t.norm2(t.sub(u, v));
  if (nu < kDegenerateNorm) return t.norm2(v);  // d(o, exp_o(v)) = ||v||
  if (nv < kDegenerateNorm) return t.norm2(u);

  ad::Var a = t.norm2(u);
  ad::Var b = t.norm2(v);
  ad::Var uh = t.div_scalar(u, a);
  ad::Var vh = t.div_scalar(v, b);
  ad::Var c = ad::dot(t, uh, vh);

  ad::Var cosh_a = t.cosh(a), sinh_a = t.sinh(a);
  ad::Var cosh_b = t.cosh(b), sinh_b = t.sinh(b);

  // z = -<exp_o(u), exp_o(v)>_L
  ad::Var z = t.sub(t.mul(cosh_a, cosh_b), t.mul(c, t.mul(sinh_a, sinh_b)));
  // sqrt(z^2 - 1) as the norm of two exactly computable legs.
  ad::Var leg1 = t.sub(t.mul(sinh_a, cosh_b), t.mul(c, t.mul(cosh_a, sinh_b)));
  ad::Var perp = t.sub(vh, t.mul(uh, c));
  ad::Var leg2 = t.mul(sinh_b, t.norm2(perp));
  ad::Var w = t.norm2(t.concat({leg1, leg2}));
  // log argument is >= 1 up to rounding; the hinge keeps the distance >= 0.
  return t.max_zero(t.log(t.add(z, w)));
}

ad::Var scale_align(ad::Tape& t, ad::Var v, bool* degenerate) {
  if (degenerate) *degenerate = false;
  const ad::Tensor& tv = t.value(v);
  if (vec_norm(tv.data) < kDegenerateNorm) {
    if (degenerate) *degenerate = true;
    return v;
  }
  // max |v_i| via pooling over the concatenation of v and -v.
  ad::Var zero = t.leaf(ad::Tensor::zeros(tv.shape));
  ad::Var both = t.concat({v, t.sub(zero, v)});
  ad::Var peak = t.max_pool_time(both);
  ad::Var reduced = t.div_scalar(v, peak);
  return t.div_scalar(reduced, t.norm2(reduced));
}

ad::Var extract(ad::Tape& t, ParamBinding& binding, const emb::DocumentEmbedding& doc,
                Extractor which) {
  const ModelConfig& config = binding.params().config;
  if (doc.dim != config.embed_dim || doc.length != config.doc_cap) {
    throw UsageError("extract: document shape does not match the model config");
  }

  // Rows of the document projected back to the tangent space at the origin.
  std::vector<double> rows(doc.length * doc.dim);
  for (std::size_t r = 0; r < doc.length; ++r) {
    const geo::TangentVec tan = geo::log_origin(doc.hyperbolic[r]);
    for (std::size_t c = 0; c < doc.dim; ++c) rows[r * doc.dim + c] = tan.coords[c + 1];
  }
  ad::Var x = t.leaf(ad::Tensor::matrix(doc.length, doc.dim, std::move(rows)));

  std::vector<ad::Var> pooled;
  pooled.reserve(config.widths.size());
  for (std::size_t w = 0; w < config.widths.size(); ++w) {
    ad::Var conv = t.conv1d(x, binding.conv_filter(which, w), binding.conv_bias(which, w),
                            config.widths[w]);
    pooled.push_back(t.max_pool_time(t.tanh(conv)));
  }
  return t.concat(std::span<const ad::Var>(pooled));
}

FeatureBundle make_bundle(ad::Tape& t, ad::Var s_u, ad::Var s_i, ad::Var s_u_shared,
                          ad::Var s_i_shared, ad::Var t_u, ad::Var t_i, ad::Var t_u_shared,
                          ad::Var t_i_shared) {
  FeatureBundle b;
  b.source_user = s_u;
  b.source_item = s_i;
  b.source_user_shared = s_u_shared;
  b.source_item_shared = s_i_shared;
  b.target_user = t_u;
  b.target_item = t_i;
  b.target_user_shared = t_u_shared;
  b.target_item_shared = t_i_shared;
  b.source_specific = t.concat({s_u, s_i});
  b.target_specific = t.concat({t_u, t_i});
  b.source_shared = t.concat({s_u_shared, s_i_shared});
  b.target_shared = t.concat({t_u_shared, t_i_shared});
  return b;
}

void DiscInputStats::observe(double norm) {
  if (count == 0) {
    min_norm = max_norm = norm;
  } else {
    min_norm = std::min(min_norm, norm);
    max_norm = std::max(max_norm, norm);
  }
  ++count;
}

void DiscInputStats::merge(const DiscInputStats& other) {
  degenerate += other.degenerate;
  if (other.count == 0) return;
  if (count == 0) {
    const std::size_t keep = degenerate;
    *this = other;
    degenerate = keep;
  } else {
    min_norm = std::min(min_norm, other.min_norm);
    max_norm = std::max(max_norm, other.max_norm);
    count += other.count;
  }
}

namespace {

ad::Var mlp_probability(ad::Tape& t, ParamBinding& binding, const char* prefix, ad::Var x) {
  ad::Var h = t.relu(ad::affine(t, binding.named(std::string(prefix) + ".w1"), x,
                                binding.named(std::string(prefix) + ".b1")));
  ad::Var out = ad::affine(t, binding.named(std::string(prefix) + ".w2"), h,
                           binding.named(std::string(prefix) + ".b2"));
  return t.sigmoid(out);
}

ad::Var discriminator_head(ad::Tape& t, ParamBinding& binding, ad::Var features, bool aligned,
                           bool through_grl, DiscInputStats* stats) {
  ad::Var x = features;
  if (aligned) {
    bool degenerate = false;
    x = scale_align(t, x, &degenerate);
    if (degenerate && stats) ++stats->degenerate;
  }
  if (stats) stats->observe(vec_norm(t.value(x).data));
  if (through_grl) x = t.grl(x);
  return ad::clamp(t, mlp_probability(t, binding, "discriminator", x), kLogitLo, kLogitHi);
}

}  // namespace

DomainLogits discriminate(ad::Tape& t, ParamBinding& binding, const FeatureBundle& bundle,
                          bool aligned, DiscInputStats* stats) {
  DomainLogits logits;
  logits.source = discriminator_head(t, binding, bundle.source_specific, aligned, false, stats);
  logits.target = discriminator_head(t, binding, bundle.target_specific, aligned, false, stats);
  logits.source_shared = discriminator_head(t, binding, bundle.source_shared, aligned, true, stats);
  logits.target_shared = discriminator_head(t, binding, bundle.target_shared, aligned, true, stats);
  return logits;
}

ScoreParts score_on_tape(ad::Tape& t, ParamBinding& binding, ad::Var specific_user,
                         ad::Var shared_user, ad::Var specific_item, ad::Var shared_item,
                         LatentTable user_table, std::uint32_t user, LatentTable item_table,
                         std::uint32_t item) {
  ad::Var half = ad::scalar_leaf(t, 0.5);
  ScoreParts parts;
  parts.user_aggregate = t.add(t.mul(t.add(specific_user, shared_user), half),
                               binding.latent_row(user_table, user));
  parts.item_aggregate = t.add(t.mul(t.add(specific_item, shared_item), half),
                               binding.latent_row(item_table, item));

  ad::Var lifted_user = lift_to_hyperboloid(t, parts.user_aggregate);
  ad::Var lifted_item = lift_to_hyperboloid(t, parts.item_aggregate);

  parts.gate = mlp_probability(t, binding, "gate", t.concat({lifted_user, lifted_item}));
  parts.distance = lorentz_distance_tangents(t, parts.user_aggregate, parts.item_aggregate);
  parts.score = t.mul(parts.gate, parts.distance);
  return parts;
}

// --- Forward-only conveniences -------------------------------------------

std::vector<double> extract_value(const ModelParams& params, const emb::DocumentEmbedding& doc,
                                  Extractor which) {
  ad::Tape tape;
  ParamBinding binding(tape, const_cast<ModelParams&>(params));
  ad::Var out = extract(tape, binding, doc, which);
  return tape.value(out).data;
}

double score_value(const ModelParams& params, const std::vector<double>& specific_user,
                   const std::vector<double>& shared_user,
                   const std::vector<double>& specific_item,
                   const std::vector<double>& shared_item, LatentTable user_table,
                   std::uint32_t user, LatentTable item_table, std::uint32_t item) {
  ad::Tape tape;
  ParamBinding binding(tape, const_cast<ModelParams&>(params));
  ad::Var su = tape.leaf(ad::Tensor::vector(specific_user));
  ad::Var hu = tape.leaf(ad::Tensor::vector(shared_user));
  ad::Var si = tape.leaf(ad::Tensor::vector(specific_item));
  ad::Var hi = tape.leaf(ad::Tensor::vector(shared_item));
  ScoreParts parts =
      score_on_tape(tape, binding, su, hu, si, hi, user_table, user, item_table, item);
  return tape.value(parts.score).data[0];
}

}  // namespace head::model
