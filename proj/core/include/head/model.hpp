#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "head/autodiff.hpp"
#include "head/embedding.hpp"

namespace head::model {

struct ModelConfig {
  std::size_t embed_dim = 100;              // word-vector dimension d
  std::size_t feature_dim = 96;             // extractor output d_f
  std::vector<std::size_t> widths = {3, 4, 5};
  std::size_t doc_cap = 256;
  double curvature = 1.0;

  std::size_t filters_per_width() const { return feature_dim / widths.size(); }
  void validate() const;
};

// One multi-width convolution bank: filters[w] is [f x widths[w]*embed_dim],
// biases[w] is [f].
struct ConvBank {
  std::vector<ad::Tensor> filters;
  std::vector<ad::Tensor> biases;
};

// Two affine layers; relu between, sigmoid on the scalar output.
struct Mlp {
  ad::Tensor w1, b1, w2, b2;
};

struct ModelParams {
  ModelConfig config;
  ConvBank source_extractor;
  ConvBank target_extractor;
  ConvBank shared_extractor;
  Mlp discriminator;  // 2*d_f -> d_f -> 1
  Mlp gate;           // 2*(d_f+1) -> d_f -> 1
  ad::Tensor source_user_latent;  // [N x d_f] each
  ad::Tensor source_item_latent;
  ad::Tensor target_user_latent;
  ad::Tensor target_item_latent;
};

// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero, latents
// Gaussian sigma = 0.01.
ModelParams init_params(const ModelConfig& config, std::size_t source_users,
                        std::size_t source_items, std::size_t target_users,
                        std::size_t target_items, std::uint64_t seed);

// Stable walk over every trainable tensor; the order defines the optimizer
// and checkpoint layout.
void for_each_param(ModelParams& params,
                    const std::function<void(const std::string&, ad::Tensor&)>& fn);
void for_each_param(const ModelParams& params,
                    const std::function<void(const std::string&, const ad::Tensor&)>& fn);

enum class Extractor { kSource, kTarget, kShared };
enum class LatentTable { kSourceUser, kSourceItem, kTargetUser, kTargetItem };

// Lazily registers parameter tensors as leaves of one tape and reads their
// gradients back after backward(). Latent tables are bound row-by-row so a
// step only tapes the rows it touches.
class ParamBinding {
 public:
  ParamBinding(ad::Tape& tape, ModelParams& params);

  ad::Var named(const std::string& name);
  ad::Var latent_row(LatentTable table, std::uint32_t index);
  ad::Var conv_filter(Extractor which, std::size_t width_index);
  ad::Var conv_bias(Extractor which, std::size_t width_index);

  // Every bound leaf in binding order, for the regularization term.
  std::vector<ad::Var> bound_leaves() const;

  // Dense gradients per parameter name after tape().backward(); rows of
  // latent tables are scattered back into full-size tensors, unbound
  // parameters yield zeros.
  std::map<std::string, ad::Tensor> collect_gradients() const;

  ad::Tape& tape() { return tape_; }
  ModelParams& params() { return params_; }

 private:
  ad::Tape& tape_;
  ModelParams& params_;
  std::map<std::string, ad::Var> named_;
  std::map<std::pair<int, std::uint32_t>, ad::Var> latent_;
};

// --- Taped building blocks ----------------------------------------------

// exp-map lift at the origin: [d] -> [cosh||v||, sinh||v|| v/||v||].
ad::Var lift_to_hyperboloid(ad::Tape& t, ad::Var v);

// Geodesic distance between the lifts of two tangent vectors, composed from
// taped primitives: with a=||u||, b=||v||, c=cos(u,v),
//   z = cosh a cosh b - c sinh a sinh b
//   sqrt(z^2-1) = ||(sinh a cosh b - c cosh a sinh b, sinh b ||v_perp||/b)||
//   d = log(z + sqrt(z^2-1)).
// Matches geo::lorentz_dist(exp_origin(u), exp_origin(v)) and is
// differentiable through both arguments.
ad::Var lorentz_distance_tangents(ad::Tape& t, ad::Var u, ad::Var v);

// v / ||v||, recorded on tape. The vector is divided by its largest absolute
// component first, so inputs that differ by an exactly-representable scale
// factor normalize to bitwise-identical outputs. Inputs with ||v|| < 1e-12
// pass through unchanged and set *degenerate.
ad::Var scale_align(ad::Tape& t, ad::Var v, bool* degenerate = nullptr);

// Applies log_origin row-wise to the document, then the multi-width
// convolution bank: conv -> tanh -> max-over-time, channels concatenated to
// d_f.
ad::Var extract(ad::Tape& t, ParamBinding& binding, const emb::DocumentEmbedding& doc,
                Extractor which);

// Extractor outputs for one source sample and one target sample, plus their
// user||item concatenations.
struct FeatureBundle {
  ad::Var source_user, source_item;              // S_u, S_i
  ad::Var source_user_shared, source_item_shared;
  ad::Var target_user, target_item;
  ad::Var target_user_shared, target_item_shared;
  ad::Var source_specific, target_specific;      // [2*d_f] concatenations
  ad::Var source_shared, target_shared;
};

FeatureBundle make_bundle(ad::Tape& t, ad::Var s_u, ad::Var s_i, ad::Var s_u_shared,
                          ad::Var s_i_shared, ad::Var t_u, ad::Var t_i, ad::Var t_u_shared,
                          ad::Var t_i_shared);

// Domain probabilities, clamped into [1e-7, 1-1e-7].
struct DomainLogits {
  ad::Var source, target;                // specific features
  ad::Var source_shared, target_shared;  // shareable features, through grl
};

// Norm bookkeeping for everything that reaches the discriminator.
struct DiscInputStats {
  std::size_t count = 0;
  std::size_t degenerate = 0;  // zero-norm inputs that skipped alignment
  double min_norm = 0.0;
  double max_norm = 0.0;
  void observe(double norm);
  void merge(const DiscInputStats& other);
};

// Specific features pass scale_align then F_d; shareable features pass
// scale_align, then grl, then F_d. With aligned == false the normalization
// is skipped (kept for the unaligned ablation).
DomainLogits discriminate(ad::Tape& t, ParamBinding& binding, const FeatureBundle& bundle,
                          bool aligned, DiscInputStats* stats = nullptr);

struct ScoreParts {
  ad::Var score;     // gate * distance, >= 0
  ad::Var gate;      // in [0, 1]
  ad::Var distance;  // Lorentz distance between the lifted aggregates
  ad::Var user_aggregate, item_aggregate;  // (S + S_hat)/2 + latent
};

// p = M(x_u || x_i) * d_L(x_u, x_i) where x = exp-origin lift of
// (specific + shared)/2 + latent.
ScoreParts score_on_tape(ad::Tape& t, ParamBinding& binding, ad::Var specific_user,
                         ad::Var shared_user, ad::Var specific_item, ad::Var shared_item,
                         LatentTable user_table, std::uint32_t user,
                         LatentTable item_table, std::uint32_t item);

// --- Forward-only conveniences (frozen parameters) -----------------------

std::vector<double> extract_value(const ModelParams& params, const emb::DocumentEmbedding& doc,
                                  Extractor which);

double score_value(const ModelParams& params, const std::vector<double>& specific_user,
                   const std::vector<double>& shared_user,
                   const std::vector<double>& specific_item,
                   const std::vector<double>& shared_item, LatentTable user_table,
                   std::uint32_t user, LatentTable item_table, std::uint32_t item);

}  // namespace head::model
