#include "head/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>

#include "head/autodiff.hpp"
#include "head/geometry.hpp"
#include "head/model.hpp"
#include "head/objectives.hpp"
#include "head/synthetic.hpp"
#include "head/training.hpp"

namespace head::selfcheck {

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::scientific << v;
  return ss.str();
}

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

SuiteReport geometry_suite(std::size_t samples, std::uint64_t seed) {
  SuiteReport report;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim_dist(2, 12);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> radius(0.0, 10.0);

  double max_roundtrip = 0.0, max_geodesic = 0.0, max_isometry = 0.0, max_constraint = 0.0;
  double max_symmetry = 0.0, max_self = 0.0;

  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t d = dim_dist(rng);
    auto random_tangent = [&](double max_norm) {
      std::vector<double> space(d);
      for (double& x : space) x = unit(rng);
      const double n = vec_norm(space);
      const double target = radius(rng) / 10.0 * max_norm;
      if (n > 0) {
        for (double& x : space) x *= target / n;
      }
      return geo::tangent_at_origin(space);
    };

    const geo::TangentVec v = random_tangent(10.0);
    const geo::LorentzVec x = geo::exp_origin(v);
    // Residual relative to the point's squared magnitude: an absolute bound
    // is not representable once cosh(||v||)^2 dwarfs the double-precision ulp.
    const double scale = std::max(1.0, x.coords[0] * x.coords[0]);
    max_constraint = std::max(max_constraint, geo::lorentz_constraint_residual(x) / scale);

    const geo::TangentVec back = geo::log_origin(x);
    double rt = 0.0;
    for (std::size_t i = 0; i < v.coords.size(); ++i) {
      rt = std::max(rt, std::abs(back.coords[i] - v.coords[i]));
    }
    max_roundtrip = std::max(max_roundtrip, rt);

    const double vnorm = vec_norm(std::vector<double>(v.coords.begin() + 1, v.coords.end()));
    const geo::LorentzVec origin = geo::lorentz_origin(d);
    max_geodesic = std::max(max_geodesic, std::abs(geo::lorentz_dist(origin, x) - vnorm));

    const geo::TangentVec w = random_tangent(3.0);
    const geo::LorentzVec y = geo::exp_origin(w);
    const double dl = geo::lorentz_dist(x, y);
    max_symmetry = std::max(max_symmetry, std::abs(dl - geo::lorentz_dist(y, x)));
    max_self = std::max(max_self, geo::lorentz_dist(x, x));
    const double dp = geo::poincare_dist(geo::lorentz_to_poincare(x), geo::lorentz_to_poincare(y));
    max_isometry = std::max(max_isometry, std::abs(dl - dp));
  }

  report.results.push_back({"geometry/exp-log-roundtrip", max_roundtrip < 1e-6,
                            "max error " + fmt(max_roundtrip) + " (tol 1e-6)"});
  report.results.push_back({"geometry/geodesic-normalization", max_geodesic < 1e-8,
                            "max |d(o,exp(v)) - ||v||| " + fmt(max_geodesic) + " (tol 1e-8)"});
  report.results.push_back({"geometry/lorentz-poincare-isometry", max_isometry < 1e-6,
                            "max distance gap " + fmt(max_isometry) + " (tol 1e-6)"});
  report.results.push_back({"geometry/exp-constraint", max_constraint < 1e-9,
                            "max |<x,x>+k| " + fmt(max_constraint) + " (tol 1e-9)"});
  report.results.push_back({"geometry/distance-symmetry-and-identity",
                            max_symmetry == 0.0 && max_self == 0.0,
                            "symmetry gap " + fmt(max_symmetry) + ", self distance " +
                                fmt(max_self)});
  return report;
}

namespace {

struct FdOp {
  std::string name;
  std::function<std::vector<ad::Tensor>(std::mt19937_64&)> sample;
  std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)> build;
};

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (double& x : out) x = dist(rng);
  return out;
}

double eval_case(const FdOp& op, const std::vector<ad::Tensor>& leaves) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  vars.reserve(leaves.size());
  for (const ad::Tensor& t : leaves) vars.push_back(tape.leaf(t));
  return tape.value(op.build(tape, vars)).data[0];
}

// Max relative error between reverse-mode and central-difference gradients
// over every leaf element.
double fd_max_rel_error(const FdOp& op, std::vector<ad::Tensor> leaves) {
  constexpr double kStep = 1e-5;
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const ad::Tensor& t : leaves) vars.push_back(tape.leaf(t));
  tape.backward(op.build(tape, vars));

  double worst = 0.0;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    const ad::Tensor& g = tape.grad(vars[l]);
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::vector<ad::Tensor> plus = leaves, minus = leaves;
      plus[l].data[i] += kStep;
      minus[l].data[i] -= kStep;
      const double fd = (eval_case(op, plus) - eval_case(op, minus)) / (2.0 * kStep);
      const double ad_g = g.data[i];
      const double rel = std::abs(ad_g - fd) / std::max({std::abs(ad_g), std::abs(fd), 1.0});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

std::vector<FdOp> finite_difference_ops() {
  using ad::Tape;
  using ad::Tensor;
  using ad::Var;
  std::vector<FdOp> ops;

  auto pair_vec = [](std::mt19937_64& rng) {
    return std::vector<Tensor>{Tensor::vector(random_values(rng, 5, -2, 2)),
                               Tensor::vector(random_values(rng, 5, -2, 2))};
  };
  ops.push_back({"add", pair_vec, [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.add(v[0], v[1]));
                 }});
  ops.push_back({"sub", pair_vec, [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.sub(v[0], v[1]));
                 }});
  ops.push_back({"mul", pair_vec, [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.mul(v[0], v[1]));
                 }});
  ops.push_back({"mul-scalar-broadcast",
                 [](std::mt19937_64& rng) {
                   return std::vector<Tensor>{Tensor::vector(random_values(rng, 5, -2, 2)),
                                              Tensor::scalar(random_values(rng, 1, -2, 2)[0])};
                 },
                 [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.mul(v[0], v[1]));
                 }});
  ops.push_back({"matmul",
                 [](std::mt19937_64& rng) {
                   return std::vector<Tensor>{Tensor::matrix(3, 4, random_values(rng, 12, -1, 1)),
                                              Tensor::vector(random_values(rng, 4, -1, 1))};
                 },
                 [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.matmul(v[0], v[1]));
                 }});
  ops.push_back({"conv1d",
                 [](std::mt19937_64& rng) {
                   return std::vector<Tensor>{Tensor::matrix(6, 2, random_values(rng, 12, -1, 1)),
                                              Tensor::matrix(2, 6, random_values(rng, 12, -1, 1)),
                                              Tensor::vector(random_values(rng, 2, -1, 1))};
                 },
                 [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.conv1d(v[0], v[1], v[2], 3));
                 }});
  ops.push_back({"max-pool-over-time",
                 [](std::mt19937_64& rng) {
                   // keep the top-2 entries of each row separated so the
                   // finite-difference step cannot flip the argmax
                   while (true) {
                     Tensor y = Tensor::matrix(3, 5, random_values(rng, 15, -2, 2));
                     bool ok = true;
                     for (std::size_t r = 0; r < 3 && ok; ++r) {
                       std::vector<double> row(y.data.begin() + r * 5, y.data.begin() + (r + 1) * 5);
                       std::sort(row.begin(), row.end());
                       if (row[4] - row[3] < 1e-3) ok = false;
                     }
                     if (ok) return std::vector<Tensor>{y};
                   }
                 },
                 [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.max_pool_time(v[0]));
                 }});
  ops.push_back({"concat", pair_vec, [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.concat({v[0], v[1]}));
                 }});
  ops.push_back({"mean",
                 [](std::mt19937_64& rng) {
                   return std::vector<Tensor>{Tensor::vector(random_values(rng, 6, -2, 2))};
                 },
                 [](Tape& t, const std::vector<Var>& v) { return t.mean(v[0]); }});

  auto one_vec = [](double lo, double hi) {
    return [lo, hi](std::mt19937_64& rng) {
      return std::vector<Tensor>{Tensor::vector(random_values(rng, 5, lo, hi))};
    };
  };
  auto away_from_zero = [](std::mt19937_64& rng) {
    std::vector<double> vals = random_values(rng, 5, -2, 2);
    for (double& x : vals) {
      if (std::abs(x) < 1e-2) x = x < 0 ? x - 1e-2 : x + 1e-2;
    }
    return std::vector<Tensor>{Tensor::vector(std::move(vals))};
  };

  ops.push_back({"tanh", one_vec(-2, 2), [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.tanh(v[0]));
                 }});
  ops.push_back({"sigmoid", one_vec(-3, 3), [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.sigmoid(v[0]));
                 }});
  ops.push_back({"relu", away_from_zero, [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.relu(v[0]));
                 }});
  ops.push_back({"cosh", one_vec(-2, 2), [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.cosh(v[0]));
                 }});
  ops.push_back({"sinh", one_vec(-2, 2), [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.sinh(v[0]));
                 }});
  ops.push_back({"norm2",
                 [](std::mt19937_64& rng) {
                   while (true) {
                     std::vector<double> vals = random_values(rng, 5, -2, 2);
                     if (vec_norm(vals) > 0.3) return std::vector<Tensor>{Tensor::vector(vals)};
                   }
                 },
                 [](Tape& t, const std::vector<Var>& v) { return t.norm2(v[0]); }});
  ops.push_back({"divide-by-scalar",
                 [](std::mt19937_64& rng) {
                   std::uniform_real_distribution<double> s(0.5, 2.0);
                   return std::vector<Tensor>{Tensor::vector(random_values(rng, 5, -2, 2)),
                                              Tensor::scalar(s(rng))};
                 },
                 [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.div_scalar(v[0], v[1]));
                 }});
  ops.push_back({"log", one_vec(0.2, 3.0), [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.log(v[0]));
                 }});
  ops.push_back({"square", one_vec(-2, 2), [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.square(v[0]));
                 }});
  ops.push_back({"max-with-zero", away_from_zero, [](Tape& t, const std::vector<Var>& v) {
                   return ad::sum(t, t.max_zero(v[0]));
                 }});
  return ops;
}

}  // namespace

SuiteReport autodiff_suite(std::size_t points_per_op, std::uint64_t seed) {
  SuiteReport report;
  std::mt19937_64 rng(seed);

  for (const FdOp& op : finite_difference_ops()) {
    double worst = 0.0;
    for (std::size_t p = 0; p < points_per_op; ++p) {
      worst = std::max(worst, fd_max_rel_error(op, op.sample(rng)));
    }
    report.results.push_back({"autodiff/fd/" + op.name, worst < 1e-4,
                              "max rel error " + fmt(worst) + " over " +
                                  std::to_string(points_per_op) + " points (tol 1e-4)"});
  }

  // grl: identity forward, exactly negated backward.
  {
    bool forward_ok = true, backward_ok = true, product_ok = true;
    for (std::size_t p = 0; p < points_per_op; ++p) {
      std::vector<double> vals = random_values(rng, 6, -3, 3);
      ad::Tape tape;
      ad::Var x = tape.leaf(ad::Tensor::vector(vals));
      ad::Var g = tape.grl(x);
      const auto& fwd = tape.value(g).data;
      for (std::size_t i = 0; i < vals.size(); ++i) {
        if (std::memcmp(&fwd[i], &vals[i], sizeof(double)) != 0) forward_ok = false;
      }
      tape.backward(ad::sum(tape, g));
      for (double gv : tape.grad(x).data) {
        if (gv != -1.0) backward_ok = false;
      }

      // two-edge graph: d/dx sum(grl(x) * x) = -x + x = 0 exactly
      ad::Tape tape2;
      ad::Var x2 = tape2.leaf(ad::Tensor::vector(vals));
      tape2.backward(ad::sum(tape2, tape2.mul(tape2.grl(x2), x2)));
      for (double gv : tape2.grad(x2).data) {
        if (gv != 0.0) product_ok = false;
      }
    }
    report.results.push_back({"autodiff/grl-forward-identity", forward_ok, "bitwise identity"});
    report.results.push_back({"autodiff/grl-backward-negation", backward_ok,
                              "gradient of sum(grl(x)) is exactly -1"});
    report.results.push_back({"autodiff/grl-two-edge-cancellation", product_ok,
                              "gradient of sum(grl(x)*x) is exactly 0"});
  }

  // Deterministic backward: repeated passes agree bitwise.
  {
    bool deterministic = true;
    std::vector<double> vals = random_values(rng, 8, -2, 2);
    ad::Tape tape;
    ad::Var x = tape.leaf(ad::Tensor::vector(vals));
    ad::Var root = tape.mean(tape.square(tape.tanh(x)));
    tape.backward(root);
    const std::vector<double> first = tape.grad(x).data;
    tape.backward(root);
    const std::vector<double>& second = tape.grad(x).data;
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (std::memcmp(&first[i], &second[i], sizeof(double)) != 0) deterministic = false;
    }
    report.results.push_back({"autodiff/backward-deterministic", deterministic,
                              "two passes on one tape agree bitwise"});
  }

  return report;
}

namespace {

// Small fixture model shared by the theorem checks.
model::ModelConfig tiny_config() {
  model::ModelConfig config;
  config.embed_dim = 6;
  config.feature_dim = 9;
  config.widths = {2, 3, 4};
  config.doc_cap = 10;
  return config;
}

emb::DocumentEmbedding random_document(const model::ModelConfig& config, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < config.doc_cap; ++i) tokens.push_back("tok" + std::to_string(i));
  std::vector<std::string> vocab = tokens;
  emb::EmbeddingTable table = emb::synthetic_table(vocab, config.embed_dim, rng());
  return emb::embed_document(tokens, table, config.doc_cap);
}

double extractor_grad_norm(model::ModelParams& params, const emb::DocumentEmbedding& doc,
                           const std::vector<double>& root, double weight) {
  ad::Tape tape;
  model::ParamBinding binding(tape, params);
  ad::Var feature = model::extract(tape, binding, doc, model::Extractor::kSource);
  ad::Var root_const = tape.leaf(ad::Tensor::vector(root));
  ad::Var deviation = tape.square(tape.norm2(tape.sub(feature, root_const)));
  tape.backward(tape.mul(deviation, ad::scalar_leaf(tape, weight)));

  double s = 0.0;
  for (const auto& [name, grad] : binding.collect_gradients()) {
    if (name.rfind("source_extractor", 0) != 0) continue;
    for (double g : grad.data) s += g * g;
  }
  return std::sqrt(s);
}

CheckResult degree_ratio_check(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const model::ModelConfig config = tiny_config();
  model::ModelParams params = model::init_params(config, 4, 4, 4, 4, rng());
  const emb::DocumentEmbedding doc = random_document(config, rng);

  std::uniform_real_distribution<double> unit(-0.3, 0.3);
  std::vector<double> root(config.feature_dim);
  for (double& x : root) x = unit(rng);

  const std::uint32_t max_degree = 30;
  const std::uint32_t buckets[] = {0, 10, 20, 30};
  const double base = extractor_grad_norm(params, doc, root, 1.0);

  double worst = 0.0;
  std::string detail;
  for (std::uint32_t d : buckets) {
    const double w = static_cast<double>(max_degree - d) / static_cast<double>(max_degree);
    const double weighted = extractor_grad_norm(params, doc, root, w);
    const double ratio = base > 0 ? weighted / base : 0.0;
    worst = std::max(worst, std::abs(ratio - w));
    detail += "d=" + std::to_string(d) + " ratio " + fmt(ratio) + " expected " + fmt(w) + "; ";
  }
  return {"theorem/degree-gradient-ratio", worst < 1e-6, detail + "max gap " + fmt(worst)};
}

CheckResult antipodal_toy_check() {
  // d_S=(1,0), d_T=(-1,0); one ascent step (0.1) on half the squared
  // separation moves d_S to (1.2, 0).
  ad::Tape tape;
  ad::Var s = tape.leaf(ad::Tensor::vector({1.0, 0.0}));
  ad::Var t = tape.leaf(ad::Tensor::vector({-1.0, 0.0}));
  ad::Var half_sep = tape.mul(tape.square(tape.norm2(tape.sub(s, t))), ad::scalar_leaf(tape, 0.5));
  tape.backward(half_sep);

  std::vector<double> updated = tape.value(s).data;
  const auto& grad = tape.grad(s).data;
  for (std::size_t i = 0; i < updated.size(); ++i) updated[i] += 0.1 * grad[i];
  const double norm_after = vec_norm(updated);

  const bool grew = norm_after > 1.0;
  const bool exact = std::abs(norm_after - 1.2) < 1e-12;
  return {"theorem/antipodal-raw-scale-growth", grew && exact,
          "||d_S'|| = " + fmt(norm_after) + " after one ascent step (expected 1.2 > 1)"};
}

CheckResult aligned_norm_check(std::uint64_t seed) {
  eval::SyntheticSpec spec;
  spec.source_users = 12;
  spec.source_items = 10;
  spec.target_users = 10;
  spec.target_items = 8;
  spec.source_per_user = 4;
  spec.target_per_user = 3;
  spec.seed = seed;

  eval::SyntheticPair pair = eval::generate_synthetic(spec);
  train::Corpus corpus;
  data::SplitSpec split;
  split.seed = seed;
  corpus.source = data::split_dataset(pair.source, split);
  corpus.target = data::split_dataset(pair.target, split);
  const data::DomainDataset* all[] = {&corpus.source.train, &corpus.target.train};
  model::ModelConfig config = tiny_config();
  corpus.table = emb::synthetic_table(eval::collect_vocabulary(all), config.embed_dim, seed);
  corpus.finalize();

  train::TrainConfig tc;
  tc.batch_size = 4;
  tc.seed = seed;
  tc.aligned = true;
  obj::LossWeights weights;

  train::TrainState state = train::make_train_state(corpus, config, tc);
  model::DiscInputStats stats;
  for (std::size_t step = 0; step < 200; ++step) {
    train::TrainBatch batch = train::sample_batch(corpus, tc.batch_size, false, state.rng);
    train::train_step(state, corpus, batch, weights, tc, &stats);
  }
  const bool ok = stats.count > 0 && std::abs(stats.min_norm - 1.0) <= 1e-9 &&
                  std::abs(stats.max_norm - 1.0) <= 1e-9;
  return {"theorem/aligned-inputs-unit-norm", ok,
          std::to_string(stats.count) + " discriminator inputs over 200 steps, norms in [" +
              fmt(stats.min_norm) + ", " + fmt(stats.max_norm) + "] (tol 1e-9)"};
}

struct ScaledRun {
  std::vector<double> logits;
  std::map<std::string, ad::Tensor> grads;
};

ScaledRun run_discriminator(model::ModelParams& params, const std::vector<double>& base,
                            double scale, bool aligned) {
  const std::size_t d_f = params.config.feature_dim;
  std::vector<double> scaled(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) scaled[i] = base[i] * scale;

  ad::Tape tape;
  model::ParamBinding binding(tape, params);
  auto quarter = [&](std::size_t q) {
    return tape.leaf(ad::Tensor::vector(std::vector<double>(
        scaled.begin() + q * d_f, scaled.begin() + (q + 1) * d_f)));
  };
  model::FeatureBundle bundle =
      model::make_bundle(tape, quarter(0), quarter(1), quarter(2), quarter(3), quarter(0),
                         quarter(1), quarter(2), quarter(3));
  model::DomainLogits logits = model::discriminate(tape, binding, bundle, aligned);

  ad::Var total = tape.add(tape.add(logits.source, logits.target),
                           tape.add(logits.source_shared, logits.target_shared));
  tape.backward(total);

  ScaledRun run;
  run.logits = {tape.value(logits.source).data[0], tape.value(logits.target).data[0],
                tape.value(logits.source_shared).data[0],
                tape.value(logits.target_shared).data[0]};
  run.grads = binding.collect_gradients();
  return run;
}

CheckResult scale_invariance_check(std::uint64_t seed) {
  const model::ModelConfig config = tiny_config();
  model::ModelParams params = model::init_params(config, 2, 2, 2, 2, seed);
  const std::size_t n = 4 * config.feature_dim;

  // Power-of-two components keep every c * v_i product exact.
  const double pattern[] = {1.0, -0.5, 2.0, 0.25, -1.0, 0.5, -2.0, 4.0};
  std::vector<double> base(n);
  for (std::size_t i = 0; i < n; ++i) base[i] = pattern[i % 8];

  const ScaledRun reference = run_discriminator(params, base, 1.0, true);
  double worst_grad_rel = 0.0;
  bool logits_bitwise = true;
  for (double c : {0.1, 10.0, 1000.0}) {
    const ScaledRun scaled = run_discriminator(params, base, c, true);
    for (std::size_t i = 0; i < 4; ++i) {
      if (std::memcmp(&scaled.logits[i], &reference.logits[i], sizeof(double)) != 0) {
        logits_bitwise = false;
      }
    }
    for (const auto& [name, grad] : reference.grads) {
      if (name.rfind("discriminator", 0) != 0) continue;
      const ad::Tensor& other = scaled.grads.at(name);
      for (std::size_t i = 0; i < grad.size(); ++i) {
        const double denom = std::max({std::abs(grad.data[i]), std::abs(other.data[i]), 1e-300});
        worst_grad_rel = std::max(worst_grad_rel,
                                  std::abs(grad.data[i] - other.data[i]) / denom);
      }
    }
  }

  // The unaligned path must react to the same rescaling.
  const ScaledRun raw_ref = run_discriminator(params, base, 1.0, false);
  double raw_shift = 0.0;
  for (double c : {0.1, 10.0, 1000.0}) {
    const ScaledRun raw = run_discriminator(params, base, c, false);
    for (std::size_t i = 0; i < 4; ++i) {
      raw_shift = std::max(raw_shift, std::abs(raw.logits[i] - raw_ref.logits[i]));
    }
  }

  const bool ok = logits_bitwise && worst_grad_rel <= 1e-10 && raw_shift > 1e-6;
  return {"theorem/discriminator-scale-invariance", ok,
          std::string("aligned logits bitwise-equal: ") + (logits_bitwise ? "yes" : "no") +
              ", max grad rel diff " + fmt(worst_grad_rel) + " (tol 1e-10), unaligned logit shift " +
              fmt(raw_shift) + " (> 1e-6 required)"};
}

}  // namespace

SuiteReport theorem_suite(std::uint64_t seed) {
  SuiteReport report;
  report.results.push_back(degree_ratio_check(seed));
  report.results.push_back(antipodal_toy_check());
  report.results.push_back(aligned_norm_check(seed ^ 0x51ed2700));
  report.results.push_back(scale_invariance_check(seed ^ 0x2545f491));
  return report;
}

SuiteReport run_all(std::uint64_t seed) {
  SuiteReport all;
  for (SuiteReport part :
       {geometry_suite(1000, seed), autodiff_suite(100, seed ^ 0x9e37), theorem_suite(seed ^ 0x79b9)}) {
    all.results.insert(all.results.end(), part.results.begin(), part.results.end());
  }
  return all;
}

}  // namespace head::selfcheck
