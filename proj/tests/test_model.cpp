#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "head/embedding.hpp"
#include "head/errors.hpp"
#include "head/geometry.hpp"
#include "head/model.hpp"

using namespace head;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

model::ModelConfig small_config() {
  model::ModelConfig config;
  config.embed_dim = 3;
  config.feature_dim = 4;
  config.widths = {2, 3};
  config.doc_cap = 6;
  return config;
}

void zero_tensor(ad::Tensor& t) { std::fill(t.data.begin(), t.data.end(), 0.0); }

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

emb::EmbeddingTable tiny_table() {
  return emb::synthetic_table({"a", "b", "c", "d"}, 3, 17);
}

}  // namespace

TEST_CASE("model config validation") {
  model::ModelConfig config = small_config();
  config.feature_dim = 5;  // not a multiple of two widths
  CHECK_THROWS_AS(config.validate(), UsageError);
  config = small_config();
  config.curvature = 2.0;
  CHECK_THROWS_AS(config.validate(), UsageError);
}

TEST_CASE("init_params is seeded and shaped") {
  const model::ModelConfig config = small_config();
  const auto p1 = model::init_params(config, 5, 6, 7, 8, 42);
  const auto p2 = model::init_params(config, 5, 6, 7, 8, 42);
  const auto p3 = model::init_params(config, 5, 6, 7, 8, 43);

  CHECK(p1.source_user_latent.shape == std::vector<std::size_t>{5, 4});
  CHECK(p1.target_item_latent.shape == std::vector<std::size_t>{8, 4});
  CHECK(p1.discriminator.w1.shape == std::vector<std::size_t>{4, 8});
  CHECK(p1.gate.w1.shape == std::vector<std::size_t>{4, 10});  // 2*(d_f+1)

  bool identical = true, differs = false;
  model::for_each_param(p1, [&](const std::string& name, const ad::Tensor& t) {
    const ad::Tensor* o2 = nullptr;
    const ad::Tensor* o3 = nullptr;
    model::for_each_param(p2, [&](const std::string& n, const ad::Tensor& u) {
      if (n == name) o2 = &u;
    });
    model::for_each_param(p3, [&](const std::string& n, const ad::Tensor& u) {
      if (n == name) o3 = &u;
    });
    if (t.data != o2->data) identical = false;
    if (t.data != o3->data) differs = true;
  });
  CHECK(identical);
  CHECK(differs);
}

TEST_CASE("extract pools every width to feature_dim") {
  const model::ModelConfig config = small_config();
  model::ModelParams params = model::init_params(config, 2, 2, 2, 2, 5);
  const auto table = tiny_table();

  for (std::size_t n_tokens : {0u, 2u, 6u, 40u}) {
    std::vector<std::string> tokens(n_tokens, "a");
    const auto doc = emb::embed_document(tokens, table, config.doc_cap);
    const auto feature = model::extract_value(params, doc, model::Extractor::kShared);
    CHECK(feature.size() == config.feature_dim);
  }
}

TEST_CASE("extract of an all-origin document is the bias response") {
  const model::ModelConfig config = small_config();
  model::ModelParams params = model::init_params(config, 2, 2, 2, 2, 5);
  // distinct biases per width so the expected output is visible
  params.source_extractor.biases[0].data = {0.25, -0.5};
  params.source_extractor.biases[1].data = {1.0, 0.0};

  const auto table = tiny_table();
  const auto doc = emb::embed_document({"zzz", "yyy"}, table, config.doc_cap);  // all OOV
  const auto feature = model::extract_value(params, doc, model::Extractor::kSource);

  REQUIRE(feature.size() == 4);
  CHECK(feature[0] == doctest::Approx(std::tanh(0.25)).epsilon(1e-14));
  CHECK(feature[1] == doctest::Approx(std::tanh(-0.5)).epsilon(1e-14));
  CHECK(feature[2] == doctest::Approx(std::tanh(1.0)).epsilon(1e-14));
  CHECK(feature[3] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("extract matches a hand conv oracle on a single-filter fixture") {
  model::ModelConfig config;
  config.embed_dim = 2;
  config.feature_dim = 1;
  config.widths = {3};
  config.doc_cap = 5;
  model::ModelParams params = model::init_params(config, 1, 1, 1, 1, 9);
  params.shared_extractor.filters[0].data = {0.5, -1.0, 0.25, 0.75, 1.5, -0.5};
  params.shared_extractor.biases[0].data = {0.2};

  emb::EmbeddingTable table;
  table.dim = 2;
  table.geometry = emb::TableGeometry::kEuclidean;
  table.vocabulary = {{"t0", 0}, {"t1", 1}, {"t2", 2}, {"t3", 3}, {"t4", 4}};
  table.matrix = {0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7, 0.8, -0.9, 1.0};

  const auto doc = emb::embed_document({"t0", "t1", "t2", "t3", "t4"}, table, 5);
  const auto feature = model::extract_value(params, doc, model::Extractor::kShared);

  // brute-force: rows recovered by log map, slide the window, tanh, max
  double best = -1e300;
  for (std::size_t pos = 0; pos + 3 <= 5; ++pos) {
    double s = 0.2;
    for (std::size_t j = 0; j < 3; ++j) {
      const geo::TangentVec row = geo::log_origin(doc.hyperbolic[pos + j]);
      for (std::size_t c = 0; c < 2; ++c) {
        s += params.shared_extractor.filters[0].data[j * 2 + c] * row.coords[c + 1];
      }
    }
    best = std::max(best, std::tanh(s));
  }
  REQUIRE(feature.size() == 1);
  CHECK(feature[0] == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("scale_align normalizes and flags degenerate input") {
  Tape t;
  Var v = t.leaf(Tensor::vector({3.0, 4.0}));  // norm 5
  bool degenerate = true;
  Var unit = model::scale_align(t, v, &degenerate);
  CHECK_FALSE(degenerate);
  CHECK(vec_norm(t.value(unit).data) == doctest::Approx(1.0).epsilon(1e-14));

  Var already = t.leaf(Tensor::vector({0.6, -0.8}));
  Var again = model::scale_align(t, already);
  CHECK(t.value(again).data[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(t.value(again).data[1] == doctest::Approx(-0.8).epsilon(1e-14));

  Var zero = t.leaf(Tensor::vector({0.0, 1e-15}));
  Var passed = model::scale_align(t, zero, &degenerate);
  CHECK(degenerate);
  CHECK(t.value(passed).data == t.value(zero).data);
}

TEST_CASE("scale_align is invariant under positive rescaling") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  std::uniform_real_distribution<double> scale_dist(1e-3, 1e3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> vals(6);
    for (double& x : vals) x = unit(rng);
    if (vec_norm(vals) < 0.1) continue;
    const double c = scale_dist(rng);
    std::vector<double> scaled(6);
    for (std::size_t i = 0; i < 6; ++i) scaled[i] = c * vals[i];

    Tape t;
    const std::vector<double> a = t.value(model::scale_align(t, t.leaf(Tensor::vector(vals)))).data;
    const std::vector<double> b =
        t.value(model::scale_align(t, t.leaf(Tensor::vector(scaled)))).data;
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}

TEST_CASE("gradients flow through scale_align") {
  Tape t;
  Var v = t.leaf(Tensor::vector({1.0, 2.0, -1.5}));
  t.backward(ad::sum(t, model::scale_align(t, v)));
  bool any_nonzero = false;
  for (double g : t.grad(v).data) {
    if (g != 0.0) any_nonzero = true;
  }
  CHECK(any_nonzero);
}

TEST_CASE("discriminate with zero weights yields 0.5 logits") {
  const model::ModelConfig config = small_config();
  model::ModelParams params = model::init_params(config, 2, 2, 2, 2, 5);
  zero_tensor(params.discriminator.w1);
  zero_tensor(params.discriminator.b1);
  zero_tensor(params.discriminator.w2);
  zero_tensor(params.discriminator.b2);

  Tape t;
  model::ParamBinding binding(t, params);
  auto feature = [&](double base) {
    return t.leaf(Tensor::vector({base, base / 2, -base, base / 4}));
  };
  const auto bundle = model::make_bundle(t, feature(1), feature(2), feature(3), feature(4),
                                         feature(5), feature(6), feature(7), feature(8));
  const auto logits = model::discriminate(t, binding, bundle, true);
  for (Var v : {logits.source, logits.target, logits.source_shared, logits.target_shared}) {
    CHECK(t.value(v).data[0] == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("aligned discriminator logits are bitwise stable when features double") {
  const model::ModelConfig config = small_config();
  model::ModelParams params = model::init_params(config, 2, 2, 2, 2, 31);

  auto run = [&](double scale) {
    Tape t;
    model::ParamBinding binding(t, params);
    auto feature = [&](std::size_t salt) {
      const double pattern[] = {1.0, -0.5, 2.0, 0.25};
      std::vector<double> vals(config.feature_dim);
      for (std::size_t i = 0; i < vals.size(); ++i) {
        vals[i] = scale * pattern[(i + salt) % 4];
      }
      return t.leaf(Tensor::vector(vals));
    };
    const auto bundle = model::make_bundle(t, feature(0), feature(1), feature(2), feature(3),
                                           feature(1), feature(2), feature(3), feature(0));
    const auto logits = model::discriminate(t, binding, bundle, true);
    return std::vector<double>{
        t.value(logits.source).data[0], t.value(logits.target).data[0],
        t.value(logits.source_shared).data[0], t.value(logits.target_shared).data[0]};
  };

  const auto base = run(1.0);
  const auto doubled = run(2.0);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::memcmp(&base[i], &doubled[i], sizeof(double)) == 0);
  }
}

TEST_CASE("grl negates gradients into the features but not into the discriminator") {
  const model::ModelConfig config = small_config();
  model::ModelParams params = model::init_params(config, 2, 2, 2, 2, 13);

  struct Run {
    std::vector<double> feature_grad;
    std::vector<double> w1_grad;
  };
  auto run = [&]() {
    Tape t;
    model::ParamBinding binding(t, params);
    auto feature = [&](double base) {
      std::vector<double> vals(config.feature_dim);
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = base + 0.3 * i;
      return t.leaf(Tensor::vector(vals));
    };
    Var shared_user = feature(0.7);
    const auto bundle = model::make_bundle(t, feature(1), feature(2), shared_user, feature(4),
                                           feature(5), feature(6), feature(7), feature(8));
    const auto logits = model::discriminate(t, binding, bundle, true);
    t.backward(logits.source_shared);
    Run r;
    r.feature_grad = t.grad(shared_user).data;
    r.w1_grad = binding.collect_gradients().at("discriminator.w1").data;
    return r;
  };

  const Run production = run();  // grl sign -1
  ad::testing::grl_backward_sign = 1.0;
  const Run identity = run();
  ad::testing::grl_backward_sign = -1.0;

  bool any = false;
  for (std::size_t i = 0; i < production.feature_grad.size(); ++i) {
    CHECK(production.feature_grad[i] == -identity.feature_grad[i]);
    if (production.feature_grad[i] != 0.0) any = true;
  }
  CHECK(any);
  CHECK(production.w1_grad == identity.w1_grad);
}

TEST_CASE("aligned discriminator inputs have unit norm") {
  const model::ModelConfig config = small_config();
  model::ModelParams params = model::init_params(config, 2, 2, 2, 2, 37);
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unit(-3.0, 3.0);

  model::DiscInputStats stats;
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    model::ParamBinding binding(t, params);
    auto feature = [&]() {
      std::vector<double> vals(config.feature_dim);
      for (double& x : vals) x = unit(rng);
      return t.leaf(Tensor::vector(vals));
    };
    const auto bundle = model::make_bundle(t, feature(), feature(), feature(), feature(),
                                           feature(), feature(), feature(), feature());
    model::discriminate(t, binding, bundle, true, &stats);
  }
  CHECK(stats.count == 200);
  CHECK(std::abs(stats.min_norm - 1.0) <= 1e-9);
  CHECK(std::abs(stats.max_norm - 1.0) <= 1e-9);
}

TEST_CASE("taped lift and distance match the geometry module") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> unit(-1.5, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> u = {unit(rng), unit(rng), unit(rng)};
    std::vector<double> v = {unit(rng), unit(rng), unit(rng)};

    Tape t;
    Var ut = t.leaf(Tensor::vector(u));
    Var vt = t.leaf(Tensor::vector(v));
    const auto& lifted = t.value(model::lift_to_hyperboloid(t, ut)).data;
    const geo::LorentzVec expect_lift = geo::exp_origin(geo::tangent_at_origin(u));
    for (std::size_t i = 0; i < lifted.size(); ++i) {
      CHECK(lifted[i] == doctest::Approx(expect_lift.coords[i]).epsilon(1e-12));
    }

    const double taped = t.value(model::lorentz_distance_tangents(t, ut, vt)).data[0];
    const double oracle = geo::lorentz_dist(geo::exp_origin(geo::tangent_at_origin(u)),
                                            geo::exp_origin(geo::tangent_at_origin(v)));
    CHECK(taped == doctest::Approx(oracle).epsilon(1e-9));
  }

  // degenerate branches
  Tape t;
  Var zero = t.leaf(Tensor::vector({0.0, 0.0}));
  Var w = t.leaf(Tensor::vector({0.7, -0.2}));
  const double from_origin = t.value(model::lorentz_distance_tangents(t, zero, w)).data[0];
  CHECK(from_origin == doctest::Approx(vec_norm({0.7, -0.2})).epsilon(1e-12));
  CHECK(t.value(model::lorentz_distance_tangents(t, zero, zero)).data[0] == 0.0);
}

TEST_CASE("score matches its contract") {
  model::ModelConfig config;
  config.embed_dim = 2;
  config.feature_dim = 2;
  config.widths = {1};
  config.doc_cap = 2;
  model::ModelParams params = model::init_params(config, 1, 1, 1, 1, 3);
  zero_tensor(params.source_user_latent);
  zero_tensor(params.source_item_latent);
  // freeze the gate at sigmoid(0) = 0.5
  zero_tensor(params.gate.w2);
  zero_tensor(params.gate.b2);

  auto run_score = [&](std::vector<double> su, std::vector<double> si) {
    Tape t;
    model::ParamBinding binding(t, params);
    Var specific_u = t.leaf(Tensor::vector(su));
    Var shared_u = t.leaf(Tensor::vector({0.0, 0.0}));
    Var specific_i = t.leaf(Tensor::vector(si));
    Var shared_i = t.leaf(Tensor::vector({0.0, 0.0}));
    const auto parts = model::score_on_tape(t, binding, specific_u, shared_u, specific_i,
                                            shared_i, model::LatentTable::kSourceUser, 0,
                                            model::LatentTable::kSourceItem, 0);
    return std::tuple{t.value(parts.score).data[0], t.value(parts.gate).data[0],
                      t.value(parts.distance).data[0]};
  };

  SUBCASE("identical aggregates score zero") {
    const auto [score, gate, dist] = run_score({2.0, 0.0}, {2.0, 0.0});
    CHECK(gate == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(dist) < 1e-12);
    CHECK(std::abs(score) < 1e-12);
  }

  SUBCASE("gate 0.5 halves the geodesic distance") {
    // (specific + shared)/2 = (1,0) and (0,1)
    const auto [score, gate, dist] = run_score({2.0, 0.0}, {0.0, 2.0});
    const double oracle = geo::lorentz_dist(geo::exp_origin(geo::tangent_at_origin({1.0, 0.0})),
                                            geo::exp_origin(geo::tangent_at_origin({0.0, 1.0})));
    CHECK(dist == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(gate == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(score == doctest::Approx(0.5 * oracle).epsilon(1e-9));
  }

  SUBCASE("gate 1 returns the raw distance") {
    params.gate.b2.data[0] = 50.0;  // sigmoid(50) rounds to 1.0
    const auto [score, gate, dist] = run_score({2.0, 0.0}, {0.0, 2.0});
    CHECK(gate == 1.0);
    CHECK(score == dist);
  }

  SUBCASE("scores are nonnegative") {
    std::mt19937_64 rng(93);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
      const auto [score, gate, dist] =
          run_score({unit(rng), unit(rng)}, {unit(rng), unit(rng)});
      CHECK(score >= 0.0);
      CHECK(gate >= 0.0);
      CHECK(gate <= 1.0);
      CHECK(dist >= 0.0);
    }
  }
}

TEST_CASE("param binding scatters latent row gradients") {
  const model::ModelConfig config = small_config();
  model::ModelParams params = model::init_params(config, 4, 4, 4, 4, 11);

  Tape t;
  model::ParamBinding binding(t, params);
  Var row = binding.latent_row(model::LatentTable::kTargetUser, 2);
  Var same = binding.latent_row(model::LatentTable::kTargetUser, 2);
  CHECK(row.id() == same.id());  // cached per tape

  t.backward(t.square(t.norm2(row)));
  const auto grads = binding.collect_gradients();
  const ad::Tensor& table_grad = grads.at("target_user_latent");
  const std::size_t d = config.feature_dim;
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double expect = r == 2 ? 2.0 * params.target_user_latent.data[r * d + c] : 0.0;
      CHECK(table_grad.data[r * d + c] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  // untouched parameters come back as zeros
  const ad::Tensor& w1 = grads.at("gate.w1");
  for (double g : w1.data) CHECK(g == 0.0);
}
