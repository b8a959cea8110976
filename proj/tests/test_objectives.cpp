#include <doctest.h>

#include <cmath>

#include "head/errors.hpp"
#include "head/model.hpp"
#include "head/objectives.hpp"

using namespace head;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

obj::NodeFeature make_node(Tape& t, std::uint32_t id, std::uint32_t degree,
                           std::vector<double> specific, std::vector<double> shared) {
  obj::NodeFeature nf;
  nf.node = id;
  nf.degree = degree;
  nf.specific = t.leaf(Tensor::vector(std::move(specific)));
  nf.shared = t.leaf(Tensor::vector(std::move(shared)));
  return nf;
}

double norm_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("hierarchy loss matches a hand-evaluated two-node fixture") {
  // degrees 1 and 3 with max 3: weights 2/3 and 0
  Tape t;
  obj::HierarchyBatch batch;
  const std::vector<double> s1 = {1.0, 0.0}, h1 = {0.5, 0.5};
  const std::vector<double> s2 = {-1.0, 1.0}, h2 = {0.0, -0.5};
  batch.target_users.push_back(make_node(t, 0, 1, s1, h1));
  batch.target_users.push_back(make_node(t, 1, 3, s2, h2));
  batch.max_target_user_degree = 3;

  // hand evaluation: root = mean of (s+h)/2
  std::vector<double> root(2);
  for (std::size_t c = 0; c < 2; ++c) {
    root[c] = 0.5 * (0.5 * (s1[c] + h1[c]) + 0.5 * (s2[c] + h2[c]));
  }
  const double dev1 = norm_sq({s1[0] - root[0], s1[1] - root[1]});
  const double dev2 = norm_sq({s2[0] - root[0], s2[1] - root[1]});

  SUBCASE("degree-normalized") {
    bool clamped = true;
    Var loss = obj::hierarchy_embedding_loss(t, batch, true, &clamped);
    CHECK_FALSE(clamped);
    const double expected = 1.0 / std::sqrt(((2.0 / 3.0) * dev1 + 0.0 * dev2) / 2.0);
    CHECK(t.value(loss).data[0] == doctest::Approx(expected).epsilon(1e-12));

    // the max-degree node contributes nothing, so its gradient is exactly zero
    t.backward(loss);
    for (double g : t.grad(batch.target_users[1].specific).data) CHECK(g == 0.0);
    bool any = false;
    for (double g : t.grad(batch.target_users[0].specific).data) any |= g != 0.0;
    CHECK(any);
  }

  SUBCASE("plain root alignment weighs every node fully") {
    Var loss = obj::hierarchy_embedding_loss(t, batch, false, nullptr);
    const double expected = 1.0 / std::sqrt((dev1 + dev2) / 2.0);
    CHECK(t.value(loss).data[0] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("hierarchy loss weight endpoints") {
  Tape t;
  obj::HierarchyBatch batch;
  // a zero-degree node gets full weight; a max-degree node weight zero
  batch.source_items.push_back(make_node(t, 0, 0, {2.0, 0.0}, {0.0, 0.0}));
  batch.source_items.push_back(make_node(t, 1, 10, {0.0, 2.0}, {0.0, 0.0}));
  batch.max_source_item_degree = 10;

  Var loss = obj::hierarchy_embedding_loss(t, batch, true, nullptr);
  std::vector<double> root = {0.5, 0.5};
  const double dev1 = norm_sq({2.0 - root[0], -root[1]});
  const double expected = 1.0 / std::sqrt((1.0 * dev1) / 2.0);
  CHECK(t.value(loss).data[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("hierarchy loss clamps an all-zero denominator") {
  Tape t;
  obj::HierarchyBatch batch;
  // both nodes sit exactly on the root (identical features)
  batch.target_items.push_back(make_node(t, 0, 5, {1.0, 1.0}, {1.0, 1.0}));
  batch.target_items.push_back(make_node(t, 1, 5, {1.0, 1.0}, {1.0, 1.0}));
  batch.max_target_item_degree = 5;

  bool clamped = false;
  Var loss = obj::hierarchy_embedding_loss(t, batch, true, &clamped);
  CHECK(clamped);
  CHECK(t.value(loss).data[0] == doctest::Approx(1.0 / std::sqrt(1e-8)).epsilon(1e-9));
}

TEST_CASE("hierarchy loss decreases as features spread from the root") {
  auto loss_at_scale = [](double scale) {
    Tape t;
    obj::HierarchyBatch batch;
    batch.target_users.push_back(make_node(t, 0, 1, {scale, 0.0}, {scale, 0.0}));
    batch.target_users.push_back(make_node(t, 1, 2, {-scale, 0.0}, {-scale, 0.0}));
    batch.max_target_user_degree = 3;
    Var loss = obj::hierarchy_embedding_loss(t, batch, true, nullptr);
    return t.value(loss).data[0];
  };
  CHECK(loss_at_scale(2.0) < loss_at_scale(1.0));
  CHECK(loss_at_scale(4.0) < loss_at_scale(2.0));
}

TEST_CASE("degree weight scales the deviation gradient exactly") {
  // per-node deviation term with a detached root: the gradient of the
  // weighted term is weight times the gradient of the unweighted term
  const std::uint32_t max_degree = 30;
  for (std::uint32_t d : {0u, 10u, 20u, 30u}) {
    const double w = static_cast<double>(max_degree - d) / static_cast<double>(max_degree);

    Tape t;
    Var feature = t.leaf(Tensor::vector({1.5, -0.5}));
    Var root = t.leaf(Tensor::vector({0.2, 0.3}));
    Var dev = t.square(t.norm2(t.sub(feature, root)));

    t.backward(t.mul(dev, ad::scalar_leaf(t, w)));
    double weighted = 0.0;
    for (double g : t.grad(feature).data) weighted += g * g;

    t.backward(dev);
    double plain = 0.0;
    for (double g : t.grad(feature).data) plain += g * g;

    const double ratio = std::sqrt(weighted) / std::sqrt(plain);
    CHECK(std::abs(ratio - w) < 1e-6);
  }
}

TEST_CASE("degree weights decrease strictly with degree") {
  const std::uint32_t max_degree = 12;
  double prev = 2.0;
  for (std::uint32_t d = 0; d <= max_degree; ++d) {
    const double w = static_cast<double>(max_degree - d) / max_degree;
    CHECK(w < prev);
    prev = w;
  }
}

TEST_CASE("domain loss values") {
  auto logits = [](Tape& t, double v, std::size_t n) {
    std::vector<Var> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(t.leaf(Tensor::scalar(v)));
    return out;
  };

  SUBCASE("uninformative 0.5 logits give 4 ln 2") {
    Tape t;
    const auto s = logits(t, 0.5, 3), ssh = logits(t, 0.5, 3);
    const auto tg = logits(t, 0.5, 2), tsh = logits(t, 0.5, 2);
    Var loss = obj::domain_loss(t, s, ssh, tg, tsh);
    CHECK(t.value(loss).data[0] == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));
  }

  SUBCASE("confident correct logits drive the loss toward zero") {
    Tape t;
    const auto s = logits(t, 1e-7, 2), ssh = logits(t, 1e-7, 2);
    const auto tg = logits(t, 1.0 - 1e-7, 2), tsh = logits(t, 1.0 - 1e-7, 2);
    Var loss = obj::domain_loss(t, s, ssh, tg, tsh);
    CHECK(t.value(loss).data[0] == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(t.value(loss).data[0] >= 0.0);
  }

  SUBCASE("loss is nonnegative for random logits") {
    Tape t;
    const auto s = logits(t, 0.9, 2), ssh = logits(t, 0.123, 2);
    const auto tg = logits(t, 0.04, 2), tsh = logits(t, 0.77, 2);
    CHECK(t.value(obj::domain_loss(t, s, ssh, tg, tsh)).data[0] >= 0.0);
  }
}

TEST_CASE("ranking loss arithmetic") {
  Tape t;
  auto rank = [&](double pos, double neg, double margin) {
    Var l = obj::ranking_loss(t, t.leaf(Tensor::scalar(pos)), t.leaf(Tensor::scalar(neg)), margin);
    return t.value(l).data[0];
  };
  CHECK(rank(0.2, 0.5, 0.1) == 0.0);  // max(0.04 - 0.25 + 0.1, 0)
  CHECK(rank(0.7, 0.7, 0.1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(rank(1.0, 0.5, 0.1) == doctest::Approx(0.85).epsilon(1e-15));
  CHECK_THROWS_AS(rank(1.0, 1.0, 0.0), UsageError);
}

TEST_CASE("ranking loss corner uses the zero branch") {
  // pos^2 - neg^2 + margin == 0.25 - 1 + 0.75 == 0 exactly
  Tape t;
  Var pos = t.leaf(Tensor::scalar(0.5));
  Var neg = t.leaf(Tensor::scalar(1.0));
  Var loss = obj::ranking_loss(t, pos, neg, 0.75);
  CHECK(t.value(loss).data[0] == 0.0);
  t.backward(loss);
  CHECK(t.grad(pos).data[0] == 0.0);
  CHECK(t.grad(neg).data[0] == 0.0);
}

TEST_CASE("total loss combines the parts linearly") {
  obj::LossWeights weights;
  weights.lambda1 = 0.05;
  weights.lambda2 = 0.05;
  weights.delta = 0.0;

  Tape t;
  Var emb = t.leaf(Tensor::scalar(2.0));
  Var dom = t.leaf(Tensor::scalar(3.0));
  Var pred = t.leaf(Tensor::scalar(1.0));
  Var theta = t.leaf(Tensor::scalar(7.0));
  Var total = obj::total_loss(t, emb, dom, pred, theta, weights);
  CHECK(t.value(total).data[0] == doctest::Approx(1.25).epsilon(1e-15));

  obj::LossWeights pred_only;
  pred_only.lambda1 = 0.0;
  pred_only.lambda2 = 0.0;
  pred_only.delta = 0.0;
  Var total2 = obj::total_loss(t, emb, dom, pred, theta, pred_only);
  CHECK(t.value(total2).data[0] == t.value(pred).data[0]);
}

TEST_CASE("total loss gradient is the weighted sum of the term gradients") {
  obj::LossWeights weights;
  weights.lambda1 = 0.3;
  weights.lambda2 = 0.7;
  weights.delta = 0.2;

  auto build = [](Tape& t, Var x) {
    Var emb = t.mean(t.square(x));
    Var dom = t.mean(t.tanh(x));
    Var pred = t.norm2(x);
    Var theta = t.mean(t.cosh(x));
    return std::tuple{emb, dom, pred, theta};
  };

  const std::vector<double> point = {0.4, -1.1, 0.9};
  Tape t;
  Var x = t.leaf(Tensor::vector(point));
  auto [emb, dom, pred, theta] = build(t, x);
  Var total = obj::total_loss(t, emb, dom, pred, theta, weights);

  std::vector<double> expected(point.size(), 0.0);
  const Var parts[] = {emb, dom, pred, theta};
  const double coef[] = {weights.lambda1, weights.lambda2, 1.0, weights.delta};
  for (int k = 0; k < 4; ++k) {
    t.backward(parts[k]);
    for (std::size_t i = 0; i < point.size(); ++i) {
      expected[i] += coef[k] * t.grad(x).data[i];
    }
  }
  t.backward(total);
  for (std::size_t i = 0; i < point.size(); ++i) {
    CHECK(std::abs(t.grad(x).data[i] - expected[i]) < 1e-8);
  }
}

TEST_CASE("total loss rejects non-finite parts by name") {
  Tape t;
  Var nan = t.log(t.leaf(Tensor::scalar(-1.0)));  // NaN
  Var ok = t.leaf(Tensor::scalar(1.0));
  obj::LossWeights weights;
  try {
    obj::total_loss(t, ok, nan, ok, ok, weights);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.term() == "L_d");
  }
}
