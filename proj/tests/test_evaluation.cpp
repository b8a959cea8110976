#include <doctest.h>

#include <cmath>
#include <random>

#include "head/errors.hpp"
#include "head/evaluation.hpp"
#include "head/selfcheck.hpp"
#include "head/synthetic.hpp"
#include "support.hpp"

using namespace head;

namespace {

eval::RankedList list_with_rank(std::size_t rank, std::size_t length) {
  // candidate ids 0..length-1 with positive at `rank` (1-based)
  std::vector<std::pair<std::uint32_t, double>> scored;
  for (std::size_t i = 0; i < length; ++i) {
    scored.emplace_back(static_cast<std::uint32_t>(i), static_cast<double>(i));
  }
  return eval::make_ranked_list(scored, static_cast<std::uint32_t>(rank - 1));
}

}  // namespace

TEST_CASE("ndcg and hr at k") {
  CHECK(eval::ndcg_at_k(list_with_rank(1, 20)) == doctest::Approx(1.0));
  CHECK(eval::ndcg_at_k(list_with_rank(3, 20)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(eval::ndcg_at_k(list_with_rank(11, 20)) == 0.0);
  CHECK(eval::hr_at_k(list_with_rank(5, 20)) == 1.0);
  CHECK(eval::hr_at_k(list_with_rank(11, 20)) == 0.0);
  CHECK(eval::hr_at_k(list_with_rank(10, 20)) == 1.0);

  const double mean = (eval::hr_at_k(list_with_rank(1, 20)) +
                       eval::hr_at_k(list_with_rank(11, 20)) +
                       eval::hr_at_k(list_with_rank(4, 20))) /
                      3.0;
  CHECK(mean == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("ranked lists break ties by item id") {
  std::vector<std::pair<std::uint32_t, double>> scored = {
      {7, 0.5}, {3, 0.5}, {9, 0.1}, {1, 0.9}};
  const auto list = eval::make_ranked_list(scored, 7);
  CHECK(list.items == std::vector<std::uint32_t>{9, 3, 7, 1});
  CHECK(list.positive_rank == 3);

  CHECK_THROWS_AS(eval::make_ranked_list({}, 0), UsageError);
  std::vector<std::pair<std::uint32_t, double>> missing = {{1, 0.2}};
  CHECK_THROWS_AS(eval::make_ranked_list(missing, 2), UsageError);
}

TEST_CASE("metrics are invariant under monotone score transforms") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<std::uint32_t, double>> scored, transformed;
    for (std::uint32_t i = 0; i < 25; ++i) {
      const double s = unit(rng);
      scored.emplace_back(i, s);
      transformed.emplace_back(i, std::exp(2.0 * s) - 0.5);
    }
    const auto a = eval::make_ranked_list(scored, 12);
    const auto b = eval::make_ranked_list(transformed, 12);
    CHECK(eval::ndcg_at_k(a) == eval::ndcg_at_k(b));
    CHECK(eval::hr_at_k(a) == eval::hr_at_k(b));
  }
}

TEST_CASE("spearman correlation") {
  const std::vector<double> a = {1, 2, 3, 4, 5};
  const std::vector<double> inc = {10, 20, 30, 40, 50};
  const std::vector<double> dec = {5, 4, 3, 2, 1};
  CHECK(eval::spearman(a, inc) == doctest::Approx(1.0));
  CHECK(eval::spearman(a, dec) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(eval::spearman(a, std::vector<double>{1.0}), UsageError);
}

TEST_CASE("hierarchy fidelity detects a perfect degree-radius hierarchy") {
  // radii exactly inverse-ordered to degree -> rho = 1
  std::vector<std::vector<double>> features;
  std::vector<std::uint32_t> degrees;
  for (std::uint32_t i = 0; i < 40; ++i) {
    degrees.push_back(i + 1);
    const double radius_driver = 2.0 - 0.04 * i;  // higher degree, smaller norm
    features.push_back({radius_driver, 0.0});
  }
  const auto result = eval::hierarchy_fidelity(features, degrees);
  CHECK_FALSE(result.degenerate);
  CHECK(result.rho == doctest::Approx(1.0));

  SUBCASE("two items give +-1") {
    const std::vector<std::vector<double>> two = {{1.0, 0.0}, {0.2, 0.0}};
    const std::vector<std::uint32_t> ds = {1, 5};
    CHECK(eval::hierarchy_fidelity(two, ds).rho == doctest::Approx(1.0));
  }

  SUBCASE("constant radii are degenerate") {
    const std::vector<std::vector<double>> flat = {{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}};
    const std::vector<std::uint32_t> ds = {1, 2, 3};
    const auto r = eval::hierarchy_fidelity(flat, ds);
    CHECK(r.degenerate);
    CHECK(r.rho == 0.0);
  }
}

TEST_CASE("hierarchy fidelity is near zero for random radii") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> unit(0.1, 2.5);
  std::vector<std::vector<double>> features;
  std::vector<std::uint32_t> degrees;
  for (std::uint32_t i = 0; i < 1000; ++i) {
    degrees.push_back(1 + i % 50);
    features.push_back({unit(rng), unit(rng)});
  }
  const auto result = eval::hierarchy_fidelity(features, degrees);
  CHECK(std::abs(result.rho) < 0.1);
}

TEST_CASE("synthetic generation is deterministic") {
  eval::SyntheticSpec spec;
  spec.seed = 77;
  const auto a = eval::generate_synthetic(spec);
  const auto b = eval::generate_synthetic(spec);
  REQUIRE(a.target.interactions.size() == b.target.interactions.size());
  for (std::size_t i = 0; i < a.target.interactions.size(); ++i) {
    CHECK(a.target.interactions[i].user == b.target.interactions[i].user);
    CHECK(a.target.interactions[i].item == b.target.interactions[i].item);
    CHECK(a.target.interactions[i].rating == b.target.interactions[i].rating);
    CHECK(a.target.interactions[i].tokens == b.target.interactions[i].tokens);
  }
  CHECK(a.source.interactions.size() == b.source.interactions.size());

  std::size_t user_sum = 0, item_sum = 0;
  for (auto d : a.target.user_degree) user_sum += d;
  for (auto d : a.target.item_degree) item_sum += d;
  CHECK(user_sum == a.target.interactions.size());
  CHECK(item_sum == a.target.interactions.size());
}

TEST_CASE("synthetic item degrees follow the configured power law") {
  // One interaction per user and no preference tilt: item choice is then an
  // exact multinomial over the exponent-2.0 weights, so the empirical degree
  // distribution must match the law up to sampling noise (KS bound).
  eval::SyntheticSpec spec;
  spec.source_users = 20000;
  spec.source_items = 50;
  spec.source_per_user = 1;
  spec.target_users = 4;
  spec.target_items = 4;
  spec.target_per_user = 2;
  spec.power_exponent = 2.0;
  spec.preference_tilt = 0.0;
  spec.review_min_tokens = 2;
  spec.review_max_tokens = 4;
  spec.seed = 5;
  const auto pair = eval::generate_synthetic(spec);
  REQUIRE(pair.source.interactions.size() == spec.source_users);

  std::vector<double> weights(spec.source_items);
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = std::pow(static_cast<double>(i + 1), -2.0);
    total += weights[i];
  }
  double expected_cdf = 0.0, empirical_cdf = 0.0, ks = 0.0;
  const double n = static_cast<double>(pair.source.interactions.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    expected_cdf += weights[i] / total;
    empirical_cdf += pair.source.item_degree[i] / n;
    ks = std::max(ks, std::abs(expected_cdf - empirical_cdf));
  }
  CHECK(ks < 0.05);
  // the head of the distribution dominates
  CHECK(pair.source.item_degree[0] > pair.source.item_degree[spec.source_items - 1]);
}

TEST_CASE("evaluate_ranking scores a planted perfect model") {
  // With one candidate pool and a score oracle the rank of the positive is
  // exact; here we check plumbing end to end on a real model.
  train::Corpus corpus = testsupport::tiny_corpus(31);
  model::ModelParams params = model::init_params(
      testsupport::tiny_model_config(), corpus.source.train.num_users(),
      corpus.source.train.num_items(), corpus.target.train.num_users(),
      corpus.target.train.num_items(), 31);

  const auto metrics = eval::evaluate_ranking(params, corpus.target.train, corpus.target.valid,
                                              corpus.target_known_items, corpus.table,
                                              data::Domain::kTarget, 10, 8, 99);
  CHECK(metrics.lists == corpus.target.valid.interactions.size());
  CHECK(metrics.ndcg >= 0.0);
  CHECK(metrics.ndcg <= 1.0);
  CHECK(metrics.hr >= 0.0);
  CHECK(metrics.hr <= 1.0);

  // deterministic
  const auto again = eval::evaluate_ranking(params, corpus.target.train, corpus.target.valid,
                                            corpus.target_known_items, corpus.table,
                                            data::Domain::kTarget, 10, 8, 99);
  CHECK(metrics.ndcg == again.ndcg);
  CHECK(metrics.hr == again.hr);
}

TEST_CASE("discriminator bce is finite and computable") {
  train::Corpus corpus = testsupport::tiny_corpus(37);
  model::ModelParams params = model::init_params(
      testsupport::tiny_model_config(), corpus.source.train.num_users(),
      corpus.source.train.num_items(), corpus.target.train.num_users(),
      corpus.target.train.num_items(), 37);
  const double bce = eval::discriminator_bce(params, corpus.source.train, corpus.target.train,
                                             corpus.table, 16, true);
  CHECK(std::isfinite(bce));
  CHECK(bce >= 0.0);
}

TEST_CASE("degree radius rows stay inside the ball") {
  train::Corpus corpus = testsupport::tiny_corpus(41);
  model::ModelParams params = model::init_params(
      testsupport::tiny_model_config(), corpus.source.train.num_users(),
      corpus.source.train.num_items(), corpus.target.train.num_users(),
      corpus.target.train.num_items(), 41);

  const auto rows = eval::degree_radius_rows(params, corpus.target.train, corpus.table,
                                             data::Domain::kTarget, 1000, 7);
  CHECK(rows.size() == corpus.target.train.num_items());
  for (const auto& row : rows) {
    CHECK(row.radius >= 0.0);
    CHECK(row.radius < 1.0);
    CHECK(std::sqrt(row.x * row.x + row.y * row.y) < 1.0);
  }

  // seeded sampling: identical row sets across reruns
  const auto again = eval::degree_radius_rows(params, corpus.target.train, corpus.table,
                                              data::Domain::kTarget, 1000, 7);
  REQUIRE(rows.size() == again.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].item == again[i].item);
    CHECK(rows[i].radius == again[i].radius);
    CHECK(rows[i].x == again[i].x);
  }

  // sampling cap respected
  const auto capped = eval::degree_radius_rows(params, corpus.target.train, corpus.table,
                                               data::Domain::kTarget, 5, 7);
  CHECK(capped.size() == 5);
}

TEST_CASE("self-check suites pass on a healthy build") {
  CHECK(selfcheck::geometry_suite(200, 3).all_passed());
  CHECK(selfcheck::autodiff_suite(10, 3).all_passed());
  CHECK(selfcheck::theorem_suite(3).all_passed());
}

TEST_CASE("an injected grl sign bug is caught by the autodiff suite") {
  ad::testing::grl_backward_sign = 1.0;
  const auto report = selfcheck::autodiff_suite(5, 3);
  ad::testing::grl_backward_sign = -1.0;

  bool grl_failed = false;
  for (const auto& result : report.results) {
    if (result.name.find("grl") != std::string::npos && !result.passed) grl_failed = true;
  }
  CHECK(grl_failed);
  CHECK_FALSE(report.all_passed());
}
