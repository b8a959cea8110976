#include "head/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "head/errors.hpp"

namespace head::eval {

namespace {

struct Topics {
  // topic index -> word list; topics 0..shared-1 are common to both domains.
  std::vector<std::vector<std::string>> words;
};

Topics build_topics(const SyntheticSpec& spec, const std::string& domain_tag) {
  Topics topics;
  for (std::size_t t = 0; t < spec.shared_dims; ++t) {
    std::vector<std::string> list;
    for (std::size_t w = 0; w < spec.words_per_topic; ++w) {
      list.push_back("sh" + std::to_string(t) + "w" + std::to_string(w));
    }
    topics.words.push_back(std::move(list));
  }
  for (std::size_t t = 0; t < spec.domain_dims; ++t) {
    std::vector<std::string> list;
    for (std::size_t w = 0; w < spec.words_per_topic; ++w) {
      list.push_back(domain_tag + std::to_string(t) + "w" + std::to_string(w));
    }
    topics.words.push_back(std::move(list));
  }
  return topics;
}

std::vector<std::vector<double>> latent_matrix(std::size_t n, std::size_t dims,
                                               std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> out(n, std::vector<double>(dims));
  for (auto& row : out) {
    for (double& v : row) v = gauss(rng);
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

data::DomainDataset build_domain(const SyntheticSpec& spec, data::Domain domain,
                                 std::size_t n_users, std::size_t n_items,
                                 std::size_t per_user, const std::string& domain_tag,
                                 std::mt19937_64& rng) {
  const std::size_t dims = spec.shared_dims + spec.domain_dims;
  if (dims == 0) throw UsageError("generate_synthetic: need at least one latent dimension");
  if (n_users == 0 || n_items == 0 || per_user == 0) {
    throw UsageError("generate_synthetic: users, items and per-user counts must be positive");
  }

  const Topics topics = build_topics(spec, domain_tag);
  const auto user_latent = latent_matrix(n_users, dims, rng);
  const auto item_latent = latent_matrix(n_items, dims, rng);
  const double inv_sqrt_dims = 1.0 / std::sqrt(static_cast<double>(dims));

  // Popularity weights: item 0 most popular.
  std::vector<double> popularity(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    popularity[i] = std::pow(static_cast<double>(i + 1), -spec.power_exponent);
  }

  data::DomainDataset ds;
  ds.domain = domain;
  for (std::size_t u = 0; u < n_users; ++u) {
    const std::string key = "u" + std::to_string(u);
    ds.user_index.emplace(key, static_cast<std::uint32_t>(u));
    ds.user_ids.push_back(key);
  }
  for (std::size_t i = 0; i < n_items; ++i) {
    const std::string key = "i" + std::to_string(i);
    ds.item_index.emplace(key, static_cast<std::uint32_t>(i));
    ds.item_ids.push_back(key);
  }

  std::normal_distribution<double> noise(0.0, spec.noise);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> review_len(spec.review_min_tokens,
                                                        spec.review_max_tokens);

  for (std::size_t u = 0; u < n_users; ++u) {
    // Item choice: popularity tilted by the user's affinity for the item.
    std::vector<double> weights(n_items);
    double total = 0.0;
    for (std::size_t i = 0; i < n_items; ++i) {
      const double affinity = dot(user_latent[u], item_latent[i]) * inv_sqrt_dims;
      weights[i] = popularity[i] * std::exp(spec.preference_tilt * affinity);
      total += weights[i];
    }

    std::set<std::size_t> chosen;
    const std::size_t wanted = std::min(per_user, n_items);
    std::size_t attempts = 0;
    while (chosen.size() < wanted && attempts < wanted * 64) {
      ++attempts;
      double ticket = unit(rng) * total;
      std::size_t pick = n_items - 1;
      for (std::size_t i = 0; i < n_items; ++i) {
        if (ticket < weights[i]) {
          pick = i;
          break;
        }
        ticket -= weights[i];
      }
      chosen.insert(pick);
    }
    for (std::size_t i = 0; chosen.size() < wanted && i < n_items; ++i) chosen.insert(i);

    for (std::size_t item : chosen) {
      const double pref = dot(user_latent[u], item_latent[item]) * inv_sqrt_dims + noise(rng);
      int rating = 1;
      for (double threshold : {-1.2, -0.4, 0.4, 1.2}) {
        if (pref > threshold) ++rating;
      }

      // Token topics follow the item's latent profile.
      std::vector<double> topic_w(dims);
      double topic_total = 0.0;
      for (std::size_t t = 0; t < dims; ++t) {
        topic_w[t] = std::exp(item_latent[item][t]);
        topic_total += topic_w[t];
      }

      data::Interaction rec;
      rec.user = static_cast<std::uint32_t>(u);
      rec.item = static_cast<std::uint32_t>(item);
      rec.rating = rating;
      rec.domain = domain;
      const std::size_t len = review_len(rng);
      rec.tokens.reserve(len);
      for (std::size_t k = 0; k < len; ++k) {
        double ticket = unit(rng) * topic_total;
        std::size_t topic = dims - 1;
        for (std::size_t t = 0; t < dims; ++t) {
          if (ticket < topic_w[t]) {
            topic = t;
            break;
          }
          ticket -= topic_w[t];
        }
        std::uniform_int_distribution<std::size_t> word(0, topics.words[topic].size() - 1);
        rec.tokens.push_back(topics.words[topic][word(rng)]);
      }
      ds.interactions.push_back(std::move(rec));
    }
  }

  ds.rebuild_node_lists();
  ds.recompute_degrees();
  return ds;
}

}  // namespace

SyntheticPair generate_synthetic(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  SyntheticPair pair;
  pair.source = build_domain(spec, data::Domain::kSource, spec.source_users, spec.source_items,
                             spec.source_per_user, "src", rng);
  pair.target = build_domain(spec, data::Domain::kTarget, spec.target_users, spec.target_items,
                             spec.target_per_user, "tgt", rng);
  return pair;
}

std::vector<std::string> collect_vocabulary(
    std::span<const data::DomainDataset* const> datasets) {
  std::set<std::string> vocab;
  for (const data::DomainDataset* ds : datasets) {
    for (const data::Interaction& it : ds->interactions) {
      vocab.insert(it.tokens.begin(), it.tokens.end());
    }
  }
  return {vocab.begin(), vocab.end()};
}

}  // namespace head::eval
