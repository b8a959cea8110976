#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "head/data.hpp"

namespace head::eval {

// Desk-scale benchmark pair: two review domains whose users/items carry
// latent preference vectors over a shared subspace plus a domain-specific
// one. Item popularity follows a power law; review text is sampled from
// per-item topic word distributions so the text carries the preference
// signal.
struct SyntheticSpec {
  std::size_t source_users = 80;
  std::size_t source_items = 50;
  std::size_t target_users = 40;
  std::size_t target_items = 40;
  std::size_t source_per_user = 10;  // interactions per source user
  std::size_t target_per_user = 5;
  double power_exponent = 2.0;       // item popularity ~ rank^(-exponent)
  std::size_t shared_dims = 4;       // preference dims common to both domains
  std::size_t domain_dims = 4;       // preference dims private to each domain
  double preference_tilt = 0.75;     // how strongly preference skews item choice
  double noise = 0.1;                // rating noise
  std::size_t review_min_tokens = 8;
  std::size_t review_max_tokens = 20;
  std::size_t words_per_topic = 24;
  std::uint64_t seed = 1;
};

struct SyntheticPair {
  data::DomainDataset source;
  data::DomainDataset target;
};

SyntheticPair generate_synthetic(const SyntheticSpec& spec);

// Sorted unique tokens over the training reviews of the given datasets.
std::vector<std::string> collect_vocabulary(std::span<const data::DomainDataset* const> datasets);

}  // namespace head::eval
