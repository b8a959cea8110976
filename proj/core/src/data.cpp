#include "head/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "head/errors.hpp"

namespace head::data {

namespace {

using nlohmann::json;

std::uint32_t intern(const std::string& key, std::unordered_map<std::string, std::uint32_t>& index,
                     std::vector<std::string>& ids) {
  auto it = index.find(key);
  if (it != index.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(ids.size());
  index.emplace(key, id);
  ids.push_back(key);
  return id;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isalnum(uc)) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void DomainDataset::rebuild_node_lists() {
  user_interactions.assign(num_users(), {});
  item_interactions.assign(num_items(), {});
  user_items.assign(num_users(), {});
  for (std::uint32_t idx = 0; idx < interactions.size(); ++idx) {
    const Interaction& it = interactions[idx];
    user_interactions[it.user].push_back(idx);
    item_interactions[it.item].push_back(idx);
    user_items[it.user].push_back(it.item);
  }
  for (auto& items : user_items) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
}

void DomainDataset::recompute_degrees() {
  user_degree.assign(num_users(), 0);
  item_degree.assign(num_items(), 0);
  for (const Interaction& it : interactions) {
    ++user_degree[it.user];
    ++item_degree[it.item];
  }
  max_user_degree = user_degree.empty() ? 0 : *std::max_element(user_degree.begin(), user_degree.end());
  max_item_degree = item_degree.empty() ? 0 : *std::max_element(item_degree.begin(), item_degree.end());
}

DomainDataset load_reviews(const std::string& path, Domain domain, const RecordKeys& keys,
                           LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw IoError("load_reviews: cannot open " + path);

  DomainDataset ds;
  ds.domain = domain;
  LoadReport local;

  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (record.is_discarded() || !record.is_object()) {
      ++local.skipped;
      continue;
    }
    if (!record.contains(keys.user) || !record.contains(keys.item) ||
        !record.contains(keys.rating) || !record.contains(keys.review)) {
      ++local.skipped;
      continue;
    }
    const json& ju = record[keys.user];
    const json& ji = record[keys.item];
    const json& jr = record[keys.rating];
    const json& jt = record[keys.review];
    if (!ju.is_string() || !ji.is_string() || !jr.is_number() || !jt.is_string()) {
      ++local.skipped;
      continue;
    }
    const double raw_rating = jr.get<double>();
    const int rating = static_cast<int>(std::lround(raw_rating));
    if (rating < 1 || rating > 5 || std::abs(raw_rating - rating) > 1e-9) {
      ++local.skipped;
      continue;
    }

    Interaction it;
    it.user = intern(ju.get<std::string>(), ds.user_index, ds.user_ids);
    it.item = intern(ji.get<std::string>(), ds.item_index, ds.item_ids);
    it.rating = rating;
    it.tokens = tokenize(jt.get<std::string>());
    it.domain = domain;
    ds.interactions.push_back(std::move(it));
    ++local.accepted;
  }

  if (report) *report = local;
  if (local.accepted == 0) {
    throw FormatError("load_reviews: no valid record in " + path + " (" +
                      std::to_string(local.skipped) + " skipped)");
  }
  ds.rebuild_node_lists();
  ds.recompute_degrees();
  return ds;
}

SplitResult split_dataset(const DomainDataset& dataset, const SplitSpec& spec) {
  const double total = spec.train_fraction + spec.valid_fraction + spec.test_fraction;
  if (spec.train_fraction < 0 || spec.valid_fraction < 0 || spec.test_fraction < 0 ||
      std::abs(total - 1.0) > 1e-9) {
    throw UsageError("split_dataset: fractions must be nonnegative and sum to 1");
  }

  std::vector<std::uint32_t> order(dataset.interactions.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n = order.size();
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n)));
  const auto n_valid = static_cast<std::size_t>(std::floor(spec.valid_fraction * static_cast<double>(n)));

  SplitResult out;
  auto init_part = [&dataset](DomainDataset& part) {
    part.domain = dataset.domain;
    part.user_ids = dataset.user_ids;
    part.item_ids = dataset.item_ids;
    part.user_index = dataset.user_index;
    part.item_index = dataset.item_index;
  };
  init_part(out.train);
  init_part(out.valid);
  init_part(out.test);

  for (std::size_t pos = 0; pos < n; ++pos) {
    const Interaction& it = dataset.interactions[order[pos]];
    if (pos < n_train) {
      out.train.interactions.push_back(it);
    } else if (pos < n_train + n_valid) {
      out.valid.interactions.push_back(it);
    } else {
      out.test.interactions.push_back(it);
    }
  }

  out.train.rebuild_node_lists();
  out.valid.rebuild_node_lists();
  out.test.rebuild_node_lists();

  // Degrees come from the training partition, frozen for the run.
  out.train.recompute_degrees();
  out.valid.user_degree = out.train.user_degree;
  out.valid.item_degree = out.train.item_degree;
  out.valid.max_user_degree = out.train.max_user_degree;
  out.valid.max_item_degree = out.train.max_item_degree;
  out.test.user_degree = out.train.user_degree;
  out.test.item_degree = out.train.item_degree;
  out.test.max_user_degree = out.train.max_user_degree;
  out.test.max_item_degree = out.train.max_item_degree;
  return out;
}

SplitResult load_split(const std::string& train_path, const std::string& valid_path,
                       const std::string& test_path, Domain domain, const RecordKeys& keys) {
  DomainDataset raw_train = load_reviews(train_path, domain, keys);
  DomainDataset raw_valid = load_reviews(valid_path, domain, keys);
  DomainDataset raw_test = load_reviews(test_path, domain, keys);

  // One id space across the three parts, train-first.
  DomainDataset master;
  master.domain = domain;
  auto absorb_ids = [&master](const DomainDataset& part) {
    for (const Interaction& it : part.interactions) {
      intern(part.user_ids[it.user], master.user_index, master.user_ids);
      intern(part.item_ids[it.item], master.item_index, master.item_ids);
    }
  };
  absorb_ids(raw_train);
  absorb_ids(raw_valid);
  absorb_ids(raw_test);

  SplitResult out;
  auto remap = [&master](const DomainDataset& part, DomainDataset& dst) {
    dst.domain = part.domain;
    dst.user_ids = master.user_ids;
    dst.item_ids = master.item_ids;
    dst.user_index = master.user_index;
    dst.item_index = master.item_index;
    dst.interactions = part.interactions;
    for (Interaction& it : dst.interactions) {
      it.user = dst.user_index.at(part.user_ids[it.user]);
      it.item = dst.item_index.at(part.item_ids[it.item]);
    }
    dst.rebuild_node_lists();
  };
  remap(raw_train, out.train);
  remap(raw_valid, out.valid);
  remap(raw_test, out.test);

  out.train.recompute_degrees();
  out.valid.user_degree = out.train.user_degree;
  out.valid.item_degree = out.train.item_degree;
  out.valid.max_user_degree = out.train.max_user_degree;
  out.valid.max_item_degree = out.train.max_item_degree;
  out.test.user_degree = out.train.user_degree;
  out.test.item_degree = out.train.item_degree;
  out.test.max_user_degree = out.train.max_user_degree;
  out.test.max_item_degree = out.train.max_item_degree;
  return out;
}

namespace {

void append_reviews(const DomainDataset& ds, const std::vector<std::uint32_t>& records,
                    std::optional<std::pair<std::uint32_t, std::uint32_t>> exclude,
                    std::size_t cap, std::vector<std::string>& out) {
  // Longest review first; ties keep record order.
  std::vector<std::uint32_t> selected;
  selected.reserve(records.size());
  for (std::uint32_t idx : records) {
    const Interaction& it = ds.interactions[idx];
    if (exclude && it.user == exclude->first && it.item == exclude->second) continue;
    selected.push_back(idx);
  }
  std::stable_sort(selected.begin(), selected.end(), [&ds](std::uint32_t a, std::uint32_t b) {
    return ds.interactions[a].tokens.size() > ds.interactions[b].tokens.size();
  });
  for (std::uint32_t idx : selected) {
    for (const std::string& tok : ds.interactions[idx].tokens) {
      if (out.size() >= cap) return;
      out.push_back(tok);
    }
  }
}

}  // namespace

DocumentPair aggregate_documents(const DomainDataset& dataset, std::uint32_t user,
                                 std::uint32_t item,
                                 std::optional<std::pair<std::uint32_t, std::uint32_t>> exclude,
                                 std::size_t cap) {
  if (user >= dataset.num_users() || item >= dataset.num_items()) {
    throw UsageError("aggregate_documents: unknown user or item id");
  }
  DocumentPair out;
  append_reviews(dataset, dataset.user_interactions[user], exclude, cap, out.user_tokens);
  append_reviews(dataset, dataset.item_interactions[item], exclude, cap, out.item_tokens);
  return out;
}

void write_jsonl(const DomainDataset& dataset, const std::string& path, const RecordKeys& keys) {
  std::ofstream out(path);
  if (!out) throw IoError("write_jsonl: cannot open " + path + " for writing");
  for (const Interaction& it : dataset.interactions) {
    std::string text;
    for (std::size_t k = 0; k < it.tokens.size(); ++k) {
      if (k > 0) text.push_back(' ');
      text += it.tokens[k];
    }
    json record;
    record[keys.user] = dataset.user_ids[it.user];
    record[keys.item] = dataset.item_ids[it.item];
    record[keys.rating] = it.rating;
    record[keys.review] = text;
    out << record.dump() << '\n';
  }
  if (!out) throw IoError("write_jsonl: failed writing " + path);
}

std::uint32_t sample_negative(const DomainDataset& dataset, std::uint32_t user,
                              std::uint32_t exclude_item, std::mt19937_64& rng) {
  if (user >= dataset.num_users()) throw UsageError("sample_negative: unknown user id");

  std::vector<std::uint32_t> low_rated;
  for (std::uint32_t idx : dataset.user_interactions[user]) {
    const Interaction& it = dataset.interactions[idx];
    if (it.rating <= 3 && it.item != exclude_item) low_rated.push_back(it.item);
  }
  if (!low_rated.empty()) {
    std::sort(low_rated.begin(), low_rated.end());
    low_rated.erase(std::unique(low_rated.begin(), low_rated.end()), low_rated.end());
    std::uniform_int_distribution<std::size_t> pick(0, low_rated.size() - 1);
    return low_rated[pick(rng)];
  }

  const auto& seen = dataset.user_items[user];
  const std::size_t n_items = dataset.num_items();
  std::size_t candidates = n_items - seen.size();
  if (!std::binary_search(seen.begin(), seen.end(), exclude_item) && candidates > 0) {
    // exclude_item itself is never a candidate
    if (exclude_item < n_items) --candidates;
  }
  if (candidates == 0) {
    throw SamplingExhaustedError("sample_negative: user " + std::to_string(user) +
                                 " has no low-rated and no untouched item");
  }
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n_items) - 1);
  while (true) {
    const std::uint32_t item = pick(rng);
    if (item == exclude_item) continue;
    if (std::binary_search(seen.begin(), seen.end(), item)) continue;
    return item;
  }
}

}  // namespace head::data
