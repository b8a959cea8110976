#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace head::data {

enum class Domain { kSource, kTarget };

// One review record. Tokens are produced once at load time (lowercase, split
// on non-alphanumeric runs) and reused by every document aggregation.
struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  int rating = 0;  // 1..5
  std::vector<std::string> tokens;
  Domain domain = Domain::kTarget;
};

// Key names for the line-delimited keyed-JSON input format.
struct RecordKeys {
  std::string user = "reviewerID";
  std::string item = "asin";
  std::string rating = "overall";
  std::string review = "reviewText";
};

struct LoadReport {
  std::size_t accepted = 0;
  std::size_t skipped = 0;  // malformed lines
};

// Users, items and interactions of one domain. Identifiers are interned to
// dense ids in first-seen order. Degree tables always describe the training
// partition: split_dataset computes them on the train part and copies them
// into all three parts.
struct DomainDataset {
  Domain domain = Domain::kTarget;
  std::vector<Interaction> interactions;

  std::vector<std::string> user_ids;  // dense id -> external id
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, std::uint32_t> user_index;
  std::unordered_map<std::string, std::uint32_t> item_index;

  // Per-node interaction lists (indices into `interactions`), rebuilt by
  // rebuild_node_lists().
  std::vector<std::vector<std::uint32_t>> user_interactions;
  std::vector<std::vector<std::uint32_t>> item_interactions;
  // Sorted item ids each user interacted with, for negative sampling and
  // candidate generation.
  std::vector<std::vector<std::uint32_t>> user_items;

  // Degrees from the training partition.
  std::vector<std::uint32_t> user_degree;
  std::vector<std::uint32_t> item_degree;
  std::uint32_t max_user_degree = 0;
  std::uint32_t max_item_degree = 0;

  std::size_t num_users() const { return user_ids.size(); }
  std::size_t num_items() const { return item_ids.size(); }

  void rebuild_node_lists();
  // Recomputes the degree tables from this dataset's own interactions.
  void recompute_degrees();
};

std::vector<std::string> tokenize(std::string_view text);

// Reads line-delimited keyed records. Malformed lines are counted and
// skipped. Throws IoError if the file cannot be read and FormatError if no
// valid record remains.
DomainDataset load_reviews(const std::string& path, Domain domain,
                           const RecordKeys& keys = {}, LoadReport* report = nullptr);

struct SplitSpec {
  double train_fraction = 0.8;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct SplitResult {
  DomainDataset train;
  DomainDataset valid;
  DomainDataset test;
};

// Seeded uniform shuffle, then partition. All three parts share the full
// dataset's id space; degree tables in every part describe the train split.
SplitResult split_dataset(const DomainDataset& dataset, const SplitSpec& spec);

// Reloads a split written out as three record files, rebuilding one shared id
// space (train ids first, then ids first seen in valid, then in test) and
// train-derived degree tables.
SplitResult load_split(const std::string& train_path, const std::string& valid_path,
                       const std::string& test_path, Domain domain, const RecordKeys& keys = {});

struct DocumentPair {
  std::vector<std::string> user_tokens;
  std::vector<std::string> item_tokens;
};

// Concatenates the user's reviews (and the item's) excluding every record of
// the held-out (user, item) pair. Reviews are ordered longest first (ties by
// record order) and the concatenation is truncated at `cap` tokens. A node
// with no remaining review yields an empty document.
DocumentPair aggregate_documents(const DomainDataset& dataset, std::uint32_t user,
                                 std::uint32_t item,
                                 std::optional<std::pair<std::uint32_t, std::uint32_t>> exclude,
                                 std::size_t cap = 256);

// Returns an item the user rated <= 3 if any exists (uniform among them),
// otherwise an item the user never interacted with (uniform). Never returns
// `exclude_item`. Throws SamplingExhaustedError when no candidate exists.
std::uint32_t sample_negative(const DomainDataset& dataset, std::uint32_t user,
                              std::uint32_t exclude_item, std::mt19937_64& rng);

// Writes the dataset back out as line-delimited keyed records (review text is
// the token sequence joined by single spaces). Deterministic byte-for-byte.
void write_jsonl(const DomainDataset& dataset, const std::string& path,
                 const RecordKeys& keys = {});

}  // namespace head::data
