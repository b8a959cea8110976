#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "head/geometry.hpp"

namespace head::emb {

enum class TableGeometry { kEuclidean, kPoincare };

// Frozen word-vector table. Rows are immutable after load; lookups of unknown
// tokens yield the zero row (padding convention).
struct EmbeddingTable {
  std::unordered_map<std::string, std::size_t> vocabulary;  // token -> row
  std::vector<double> matrix;                               // row-major [V x dim]
  TableGeometry geometry = TableGeometry::kEuclidean;
  std::size_t dim = 100;
  std::size_t rescaled_rows = 0;  // poincare rows clamped back into the ball

  std::size_t vocab_size() const { return vocabulary.size(); }
  // Pointer to the row, or nullptr for out-of-vocabulary tokens.
  const double* row(const std::string& token) const;
};

// Plain-text format: `token v1 v2 ... vdim` per line. Poincare rows with norm
// >= 1 are rescaled to norm 0.999 and counted in rescaled_rows. Throws
// FormatError on inconsistent dimensions, IoError if unreadable.
EmbeddingTable load_table(const std::string& path, TableGeometry geometry);

// Deterministic desk-scale stand-in for a pretrained file: one Gaussian row
// per vocabulary token, seeded by (seed, token) so the row does not depend
// on vocabulary order. The base scale is 0.1; sigma_spread > 0 makes the
// per-token scale lognormal (0.1 * exp(spread * N(0,1))), mimicking the
// norm spread of real pretrained vectors.
EmbeddingTable synthetic_table(const std::vector<std::string>& vocabulary, std::size_t dim,
                               std::uint64_t seed, TableGeometry geometry = TableGeometry::kEuclidean,
                               double sigma_spread = 0.0);

// A token document mapped to both representations: Euclidean rows (zeros for
// OOV and padding) and their lifts onto the hyperboloid.
struct DocumentEmbedding {
  std::vector<double> euclidean;          // row-major [length x dim]
  std::vector<geo::LorentzVec> hyperbolic;  // length entries
  std::size_t length = 0;                 // == cap, after truncate/pad
  std::size_t dim = 0;
};

// Truncates/pads to exactly `cap` rows and lifts each row v to
// [cosh(||v||), sinh(||v||) v/||v||].
DocumentEmbedding embed_document(const std::vector<std::string>& tokens,
                                 const EmbeddingTable& table, std::size_t cap);

}  // namespace head::emb
