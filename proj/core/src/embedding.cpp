#include "head/embedding.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "head/errors.hpp"

namespace head::emb {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

double row_norm(const double* row, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) s += row[i] * row[i];
  return std::sqrt(s);
}

}  // namespace

const double* EmbeddingTable::row(const std::string& token) const {
  auto it = vocabulary.find(token);
  if (it == vocabulary.end()) return nullptr;
  return matrix.data() + it->second * dim;
}

EmbeddingTable load_table(const std::string& path, TableGeometry geometry) {
  std::ifstream in(path);
  if (!in) throw IoError("load_table: cannot open " + path);

  EmbeddingTable table;
  table.geometry = geometry;
  table.dim = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (values.empty()) {
      throw FormatError("load_table: no values on line " + std::to_string(line_no));
    }
    if (table.dim == 0) {
      table.dim = values.size();
    } else if (values.size() != table.dim) {
      throw FormatError("load_table: dimension " + std::to_string(values.size()) + " on line " +
                        std::to_string(line_no) + ", expected " + std::to_string(table.dim));
    }
    if (table.vocabulary.contains(token)) continue;  // first occurrence wins

    if (geometry == TableGeometry::kPoincare) {
      const double n = row_norm(values.data(), values.size());
      if (n >= 1.0) {
        const double scale = 0.999 / n;
        for (double& x : values) x *= scale;
        ++table.rescaled_rows;
      }
    }
    table.vocabulary.emplace(token, table.vocabulary.size());
    table.matrix.insert(table.matrix.end(), values.begin(), values.end());
  }
  if (table.vocabulary.empty()) throw FormatError("load_table: empty table in " + path);
  return table;
}

EmbeddingTable synthetic_table(const std::vector<std::string>& vocabulary, std::size_t dim,
                               std::uint64_t seed, TableGeometry geometry, double sigma_spread) {
  EmbeddingTable table;
  table.geometry = geometry;
  table.dim = dim;
  for (const std::string& token : vocabulary) {
    if (table.vocabulary.contains(token)) continue;
    std::mt19937_64 rng(seed ^ fnv1a(token));
    double sigma = 0.1;
    if (sigma_spread > 0.0) {
      std::normal_distribution<double> unit_gauss(0.0, 1.0);
      sigma *= std::exp(sigma_spread * unit_gauss(rng));
    }
    std::normal_distribution<double> gauss(0.0, sigma);
    std::vector<double> row(dim);
    for (double& x : row) x = gauss(rng);
    if (geometry == TableGeometry::kPoincare) {
      const double n = row_norm(row.data(), dim);
      if (n >= 1.0) {
        for (double& x : row) x *= 0.999 / n;
        ++table.rescaled_rows;
      }
    }
    table.vocabulary.emplace(token, table.vocabulary.size());
    table.matrix.insert(table.matrix.end(), row.begin(), row.end());
  }
  return table;
}

DocumentEmbedding embed_document(const std::vector<std::string>& tokens,
                                 const EmbeddingTable& table, std::size_t cap) {
  if (cap == 0) throw UsageError("embed_document: cap must be positive");
  DocumentEmbedding doc;
  doc.length = cap;
  doc.dim = table.dim;
  doc.euclidean.assign(cap * table.dim, 0.0);
  doc.hyperbolic.reserve(cap);

  for (std::size_t r = 0; r < cap; ++r) {
    if (r < tokens.size()) {
      if (const double* row = table.row(tokens[r])) {
        std::copy(row, row + table.dim, doc.euclidean.begin() + r * table.dim);
      }
    }
    std::vector<double> space(doc.euclidean.begin() + r * table.dim,
                              doc.euclidean.begin() + (r + 1) * table.dim);
    doc.hyperbolic.push_back(geo::exp_origin(geo::tangent_at_origin(space)));
  }
  return doc;
}

}  // namespace head::emb
