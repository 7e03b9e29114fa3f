#include "docflow/model/embedding.hpp"

#include "docflow/common/errors.hpp"

#include <cmath>

namespace docflow::model {

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double c : components) sum += c * c;
  return std::sqrt(sum);
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw ValidationError("embedding dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                          std::to_string(b.dimension()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.components.size(); ++i) sum += a.components[i] * b.components[i];
  return sum;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw ValidationError("embedding dimension must be positive");
}

std::vector<std::string> HashingEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t HashingEmbedder::bucket_of(std::string_view token) const {
  return static_cast<std::size_t>(fnv1a64(token) % dimension_);
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) {
  if (text.empty()) throw ValidationError("cannot embed empty text");
  EmbeddingVector v;
  v.components.assign(dimension_, 0.0);
  auto tokens = tokenize(text);
  if (tokens.empty()) {
    // Punctuation-only text still needs a unit vector; it gets one bucket
    // keyed by its raw bytes.
    v.components[bucket_of(text)] = 1.0;
    return v;
  }
  for (const auto& t : tokens) v.components[bucket_of(t)] += 1.0;
  double n = v.norm();
  for (double& c : v.components) c /= n;
  return v;
}

}  // namespace docflow::model
