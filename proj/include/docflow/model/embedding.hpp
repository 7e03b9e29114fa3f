#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace docflow::model {

struct EmbeddingVector {
  std::vector<double> components;

  std::size_t dimension() const noexcept { return components.size(); }
  double norm() const;
};

// Plain dot product of two equal-length vectors; components are accumulated
// in index order.
double dot(const EmbeddingVector& a, const EmbeddingVector& b);

// dot / (|a| |b|); 0 when either vector is zero.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  // Unit-norm vector of dimension(). Throws ValidationError on empty text.
  virtual EmbeddingVector embed(std::string_view text) = 0;
};

// Deterministic bag-of-words embedder for offline use:
// tokens are maximal runs of ASCII alphanumerics or non-ASCII bytes, lowercased,
// hashed (FNV-1a 64) into `dimension` buckets, counted, then L2-normalised.
class HashingEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultDimension = 256;

  explicit HashingEmbedder(std::size_t dimension = kDefaultDimension);

  std::size_t dimension() const override { return dimension_; }
  EmbeddingVector embed(std::string_view text) override;

  static std::vector<std::string> tokenize(std::string_view text);
  std::size_t bucket_of(std::string_view token) const;

 private:
  std::size_t dimension_;
};

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace docflow::model
