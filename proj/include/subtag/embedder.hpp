#pragma once

#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace subtag {

class EmbedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Maps text to an L2-normalized dense vector. Keywords and vocabulary
/// labels must go through the same embedder instance/config.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int dimension() const = 0;
  /// Throws EmbedError on empty (after trimming) input or backend failure.
  virtual Eigen::VectorXf embed(std::string_view text) const = 0;
};

/// Deterministic offline embedder: character 3-gram feature hashing with a
/// sign hash, L2-normalized. Identical texts embed identically, so a keyword
/// equal to a vocabulary label lands at cosine 1.
class HashedEmbedder final : public Embedder {
 public:
  explicit HashedEmbedder(int dimension = 256);
  int dimension() const override { return dimension_; }
  Eigen::VectorXf embed(std::string_view text) const override;

 private:
  int dimension_;
};

/// Remote embedding service (POST {endpoint}/embed with {"inputs": text},
/// reply [[f32,...]] or a flat array or {"embedding": [...]}). Vectors are
/// re-normalized on receipt.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(std::string endpoint, int dimension,
               std::chrono::milliseconds timeout = std::chrono::milliseconds(30000),
               int max_retries = 3);
  int dimension() const override { return dimension_; }
  Eigen::VectorXf embed(std::string_view text) const override;

 private:
  std::string endpoint_;
  int dimension_;
  std::chrono::milliseconds timeout_;
  int max_retries_;
};

enum class EmbedderKind { hashed_features, http_service };

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::hashed_features;
  int dimension = 256;
  std::string endpoint;  // http_service only
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg);

}  // namespace subtag
