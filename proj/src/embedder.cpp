#include "subtag/embedder.hpp"

#include <httplib.h>
#include <json.hpp>

#include "subtag/text.hpp"

namespace subtag {

HashedEmbedder::HashedEmbedder(int dimension) : dimension_(dimension) {
  if (dimension_ < 8) throw EmbedError("embedder dimension must be >= 8");
}

namespace {

std::string normalize_for_hashing(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : trim(text)) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    out.push_back(static_cast<char>(c));
  }
  return out;
}

}  // namespace

Eigen::VectorXf HashedEmbedder::embed(std::string_view text) const {
  const std::string norm = normalize_for_hashing(text);
  if (norm.empty()) throw EmbedError("cannot embed empty text");

  Eigen::VectorXf v = Eigen::VectorXf::Zero(dimension_);
  const auto add_gram = [&](std::string_view gram) {
    const std::uint64_t h = splitmix64(fnv1a64(gram));
    const auto idx = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dimension_));
    const float sign = (splitmix64(h) & 1) ? 1.0f : -1.0f;
    v[idx] += sign;
  };
  if (norm.size() < 3) {
    add_gram(norm);
  } else {
    for (std::size_t i = 0; i + 3 <= norm.size(); ++i) {
      add_gram(std::string_view(norm).substr(i, 3));
    }
  }

  float n = v.norm();
  if (n == 0.0f) {
    // Signs cancelled exactly; fall back to a single deterministic component.
    v[static_cast<Eigen::Index>(fnv1a64(norm) % static_cast<std::uint64_t>(dimension_))] = 1.0f;
    n = 1.0f;
  }
  return v / n;
}

HttpEmbedder::HttpEmbedder(std::string endpoint, int dimension, std::chrono::milliseconds timeout,
                           int max_retries)
    : endpoint_(std::move(endpoint)), dimension_(dimension), timeout_(timeout),
      max_retries_(max_retries) {
  if (dimension_ < 8) throw EmbedError("embedder dimension must be >= 8");
}

namespace {

std::pair<std::string, std::string> split_embed_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  const auto path_start =
      scheme == std::string::npos ? endpoint.find('/') : endpoint.find('/', scheme + 3);
  if (path_start == std::string::npos) return {endpoint, "/embed"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

Eigen::VectorXf parse_embedding(const std::string& body, int dimension) {
  const auto j = nlohmann::json::parse(body);
  const nlohmann::json* arr = nullptr;
  if (j.is_array() && !j.empty() && j[0].is_array()) {
    arr = &j[0];
  } else if (j.is_array()) {
    arr = &j;
  } else if (j.is_object() && j.contains("embedding")) {
    arr = &j.at("embedding");
  }
  if (arr == nullptr || !arr->is_array()) {
    throw EmbedError("embedding response is not a float array");
  }
  if (static_cast<int>(arr->size()) != dimension) {
    throw EmbedError("embedding dimension mismatch: got " + std::to_string(arr->size()) +
                     ", expected " + std::to_string(dimension));
  }
  Eigen::VectorXf v(dimension);
  for (int i = 0; i < dimension; ++i) v[i] = (*arr)[static_cast<std::size_t>(i)].get<float>();
  const float n = v.norm();
  if (!(n > 0.0f)) throw EmbedError("embedding service returned a zero vector");
  return v / n;
}

}  // namespace

Eigen::VectorXf HttpEmbedder::embed(std::string_view text) const {
  if (trim(text).empty()) throw EmbedError("cannot embed empty text");
  const auto [base, path] = split_embed_endpoint(endpoint_);
  const std::string body = nlohmann::json{{"inputs", std::string(text)}}.dump();

  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, max_retries_); ++attempt) {
    httplib::Client client(base);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout_));
    client.set_read_timeout(timeout_);
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw EmbedError("embedding service returned status " + std::to_string(res->status));
    }
    try {
      return parse_embedding(res->body, dimension_);
    } catch (const nlohmann::json::exception& e) {
      throw EmbedError(std::string("embedding service sent unparseable JSON: ") + e.what());
    }
  }
  throw EmbedError("embedding service unreachable: " + last_error);
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg) {
  switch (cfg.kind) {
    case EmbedderKind::hashed_features:
      return std::make_unique<HashedEmbedder>(cfg.dimension);
    case EmbedderKind::http_service:
      if (cfg.endpoint.empty()) throw EmbedError("http embedder requires an endpoint");
      return std::make_unique<HttpEmbedder>(cfg.endpoint, cfg.dimension);
  }
  throw EmbedError("unknown embedder kind");
}

}  // namespace subtag
