#include "subtag/vocab_index.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_map>

#include "subtag/text.hpp"

namespace subtag {

void VocabularyIndex::index_label(std::string label, std::string concept_id,
                                  const Eigen::VectorXf& vec) {
  entries_.push_back({std::move(label), std::move(concept_id)});
  hnsw_.add(vec);
  bm25_.add_document(tokenize(entries_.back().label));
}

VocabularyIndex VocabularyIndex::build(const Vocabulary& vocab, const Embedder& embedder,
                                       MappingParams params) {
  if (vocab.size() == 0) throw VocabularyError("cannot index an empty vocabulary");
  VocabularyIndex index(params, embedder.dimension());
  index.bm25_ = Bm25Index(params.bm25);
  for (const auto& entry : vocab.concepts()) {
    try {
      index.index_label(entry.pref_label, entry.id, embedder.embed(entry.pref_label));
      for (const auto& alt : entry.alt_labels) {
        index.index_label(alt, entry.id, embedder.embed(alt));
      }
    } catch (const EmbedError& e) {
      throw EmbedError("embedding failed for concept '" + entry.id + "': " + e.what());
    }
  }
  return index;
}

std::vector<std::pair<std::size_t, double>> VocabularyIndex::vector_pool(
    const Eigen::Ref<const Eigen::VectorXf>& query_vector, std::size_t n) const {
  std::vector<std::pair<std::size_t, double>> pool;
  for (const auto& hit : hnsw_.search(query_vector, n)) {
    pool.emplace_back(hit.id, static_cast<double>(hit.score));
  }
  return pool;
}

std::vector<std::pair<std::size_t, double>> VocabularyIndex::bm25_pool(
    const std::string& query_text, std::size_t n) const {
  std::vector<std::pair<std::size_t, double>> pool;
  for (const auto& hit : bm25_.search(tokenize(query_text), n)) {
    pool.emplace_back(hit.doc, hit.score);
  }
  return pool;
}

namespace {

/// Min-max over the pool; a single distinct value maps to 1 everywhere.
std::unordered_map<std::size_t, double> normalize_pool(
    const std::vector<std::pair<std::size_t, double>>& pool) {
  std::unordered_map<std::size_t, double> norm;
  if (pool.empty()) return norm;
  double lo = pool.front().second, hi = pool.front().second;
  for (const auto& kv : pool) {
    lo = std::min(lo, kv.second);
    hi = std::max(hi, kv.second);
  }
  for (const auto& kv : pool) {
    norm[kv.first] = hi > lo ? (kv.second - lo) / (hi - lo) : 1.0;
  }
  return norm;
}

}  // namespace

std::vector<VocabularyIndex::Candidate> VocabularyIndex::hybrid_search(
    const Eigen::Ref<const Eigen::VectorXf>& query_vector, const std::string& query_text, double w,
    std::size_t top_n) const {
  if (top_n == 0) return {};
  const std::size_t pool_n = 4 * top_n;
  const auto vec_norm = normalize_pool(vector_pool(query_vector, pool_n));
  const auto bm_norm = normalize_pool(bm25_pool(query_text, pool_n));

  struct Fused {
    double fused;
    double cosine;
  };
  std::map<std::string, Fused> best;  // concept_id -> best-fused entry
  // Union of both pools in ascending entry order, so equal-fused duplicate
  // labels of one concept dedupe identically everywhere.
  std::vector<std::size_t> pool_union;
  pool_union.reserve(vec_norm.size() + bm_norm.size());
  for (const auto& kv : vec_norm) pool_union.push_back(kv.first);
  for (const auto& kv : bm_norm) {
    if (vec_norm.count(kv.first) == 0) pool_union.push_back(kv.first);
  }
  std::sort(pool_union.begin(), pool_union.end());

  for (const auto entry_id : pool_union) {
    const auto v = vec_norm.find(entry_id);
    const auto b = bm_norm.find(entry_id);
    const double fused = w * (v != vec_norm.end() ? v->second : 0.0) +
                         (1.0 - w) * (b != bm_norm.end() ? b->second : 0.0);
    const double cosine = static_cast<double>(hnsw_.dot_with(entry_id, query_vector));
    const auto& concept_id = entries_[entry_id].concept_id;
    const auto it = best.find(concept_id);
    if (it == best.end() || fused > it->second.fused) {
      best[concept_id] = {fused, cosine};
    }
  }

  std::vector<Candidate> out;
  out.reserve(best.size());
  for (const auto& [concept_id, f] : best) out.push_back({concept_id, f.fused, f.cosine});
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.fused != b.fused) return a.fused > b.fused;
    return a.concept_id < b.concept_id;
  });
  if (out.size() > top_n) out.resize(top_n);
  return out;
}

namespace {

constexpr char kSnapshotMagic[8] = {'S', 'T', 'I', 'X', '1', '\n', '\0', '\0'};

void write_string(std::ostream& out, const std::string& s) {
  const auto len = static_cast<std::uint32_t>(s.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw HnswError("truncated index snapshot");
  return s;
}

}  // namespace

void VocabularyIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw HnswError("cannot write index snapshot: " + path.string());
  out.write(kSnapshotMagic, sizeof(kSnapshotMagic));
  const auto write_double = [&](double d) {
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
  };
  write_double(params_.hybrid_weight);
  write_double(params_.threshold);
  write_double(params_.bm25.k1);
  write_double(params_.bm25.b);
  const auto count = static_cast<std::uint64_t>(entries_.size());
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& e : entries_) {
    write_string(out, e.label);
    write_string(out, e.concept_id);
  }
  hnsw_.save(out);
  if (!out) throw HnswError("failed to write index snapshot: " + path.string());
}

VocabularyIndex VocabularyIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw HnswError("cannot open index snapshot: " + path.string());
  char magic[sizeof(kSnapshotMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kSnapshotMagic))) {
    throw HnswError("not an index snapshot: " + path.string());
  }
  const auto read_double = [&] {
    double d = 0;
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    return d;
  };
  MappingParams params;
  params.hybrid_weight = read_double();
  params.threshold = read_double();
  params.bm25.k1 = read_double();
  params.bm25.b = read_double();

  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in) throw HnswError("truncated index snapshot");
  std::vector<Entry> entries;
  entries.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Entry e;
    e.label = read_string(in);
    e.concept_id = read_string(in);
    entries.push_back(std::move(e));
  }
  auto hnsw = HnswIndex::load(in);
  params.hnsw = hnsw.params();

  VocabularyIndex index(params, hnsw.dim());
  index.hnsw_ = std::move(hnsw);
  index.bm25_ = Bm25Index(params.bm25);
  index.entries_ = std::move(entries);
  for (const auto& e : index.entries_) {
    index.bm25_.add_document(tokenize(e.label));
  }
  return index;
}

std::vector<MappedSuggestion> map_keywords(const VocabularyIndex& index, const Embedder& embedder,
                                           const std::vector<KeywordItem>& keywords,
                                           double threshold, double w) {
  std::vector<MappedSuggestion> out;
  std::unordered_map<std::string, Eigen::VectorXf> embed_cache;
  for (const auto& item : keywords) {
    if (trim(item.keyword).empty()) continue;
    auto cached = embed_cache.find(item.keyword);
    if (cached == embed_cache.end()) {
      cached = embed_cache.emplace(item.keyword, embedder.embed(item.keyword)).first;
    }
    const auto hits = index.hybrid_search(cached->second, item.keyword, w, 1);
    if (hits.empty()) continue;
    const double similarity = std::clamp(hits.front().cosine, 0.0, 1.0);
    if (similarity < threshold) continue;
    out.push_back({item.doc_id, item.keyword, hits.front().concept_id, similarity, item.member_id});
  }
  return out;
}

}  // namespace subtag
