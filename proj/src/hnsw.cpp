#include "subtag/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <queue>

#include "subtag/text.hpp"

namespace subtag {

namespace {

struct NearFirst {
  bool operator()(const std::pair<float, std::uint32_t>& a,
                  const std::pair<float, std::uint32_t>& b) const {
    if (a.first != b.first) return a.first > b.first;
    return a.second > b.second;
  }
};

struct FarFirst {
  bool operator()(const std::pair<float, std::uint32_t>& a,
                  const std::pair<float, std::uint32_t>& b) const {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  }
};

template <class T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw HnswError("truncated index snapshot");
  return value;
}

constexpr std::uint32_t kMagic = 0x47544253;  // "SBTG"
constexpr std::uint32_t kVersion = 1;

}  // namespace

HnswIndex::HnswIndex(int dim, HnswParams params) : dim_(dim), params_(params) {
  if (dim_ < 1) throw HnswError("dimension must be positive");
  if (params_.M < 2) throw HnswError("M must be >= 2");
  level_mult_ = 1.0 / std::log(static_cast<double>(params_.M));
}

int HnswIndex::level_for(std::size_t id) const {
  const std::uint64_t h =
      splitmix64(params_.seed ^ ((static_cast<std::uint64_t>(id) + 1) * 0x9e3779b97f4a7c15ULL));
  // Uniform in (0, 1]; never exactly 0 so the log stays finite.
  const double u = (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
  return static_cast<int>(-std::log(u) * level_mult_);
}

void HnswIndex::reserve_rows(std::size_t n) {
  if (static_cast<std::size_t>(vectors_.rows()) >= n) return;
  std::size_t cap = std::max<std::size_t>(16, static_cast<std::size_t>(vectors_.rows()));
  while (cap < n) cap *= 2;
  vectors_.conservativeResize(static_cast<Eigen::Index>(cap), dim_);
}

std::vector<HnswIndex::Scored> HnswIndex::search_layer(const Eigen::Ref<const Eigen::VectorXf>& q,
                                                       const std::vector<std::uint32_t>& entries,
                                                       std::size_t ef, int layer) const {
  std::vector<char> visited(count_, 0);
  std::priority_queue<std::pair<float, std::uint32_t>, std::vector<std::pair<float, std::uint32_t>>,
                      NearFirst>
      candidates;
  std::priority_queue<std::pair<float, std::uint32_t>, std::vector<std::pair<float, std::uint32_t>>,
                      FarFirst>
      results;

  for (const auto id : entries) {
    if (visited[id]) continue;
    visited[id] = 1;
    const float d = distance(q, id);
    candidates.emplace(d, id);
    results.emplace(d, id);
  }
  while (results.size() > ef) results.pop();

  while (!candidates.empty()) {
    const auto [dist, id] = candidates.top();
    candidates.pop();
    if (results.size() >= ef && dist > results.top().first) break;
    if (static_cast<std::size_t>(layer) >= links_[id].size()) continue;
    for (const auto nb : links_[id][static_cast<std::size_t>(layer)]) {
      if (visited[nb]) continue;
      visited[nb] = 1;
      const float d = distance(q, nb);
      if (results.size() < ef || d < results.top().first) {
        candidates.emplace(d, nb);
        results.emplace(d, nb);
        if (results.size() > ef) results.pop();
      }
    }
  }

  std::vector<Scored> out;
  out.reserve(results.size());
  while (!results.empty()) {
    out.push_back({results.top().first, results.top().second});
    results.pop();
  }
  std::sort(out.begin(), out.end(), [](const Scored& a, const Scored& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.id < b.id;
  });
  return out;
}

std::vector<std::uint32_t> HnswIndex::select_neighbors(const std::vector<Scored>& candidates,
                                                       std::size_t m) const {
  std::vector<std::uint32_t> selected;
  std::vector<Scored> pruned;
  for (const auto& c : candidates) {
    if (selected.size() >= m) break;
    bool keep = true;
    for (const auto s : selected) {
      const float d_cs = 1.0f - vectors_.row(c.id).dot(vectors_.row(s));
      if (d_cs < c.dist) {
        keep = false;
        break;
      }
    }
    if (keep) {
      selected.push_back(c.id);
    } else {
      pruned.push_back(c);
    }
  }
  for (const auto& c : pruned) {
    if (selected.size() >= m) break;
    selected.push_back(c.id);
  }
  return selected;
}

void HnswIndex::shrink(std::uint32_t node, int layer, std::size_t cap) {
  auto& adj = links_[node][static_cast<std::size_t>(layer)];
  if (adj.size() <= cap) return;
  std::vector<Scored> scored;
  scored.reserve(adj.size());
  const Eigen::VectorXf base = vectors_.row(node);
  for (const auto nb : adj) {
    scored.push_back({1.0f - vectors_.row(nb).dot(base), nb});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.id < b.id;
  });
  adj = select_neighbors(scored, cap);
}

std::size_t HnswIndex::add(const Eigen::Ref<const Eigen::VectorXf>& v) {
  if (v.size() != dim_) throw HnswError("vector dimension mismatch");
  const auto id = static_cast<std::uint32_t>(count_);
  reserve_rows(count_ + 1);
  vectors_.row(id) = v;
  ++count_;

  const int level = level_for(id);
  levels_.push_back(level);
  links_.emplace_back(static_cast<std::size_t>(level) + 1);

  if (entry_ < 0) {
    entry_ = id;
    max_level_ = level;
    return id;
  }

  std::uint32_t current = static_cast<std::uint32_t>(entry_);
  for (int lc = max_level_; lc > level; --lc) {
    const auto nearest = search_layer(v, {current}, 1, lc);
    if (!nearest.empty()) current = nearest.front().id;
  }

  std::vector<std::uint32_t> eps = {current};
  for (int lc = std::min(level, max_level_); lc >= 0; --lc) {
    auto found = search_layer(v, eps, static_cast<std::size_t>(params_.ef_construction), lc);
    // The new node itself is not yet linked, but guard against self loops.
    std::erase_if(found, [&](const Scored& s) { return s.id == id; });
    const auto neighbors = select_neighbors(found, static_cast<std::size_t>(params_.M));
    const std::size_t cap = lc == 0 ? static_cast<std::size_t>(2 * params_.M)
                                    : static_cast<std::size_t>(params_.M);
    for (const auto nb : neighbors) {
      links_[id][static_cast<std::size_t>(lc)].push_back(nb);
      links_[nb][static_cast<std::size_t>(lc)].push_back(id);
      shrink(nb, lc, cap);
    }
    eps.clear();
    for (const auto& s : found) eps.push_back(s.id);
    if (eps.empty()) eps.push_back(current);
  }

  if (level > max_level_) {
    entry_ = id;
    max_level_ = level;
  }
  return id;
}

std::vector<HnswIndex::Hit> HnswIndex::search(const Eigen::Ref<const Eigen::VectorXf>& q,
                                              std::size_t k, int ef_override) const {
  if (count_ == 0 || k == 0) return {};
  if (q.size() != dim_) throw HnswError("query dimension mismatch");

  std::uint32_t current = static_cast<std::uint32_t>(entry_);
  for (int lc = max_level_; lc > 0; --lc) {
    const auto nearest = search_layer(q, {current}, 1, lc);
    if (!nearest.empty()) current = nearest.front().id;
  }

  const std::size_t ef =
      std::max<std::size_t>(ef_override > 0 ? static_cast<std::size_t>(ef_override)
                                            : static_cast<std::size_t>(params_.ef_search),
                            k);
  auto found = search_layer(q, {current}, ef, 0);
  if (found.size() > k) found.resize(k);

  std::vector<Hit> hits;
  hits.reserve(found.size());
  // Report the exact inner product; the beam's 1-dot distances round twice.
  for (const auto& s : found) hits.push_back({s.id, vectors_.row(s.id).dot(q)});
  return hits;
}

void HnswIndex::save(std::ostream& out) const {
  write_pod(out, kMagic);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::int32_t>(dim_));
  write_pod(out, static_cast<std::int32_t>(params_.M));
  write_pod(out, static_cast<std::int32_t>(params_.ef_construction));
  write_pod(out, static_cast<std::int32_t>(params_.ef_search));
  write_pod(out, params_.seed);
  write_pod(out, static_cast<std::uint64_t>(count_));
  write_pod(out, entry_);
  write_pod(out, static_cast<std::int32_t>(max_level_));
  for (std::size_t i = 0; i < count_; ++i) write_pod(out, levels_[i]);
  for (std::size_t i = 0; i < count_; ++i) {
    out.write(reinterpret_cast<const char*>(vectors_.row(static_cast<Eigen::Index>(i)).data()),
              static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(dim_)));
  }
  for (std::size_t i = 0; i < count_; ++i) {
    write_pod(out, static_cast<std::uint32_t>(links_[i].size()));
    for (const auto& layer : links_[i]) {
      write_pod(out, static_cast<std::uint32_t>(layer.size()));
      for (const auto nb : layer) write_pod(out, nb);
    }
  }
  if (!out) throw HnswError("failed to write index snapshot");
}

HnswIndex HnswIndex::load(std::istream& in) {
  if (read_pod<std::uint32_t>(in) != kMagic) throw HnswError("not an index snapshot");
  if (read_pod<std::uint32_t>(in) != kVersion) throw HnswError("unsupported snapshot version");
  const auto dim = read_pod<std::int32_t>(in);
  HnswParams params;
  params.M = read_pod<std::int32_t>(in);
  params.ef_construction = read_pod<std::int32_t>(in);
  params.ef_search = read_pod<std::int32_t>(in);
  params.seed = read_pod<std::uint64_t>(in);

  HnswIndex idx(dim, params);
  const auto count = read_pod<std::uint64_t>(in);
  idx.entry_ = read_pod<std::int64_t>(in);
  idx.max_level_ = read_pod<std::int32_t>(in);
  idx.count_ = static_cast<std::size_t>(count);
  idx.levels_.resize(idx.count_);
  for (auto& level : idx.levels_) level = read_pod<std::int32_t>(in);
  idx.reserve_rows(idx.count_);
  for (std::size_t i = 0; i < idx.count_; ++i) {
    in.read(reinterpret_cast<char*>(idx.vectors_.row(static_cast<Eigen::Index>(i)).data()),
            static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(dim)));
    if (!in) throw HnswError("truncated index snapshot");
  }
  idx.links_.resize(idx.count_);
  for (std::size_t i = 0; i < idx.count_; ++i) {
    idx.links_[i].resize(read_pod<std::uint32_t>(in));
    for (auto& layer : idx.links_[i]) {
      layer.resize(read_pod<std::uint32_t>(in));
      for (auto& nb : layer) nb = read_pod<std::uint32_t>(in);
    }
  }
  return idx;
}

}  // namespace subtag
