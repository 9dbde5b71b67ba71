#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace subtag {

struct HnswParams {
  int M = 16;
  int ef_construction = 200;
  int ef_search = 128;
  std::uint64_t seed = 1;
};

class HnswError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hierarchical navigable small-world graph over L2-normalized vectors,
/// queried by cosine similarity (inner product). Layer assignment is
/// hash-derived from (seed, node id) rather than drawn from a stateful RNG,
/// so a graph is a pure function of the insertion sequence and params --
/// rebuilds, snapshots and reloads all answer identically.
class HnswIndex {
 public:
  HnswIndex(int dim, HnswParams params = {});

  /// Inserts one vector (must be unit length, dimension dim). Returns the
  /// node id (insertion order, starting at 0).
  std::size_t add(const Eigen::Ref<const Eigen::VectorXf>& v);

  struct Hit {
    std::size_t id;
    float score;  // cosine similarity
  };

  /// Approximate top-k by cosine. Beam width is max(ef_search, k) unless
  /// ef_override > 0. Ties resolved toward smaller ids.
  std::vector<Hit> search(const Eigen::Ref<const Eigen::VectorXf>& q, std::size_t k,
                          int ef_override = 0) const;

  std::size_t size() const { return count_; }
  int dim() const { return dim_; }
  const HnswParams& params() const { return params_; }
  void set_ef_search(int ef) { params_.ef_search = ef; }

  float dot_with(std::size_t id, const Eigen::Ref<const Eigen::VectorXf>& q) const {
    return vectors_.row(static_cast<Eigen::Index>(id)).dot(q);
  }
  Eigen::VectorXf vector(std::size_t id) const {
    return vectors_.row(static_cast<Eigen::Index>(id));
  }

  void save(std::ostream& out) const;
  static HnswIndex load(std::istream& in);

 private:
  using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  struct Scored {
    float dist;
    std::uint32_t id;
  };

  float distance(const Eigen::Ref<const Eigen::VectorXf>& q, std::uint32_t id) const {
    return 1.0f - vectors_.row(id).dot(q);
  }

  int level_for(std::size_t id) const;
  std::vector<Scored> search_layer(const Eigen::Ref<const Eigen::VectorXf>& q,
                                   const std::vector<std::uint32_t>& entries, std::size_t ef,
                                   int layer) const;
  /// Malkov-style heuristic selection over candidates whose dist field is
  /// relative to the reference point: keeps candidates closer to the
  /// reference than to any already-kept neighbor, then refills from the
  /// pruned pool.
  std::vector<std::uint32_t> select_neighbors(const std::vector<Scored>& candidates,
                                              std::size_t m) const;
  void shrink(std::uint32_t node, int layer, std::size_t cap);
  void reserve_rows(std::size_t n);

  int dim_;
  HnswParams params_;
  double level_mult_;
  RowMatrixXf vectors_;
  std::size_t count_ = 0;
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;  // [node][layer] -> neighbors
  std::vector<std::int32_t> levels_;
  std::int64_t entry_ = -1;
  int max_level_ = -1;
};

}  // namespace subtag
