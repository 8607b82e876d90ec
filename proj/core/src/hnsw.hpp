#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "mvtp/token_matrix.hpp"

namespace mvtp::detail {

/// Candidate during graph search; ordered by similarity, then by id.
struct Scored {
  float sim;
  std::uint32_t id;
};

/// Hierarchical navigable small-world graph over the rows of a TokenMatrix.
/// The graph does not own the vectors; every call receives them.
class HnswGraph {
 public:
  HnswGraph() = default;

  /// Inserts all rows in order. Node levels are drawn from a geometric
  /// distribution with normalisation 1 / ln(m).
  static HnswGraph build(const TokenMatrix& vectors, std::size_t m,
                         std::size_t ef_construction, std::uint64_t seed);

  /// Up to k nodes, best first, found by greedy descent and a layer-0 beam
  /// of width max(ef, k).
  std::vector<Scored> search(const TokenMatrix& vectors, std::span<const float> query,
                             std::size_t k, std::size_t ef) const;

  std::size_t size() const noexcept { return links_.size(); }
  std::size_t max_level() const noexcept { return max_level_; }
  std::uint32_t entry_point() const noexcept { return entry_; }
  /// links[node][layer] = neighbour ids.
  const std::vector<std::vector<std::vector<std::uint32_t>>>& links() const noexcept {
    return links_;
  }

  void write(std::ostream& out) const;
  static HnswGraph read(std::istream& in, std::size_t node_count);
  std::uint64_t serialized_size() const noexcept;

 private:
  void insert(const TokenMatrix& vectors, std::uint32_t node, std::size_t level);
  std::vector<Scored> search_layer(const TokenMatrix& vectors, std::span<const float> query,
                                   const std::vector<Scored>& entry, std::size_t ef,
                                   std::size_t layer, std::vector<std::uint32_t>& visited,
                                   std::uint32_t& epoch) const;
  std::vector<std::uint32_t> select_neighbors(const TokenMatrix& vectors,
                                              const std::vector<Scored>& candidates,
                                              std::size_t max_count) const;
  std::size_t max_degree(std::size_t layer) const noexcept { return layer == 0 ? 2 * m_ : m_; }

  std::size_t m_ = 12;
  std::size_t ef_construction_ = 200;
  std::size_t max_level_ = 0;
  std::uint32_t entry_ = 0;
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;

  // Build-time scratch.
  std::vector<std::uint32_t> visited_;
  std::uint32_t epoch_ = 0;
};

}  // namespace mvtp::detail
