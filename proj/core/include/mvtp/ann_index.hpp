#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mvtp/token_matrix.hpp"

namespace mvtp {

/// Identity of one stored vector: document ordinal and row within that
/// document's (pooled) matrix.
struct TokenRef {
  std::uint32_t doc = 0;
  std::uint32_t token = 0;

  auto operator<=>(const TokenRef&) const = default;
};

struct TokenHit {
  TokenRef ref;
  float similarity = 0.0F;

  bool operator==(const TokenHit&) const = default;
};

enum class IndexBackend { flat, hnsw };

std::string_view to_string(IndexBackend backend) noexcept;
IndexBackend parse_index_backend(std::string_view name);

struct IndexParams {
  IndexBackend backend = IndexBackend::hnsw;
  std::size_t m = 12;
  std::size_t ef_construction = 200;
  std::size_t ef_search = 256;
  std::uint64_t seed = 42;

  /// Throws InvalidArgument unless m >= 2, ef_construction >= m and
  /// ef_search >= 1.
  void validate() const;
  bool operator==(const IndexParams&) const = default;
};

namespace detail {
class HnswGraph;
}

/// Token-level nearest-neighbour index scored by dot product.
///
/// The flat backend scans every vector and is exact; ties are broken by
/// TokenRef ascending. The hnsw backend is a layered proximity graph (max
/// degree m on upper layers, 2m on layer 0). After build the index is
/// immutable apart from tombstone deletion on the flat backend.
class TokenIndex {
 public:
  TokenIndex();
  TokenIndex(TokenIndex&&) noexcept;
  TokenIndex& operator=(TokenIndex&&) noexcept;
  ~TokenIndex();

  /// Throws InvalidArgument on empty input or a refs/rows count mismatch.
  static TokenIndex build(TokenMatrix vectors, std::vector<TokenRef> refs,
                          const IndexParams& params);

  /// Best k hits, highest similarity first. Returns every live vector when k
  /// exceeds the index size. `ef_search` overrides the build-time beam for
  /// hnsw; the beam is always at least k.
  /// Throws DimensionMismatch or InvalidArgument (k == 0).
  std::vector<TokenHit> search(std::span<const float> query, std::size_t k,
                               std::optional<std::size_t> ef_search = {}) const;

  std::size_t size() const noexcept { return refs_.size(); }
  std::size_t dim() const noexcept { return vectors_.dim(); }
  const IndexParams& params() const noexcept { return params_; }
  IndexBackend backend() const noexcept { return params_.backend; }
  const TokenMatrix& vectors() const noexcept { return vectors_; }
  const std::vector<TokenRef>& refs() const noexcept { return refs_; }

  /// Flat indexes tombstone deleted vectors; hnsw indexes must be rebuilt.
  bool supports_delete() const noexcept { return params_.backend == IndexBackend::flat; }
  /// Tombstones every vector of a document and returns how many were
  /// removed. Throws Unsupported on hnsw.
  std::size_t remove_document(std::uint32_t doc);
  std::size_t live_size() const noexcept;

  /// Layer-0 neighbour lists (hnsw only; empty for flat).
  std::vector<std::vector<std::uint32_t>> base_layer() const;
  std::size_t max_level() const noexcept;

  void save(const std::filesystem::path& path) const;
  void save(std::ostream& out) const;
  static TokenIndex load(const std::filesystem::path& path);
  static TokenIndex load(std::istream& in);
  /// Exact number of bytes save() writes.
  std::uint64_t serialized_size() const;

 private:
  std::vector<TokenHit> search_flat(std::span<const float> query, std::size_t k) const;

  IndexParams params_;
  TokenMatrix vectors_;
  std::vector<TokenRef> refs_;
  std::vector<std::uint8_t> tombstones_;
  std::unique_ptr<detail::HnswGraph> graph_;
};

}  // namespace mvtp
