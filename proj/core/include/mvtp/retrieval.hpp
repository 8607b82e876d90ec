#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvtp/ann_index.hpp"
#include "mvtp/corpus_io.hpp"
#include "mvtp/pooling.hpp"
#include "mvtp/quantizer.hpp"

namespace mvtp {

struct CodecSettings {
  std::size_t n_centroids = 64;
  unsigned bits = 2;
  std::uint64_t seed = 0;
  /// Scale decoded vectors to unit norm before indexing and scoring.
  bool renormalize_decoded = false;

  bool operator==(const CodecSettings&) const = default;
};

struct PipelineConfig {
  PoolingConfig pooling;
  IndexParams index;
  std::optional<CodecSettings> codec;
  /// Token hits fetched per query token.
  std::size_t candidate_k = 512;
  /// Upper bound on documents re-scored with exact maxsim.
  std::size_t rescore_docs = 8192;
  /// Documents returned per query.
  std::size_t top_n = 100;

  /// Throws InvalidArgument on violated bounds (candidate_k >= 1,
  /// 1 <= top_n <= rescore_docs, and the pooling/index constraints).
  void validate() const;
};

struct ArtifactManifest {
  PoolingConfig pooling;
  IndexParams index;
  std::optional<CodecSettings> codec;
  std::uint64_t corpus_checksum = 0;
  std::size_t dim = 0;
  std::size_t doc_count = 0;
  std::size_t original_vectors = 0;
  std::size_t pooled_vectors = 0;
  std::vector<std::size_t> original_token_counts;
  std::vector<std::vector<std::size_t>> cluster_sizes;
};

/// Everything needed to answer queries: the stored per-document matrices
/// (pooled vectors, or their decoded form when a codec is used), the token
/// index built over exactly those vectors, and a manifest.
struct SearchIndexArtifact {
  ArtifactManifest manifest;
  std::vector<std::string> doc_ids;
  std::vector<TokenMatrix> stored;
  std::optional<Codec> codec;
  std::optional<QuantizedCorpus> quantized;
  TokenIndex index;

  std::size_t stored_vector_count() const noexcept;
};

SearchIndexArtifact index_corpus(const Corpus& corpus, const PipelineConfig& cfg);

/// Builds an artifact from an already pooled corpus. cfg.pooling is ignored;
/// the pooled corpus carries its own configuration.
SearchIndexArtifact index_pooled(const PooledCorpus& pooled, const PipelineConfig& cfg,
                                 std::uint64_t corpus_checksum);

/// For each query: fetch candidate_k token hits per query row, keep the
/// rescore_docs documents with the best single hit, score them with exact
/// maxsim and return the top_n by score (ties by doc id).
/// Throws DimensionMismatch.
RunList retrieve(const SearchIndexArtifact& artifact, const Corpus& queries,
                 const PipelineConfig& cfg);

/// Directory layout: manifest.json, index.mvix and either pooled.mvec or
/// codec.mvqc + quantized.mvqv.
void save_artifact(const SearchIndexArtifact& artifact, const std::filesystem::path& dir);
/// Throws FormatError when stored data disagrees with the manifest.
SearchIndexArtifact load_artifact(const std::filesystem::path& dir);

/// Serialized size of the vector store file (pooled.mvec or quantized.mvqv).
std::uint64_t vector_store_bytes(const SearchIndexArtifact& artifact);

}  // namespace mvtp
