#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mvtp/clustering.hpp"
#include "mvtp/corpus_io.hpp"
#include "mvtp/token_matrix.hpp"

namespace mvtp {

enum class PoolingMethod { none, sequential, kmeans, hierarchical };

std::string_view to_string(PoolingMethod method) noexcept;
/// Throws InvalidArgument for an unknown name.
PoolingMethod parse_pooling_method(std::string_view name);

struct PoolingConfig {
  PoolingMethod method = PoolingMethod::hierarchical;
  std::size_t factor = 2;
  std::uint64_t seed = 0;
  bool renormalize = true;

  /// Throws InvalidArgument when factor < 1.
  void validate() const;
  bool operator==(const PoolingConfig&) const = default;
};

struct PooledDocument {
  std::string doc_id;
  TokenMatrix pooled;
  std::vector<std::size_t> cluster_sizes;
  std::size_t original_token_count = 0;
};

struct PooledCorpus {
  PoolingConfig config;
  std::size_t dim = 0;
  std::vector<PooledDocument> docs;

  std::size_t original_vector_count() const noexcept;
  std::size_t pooled_vector_count() const noexcept;
  /// The pooled matrices as a plain corpus, in document order.
  Corpus to_corpus() const;
};

/// clamp(floor(n / factor) + 1, 1, n).
std::size_t target_cluster_count(std::size_t n, std::size_t factor);

/// Row c of the result is the mean of the rows labelled c, optionally scaled
/// to unit norm. Throws InvalidArgument when a renormalized mean is zero.
TokenMatrix mean_pool_clusters(const TokenMatrix& m, const Assignment& a,
                               bool renormalize);

/// Cluster assignment that pool_document would use for this matrix.
Assignment pooling_assignment(const TokenMatrix& m, const PoolingConfig& cfg);

PooledDocument pool_document(const TokenMatrix& m, const PoolingConfig& cfg,
                             std::string doc_id = {});

/// Pools every document. Documents may be processed concurrently; output is
/// in corpus order. k-means documents use a seed derived from (cfg.seed,
/// document ordinal).
PooledCorpus pool_corpus(const Corpus& corpus, const PoolingConfig& cfg);

/// Seed pool_corpus hands to the k-means run of document `ordinal`.
std::uint64_t document_seed(std::uint64_t seed, std::size_t ordinal) noexcept;

/// Sidecar manifest path written next to a pooled corpus file.
std::filesystem::path pooled_manifest_path(const std::filesystem::path& corpus_path);

/// Writes the pooled vectors with corpus_io and the JSON sidecar manifest
/// {method, factor, seed, renormalize, documents: [{doc_id,
/// original_token_count, cluster_sizes}]}.
void write_pooled_corpus(const PooledCorpus& pooled, const std::filesystem::path& path,
                         CorpusFormat format);

/// Reads a pooled corpus with its sidecar. Throws FormatError when the
/// sidecar is missing or disagrees with the vector file.
PooledCorpus read_pooled_corpus(const std::filesystem::path& path, CorpusFormat format);

/// Wraps an unpooled corpus as a PooledCorpus with method none.
PooledCorpus identity_pooled(const Corpus& corpus);

}  // namespace mvtp
