#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvtp/token_matrix.hpp"

namespace mvtp {

/// Centroid plus b-bit residual codec. One set of bucket cutoffs and
/// reconstruction weights is shared by every dimension.
struct Codec {
  std::size_t dim = 0;
  unsigned bits = 2;
  TokenMatrix centroids;
  /// 2^bits - 1 non-decreasing thresholds; bucket b holds residuals r with
  /// cutoffs[b-1] < r <= cutoffs[b].
  std::vector<float> cutoffs;
  /// 2^bits reconstruction values, one per bucket.
  std::vector<float> weights;
  /// Extremes of the training residuals; bounds for the outer buckets.
  float residual_min = 0.0F;
  float residual_max = 0.0F;

  std::size_t n_centroids() const noexcept { return centroids.rows(); }
  std::size_t bucket_count() const noexcept { return std::size_t{1} << bits; }
  /// ceil(dim * bits / 8)
  std::size_t code_bytes() const noexcept { return (dim * bits + 7) / 8; }
  /// Stored bytes per vector: 4-byte centroid id plus packed codes.
  std::size_t payload_bytes() const noexcept { return 4 + code_bytes(); }

  /// Bucket index of a residual component: number of cutoffs strictly below
  /// it.
  unsigned bucket_of(float residual) const noexcept;
  /// Interval covered by a bucket, outer buckets clipped to the training
  /// extremes.
  std::pair<float, float> bucket_bounds(unsigned bucket) const noexcept;

  bool operator==(const Codec&) const = default;
};

struct QuantizedVector {
  std::uint32_t centroid_id = 0;
  /// Packed codes, component 0 in the lowest bits of byte 0.
  std::vector<std::uint8_t> codes;

  bool operator==(const QuantizedVector&) const = default;
};

bool is_supported_bit_width(unsigned bits) noexcept;

/// Centroids come from spherical k-means on the sample; cutoffs are the
/// empirical quantiles (linear interpolation) of all residual components at
/// i / 2^bits, weights the mean residual inside each bucket.
/// Throws InvalidArgument for unsupported bits, n_centroids == 0 or
/// n_centroids > sample rows.
Codec train_codec(const TokenMatrix& sample, std::size_t n_centroids, unsigned bits,
                  std::uint64_t seed);

/// Throws DimensionMismatch.
QuantizedVector encode(const Codec& codec, std::span<const float> v);
/// centroid + weight[code] per component; not renormalized.
/// Throws InvalidArgument for an out-of-range centroid id or code length.
std::vector<float> decode(const Codec& codec, const QuantizedVector& qv);
void decode_into(const Codec& codec, const QuantizedVector& qv, std::span<float> out);

/// Unpacked bucket code of one component.
unsigned code_at(std::span<const std::uint8_t> codes, unsigned bits,
                 std::size_t component) noexcept;

void save_codec(const Codec& codec, const std::filesystem::path& path);
void save_codec(const Codec& codec, std::ostream& out);
Codec load_codec(const std::filesystem::path& path);
Codec load_codec(std::istream& in);

struct QuantizedDocument {
  std::string doc_id;
  std::vector<QuantizedVector> tokens;

  bool operator==(const QuantizedDocument&) const = default;
};

struct QuantizedCorpus {
  std::size_t dim = 0;
  unsigned bits = 2;
  std::vector<QuantizedDocument> docs;

  std::size_t vector_count() const noexcept;
  bool operator==(const QuantizedCorpus&) const = default;
};

QuantizedCorpus encode_corpus(const Codec& codec,
                              const std::vector<std::pair<std::string, const TokenMatrix*>>& docs);
TokenMatrix decode_document(const Codec& codec, const QuantizedDocument& doc);

void write_quantized_corpus(const QuantizedCorpus& qc, const std::filesystem::path& path);
void write_quantized_corpus(const QuantizedCorpus& qc, std::ostream& out);
QuantizedCorpus read_quantized_corpus(const std::filesystem::path& path);
QuantizedCorpus read_quantized_corpus(std::istream& in);
std::uint64_t quantized_corpus_size(const QuantizedCorpus& qc);

}  // namespace mvtp
