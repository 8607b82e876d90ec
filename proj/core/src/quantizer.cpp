#include "mvtp/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "mvtp/clustering.hpp"
#include "mvtp/error.hpp"

namespace mvtp {

namespace {

constexpr std::string_view kCodecMagic = "MVQC";
constexpr std::string_view kQuantizedMagic = "MVQV";
constexpr std::uint32_t kVersion = 1;

std::size_t argmax_centroid(const TokenMatrix& centroids, std::span<const float> v) {
  std::size_t best = 0;
  float best_sim = dot(v, centroids.row(0));
  for (std::size_t c = 1; c < centroids.rows(); ++c) {
    const float s = dot(v, centroids.row(c));
    if (s > best_sim) {
      best_sim = s;
      best = c;
    }
  }
  return best;
}

// Linear-interpolation quantile of sorted data.
float quantile(const std::vector<float>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return static_cast<float>(sorted[lo] + frac * (static_cast<double>(sorted[hi]) - sorted[lo]));
}

}  // namespace

bool is_supported_bit_width(unsigned bits) noexcept { return bits == 1 || bits == 2 || bits == 4; }

unsigned Codec::bucket_of(float residual) const noexcept {
  return static_cast<unsigned>(std::lower_bound(cutoffs.begin(), cutoffs.end(), residual) -
                               cutoffs.begin());
}

std::pair<float, float> Codec::bucket_bounds(unsigned bucket) const noexcept {
  const float lo = bucket == 0 ? std::min(residual_min, cutoffs.front()) : cutoffs[bucket - 1];
  const float hi =
      bucket + 1 == bucket_count() ? std::max(residual_max, cutoffs.back()) : cutoffs[bucket];
  return {lo, hi};
}

Codec train_codec(const TokenMatrix& sample, std::size_t n_centroids, unsigned bits,
                  std::uint64_t seed) {
  if (!is_supported_bit_width(bits)) {
    throw InvalidArgument("unsupported bit width " + std::to_string(bits) + " (use 1, 2 or 4)");
  }
  if (n_centroids == 0) throw InvalidArgument("n_centroids must be >= 1");
  if (n_centroids > sample.rows()) {
    throw InvalidArgument("n_centroids (" + std::to_string(n_centroids) +
                          ") exceeds sample size (" + std::to_string(sample.rows()) + ")");
  }

  Codec codec;
  codec.dim = sample.dim();
  codec.bits = bits;
  codec.centroids = spherical_kmeans_detailed(sample, n_centroids, seed).centroids;

  const std::size_t dim = sample.dim();
  std::vector<float> residuals;
  residuals.reserve(sample.rows() * dim);
  for (std::size_t i = 0; i < sample.rows(); ++i) {
    const auto v = sample.row(i);
    const auto c = codec.centroids.row(argmax_centroid(codec.centroids, v));
    for (std::size_t j = 0; j < dim; ++j) residuals.push_back(v[j] - c[j]);
  }

  std::vector<float> sorted = residuals;
  std::sort(sorted.begin(), sorted.end());
  codec.residual_min = sorted.front();
  codec.residual_max = sorted.back();

  const std::size_t buckets = codec.bucket_count();
  codec.cutoffs.resize(buckets - 1);
  for (std::size_t i = 1; i < buckets; ++i) {
    codec.cutoffs[i - 1] = quantile(sorted, static_cast<double>(i) / static_cast<double>(buckets));
  }

  std::vector<double> sums(buckets, 0.0);
  std::vector<std::size_t> counts(buckets, 0);
  for (float r : residuals) {
    const unsigned b = codec.bucket_of(r);
    sums[b] += r;
    ++counts[b];
  }
  codec.weights.resize(buckets);
  for (std::size_t b = 0; b < buckets; ++b) {
    if (counts[b] > 0) {
      codec.weights[b] = static_cast<float>(sums[b] / static_cast<double>(counts[b]));
    } else {
      // Empty bucket: centre of its (clipped) interval.
      const auto [lo, hi] = codec.bucket_bounds(static_cast<unsigned>(b));
      codec.weights[b] = 0.5F * (lo + hi);
    }
  }
  return codec;
}

unsigned code_at(std::span<const std::uint8_t> codes, unsigned bits, std::size_t component) noexcept {
  const std::size_t bit = component * bits;
  const unsigned mask = (1U << bits) - 1U;
  return (codes[bit / 8] >> (bit % 8)) & mask;
}

QuantizedVector encode(const Codec& codec, std::span<const float> v) {
  if (v.size() != codec.dim) {
    throw DimensionMismatch("dim mismatch: vector dim " + std::to_string(v.size()) +
                            ", codec dim " + std::to_string(codec.dim));
  }
  QuantizedVector qv;
  const std::size_t c = argmax_centroid(codec.centroids, v);
  qv.centroid_id = static_cast<std::uint32_t>(c);
  qv.codes.assign(codec.code_bytes(), 0);
  const auto centroid = codec.centroids.row(c);
  for (std::size_t j = 0; j < codec.dim; ++j) {
    const unsigned b = codec.bucket_of(v[j] - centroid[j]);
    const std::size_t bit = j * codec.bits;
    qv.codes[bit / 8] |= static_cast<std::uint8_t>(b << (bit % 8));
  }
  return qv;
}

void decode_into(const Codec& codec, const QuantizedVector& qv, std::span<float> out) {
  if (qv.centroid_id >= codec.n_centroids()) {
    throw InvalidArgument("centroid id " + std::to_string(qv.centroid_id) + " out of range");
  }
  if (qv.codes.size() != codec.code_bytes()) throw InvalidArgument("code length mismatch");
  if (out.size() != codec.dim) throw DimensionMismatch("dim mismatch in decode");
  const auto centroid = codec.centroids.row(qv.centroid_id);
  for (std::size_t j = 0; j < codec.dim; ++j) {
    out[j] = centroid[j] + codec.weights[code_at(qv.codes, codec.bits, j)];
  }
}

std::vector<float> decode(const Codec& codec, const QuantizedVector& qv) {
  std::vector<float> out(codec.dim);
  decode_into(codec, qv, out);
  return out;
}

// Codec layout: "MVQC" u32 version u32 dim u32 n_centroids u32 bits
//   f32 centroids[n_centroids * dim] f32 cutoffs[2^bits - 1]
//   f32 weights[2^bits] f32 residual_min f32 residual_max
void save_codec(const Codec& codec, std::ostream& out) {
  binio::write_magic(out, kCodecMagic);
  binio::write_le<std::uint32_t>(out, kVersion);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(codec.dim));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(codec.n_centroids()));
  binio::write_le<std::uint32_t>(out, codec.bits);
  binio::write_floats(out, codec.centroids.values());
  binio::write_floats(out, codec.cutoffs);
  binio::write_floats(out, codec.weights);
  binio::write_le<float>(out, codec.residual_min);
  binio::write_le<float>(out, codec.residual_max);
}

void save_codec(const Codec& codec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  save_codec(codec, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

Codec load_codec(std::istream& in) {
  binio::expect_magic(in, kCodecMagic);
  if (binio::read_le<std::uint32_t>(in, "version") != kVersion) {
    throw FormatError("unsupported codec version");
  }
  Codec codec;
  codec.dim = binio::read_le<std::uint32_t>(in, "dim");
  const auto n = binio::read_le<std::uint32_t>(in, "n_centroids");
  codec.bits = binio::read_le<std::uint32_t>(in, "bits");
  if (!is_supported_bit_width(codec.bits)) throw FormatError("unsupported codec bit width");
  if (codec.dim == 0 || n == 0) throw FormatError("empty codec");
  std::vector<float> centroids(static_cast<std::size_t>(n) * codec.dim);
  binio::read_floats(in, centroids, "centroids");
  codec.centroids = TokenMatrix(n, codec.dim, std::move(centroids));
  codec.cutoffs.resize(codec.bucket_count() - 1);
  binio::read_floats(in, codec.cutoffs, "cutoffs");
  codec.weights.resize(codec.bucket_count());
  binio::read_floats(in, codec.weights, "weights");
  codec.residual_min = binio::read_le<float>(in, "residual min");
  codec.residual_max = binio::read_le<float>(in, "residual max");
  if (!std::is_sorted(codec.cutoffs.begin(), codec.cutoffs.end())) {
    throw FormatError("codec cutoffs are not sorted");
  }
  binio::expect_eof(in);
  return codec;
}

Codec load_codec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open codec " + path.string());
  return load_codec(in);
}

std::size_t QuantizedCorpus::vector_count() const noexcept {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.tokens.size();
  return n;
}

QuantizedCorpus encode_corpus(const Codec& codec,
                              const std::vector<std::pair<std::string, const TokenMatrix*>>& docs) {
  QuantizedCorpus qc;
  qc.dim = codec.dim;
  qc.bits = codec.bits;
  qc.docs.reserve(docs.size());
  for (const auto& [id, m] : docs) {
    QuantizedDocument qd;
    qd.doc_id = id;
    qd.tokens.reserve(m->rows());
    for (std::size_t r = 0; r < m->rows(); ++r) qd.tokens.push_back(encode(codec, m->row(r)));
    qc.docs.push_back(std::move(qd));
  }
  return qc;
}

TokenMatrix decode_document(const Codec& codec, const QuantizedDocument& doc) {
  TokenMatrix m(doc.tokens.size(), codec.dim);
  for (std::size_t r = 0; r < doc.tokens.size(); ++r) decode_into(codec, doc.tokens[r], m.row(r));
  return m;
}

// Quantized corpus layout mirrors .mvec: "MVQV" u32 version u32 dim u32 bits
//   u64 doc_count, then per document u16 id_len, id bytes, u32 token_count,
//   token_count x (u32 centroid_id, ceil(dim * bits / 8) code bytes).
void write_quantized_corpus(const QuantizedCorpus& qc, std::ostream& out) {
  binio::write_magic(out, kQuantizedMagic);
  binio::write_le<std::uint32_t>(out, kVersion);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(qc.dim));
  binio::write_le<std::uint32_t>(out, qc.bits);
  binio::write_le<std::uint64_t>(out, qc.docs.size());
  const std::size_t code_bytes = (qc.dim * qc.bits + 7) / 8;
  for (const auto& doc : qc.docs) {
    binio::write_id(out, doc.doc_id);
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(doc.tokens.size()));
    for (const auto& t : doc.tokens) {
      if (t.codes.size() != code_bytes) throw InvalidArgument("code length mismatch");
      binio::write_le<std::uint32_t>(out, t.centroid_id);
      binio::write_bytes(out, t.codes);
    }
  }
}

void write_quantized_corpus(const QuantizedCorpus& qc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_quantized_corpus(qc, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

QuantizedCorpus read_quantized_corpus(std::istream& in) {
  binio::expect_magic(in, kQuantizedMagic);
  if (binio::read_le<std::uint32_t>(in, "version") != kVersion) {
    throw FormatError("unsupported quantized corpus version");
  }
  QuantizedCorpus qc;
  qc.dim = binio::read_le<std::uint32_t>(in, "dim");
  qc.bits = binio::read_le<std::uint32_t>(in, "bits");
  if (!is_supported_bit_width(qc.bits)) throw FormatError("unsupported bit width");
  const auto count = binio::read_le<std::uint64_t>(in, "doc count");
  const std::size_t code_bytes = (qc.dim * qc.bits + 7) / 8;
  for (std::uint64_t d = 0; d < count; ++d) {
    QuantizedDocument doc;
    doc.doc_id = binio::read_id(in);
    const auto tokens = binio::read_le<std::uint32_t>(in, "token count");
    doc.tokens.resize(tokens);
    for (auto& t : doc.tokens) {
      t.centroid_id = binio::read_le<std::uint32_t>(in, "centroid id");
      t.codes.resize(code_bytes);
      binio::read_bytes(in, t.codes, "codes");
    }
    qc.docs.push_back(std::move(doc));
  }
  binio::expect_eof(in);
  return qc;
}

QuantizedCorpus read_quantized_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open quantized corpus " + path.string());
  return read_quantized_corpus(in);
}

std::uint64_t quantized_corpus_size(const QuantizedCorpus& qc) {
  std::uint64_t size = 4 + 4 + 4 + 4 + 8;
  const std::uint64_t per_vector = 4 + (qc.dim * qc.bits + 7) / 8;
  for (const auto& doc : qc.docs) size += 2 + doc.doc_id.size() + 4 + per_vector * doc.tokens.size();
  return size;
}

}  // namespace mvtp
