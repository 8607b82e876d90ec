#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mvtp/error.hpp"
#include "mvtp/quantizer.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

using namespace mvtp;

namespace {

double cosine(std::span<const float> a, std::span<const float> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// Decodes with the codec's centroid choice but assigns each residual
// component to the nearest reconstruction weight by exhaustive search.
std::vector<float> nearest_weight_decode(const Codec& codec, std::span<const float> v, std::uint32_t centroid) {
  std::vector<float> out(v.size());
  const auto c = codec.centroids.row(centroid);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const float r = v[i] - c[i];
    float best = codec.weights[0];
    for (float w : codec.weights)
      if (std::abs(w - r) < std::abs(best - r)) best = w;
    out[i] = c[i] + best;
  }
  return out;
}

}  // namespace

TEST_CASE("degenerate sample gives zero cutoffs and weights") {
  TokenMatrix m;
  for (int i = 0; i < 4; ++i) m.append_row(std::vector<float>{0.6F, 0.8F, 0.0F});
  const Codec codec = train_codec(m, 1, 2, 0);
  CHECK(codec.cutoffs == std::vector<float>{0, 0, 0});
  CHECK(codec.weights == std::vector<float>{0, 0, 0, 0});
  const auto qv = encode(codec, m.row(0));
  const auto dec = decode(codec, qv);
  for (std::size_t i = 0; i < 3; ++i) CHECK(dec[i] == m.row(0)[i]);
}

TEST_CASE("structure for each bit width") {
  const TokenMatrix m = testing::clustered_matrix(300, 16, 4, 0.3F, 1);
  for (unsigned bits : {1U, 2U, 4U}) {
    const Codec codec = train_codec(m, 8, bits, 3);
    CHECK(codec.cutoffs.size() == (1U << bits) - 1);
    CHECK(codec.weights.size() == (1U << bits));
    CHECK(std::is_sorted(codec.cutoffs.begin(), codec.cutoffs.end()));
    CHECK(codec.code_bytes() == (16 * bits + 7) / 8);
  }
  CHECK_THROWS_AS(train_codec(m, 8, 3, 0), InvalidArgument);
  CHECK_THROWS_AS(train_codec(m, 0, 2, 0), InvalidArgument);
  CHECK_THROWS_AS(train_codec(m, 301, 2, 0), InvalidArgument);
}

TEST_CASE("a centroid encodes into the zero bucket") {
  const TokenMatrix m = testing::clustered_matrix(400, 32, 8, 0.3F, 2);
  const Codec codec = train_codec(m, 16, 2, 5);
  const auto qv = encode(codec, codec.centroids.row(3));
  CHECK(qv.centroid_id == 3);
  const unsigned zero_bucket = codec.bucket_of(0.0F);
  const auto [lo, hi] = codec.bucket_bounds(zero_bucket);
  CHECK(lo <= 0.0F);
  CHECK(hi >= 0.0F);
  for (std::size_t i = 0; i < 32; ++i) CHECK(code_at(qv.codes, 2, i) == zero_bucket);
}

TEST_CASE("128-dimensional 2-bit codes take 32 bytes") {
  const TokenMatrix m = testing::clustered_matrix(200, 128, 8, 0.3F, 3);
  const Codec codec = train_codec(m, 8, 2, 1);
  const auto qv = encode(codec, m.row(0));
  CHECK(qv.codes.size() == 32);
  CHECK(codec.payload_bytes() == 36);
}

TEST_CASE("decode error is bounded by the bucket width") {
  const TokenMatrix m = testing::clustered_matrix(500, 32, 8, 0.3F, 4);
  const Codec codec = train_codec(m, 16, 2, 2);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto qv = encode(codec, m.row(r));
    const auto dec = decode(codec, qv);
    const auto c = codec.centroids.row(qv.centroid_id);
    for (std::size_t i = 0; i < 32; ++i) {
      const unsigned b = code_at(qv.codes, 2, i);
      const auto [lo, hi] = codec.bucket_bounds(b);
      const float residual = m.row(r)[i] - c[i];
      CHECK(std::abs((dec[i] - c[i]) - residual) <= (hi - lo) + 1e-6F);
    }
  }
}

TEST_CASE("round trip quality against the nearest-weight oracle") {
  const TokenMatrix m = testing::clustered_matrix(2000, 64, 8, 0.15F, 5);
  const Codec codec = train_codec(m, 64, 2, 7);
  double ours = 0.0, oracle = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto qv = encode(codec, m.row(r));
    ours += cosine(m.row(r), decode(codec, qv));
    oracle += cosine(m.row(r), nearest_weight_decode(codec, m.row(r), qv.centroid_id));
  }
  ours /= static_cast<double>(m.rows());
  oracle /= static_cast<double>(m.rows());
  CHECK(ours >= 0.95);
  CHECK(ours >= oracle - 0.01);
}

TEST_CASE("encoding is deterministic") {
  const TokenMatrix m = testing::clustered_matrix(300, 16, 4, 0.3F, 6);
  const Codec a = train_codec(m, 8, 2, 9);
  const Codec b = train_codec(m, 8, 2, 9);
  CHECK(a == b);
  CHECK(encode(a, m.row(7)) == encode(b, m.row(7)));
}

TEST_CASE("code packing") {
  std::vector<std::uint8_t> codes{0b11100100, 0b00000001};
  CHECK(code_at(codes, 2, 0) == 0);
  CHECK(code_at(codes, 2, 1) == 1);
  CHECK(code_at(codes, 2, 2) == 2);
  CHECK(code_at(codes, 2, 3) == 3);
  CHECK(code_at(codes, 2, 4) == 1);
  CHECK(code_at(codes, 4, 0) == 4);
  CHECK(code_at(codes, 1, 2) == 1);
}

TEST_CASE("codec and quantized corpus files") {
  testing::TempDir dir;
  const Corpus c = testing::random_corpus(6, 5, 16, 2);
  TokenMatrix sample;
  for (const auto& d : c.docs())
    for (std::size_t r = 0; r < d.matrix.rows(); ++r) sample.append_row(d.matrix.row(r));
  const Codec codec = train_codec(sample, 4, 2, 0);
  save_codec(codec, dir / "c.mvqc");
  CHECK(load_codec(dir / "c.mvqc") == codec);

  std::vector<std::pair<std::string, const TokenMatrix*>> docs;
  for (const auto& d : c.docs()) docs.emplace_back(d.id, &d.matrix);
  const QuantizedCorpus qc = encode_corpus(codec, docs);
  CHECK(qc.vector_count() == 30);
  write_quantized_corpus(qc, dir / "q.mvqv");
  CHECK(std::filesystem::file_size(dir / "q.mvqv") == quantized_corpus_size(qc));
  const QuantizedCorpus back = read_quantized_corpus(dir / "q.mvqv");
  CHECK(back == qc);
  const TokenMatrix dec = decode_document(codec, back.docs[2]);
  CHECK(dec.rows() == 5);

  std::istringstream junk("MVQC\x07");
  CHECK_THROWS_AS(load_codec(junk), FormatError);
}

TEST_CASE("decode rejects bad input") {
  const TokenMatrix m = testing::clustered_matrix(50, 8, 2, 0.3F, 7);
  const Codec codec = train_codec(m, 4, 2, 0);
  QuantizedVector qv = encode(codec, m.row(0));
  qv.centroid_id = 99;
  CHECK_THROWS_AS(decode(codec, qv), InvalidArgument);
  qv.centroid_id = 0;
  qv.codes.pop_back();
  CHECK_THROWS_AS(decode(codec, qv), InvalidArgument);
  const std::vector<float> wrong(9, 0.1F);
  CHECK_THROWS_AS(encode(codec, wrong), DimensionMismatch);
}
