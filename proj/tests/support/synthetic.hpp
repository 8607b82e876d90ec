#pragma once

// Deterministic synthetic data for tests, acceptance checks and benchmarks.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mvtp/corpus_io.hpp"
#include "mvtp/token_matrix.hpp"

namespace mvtp::testing {

inline std::vector<float> random_unit_vector(std::size_t dim, std::mt19937_64& gen) {
  std::normal_distribution<float> normal(0.0F, 1.0F);
  std::vector<float> v(dim);
  for (;;) {
    for (auto& x : v) x = normal(gen);
    if (normalize(v)) return v;
  }
}

inline TokenMatrix random_unit_matrix(std::size_t rows, std::size_t dim, std::mt19937_64& gen) {
  TokenMatrix m;
  for (std::size_t r = 0; r < rows; ++r) m.append_row(random_unit_vector(dim, gen));
  return m;
}

/// center + sigma * N(0, I), normalized.
inline std::vector<float> perturbed(std::span<const float> center, float sigma, std::mt19937_64& gen) {
  std::normal_distribution<float> normal(0.0F, sigma);
  std::vector<float> v(center.begin(), center.end());
  for (auto& x : v) x += normal(gen);
  normalize(v);
  return v;
}

inline std::string doc_name(std::size_t i) {
  std::string s = std::to_string(i);
  return "d" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

inline Corpus random_corpus(std::size_t docs, std::size_t tokens, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Corpus c(dim);
  for (std::size_t d = 0; d < docs; ++d) c.add(doc_name(d), random_unit_matrix(tokens, dim, gen));
  return c;
}

/// Documents of random length in [min_tokens, max_tokens].
inline Corpus ragged_corpus(std::size_t docs, std::size_t min_tokens, std::size_t max_tokens,
                            std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> len(min_tokens, max_tokens);
  Corpus c(dim);
  for (std::size_t d = 0; d < docs; ++d) c.add(doc_name(d), random_unit_matrix(len(gen), dim, gen));
  return c;
}

/// Every distinct token appears exactly twice in the document.
inline Corpus duplicated_corpus(std::size_t docs, std::size_t distinct_tokens, std::size_t dim,
                                std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Corpus c(dim);
  for (std::size_t d = 0; d < docs; ++d) {
    TokenMatrix base = random_unit_matrix(distinct_tokens, dim, gen);
    TokenMatrix m;
    for (std::size_t t = 0; t < distinct_tokens; ++t) m.append_row(base.row(t));
    for (std::size_t t = 0; t < distinct_tokens; ++t) m.append_row(base.row(t));
    c.add(doc_name(d), std::move(m));
  }
  return c;
}

/// Rows drawn around `clusters` random centres with per-component noise.
inline TokenMatrix clustered_matrix(std::size_t rows, std::size_t dim, std::size_t clusters,
                                    float sigma, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  TokenMatrix centers = random_unit_matrix(clusters, dim, gen);
  std::uniform_int_distribution<std::size_t> pick(0, clusters - 1);
  TokenMatrix m;
  for (std::size_t r = 0; r < rows; ++r) m.append_row(perturbed(centers.row(pick(gen)), sigma, gen));
  return m;
}

inline Corpus queries_from(std::vector<TokenMatrix> matrices) {
  Corpus q;
  for (std::size_t i = 0; i < matrices.size(); ++i) q.add("q" + std::to_string(i), std::move(matrices[i]));
  return q;
}

/// Corpus with planted relevance. Documents are bags of noisy vocabulary
/// words; each query is a few tokens sampled from one document plus noise,
/// and that document is its only relevant one.
struct PlantedDataset {
  Corpus corpus;
  Corpus queries;
  Qrels qrels;
};

struct PlantedOptions {
  std::size_t docs = 120;
  std::size_t tokens = 48;
  std::size_t dim = 32;
  std::size_t vocab = 200;
  float token_noise = 0.35F;
  std::size_t queries = 60;
  std::size_t query_tokens = 6;
  float query_noise = 0.35F;
  std::uint64_t seed = 7;
};

inline PlantedDataset planted_dataset(const PlantedOptions& o) {
  std::mt19937_64 gen(o.seed);
  const TokenMatrix vocab = random_unit_matrix(o.vocab, o.dim, gen);
  std::uniform_int_distribution<std::size_t> word(0, o.vocab - 1);
  PlantedDataset ds;
  ds.corpus = Corpus(o.dim);
  for (std::size_t d = 0; d < o.docs; ++d) {
    TokenMatrix m;
    for (std::size_t t = 0; t < o.tokens; ++t) m.append_row(perturbed(vocab.row(word(gen)), o.token_noise, gen));
    ds.corpus.add(doc_name(d), std::move(m));
  }
  std::uniform_int_distribution<std::size_t> doc(0, o.docs - 1);
  std::uniform_int_distribution<std::size_t> tok(0, o.tokens - 1);
  ds.queries = Corpus(o.dim);
  for (std::size_t q = 0; q < o.queries; ++q) {
    const std::size_t target = doc(gen);
    TokenMatrix m;
    for (std::size_t t = 0; t < o.query_tokens; ++t) {
      m.append_row(perturbed(ds.corpus[target].matrix.row(tok(gen)), o.query_noise, gen));
    }
    const std::string qid = "q" + std::to_string(q);
    ds.queries.add(qid, std::move(m));
    ds.qrels.set(qid, ds.corpus[target].id, 1);
  }
  return ds;
}

}  // namespace mvtp::testing
