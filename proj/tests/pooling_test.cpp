#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "doctest.h"
#include "mvtp/error.hpp"
#include "mvtp/pooling.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

using namespace mvtp;
using mvtp::testing::TempDir;

namespace {

PoolingConfig config(PoolingMethod method, std::size_t factor, std::uint64_t seed = 0) {
  PoolingConfig cfg;
  cfg.method = method;
  cfg.factor = factor;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("target cluster counts") {
  CHECK(target_cluster_count(256, 2) == 129);
  CHECK(target_cluster_count(10, 3) == 4);
  CHECK(target_cluster_count(3, 8) == 1);
  CHECK(target_cluster_count(4, 1) == 4);
  CHECK(target_cluster_count(1, 1) == 1);
}

TEST_CASE("mean pooling") {
  const auto m = TokenMatrix::from_rows({{1, 0}, {0, 1}});
  Assignment together{{0, 0}, 1};
  const TokenMatrix unit = mean_pool_clusters(m, together, true);
  CHECK(unit.row(0)[0] == doctest::Approx(std::sqrt(2.0) / 2));
  CHECK(unit.row(0)[1] == doctest::Approx(std::sqrt(2.0) / 2));
  const TokenMatrix raw = mean_pool_clusters(m, together, false);
  CHECK(raw.row(0)[0] == doctest::Approx(0.5));
  CHECK(raw.row(0)[1] == doctest::Approx(0.5));

  Assignment singles{{0, 1}, 2};
  CHECK(mean_pool_clusters(m, singles, true) == m);
  CHECK(mean_pool_clusters(m, singles, false) == m);

  const auto opposite = TokenMatrix::from_rows({{1, 0}, {-1, 0}});
  CHECK_THROWS_AS(mean_pool_clusters(opposite, together, true), InvalidArgument);
}

TEST_CASE("sequential pooling") {
  std::mt19937_64 gen(1);
  const auto four = testing::random_unit_matrix(4, 3, gen);
  const PooledDocument p = pool_document(four, config(PoolingMethod::sequential, 2));
  REQUIRE(p.pooled.rows() == 2);
  CHECK(p.cluster_sizes == std::vector<std::size_t>{2, 2});
  Assignment first_pair{{0, 0, 1, 1}, 2};
  CHECK(p.pooled == mean_pool_clusters(four, first_pair, true));

  const auto five = testing::random_unit_matrix(5, 3, gen);
  const PooledDocument q = pool_document(five, config(PoolingMethod::sequential, 2));
  CHECK(q.pooled.rows() == 3);
  CHECK(q.cluster_sizes == std::vector<std::size_t>{2, 2, 1});
  CHECK(q.original_token_count == 5);
}

TEST_CASE("factor 1 hierarchical keeps every row") {
  std::mt19937_64 gen(2);
  const auto m = testing::random_unit_matrix(13, 6, gen);
  const PooledDocument p = pool_document(m, config(PoolingMethod::hierarchical, 1));
  CHECK(p.pooled.rows() == 13);
  CHECK(testing::partition_of(pooling_assignment(m, config(PoolingMethod::hierarchical, 1)).labels).size() == 13);
}

TEST_CASE("duplicate pairs pool back to the distinct vectors") {
  std::mt19937_64 gen(6);
  const auto base = testing::random_unit_matrix(3, 8, gen);
  TokenMatrix m;
  for (std::size_t i : {0, 1, 2, 2, 0, 1}) m.append_row(base.row(i));
  const PooledDocument p = pool_document(m, config(PoolingMethod::hierarchical, 2));
  REQUIRE(p.pooled.rows() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 8; ++c) CHECK(p.pooled.row(r)[c] == doctest::Approx(base.row(r)[c]).epsilon(1e-6));
  }
  CHECK(p.cluster_sizes == std::vector<std::size_t>{2, 2, 2});
}

TEST_CASE("kmeans pooling uses the exact count") {
  const Corpus c = testing::random_corpus(10, 12, 8, 3);
  const PooledCorpus p = pool_corpus(c, config(PoolingMethod::kmeans, 3, 9));
  for (const auto& d : p.docs) CHECK(d.pooled.rows() == 5);
}

TEST_CASE("pooling a corpus stays within the budget") {
  const Corpus c = testing::random_corpus(100, 256, 16, 4);
  const PooledCorpus p = pool_corpus(c, config(PoolingMethod::hierarchical, 2));
  CHECK(p.original_vector_count() == 25600);
  CHECK(p.pooled_vector_count() <= 12900);
  for (const auto& d : p.docs) {
    CHECK(std::accumulate(d.cluster_sizes.begin(), d.cluster_sizes.end(), std::size_t{0}) == 256);
  }
}

TEST_CASE("method none is an identity") {
  const Corpus c = testing::ragged_corpus(6, 1, 9, 8, 5);
  const PooledCorpus p = pool_corpus(c, config(PoolingMethod::none, 4));
  CHECK(p.pooled_vector_count() == c.total_tokens());
  CHECK(p.to_corpus() == c);
  CHECK(identity_pooled(c).to_corpus() == c);
}

TEST_CASE("pool_corpus is deterministic and ordered") {
  const Corpus c = testing::ragged_corpus(20, 1, 40, 8, 6);
  for (auto method : {PoolingMethod::sequential, PoolingMethod::kmeans, PoolingMethod::hierarchical}) {
    const PooledCorpus a = pool_corpus(c, config(method, 3, 5));
    const PooledCorpus b = pool_corpus(c, config(method, 3, 5));
    REQUIRE(a.docs.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(a.docs[i].doc_id == c[i].id);
      CHECK(a.docs[i].pooled == b.docs[i].pooled);
    }
  }
}

TEST_CASE("kmeans documents use a derived seed") {
  const Corpus c = testing::random_corpus(3, 30, 8, 7);
  const auto cfg = config(PoolingMethod::kmeans, 3, 11);
  const PooledCorpus p = pool_corpus(c, cfg);
  for (std::size_t i = 0; i < c.size(); ++i) {
    PoolingConfig doc_cfg = cfg;
    doc_cfg.seed = document_seed(cfg.seed, i);
    CHECK(pool_document(c[i].matrix, doc_cfg).pooled == p.docs[i].pooled);
  }
  CHECK(document_seed(11, 0) != document_seed(11, 1));
}

TEST_CASE("config validation and method names") {
  CHECK_THROWS_AS(config(PoolingMethod::hierarchical, 0).validate(), InvalidArgument);
  CHECK(parse_pooling_method("ward") == PoolingMethod::hierarchical);
  CHECK(parse_pooling_method("kmeans") == PoolingMethod::kmeans);
  CHECK(parse_pooling_method("none") == PoolingMethod::none);
  CHECK_THROWS_AS(parse_pooling_method("average"), InvalidArgument);
  for (auto m : {PoolingMethod::none, PoolingMethod::sequential, PoolingMethod::kmeans, PoolingMethod::hierarchical}) {
    CHECK(parse_pooling_method(to_string(m)) == m);
  }
}

TEST_CASE("pooled corpus files carry a sidecar manifest") {
  TempDir dir;
  const Corpus c = testing::ragged_corpus(5, 3, 20, 8, 8);
  const PooledCorpus p = pool_corpus(c, config(PoolingMethod::hierarchical, 2, 3));
  const auto path = dir / "p.mvec";
  write_pooled_corpus(p, path, CorpusFormat::binary);
  REQUIRE(std::filesystem::exists(pooled_manifest_path(path)));

  std::ifstream f(pooled_manifest_path(path));
  const auto j = nlohmann::json::parse(f);
  CHECK(j.at("factor") == 2);
  CHECK(j.at("method") == "hierarchical");
  CHECK(j.at("documents").size() == 5);

  const PooledCorpus back = read_pooled_corpus(path, CorpusFormat::binary);
  CHECK(back.config == p.config);
  CHECK(back.original_vector_count() == p.original_vector_count());
  for (std::size_t i = 0; i < p.docs.size(); ++i) {
    CHECK(back.docs[i].pooled == p.docs[i].pooled);
    CHECK(back.docs[i].cluster_sizes == p.docs[i].cluster_sizes);
  }

  std::filesystem::remove(pooled_manifest_path(path));
  CHECK_THROWS_AS(read_pooled_corpus(path, CorpusFormat::binary), FormatError);
}

TEST_CASE("unnormalized pooled vectors survive a file round trip") {
  TempDir dir;
  const Corpus c = testing::random_corpus(3, 8, 4, 1);
  PoolingConfig cfg = config(PoolingMethod::sequential, 2);
  cfg.renormalize = false;
  const PooledCorpus p = pool_corpus(c, cfg);
  write_pooled_corpus(p, dir / "p.mvec", CorpusFormat::binary);
  const PooledCorpus back = read_pooled_corpus(dir / "p.mvec", CorpusFormat::binary);
  CHECK(back.docs[0].pooled == p.docs[0].pooled);
}
