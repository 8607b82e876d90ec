#include <cmath>
#include <random>

#include <json.hpp>

#include "doctest.h"
#include "mvtp/error.hpp"
#include "mvtp/evaluation.hpp"
#include "mvtp/retrieval.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace mvtp;

namespace {

Ranking ranking(std::initializer_list<const char*> ids) {
  Ranking r;
  double score = 1.0;
  for (const char* id : ids) {
    r.push_back({id, score});
    score -= 0.01;
  }
  return r;
}

}  // namespace

TEST_CASE("ndcg closed forms") {
  Qrels q;
  q.set("q", "rel", 1);
  RunList run;
  run["q"] = ranking({"rel", "x", "y"});
  CHECK(ndcg_at_k(run, q, 10).value == doctest::Approx(1.0));
  run["q"] = ranking({"x", "rel", "y"});
  CHECK(ndcg_at_k(run, q, 10).value == doctest::Approx(1.0 / std::log2(3.0)));
  CHECK(ndcg_at_k(run, q, 10).value == doctest::Approx(0.63093).epsilon(1e-5));
  run["q"] = ranking({"x", "y"});
  CHECK(ndcg_at_k(run, q, 10).value == 0.0);
}

TEST_CASE("ndcg with graded judgments") {
  Qrels q;
  q.set("q", "a", 2);
  q.set("q", "b", 1);
  RunList run;
  run["q"] = ranking({"b", "a"});
  const double dcg = 1.0 / std::log2(2.0) + 3.0 / std::log2(3.0);
  const double idcg = 3.0 / std::log2(2.0) + 1.0 / std::log2(3.0);
  CHECK(ndcg_at_k(run, q, 10).value == doctest::Approx(dcg / idcg));
}

TEST_CASE("success") {
  Qrels q;
  q.set("q", "rel", 1);
  RunList run;
  run["q"] = ranking({"a", "b", "c", "d", "rel"});
  CHECK(success_at_k(run, q, 5).value == 1.0);
  run["q"] = ranking({"a", "b", "c", "d", "e", "rel"});
  CHECK(success_at_k(run, q, 5).value == 0.0);

  Qrels three;
  three.set("1", "r", 1);
  three.set("2", "r", 1);
  three.set("3", "r", 1);
  RunList r3;
  r3["1"] = ranking({"r"});
  r3["2"] = ranking({"x", "r"});
  r3["3"] = ranking({"x"});
  CHECK(success_at_k(r3, three, 5).value == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("recall") {
  Qrels q;
  q.set("q", "a", 1);
  q.set("q", "b", 1);
  RunList run;
  run["q"] = ranking({"a", "x", "b"});
  CHECK(recall_at_k(run, q, 5).value == 1.0);
  run["q"] = ranking({"a", "x", "y", "z", "w", "b"});
  CHECK(recall_at_k(run, q, 5).value == 0.5);

  Qrels four;
  for (const char* d : {"a", "b", "c", "d"}) four.set("q", d, 1);
  RunList r4;
  r4["q"] = ranking({"x", "y", "c", "z"});
  CHECK(recall_at_k(r4, four, 5).value == 0.25);
}

TEST_CASE("query bookkeeping") {
  Qrels q;
  q.set("judged", "a", 1);
  q.set("empty", "a", 0);
  RunList run;
  run["judged"] = ranking({"a"});
  run["unjudged"] = ranking({"a"});
  const auto n = ndcg_at_k(run, q, 10);
  CHECK(n.evaluated == 2);
  CHECK(n.excluded == 1);
  CHECK(n.value == doctest::Approx(0.5));
  const auto r = recall_at_k(run, q, 10);
  CHECK(r.evaluated == 1);
  CHECK(r.value == 1.0);
}

TEST_CASE("relative performance") {
  CHECK(relative_performance(0.5, 0.5) == 100.0);
  CHECK(relative_performance(0.51, 0.50) == doctest::Approx(102.0));
  CHECK(relative_performance(0.45, 0.50) == doctest::Approx(90.0));
  CHECK_THROWS_AS(relative_performance(0.5, 0.0), InvalidArgument);
}

TEST_CASE("metric specs") {
  CHECK(MetricSpec::parse("ndcg@10").name() == "ndcg@10");
  CHECK(MetricSpec::parse("success", 5).k == 5);
  CHECK(MetricSpec::parse("recall@5").kind == MetricKind::recall);
  CHECK_THROWS_AS(MetricSpec::parse("map@10"), InvalidArgument);
  CHECK_THROWS_AS(MetricSpec::parse("ndcg@0"), InvalidArgument);
}

TEST_CASE("metrics agree with the naive evaluator on random fixtures") {
  std::mt19937_64 gen(12);
  for (int fixture = 0; fixture < 50; ++fixture) {
    std::uniform_int_distribution<int> grade(0, 3);
    std::uniform_int_distribution<int> nq(1, 8);
    Qrels qrels;
    RunList run;
    const int queries = nq(gen);
    for (int qi = 0; qi < queries + 2; ++qi) {
      const std::string qid = "q" + std::to_string(qi);
      if (qi < queries) {
        for (int d = 0; d < 12; ++d)
          if (gen() % 3 == 0) qrels.set(qid, "d" + std::to_string(d), grade(gen));
      }
      if (gen() % 5 == 0) continue;
      Ranking r;
      std::vector<int> docs(20);
      std::iota(docs.begin(), docs.end(), 0);
      std::shuffle(docs.begin(), docs.end(), gen);
      for (int i = 0; i < 15; ++i) r.push_back({"d" + std::to_string(docs[i]), 1.0 - i * 0.05});
      run[qid] = r;
    }
    CHECK(ndcg_at_k(run, qrels, 10).value == doctest::Approx(testing::NaiveEval::ndcg(run, qrels, 10)).epsilon(1e-9));
    CHECK(success_at_k(run, qrels, 5).value ==
          doctest::Approx(testing::NaiveEval::success(run, qrels, 5)).epsilon(1e-9));
    CHECK(recall_at_k(run, qrels, 5).value ==
          doctest::Approx(testing::NaiveEval::recall(run, qrels, 5)).epsilon(1e-9));
  }
}

TEST_CASE("footprint of a pooled artifact") {
  const Corpus c = testing::random_corpus(20, 256, 8, 1);
  for (std::size_t factor : {2, 3}) {
    PipelineConfig cfg;
    cfg.pooling.factor = factor;
    cfg.index.backend = IndexBackend::flat;
    const auto art = index_corpus(c, cfg);
    const FootprintStats s = footprint_stats(art, 2.0);
    CHECK(s.original_vectors == 20 * 256);
    CHECK(s.pooled_vectors == art.stored_vector_count());
    CHECK(s.reduction_ratio <= static_cast<double>(256 / factor + 1) / 256.0 + 1e-12);
    CHECK(s.payload_bytes_per_vector == 16.0);
    CHECK(s.estimated_storage_bytes == s.pooled_vectors * 16.0 + s.store_overhead_bytes);
    CHECK(s.index_bytes == art.index.serialized_size());
  }
  PipelineConfig none;
  none.pooling.method = PoolingMethod::none;
  none.index.backend = IndexBackend::flat;
  CHECK(footprint_stats(index_corpus(c, none), 2.0).reduction_ratio == 1.0);

  PipelineConfig coded;
  coded.index.backend = IndexBackend::flat;
  coded.codec = CodecSettings{};
  CHECK(footprint_stats(index_corpus(c, coded), 2.0).payload_bytes_per_vector == 4 + 2);
}

TEST_CASE("report formats") {
  RelativeReport r;
  ReportRow row;
  row.dataset = "syn";
  row.method = "hierarchical";
  row.factor = 2;
  row.metric = "ndcg@10";
  row.value = 0.5;
  row.baseline = 0.5;
  row.relative = 100.0;
  row.vectors_before = 10;
  row.vectors_after = 6;
  row.bytes = 96;
  r.rows.push_back(row);
  CHECK(r.to_csv() ==
        "dataset,method,factor,metric,value,baseline,relative,vectors_before,vectors_after,bytes,status\n"
        "syn,hierarchical,2,ndcg@10,0.500000,0.500000,100.0000,10,6,96,ok\n");
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.at("rows").at(0).at("relative") == 100.0);
}
