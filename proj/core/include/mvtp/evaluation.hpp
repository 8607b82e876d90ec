#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvtp/corpus_io.hpp"

namespace mvtp {

struct SearchIndexArtifact;

enum class MetricKind { ndcg, success, recall };

struct MetricSpec {
  MetricKind kind = MetricKind::ndcg;
  std::size_t k = 10;

  /// "ndcg@10", "success@5", ...
  std::string name() const;
  /// Accepts "ndcg", "ndcg@10" etc; a missing cutoff uses default_k.
  static MetricSpec parse(std::string_view text, std::size_t default_k = 10);
};

struct MetricResult {
  double value = 0.0;
  /// Queries contributing to the mean.
  std::size_t evaluated = 0;
  /// Run queries skipped because they have no usable judgments.
  std::size_t excluded = 0;
};

// Queries are those with judgments in qrels; a judged query missing from the
// run scores 0. A document is relevant when its grade is >= 1.

/// Mean NDCG@k with gain 2^rel - 1 and discount log2(rank + 1).
MetricResult ndcg_at_k(const RunList& run, const Qrels& qrels, std::size_t k);
/// Fraction of queries with a relevant document in the top k.
MetricResult success_at_k(const RunList& run, const Qrels& qrels, std::size_t k);
/// Mean |relevant in top k| / |relevant|; queries with no relevant document
/// are excluded.
MetricResult recall_at_k(const RunList& run, const Qrels& qrels, std::size_t k);

MetricResult evaluate(const RunList& run, const Qrels& qrels, const MetricSpec& spec);

/// 100 * metric / baseline. Throws InvalidArgument when baseline <= 0.
double relative_performance(double metric, double baseline);

struct FootprintStats {
  std::size_t documents = 0;
  std::size_t dim = 0;
  std::size_t original_vectors = 0;
  std::size_t pooled_vectors = 0;
  /// pooled / original.
  double reduction_ratio = 1.0;
  double payload_bytes_per_vector = 0.0;
  /// Vector store bytes that are not vector payload (headers, ids, counts).
  std::uint64_t store_overhead_bytes = 0;
  std::uint64_t index_bytes = 0;
  /// pooled_vectors * payload_bytes_per_vector + store_overhead_bytes.
  double estimated_storage_bytes = 0.0;
  /// Same estimate for the unpooled corpus.
  double original_storage_bytes = 0.0;
};

/// Payload per vector is the codec's when one is active, otherwise
/// bytes_per_value * dim.
FootprintStats footprint_stats(const SearchIndexArtifact& artifact, double bytes_per_value);

struct ReportRow {
  std::string dataset;
  std::string method;
  std::size_t factor = 1;
  std::string metric;
  double value = 0.0;
  double baseline = 0.0;
  double relative = 0.0;
  std::size_t vectors_before = 0;
  std::size_t vectors_after = 0;
  double bytes = 0.0;
  /// "ok" or "failed: <reason>".
  std::string status = "ok";
};

/// One row per dataset x method x factor.
struct RelativeReport {
  std::vector<ReportRow> rows;

  /// Header: dataset,method,factor,metric,value,baseline,relative,
  /// vectors_before,vectors_after,bytes,status
  std::string to_csv() const;
  std::string to_json() const;
};

}  // namespace mvtp
