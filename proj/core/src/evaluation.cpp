#include "mvtp/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mvtp/error.hpp"
#include "mvtp/retrieval.hpp"

namespace mvtp {

namespace {

using QueryScore = std::function<std::optional<double>(const Ranking&,
                                                       const std::map<std::string, int>&)>;

// Means a per-query score over judged queries. A query whose scorer returns
// nullopt is left out of the mean. Run queries without judgments are counted
// as excluded.
MetricResult mean_over_judged(const RunList& run, const Qrels& qrels, std::size_t k,
                              const QueryScore& score) {
  if (k < 1) throw InvalidArgument("metric cutoff k must be >= 1");
  MetricResult result;
  double total = 0.0;
  static const Ranking kEmpty;
  for (const auto& [qid, judged] : qrels.all()) {
    const auto it = run.find(qid);
    const Ranking& ranking = it == run.end() ? kEmpty : it->second;
    const auto s = score(ranking, judged);
    if (!s) continue;
    total += *s;
    ++result.evaluated;
  }
  for (const auto& [qid, ranking] : run) {
    if (!qrels.has_query(qid)) ++result.excluded;
  }
  result.value = result.evaluated == 0 ? 0.0 : total / static_cast<double>(result.evaluated);
  return result;
}

int grade_of(const std::map<std::string, int>& judged, const std::string& doc) {
  const auto it = judged.find(doc);
  return it == judged.end() ? 0 : it->second;
}

std::string format_double(double v, int precision) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

}  // namespace

std::string MetricSpec::name() const {
  const char* base = kind == MetricKind::ndcg ? "ndcg" : kind == MetricKind::success ? "success" : "recall";
  return std::string(base) + "@" + std::to_string(k);
}

MetricSpec MetricSpec::parse(std::string_view text, std::size_t default_k) {
  MetricSpec spec;
  spec.k = default_k;
  const auto at = text.find('@');
  const std::string_view base = text.substr(0, at);
  if (base == "ndcg") {
    spec.kind = MetricKind::ndcg;
  } else if (base == "success") {
    spec.kind = MetricKind::success;
  } else if (base == "recall") {
    spec.kind = MetricKind::recall;
  } else {
    throw InvalidArgument("unknown metric \"" + std::string(text) + "\"");
  }
  if (at != std::string_view::npos) {
    const std::string_view num = text.substr(at + 1);
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), k);
    if (ec != std::errc{} || ptr != num.data() + num.size()) {
      throw InvalidArgument("invalid metric cutoff in \"" + std::string(text) + "\"");
    }
    spec.k = k;
  }
  if (spec.k < 1) throw InvalidArgument("metric cutoff must be >= 1");
  return spec;
}

MetricResult ndcg_at_k(const RunList& run, const Qrels& qrels, std::size_t k) {
  return mean_over_judged(run, qrels, k, [k](const Ranking& ranking, const auto& judged) {
    double dcg = 0.0;
    const std::size_t depth = std::min(k, ranking.size());
    for (std::size_t i = 0; i < depth; ++i) {
      const int rel = grade_of(judged, ranking[i].doc_id);
      if (rel > 0) dcg += (std::exp2(rel) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    std::vector<int> ideal;
    for (const auto& [doc, g] : judged) ideal.push_back(g);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
      if (ideal[i] > 0) idcg += (std::exp2(ideal[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return std::optional<double>(idcg > 0.0 ? dcg / idcg : 0.0);
  });
}

MetricResult success_at_k(const RunList& run, const Qrels& qrels, std::size_t k) {
  return mean_over_judged(run, qrels, k, [k](const Ranking& ranking, const auto& judged) {
    const std::size_t depth = std::min(k, ranking.size());
    for (std::size_t i = 0; i < depth; ++i) {
      if (grade_of(judged, ranking[i].doc_id) >= 1) return std::optional<double>(1.0);
    }
    return std::optional<double>(0.0);
  });
}

MetricResult recall_at_k(const RunList& run, const Qrels& qrels, std::size_t k) {
  return mean_over_judged(run, qrels, k,
                          [k](const Ranking& ranking, const auto& judged) -> std::optional<double> {
    std::size_t relevant = 0;
    for (const auto& [doc, g] : judged) relevant += g >= 1 ? 1 : 0;
    if (relevant == 0) return std::nullopt;
    std::size_t hit = 0;
    const std::size_t depth = std::min(k, ranking.size());
    for (std::size_t i = 0; i < depth; ++i) hit += grade_of(judged, ranking[i].doc_id) >= 1 ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(relevant);
  });
}

MetricResult evaluate(const RunList& run, const Qrels& qrels, const MetricSpec& spec) {
  switch (spec.kind) {
    case MetricKind::ndcg: return ndcg_at_k(run, qrels, spec.k);
    case MetricKind::success: return success_at_k(run, qrels, spec.k);
    case MetricKind::recall: return recall_at_k(run, qrels, spec.k);
  }
  throw InvalidArgument("unknown metric kind");
}

double relative_performance(double metric, double baseline) {
  if (!(baseline > 0.0)) throw InvalidArgument("baseline metric must be > 0");
  return 100.0 * (metric / baseline);
}

FootprintStats footprint_stats(const SearchIndexArtifact& artifact, double bytes_per_value) {
  FootprintStats s;
  const auto& man = artifact.manifest;
  s.documents = artifact.stored.size();
  s.dim = man.dim;
  s.original_vectors = std::accumulate(man.original_token_counts.begin(),
                                       man.original_token_counts.end(), std::size_t{0});
  s.pooled_vectors = artifact.stored_vector_count();
  s.reduction_ratio = s.original_vectors == 0
                          ? 1.0
                          : static_cast<double>(s.pooled_vectors) / static_cast<double>(s.original_vectors);

  // Payload actually written per vector, used to isolate the store overhead.
  const double stored_payload = artifact.codec ? static_cast<double>(artifact.codec->payload_bytes())
                                               : 4.0 * static_cast<double>(man.dim);
  s.payload_bytes_per_vector = artifact.codec ? stored_payload
                                              : bytes_per_value * static_cast<double>(man.dim);
  const auto store = vector_store_bytes(artifact);
  s.store_overhead_bytes =
      store - static_cast<std::uint64_t>(stored_payload * static_cast<double>(s.pooled_vectors));
  s.index_bytes = artifact.index.serialized_size();
  s.estimated_storage_bytes = static_cast<double>(s.pooled_vectors) * s.payload_bytes_per_vector +
                              static_cast<double>(s.store_overhead_bytes);
  s.original_storage_bytes = static_cast<double>(s.original_vectors) * s.payload_bytes_per_vector +
                             static_cast<double>(s.store_overhead_bytes);
  return s;
}

std::string RelativeReport::to_csv() const {
  std::ostringstream out;
  out << "dataset,method,factor,metric,value,baseline,relative,vectors_before,vectors_after,bytes,status\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.method << ',' << r.factor << ',' << r.metric << ','
        << format_double(r.value, 6) << ',' << format_double(r.baseline, 6) << ','
        << format_double(r.relative, 4) << ',' << r.vectors_before << ',' << r.vectors_after << ','
        << format_double(r.bytes, 0) << ',' << r.status << '\n';
  }
  return out.str();
}

std::string RelativeReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"dataset", r.dataset},
                   {"method", r.method},
                   {"factor", r.factor},
                   {"metric", r.metric},
                   {"value", r.value},
                   {"baseline", r.baseline},
                   {"relative", r.relative},
                   {"vectors_before", r.vectors_before},
                   {"vectors_after", r.vectors_after},
                   {"bytes", r.bytes},
                   {"status", r.status}});
  }
  return nlohmann::json{{"rows", std::move(arr)}}.dump(2) + "\n";
}

}  // namespace mvtp
