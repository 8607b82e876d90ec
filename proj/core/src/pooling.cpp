#include "mvtp/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "mvtp/error.hpp"
#include "mvtp/parallel.hpp"
#include "rng.hpp"

namespace mvtp {

std::string_view to_string(PoolingMethod method) noexcept {
  switch (method) {
    case PoolingMethod::none: return "none";
    case PoolingMethod::sequential: return "sequential";
    case PoolingMethod::kmeans: return "kmeans";
    case PoolingMethod::hierarchical: return "hierarchical";
  }
  return "unknown";
}

PoolingMethod parse_pooling_method(std::string_view name) {
  if (name == "none") return PoolingMethod::none;
  if (name == "sequential" || name == "seq") return PoolingMethod::sequential;
  if (name == "kmeans" || name == "k-means") return PoolingMethod::kmeans;
  if (name == "hierarchical" || name == "ward") return PoolingMethod::hierarchical;
  throw InvalidArgument("unknown pooling method \"" + std::string(name) + "\"");
}

void PoolingConfig::validate() const {
  if (factor < 1) throw InvalidArgument("pooling factor must be >= 1");
}

std::size_t PooledCorpus::original_vector_count() const noexcept {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.original_token_count;
  return n;
}

std::size_t PooledCorpus::pooled_vector_count() const noexcept {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.pooled.rows();
  return n;
}

Corpus PooledCorpus::to_corpus() const {
  Corpus c(dim);
  for (const auto& d : docs) c.add(d.doc_id, d.pooled);
  return c;
}

std::size_t target_cluster_count(std::size_t n, std::size_t factor) {
  if (n < 1) throw InvalidArgument("token count must be >= 1");
  if (factor < 1) throw InvalidArgument("pooling factor must be >= 1");
  return std::clamp<std::size_t>(n / factor + 1, 1, n);
}

TokenMatrix mean_pool_clusters(const TokenMatrix& m, const Assignment& a, bool renormalize) {
  if (a.labels.size() != m.rows()) {
    throw InvalidArgument("assignment has " + std::to_string(a.labels.size()) +
                          " labels for " + std::to_string(m.rows()) + " rows");
  }
  const std::size_t dim = m.dim();
  std::vector<double> sums(a.k * dim, 0.0);
  std::vector<std::size_t> counts(a.k, 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const std::size_t c = a.labels[i];
    if (c >= a.k) throw InvalidArgument("label out of range");
    ++counts[c];
    const auto row = m.row(i);
    double* s = sums.data() + c * dim;
    for (std::size_t j = 0; j < dim; ++j) s[j] += row[j];
  }
  TokenMatrix out(a.k, dim);
  for (std::size_t c = 0; c < a.k; ++c) {
    if (counts[c] == 0) throw InvalidArgument("cluster " + std::to_string(c) + " is empty");
    auto row = out.row(c);
    const double* s = sums.data() + c * dim;
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (std::size_t j = 0; j < dim; ++j) row[j] = static_cast<float>(s[j] * inv);
    if (renormalize && !normalize(row)) {
      throw InvalidArgument("cluster " + std::to_string(c) + " has a zero-norm mean");
    }
  }
  return out;
}

Assignment pooling_assignment(const TokenMatrix& m, const PoolingConfig& cfg) {
  cfg.validate();
  const std::size_t n = m.rows();
  if (n == 0) throw InvalidArgument("cannot pool an empty document");

  Assignment a;
  switch (cfg.method) {
    case PoolingMethod::none:
      a.labels.resize(n);
      std::iota(a.labels.begin(), a.labels.end(), 0);
      a.k = n;
      return a;
    case PoolingMethod::sequential:
      a.labels.resize(n);
      for (std::size_t i = 0; i < n; ++i) a.labels[i] = i / cfg.factor;
      a.k = (n + cfg.factor - 1) / cfg.factor;
      return a;
    case PoolingMethod::kmeans:
    case PoolingMethod::hierarchical: {
      // With one cluster per token both methods give singletons in row order.
      const std::size_t k = target_cluster_count(n, cfg.factor);
      if (k >= n) {
        a.labels.resize(n);
        std::iota(a.labels.begin(), a.labels.end(), 0);
        a.k = n;
        return a;
      }
      if (cfg.method == PoolingMethod::kmeans) return spherical_kmeans(m, k, cfg.seed);
      return cut_dendrogram(ward_linkage(cosine_distance_matrix(m)), k);
    }
  }
  throw InvalidArgument("unknown pooling method");
}

PooledDocument pool_document(const TokenMatrix& m, const PoolingConfig& cfg, std::string doc_id) {
  const Assignment a = pooling_assignment(m, cfg);
  PooledDocument doc;
  doc.doc_id = std::move(doc_id);
  doc.original_token_count = m.rows();
  doc.cluster_sizes.assign(a.k, 0);
  for (std::size_t label : a.labels) ++doc.cluster_sizes[label];
  doc.pooled = mean_pool_clusters(m, a, cfg.renormalize);
  return doc;
}

std::uint64_t document_seed(std::uint64_t seed, std::size_t ordinal) noexcept {
  return detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(ordinal)));
}

PooledCorpus pool_corpus(const Corpus& corpus, const PoolingConfig& cfg) {
  cfg.validate();
  PooledCorpus out;
  out.config = cfg;
  out.dim = corpus.dim();
  out.docs.resize(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    PoolingConfig doc_cfg = cfg;
    doc_cfg.seed = document_seed(cfg.seed, i);
    out.docs[i] = pool_document(corpus[i].matrix, doc_cfg, corpus[i].id);
  });
  return out;
}

PooledCorpus identity_pooled(const Corpus& corpus) {
  PoolingConfig cfg;
  cfg.method = PoolingMethod::none;
  cfg.factor = 1;
  PooledCorpus out;
  out.config = cfg;
  out.dim = corpus.dim();
  out.docs.reserve(corpus.size());
  for (const auto& d : corpus.docs()) {
    out.docs.push_back(PooledDocument{d.id, d.matrix,
                                      std::vector<std::size_t>(d.matrix.rows(), 1),
                                      d.matrix.rows()});
  }
  return out;
}

std::filesystem::path pooled_manifest_path(const std::filesystem::path& corpus_path) {
  auto p = corpus_path;
  p += ".manifest.json";
  return p;
}

void write_pooled_corpus(const PooledCorpus& pooled, const std::filesystem::path& path,
                         CorpusFormat format) {
  write_corpus(pooled.to_corpus(), path, format);

  nlohmann::json docs = nlohmann::json::array();
  for (const auto& d : pooled.docs) {
    docs.push_back({{"doc_id", d.doc_id},
                    {"original_token_count", d.original_token_count},
                    {"cluster_sizes", d.cluster_sizes}});
  }
  const nlohmann::json manifest = {
      {"method", std::string(to_string(pooled.config.method))},
      {"factor", pooled.config.factor},
      {"seed", pooled.config.seed},
      {"renormalize", pooled.config.renormalize},
      {"original_vectors", pooled.original_vector_count()},
      {"pooled_vectors", pooled.pooled_vector_count()},
      {"documents", std::move(docs)},
  };
  const auto mpath = pooled_manifest_path(path);
  std::ofstream out(mpath, std::ios::trunc);
  if (!out) throw IoError("cannot write " + mpath.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + mpath.string());
}

PooledCorpus read_pooled_corpus(const std::filesystem::path& path, CorpusFormat format) {
  const auto mpath = pooled_manifest_path(path);
  std::ifstream in(mpath);
  if (!in) throw FormatError("missing pooling manifest " + mpath.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("invalid pooling manifest: " + std::string(e.what()));
  }

  Corpus corpus = read_corpus(path, format, RowNormalization::keep);
  PooledCorpus out;
  try {
    out.config.method = parse_pooling_method(manifest.at("method").get<std::string>());
    out.config.factor = manifest.at("factor").get<std::size_t>();
    out.config.seed = manifest.at("seed").get<std::uint64_t>();
    out.config.renormalize = manifest.at("renormalize").get<bool>();
    const auto& docs = manifest.at("documents");
    if (docs.size() != corpus.size()) {
      throw FormatError("pooling manifest lists " + std::to_string(docs.size()) +
                        " documents, corpus has " + std::to_string(corpus.size()));
    }
    out.dim = corpus.dim();
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto& meta = docs[i];
      PooledDocument d;
      d.doc_id = corpus[i].id;
      d.pooled = corpus[i].matrix;
      d.original_token_count = meta.at("original_token_count").get<std::size_t>();
      d.cluster_sizes = meta.at("cluster_sizes").get<std::vector<std::size_t>>();
      if (meta.at("doc_id").get<std::string>() != d.doc_id ||
          d.cluster_sizes.size() != d.pooled.rows() ||
          std::accumulate(d.cluster_sizes.begin(), d.cluster_sizes.end(), std::size_t{0}) !=
              d.original_token_count) {
        throw FormatError("pooling manifest disagrees with document \"" + d.doc_id + "\"");
      }
      out.docs.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("invalid pooling manifest: " + std::string(e.what()));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid pooling manifest: ") + e.what());
  }
  return out;
}

}  // namespace mvtp
