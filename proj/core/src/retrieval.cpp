#include "mvtp/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "mvtp/error.hpp"
#include "mvtp/parallel.hpp"
#include "mvtp/scoring.hpp"

namespace mvtp {

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kIndexFile = "index.mvix";
constexpr const char* kPooledFile = "pooled.mvec";
constexpr const char* kCodecFile = "codec.mvqc";
constexpr const char* kQuantizedFile = "quantized.mvqv";

TokenIndex build_index(const std::vector<TokenMatrix>& stored, std::size_t dim,
                       const IndexParams& params) {
  std::size_t total = 0;
  for (const auto& m : stored) total += m.rows();
  std::vector<float> values;
  values.reserve(total * dim);
  std::vector<TokenRef> refs;
  refs.reserve(total);
  for (std::size_t d = 0; d < stored.size(); ++d) {
    const auto v = stored[d].values();
    values.insert(values.end(), v.begin(), v.end());
    for (std::size_t t = 0; t < stored[d].rows(); ++t) {
      refs.push_back(TokenRef{static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(t)});
    }
  }
  return TokenIndex::build(TokenMatrix(total, dim, std::move(values)), std::move(refs), params);
}

nlohmann::json manifest_to_json(const ArtifactManifest& m) {
  nlohmann::json j = {
      {"format", "mvtp-artifact"},
      {"version", 1},
      {"dim", m.dim},
      {"doc_count", m.doc_count},
      {"original_vectors", m.original_vectors},
      {"pooled_vectors", m.pooled_vectors},
      {"corpus_checksum", m.corpus_checksum},
      {"pooling",
       {{"method", std::string(to_string(m.pooling.method))},
        {"factor", m.pooling.factor},
        {"seed", m.pooling.seed},
        {"renormalize", m.pooling.renormalize}}},
      {"index",
       {{"backend", std::string(to_string(m.index.backend))},
        {"m", m.index.m},
        {"ef_construction", m.index.ef_construction},
        {"ef_search", m.index.ef_search},
        {"seed", m.index.seed}}},
      {"original_token_counts", m.original_token_counts},
      {"cluster_sizes", m.cluster_sizes},
  };
  if (m.codec) {
    j["codec"] = {{"n_centroids", m.codec->n_centroids},
                  {"bits", m.codec->bits},
                  {"seed", m.codec->seed},
                  {"renormalize_decoded", m.codec->renormalize_decoded}};
  } else {
    j["codec"] = nullptr;
  }
  return j;
}

ArtifactManifest manifest_from_json(const nlohmann::json& j) {
  ArtifactManifest m;
  m.dim = j.at("dim").get<std::size_t>();
  m.doc_count = j.at("doc_count").get<std::size_t>();
  m.original_vectors = j.at("original_vectors").get<std::size_t>();
  m.pooled_vectors = j.at("pooled_vectors").get<std::size_t>();
  m.corpus_checksum = j.at("corpus_checksum").get<std::uint64_t>();
  const auto& p = j.at("pooling");
  m.pooling.method = parse_pooling_method(p.at("method").get<std::string>());
  m.pooling.factor = p.at("factor").get<std::size_t>();
  m.pooling.seed = p.at("seed").get<std::uint64_t>();
  m.pooling.renormalize = p.at("renormalize").get<bool>();
  const auto& ix = j.at("index");
  m.index.backend = parse_index_backend(ix.at("backend").get<std::string>());
  m.index.m = ix.at("m").get<std::size_t>();
  m.index.ef_construction = ix.at("ef_construction").get<std::size_t>();
  m.index.ef_search = ix.at("ef_search").get<std::size_t>();
  m.index.seed = ix.at("seed").get<std::uint64_t>();
  m.original_token_counts = j.at("original_token_counts").get<std::vector<std::size_t>>();
  m.cluster_sizes = j.at("cluster_sizes").get<std::vector<std::vector<std::size_t>>>();
  if (j.contains("codec") && !j["codec"].is_null()) {
    const auto& c = j["codec"];
    CodecSettings cs;
    cs.n_centroids = c.at("n_centroids").get<std::size_t>();
    cs.bits = c.at("bits").get<unsigned>();
    cs.seed = c.at("seed").get<std::uint64_t>();
    cs.renormalize_decoded = c.at("renormalize_decoded").get<bool>();
    m.codec = cs;
  }
  return m;
}

}  // namespace

void PipelineConfig::validate() const {
  pooling.validate();
  index.validate();
  if (candidate_k < 1) throw InvalidArgument("candidate_k must be >= 1");
  if (top_n < 1) throw InvalidArgument("top_n must be >= 1");
  if (top_n > rescore_docs) throw InvalidArgument("top_n must not exceed rescore_docs");
  if (codec && !is_supported_bit_width(codec->bits)) {
    throw InvalidArgument("unsupported codec bit width");
  }
}

std::size_t SearchIndexArtifact::stored_vector_count() const noexcept {
  std::size_t n = 0;
  for (const auto& m : stored) n += m.rows();
  return n;
}

SearchIndexArtifact index_pooled(const PooledCorpus& pooled, const PipelineConfig& cfg,
                                 std::uint64_t corpus_checksum) {
  cfg.validate();
  if (pooled.docs.empty()) throw InvalidArgument("cannot index an empty corpus");

  SearchIndexArtifact art;
  auto& man = art.manifest;
  man.pooling = pooled.config;
  man.index = cfg.index;
  man.codec = cfg.codec;
  man.corpus_checksum = corpus_checksum;
  man.dim = pooled.dim;
  man.doc_count = pooled.docs.size();
  man.original_vectors = pooled.original_vector_count();
  man.pooled_vectors = pooled.pooled_vector_count();
  for (const auto& d : pooled.docs) {
    art.doc_ids.push_back(d.doc_id);
    man.original_token_counts.push_back(d.original_token_count);
    man.cluster_sizes.push_back(d.cluster_sizes);
  }

  if (cfg.codec) {
    // Train on the pooled vectors, then keep the decoded form so the index
    // and the re-scorer see the same representation.
    std::vector<float> sample;
    sample.reserve(man.pooled_vectors * pooled.dim);
    for (const auto& d : pooled.docs) {
      const auto v = d.pooled.values();
      sample.insert(sample.end(), v.begin(), v.end());
    }
    art.codec = train_codec(TokenMatrix(man.pooled_vectors, pooled.dim, std::move(sample)),
                            cfg.codec->n_centroids, cfg.codec->bits, cfg.codec->seed);
    std::vector<std::pair<std::string, const TokenMatrix*>> docs;
    for (const auto& d : pooled.docs) docs.emplace_back(d.doc_id, &d.pooled);
    art.quantized = encode_corpus(*art.codec, docs);
    art.stored.reserve(docs.size());
    for (const auto& qd : art.quantized->docs) {
      TokenMatrix m = decode_document(*art.codec, qd);
      if (cfg.codec->renormalize_decoded) normalize_rows(m);
      art.stored.push_back(std::move(m));
    }
  } else {
    for (const auto& d : pooled.docs) art.stored.push_back(d.pooled);
  }
  art.index = build_index(art.stored, pooled.dim, cfg.index);
  return art;
}

SearchIndexArtifact index_corpus(const Corpus& corpus, const PipelineConfig& cfg) {
  cfg.validate();
  return index_pooled(pool_corpus(corpus, cfg.pooling), cfg, corpus_checksum(corpus));
}

RunList retrieve(const SearchIndexArtifact& artifact, const Corpus& queries,
                 const PipelineConfig& cfg) {
  cfg.validate();
  if (!queries.empty() && queries.dim() != artifact.manifest.dim) {
    throw DimensionMismatch("dim mismatch: queries have dim " + std::to_string(queries.dim()) +
                            ", index has dim " + std::to_string(artifact.manifest.dim));
  }

  std::vector<Ranking> rankings(queries.size());
  parallel_for(queries.size(), [&](std::size_t qi) {
    const TokenMatrix& q = queries[qi].matrix;
    if (q.empty()) throw InvalidArgument("query \"" + queries[qi].id + "\" is empty");

    // Best single token hit per candidate document.
    std::unordered_map<std::uint32_t, float> best;
    for (std::size_t t = 0; t < q.rows(); ++t) {
      for (const TokenHit& h : artifact.index.search(q.row(t), cfg.candidate_k, cfg.index.ef_search)) {
        const auto [it, inserted] = best.emplace(h.ref.doc, h.similarity);
        if (!inserted) it->second = std::max(it->second, h.similarity);
      }
    }
    std::vector<std::pair<std::uint32_t, float>> cands(best.begin(), best.end());
    std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (cands.size() > cfg.rescore_docs) cands.resize(cfg.rescore_docs);

    Ranking ranking;
    ranking.reserve(cands.size());
    for (const auto& [doc, sim] : cands) {
      ranking.push_back(RunEntry{artifact.doc_ids[doc], maxsim(q, artifact.stored[doc])});
    }
    std::sort(ranking.begin(), ranking.end(), [](const RunEntry& a, const RunEntry& b) {
      return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
    });
    if (ranking.size() > cfg.top_n) ranking.resize(cfg.top_n);
    rankings[qi] = std::move(ranking);
  });

  RunList run;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) run[queries[qi].id] = std::move(rankings[qi]);
  return run;
}

std::uint64_t vector_store_bytes(const SearchIndexArtifact& artifact) {
  if (artifact.quantized) return quantized_corpus_size(*artifact.quantized);
  std::uint64_t size = 4 + 4 + 4 + 8;
  for (std::size_t d = 0; d < artifact.stored.size(); ++d) {
    size += 2 + artifact.doc_ids[d].size() + 4 +
            4ULL * artifact.stored[d].rows() * artifact.stored[d].dim();
  }
  return size;
}

void save_artifact(const SearchIndexArtifact& artifact, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / kManifestFile, std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / kManifestFile).string());
    out << manifest_to_json(artifact.manifest).dump(2) << '\n';
  }
  if (artifact.codec) {
    save_codec(*artifact.codec, dir / kCodecFile);
    write_quantized_corpus(*artifact.quantized, dir / kQuantizedFile);
  } else {
    Corpus c(artifact.manifest.dim);
    for (std::size_t d = 0; d < artifact.stored.size(); ++d) c.add(artifact.doc_ids[d], artifact.stored[d]);
    write_corpus(c, dir / kPooledFile, CorpusFormat::binary);
  }
  artifact.index.save(dir / kIndexFile);
}

SearchIndexArtifact load_artifact(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestFile);
  if (!in) throw IoError("cannot open " + (dir / kManifestFile).string());
  SearchIndexArtifact art;
  try {
    art.manifest = manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid artifact manifest: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid artifact manifest: ") + e.what());
  }
  const auto& man = art.manifest;

  if (man.codec) {
    art.codec = load_codec(dir / kCodecFile);
    art.quantized = read_quantized_corpus(dir / kQuantizedFile);
    if (art.quantized->dim != man.dim || art.codec->dim != man.dim) {
      throw FormatError("codec dim disagrees with manifest");
    }
    for (const auto& qd : art.quantized->docs) {
      art.doc_ids.push_back(qd.doc_id);
      TokenMatrix m = decode_document(*art.codec, qd);
      if (man.codec->renormalize_decoded) normalize_rows(m);
      art.stored.push_back(std::move(m));
    }
  } else {
    // Pooled rows are not unit-norm when renormalize is off.
    Corpus c = read_corpus(dir / kPooledFile, CorpusFormat::binary, RowNormalization::keep);
    for (const auto& d : c.docs()) {
      art.doc_ids.push_back(d.id);
      art.stored.push_back(d.matrix);
    }
  }
  art.index = TokenIndex::load(dir / kIndexFile);

  // The manifest must describe the stored data exactly.
  if (art.doc_ids.size() != man.doc_count || man.cluster_sizes.size() != man.doc_count ||
      man.original_token_counts.size() != man.doc_count) {
    throw FormatError("manifest document count disagrees with stored data");
  }
  std::size_t pooled = 0;
  std::size_t original = 0;
  for (std::size_t d = 0; d < man.doc_count; ++d) {
    if (man.cluster_sizes[d].size() != art.stored[d].rows()) {
      throw FormatError("manifest cluster sizes disagree with stored rows for \"" + art.doc_ids[d] + "\"");
    }
    pooled += art.stored[d].rows();
    original += man.original_token_counts[d];
  }
  if (pooled != man.pooled_vectors || original != man.original_vectors ||
      art.index.size() != pooled) {
    throw FormatError("manifest vector counts disagree with stored data");
  }
  return art;
}

}  // namespace mvtp
