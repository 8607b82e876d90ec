#include "mvtp/ann_index.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "binary_io.hpp"
#include "hnsw.hpp"
#include "mvtp/error.hpp"

namespace mvtp {

namespace {

constexpr std::string_view kIndexMagic = "MVIX";
constexpr std::uint32_t kIndexVersion = 1;

bool hit_before(const TokenHit& a, const TokenHit& b) noexcept {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.ref < b.ref;
}

}  // namespace

std::string_view to_string(IndexBackend backend) noexcept {
  return backend == IndexBackend::flat ? "flat" : "hnsw";
}

IndexBackend parse_index_backend(std::string_view name) {
  if (name == "flat") return IndexBackend::flat;
  if (name == "hnsw") return IndexBackend::hnsw;
  throw InvalidArgument("unknown index backend \"" + std::string(name) + "\"");
}

void IndexParams::validate() const {
  if (m < 2) throw InvalidArgument("index m must be >= 2");
  if (ef_construction < m) throw InvalidArgument("ef_construction must be >= m");
  if (ef_search < 1) throw InvalidArgument("ef_search must be >= 1");
}

TokenIndex::TokenIndex() = default;
TokenIndex::TokenIndex(TokenIndex&&) noexcept = default;
TokenIndex& TokenIndex::operator=(TokenIndex&&) noexcept = default;
TokenIndex::~TokenIndex() = default;

TokenIndex TokenIndex::build(TokenMatrix vectors, std::vector<TokenRef> refs,
                             const IndexParams& params) {
  params.validate();
  if (vectors.rows() == 0) throw InvalidArgument("cannot build an index over no vectors");
  if (refs.size() != vectors.rows()) {
    throw InvalidArgument("index build: " + std::to_string(refs.size()) + " refs for " +
                          std::to_string(vectors.rows()) + " vectors");
  }
  if (vectors.rows() > UINT32_MAX) throw InvalidArgument("index build: too many vectors");

  TokenIndex index;
  index.params_ = params;
  index.vectors_ = std::move(vectors);
  index.refs_ = std::move(refs);
  index.tombstones_.assign(index.refs_.size(), 0);
  if (params.backend == IndexBackend::hnsw) {
    index.graph_ = std::make_unique<detail::HnswGraph>(detail::HnswGraph::build(
        index.vectors_, params.m, params.ef_construction, params.seed));
  }
  return index;
}

std::vector<TokenHit> TokenIndex::search(std::span<const float> query, std::size_t k,
                                         std::optional<std::size_t> ef_search) const {
  if (k == 0) throw InvalidArgument("search: k must be >= 1");
  if (query.size() != dim()) {
    throw DimensionMismatch("dim mismatch: query dim " + std::to_string(query.size()) +
                            ", index dim " + std::to_string(dim()));
  }
  if (!graph_) return search_flat(query, k);

  const auto found =
      graph_->search(vectors_, query, std::min(k, size()), ef_search.value_or(params_.ef_search));
  std::vector<TokenHit> hits;
  hits.reserve(found.size());
  for (const auto& s : found) hits.push_back(TokenHit{refs_[s.id], s.sim});
  std::sort(hits.begin(), hits.end(), hit_before);
  return hits;
}

std::vector<TokenHit> TokenIndex::search_flat(std::span<const float> query, std::size_t k) const {
  std::vector<TokenHit> hits;
  hits.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    if (tombstones_[i]) continue;
    hits.push_back(TokenHit{refs_[i], dot(query, vectors_.row(i))});
  }
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                    hit_before);
  hits.resize(keep);
  return hits;
}

std::size_t TokenIndex::remove_document(std::uint32_t doc) {
  if (!supports_delete()) {
    throw Unsupported("hnsw index does not support deletion; rebuild the index instead");
  }
  std::size_t removed = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (refs_[i].doc == doc && !tombstones_[i]) {
      tombstones_[i] = 1;
      ++removed;
    }
  }
  return removed;
}

std::size_t TokenIndex::live_size() const noexcept {
  return static_cast<std::size_t>(std::count(tombstones_.begin(), tombstones_.end(), 0));
}

std::vector<std::vector<std::uint32_t>> TokenIndex::base_layer() const {
  std::vector<std::vector<std::uint32_t>> out;
  if (!graph_) return out;
  out.reserve(size());
  for (const auto& node : graph_->links()) out.push_back(node[0]);
  return out;
}

std::size_t TokenIndex::max_level() const noexcept { return graph_ ? graph_->max_level() : 0; }

// Layout (little-endian):
//   "MVIX" u32 version u32 backend(0 flat, 1 hnsw) u32 m u32 ef_construction
//   u32 ef_search u64 seed u64 count u32 dim
//   f32 vectors[count * dim]
//   {u32 doc, u32 token} refs[count]
//   flat: u8 tombstones[count]
//   hnsw: u32 max_level u32 entry, then per node u32 level and for each
//         layer 0..level: u32 degree, u32 neighbours[degree]
void TokenIndex::save(std::ostream& out) const {
  binio::write_magic(out, kIndexMagic);
  binio::write_le<std::uint32_t>(out, kIndexVersion);
  binio::write_le<std::uint32_t>(out, params_.backend == IndexBackend::flat ? 0U : 1U);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params_.m));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params_.ef_construction));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params_.ef_search));
  binio::write_le<std::uint64_t>(out, params_.seed);
  binio::write_le<std::uint64_t>(out, size());
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim()));
  binio::write_floats(out, vectors_.values());
  for (const auto& r : refs_) {
    binio::write_le<std::uint32_t>(out, r.doc);
    binio::write_le<std::uint32_t>(out, r.token);
  }
  if (graph_) {
    graph_->write(out);
  } else {
    binio::write_bytes(out, tombstones_);
  }
}

void TokenIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  save(out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

TokenIndex TokenIndex::load(std::istream& in) {
  binio::expect_magic(in, kIndexMagic);
  const auto version = binio::read_le<std::uint32_t>(in, "version");
  if (version != kIndexVersion) throw FormatError("unsupported index version " + std::to_string(version));
  const auto backend = binio::read_le<std::uint32_t>(in, "backend");
  if (backend > 1) throw FormatError("unknown index backend tag " + std::to_string(backend));

  TokenIndex index;
  index.params_.backend = backend == 0 ? IndexBackend::flat : IndexBackend::hnsw;
  index.params_.m = binio::read_le<std::uint32_t>(in, "m");
  index.params_.ef_construction = binio::read_le<std::uint32_t>(in, "ef_construction");
  index.params_.ef_search = binio::read_le<std::uint32_t>(in, "ef_search");
  index.params_.seed = binio::read_le<std::uint64_t>(in, "seed");
  const auto count = binio::read_le<std::uint64_t>(in, "count");
  const auto dim = binio::read_le<std::uint32_t>(in, "dim");
  try {
    index.params_.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid index params: ") + e.what());
  }
  if (count == 0 || dim == 0 || count > UINT32_MAX) throw FormatError("invalid index size");

  std::vector<float> values(count * dim);
  binio::read_floats(in, values, "index vectors");
  index.vectors_ = TokenMatrix(count, dim, std::move(values));
  index.refs_.resize(count);
  for (auto& r : index.refs_) {
    r.doc = binio::read_le<std::uint32_t>(in, "ref doc");
    r.token = binio::read_le<std::uint32_t>(in, "ref token");
  }
  index.tombstones_.assign(count, 0);
  if (index.params_.backend == IndexBackend::hnsw) {
    index.graph_ = std::make_unique<detail::HnswGraph>(detail::HnswGraph::read(in, count));
  } else {
    binio::read_bytes(in, index.tombstones_, "tombstones");
  }
  binio::expect_eof(in);
  return index;
}

TokenIndex TokenIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open index " + path.string());
  return load(in);
}

std::uint64_t TokenIndex::serialized_size() const {
  std::uint64_t size = 4 + 4 + 4 + 4 + 4 + 4 + 8 + 8 + 4;
  size += 4ULL * vectors_.values().size();
  size += 8ULL * refs_.size();
  size += graph_ ? graph_->serialized_size() : refs_.size();
  return size;
}

}  // namespace mvtp
