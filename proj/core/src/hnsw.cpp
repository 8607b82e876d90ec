#include "hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>

#include "binary_io.hpp"
#include "mvtp/error.hpp"
#include "rng.hpp"

namespace mvtp::detail {

namespace {

// true when a ranks ahead of b.
inline bool better(const Scored& a, const Scored& b) noexcept {
  return a.sim > b.sim || (a.sim == b.sim && a.id < b.id);
}

struct WorstOnTop {
  bool operator()(const Scored& a, const Scored& b) const noexcept { return better(a, b); }
};
struct BestOnTop {
  bool operator()(const Scored& a, const Scored& b) const noexcept { return better(b, a); }
};

}  // namespace

HnswGraph HnswGraph::build(const TokenMatrix& vectors, std::size_t m, std::size_t ef_construction,
                           std::uint64_t seed) {
  HnswGraph g;
  g.m_ = m;
  g.ef_construction_ = ef_construction;
  g.links_.resize(vectors.rows());
  g.visited_.assign(vectors.rows(), 0);

  std::mt19937_64 gen(seed);
  const double level_mult = 1.0 / std::log(static_cast<double>(m));
  for (std::uint32_t i = 0; i < vectors.rows(); ++i) {
    const double u = 1.0 - uniform01(gen);  // (0, 1]
    const auto level = static_cast<std::size_t>(std::floor(-std::log(u) * level_mult));
    g.insert(vectors, i, level);
  }
  g.visited_.clear();
  g.visited_.shrink_to_fit();
  return g;
}

void HnswGraph::insert(const TokenMatrix& vectors, std::uint32_t node, std::size_t level) {
  links_[node].resize(level + 1);
  if (node == 0) {
    entry_ = 0;
    max_level_ = level;
    return;
  }
  const auto query = vectors.row(node);
  Scored cur{dot(query, vectors.row(entry_)), entry_};

  for (std::size_t layer = max_level_; layer > level; --layer) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (std::uint32_t nb : links_[cur.id][layer]) {
        const Scored cand{dot(query, vectors.row(nb)), nb};
        if (better(cand, cur)) {
          cur = cand;
          moved = true;
        }
      }
    }
  }

  std::vector<Scored> entry{cur};
  for (std::size_t layer = std::min(level, max_level_) + 1; layer-- > 0;) {
    auto found = search_layer(vectors, query, entry, ef_construction_, layer, visited_, epoch_);
    auto& own = links_[node][layer];
    own = select_neighbors(vectors, found, m_);

    for (std::uint32_t nb : own) {
      auto& theirs = links_[nb][layer];
      theirs.push_back(node);
      if (theirs.size() > max_degree(layer)) {
        const auto base = vectors.row(nb);
        std::vector<Scored> cands;
        cands.reserve(theirs.size());
        for (std::uint32_t x : theirs) cands.push_back({dot(base, vectors.row(x)), x});
        std::sort(cands.begin(), cands.end(), better);
        theirs = select_neighbors(vectors, cands, max_degree(layer));
      }
    }
    entry = std::move(found);
  }

  if (level > max_level_) {
    max_level_ = level;
    entry_ = node;
  }
}

std::vector<Scored> HnswGraph::search_layer(const TokenMatrix& vectors,
                                            std::span<const float> query,
                                            const std::vector<Scored>& entry, std::size_t ef,
                                            std::size_t layer,
                                            std::vector<std::uint32_t>& visited,
                                            std::uint32_t& epoch) const {
  if (++epoch == 0) {
    std::fill(visited.begin(), visited.end(), 0);
    epoch = 1;
  }
  std::priority_queue<Scored, std::vector<Scored>, BestOnTop> candidates;
  std::priority_queue<Scored, std::vector<Scored>, WorstOnTop> results;
  for (const Scored& e : entry) {
    if (visited[e.id] == epoch) continue;
    visited[e.id] = epoch;
    candidates.push(e);
    results.push(e);
    if (results.size() > ef) results.pop();
  }

  while (!candidates.empty()) {
    const Scored c = candidates.top();
    if (results.size() >= ef && better(results.top(), c)) break;
    candidates.pop();
    for (std::uint32_t nb : links_[c.id][layer]) {
      if (visited[nb] == epoch) continue;
      visited[nb] = epoch;
      const Scored s{dot(query, vectors.row(nb)), nb};
      if (results.size() < ef || better(s, results.top())) {
        candidates.push(s);
        results.push(s);
        if (results.size() > ef) results.pop();
      }
    }
  }

  std::vector<Scored> out(results.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = results.top();
    results.pop();
  }
  return out;
}

// Diversity heuristic: keep a candidate only if it is closer to the base
// point than to every neighbour already kept. `candidates` is best first.
std::vector<std::uint32_t> HnswGraph::select_neighbors(const TokenMatrix& vectors,
                                                       const std::vector<Scored>& candidates,
                                                       std::size_t max_count) const {
  std::vector<std::uint32_t> kept;
  kept.reserve(max_count);
  for (const Scored& c : candidates) {
    if (kept.size() >= max_count) break;
    const auto v = vectors.row(c.id);
    bool keep = true;
    for (std::uint32_t k : kept) {
      if (dot(v, vectors.row(k)) > c.sim) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(c.id);
  }
  return kept;
}

std::vector<Scored> HnswGraph::search(const TokenMatrix& vectors, std::span<const float> query,
                                      std::size_t k, std::size_t ef) const {
  if (links_.empty()) return {};
  Scored cur{dot(query, vectors.row(entry_)), entry_};
  for (std::size_t layer = max_level_; layer > 0; --layer) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (std::uint32_t nb : links_[cur.id][layer]) {
        const Scored cand{dot(query, vectors.row(nb)), nb};
        if (better(cand, cur)) {
          cur = cand;
          moved = true;
        }
      }
    }
  }
  std::vector<std::uint32_t> visited(links_.size(), 0);
  std::uint32_t epoch = 0;
  auto found = search_layer(vectors, query, {cur}, std::max(ef, k), 0, visited, epoch);
  if (found.size() > k) found.resize(k);
  return found;
}

void HnswGraph::write(std::ostream& out) const {
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(max_level_));
  binio::write_le<std::uint32_t>(out, entry_);
  for (const auto& node : links_) {
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(node.size() - 1));
    for (const auto& layer : node) {
      binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(layer.size()));
      for (std::uint32_t nb : layer) binio::write_le<std::uint32_t>(out, nb);
    }
  }
}

HnswGraph HnswGraph::read(std::istream& in, std::size_t node_count) {
  HnswGraph g;
  g.max_level_ = binio::read_le<std::uint32_t>(in, "hnsw max level");
  g.entry_ = binio::read_le<std::uint32_t>(in, "hnsw entry point");
  if (node_count > 0 && g.entry_ >= node_count) throw FormatError("hnsw entry point out of range");
  g.links_.resize(node_count);
  for (auto& node : g.links_) {
    const auto level = binio::read_le<std::uint32_t>(in, "hnsw node level");
    if (level > g.max_level_) throw FormatError("hnsw node level exceeds max level");
    node.resize(static_cast<std::size_t>(level) + 1);
    for (auto& layer : node) {
      const auto degree = binio::read_le<std::uint32_t>(in, "hnsw degree");
      if (degree > node_count) throw FormatError("hnsw degree out of range");
      layer.resize(degree);
      for (auto& nb : layer) {
        nb = binio::read_le<std::uint32_t>(in, "hnsw neighbour");
        if (nb >= node_count) throw FormatError("hnsw neighbour id out of range");
      }
    }
  }
  if (node_count > 0 && g.links_[g.entry_].size() != g.max_level_ + 1) {
    throw FormatError("hnsw entry point is not on the top layer");
  }
  return g;
}

std::uint64_t HnswGraph::serialized_size() const noexcept {
  std::uint64_t size = 8;
  for (const auto& node : links_) {
    size += 4;
    for (const auto& layer : node) size += 4 + 4ULL * layer.size();
  }
  return size;
}

}  // namespace mvtp::detail
