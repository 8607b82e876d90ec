#include "mvtp/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>
#include <unordered_map>

#include "mvtp/error.hpp"

namespace mvtp {

CondensedDistances cosine_distance_matrix(const TokenMatrix& m) {
  const std::size_t n = m.rows();
  if (n < 2) throw InvalidArgument("cosine_distance_matrix needs at least 2 rows");
  CondensedDistances d;
  d.n = n;
  d.values.resize(n * (n - 1) / 2);
  const std::size_t dim = m.dim();
  const auto values = m.values();
  const std::vector<double> rows(values.begin(), values.end());
  std::size_t idx = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double* a = rows.data() + i * dim;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* b = rows.data() + j * dim;
      double acc[4] = {0.0, 0.0, 0.0, 0.0};
      std::size_t c = 0;
      for (; c + 4 <= dim; c += 4) {
        for (std::size_t l = 0; l < 4; ++l) {
          const double diff = a[c + l] - b[c + l];
          acc[l] += diff * diff;
        }
      }
      for (; c < dim; ++c) {
        const double diff = a[c] - b[c];
        acc[0] += diff * diff;
      }
      const double sq = (acc[0] + acc[1]) + (acc[2] + acc[3]);
      d.values[idx++] = std::clamp(0.5 * sq, 0.0, 2.0);
    }
  }
  return d;
}

Assignment relabel_by_first_appearance(std::span<const std::size_t> labels) {
  Assignment a;
  a.labels.resize(labels.size());
  std::unordered_map<std::size_t, std::size_t> remap;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto [it, inserted] = remap.emplace(labels[i], remap.size());
    a.labels[i] = it->second;
  }
  a.k = remap.size();
  return a;
}

double ward_update(double d_ik, double d_jk, double d_ij, double n_i, double n_j,
                   double n_k) noexcept {
  const double t =
      ((n_i + n_k) * d_ik * d_ik + (n_j + n_k) * d_jk * d_jk - n_k * d_ij * d_ij) /
      (n_i + n_j + n_k);
  return std::sqrt(std::max(t, 0.0));
}

namespace {

// Ordering key of a candidate merge: distance, then lower node id, then
// higher node id.
struct PairKey {
  double distance;
  std::size_t lo;
  std::size_t hi;

  bool operator<(const PairKey& o) const noexcept {
    return std::tie(distance, lo, hi) < std::tie(o.distance, o.lo, o.hi);
  }
};

}  // namespace

Dendrogram ward_linkage(const CondensedDistances& d, std::span<const std::size_t> sizes) {
  const std::size_t n = d.n;
  if (n < 2) throw InvalidArgument("ward_linkage needs at least 2 leaves");
  if (d.values.size() != n * (n - 1) / 2) {
    throw InvalidArgument("condensed distance vector has wrong length");
  }
  if (!sizes.empty() && sizes.size() != n) {
    throw InvalidArgument("leaf sizes must have one entry per leaf");
  }
  for (double v : d.values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument("ward_linkage: non-finite or negative distance");
    }
  }

  // Full working matrix; slot s holds the cluster with node id node[s].
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] = d.values[CondensedDistances::index(n, i, j)];
    }
  }
  std::vector<std::size_t> node(n);
  std::iota(node.begin(), node.end(), 0);
  std::vector<double> weight(n, 1.0);
  std::vector<std::size_t> count(n, 1);
  if (!sizes.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      weight[i] = static_cast<double>(sizes[i]);
      count[i] = sizes[i];
    }
  }
  // Live slots in increasing order. Each slot caches its best partner among
  // the live slots above it, so every pair is owned by its lower slot.
  std::vector<std::size_t> live(n);
  std::iota(live.begin(), live.end(), 0);

  auto key = [&](std::size_t a, std::size_t b) {
    return PairKey{dist[a * n + b], std::min(node[a], node[b]), std::max(node[a], node[b])};
  };

  std::vector<std::size_t> nn(n, n);
  std::vector<double> nn_dist(n, 0.0);
  // For a fixed slot, a distance tie goes to the partner with the lower node id.
  auto rescan = [&](std::size_t a) {
    const double* row = dist.data() + a * n;
    std::size_t best = n;
    double best_d = 0.0;
    for (auto it = std::upper_bound(live.begin(), live.end(), a); it != live.end(); ++it) {
      const std::size_t b = *it;
      const double v = row[b];
      if (best == n || v < best_d || (v == best_d && node[b] < node[best])) {
        best = b;
        best_d = v;
      }
    }
    nn[a] = best;
    nn_dist[a] = best_d;
  };
  for (std::size_t a = 0; a < n; ++a) rescan(a);

  Dendrogram dend;
  dend.n_leaves = n;
  dend.merges.reserve(n - 1);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t best_a = n;
    PairKey best{};
    for (std::size_t a : live) {
      if (nn[a] == n) continue;
      if (best_a != n && nn_dist[a] > best.distance) continue;
      const PairKey k = key(a, nn[a]);
      if (best_a == n || k < best) {
        best = k;
        best_a = a;
      }
    }
    std::size_t a = best_a;
    std::size_t b = nn[best_a];
    // Slot a takes the lower node id so the recurrence sees (i, j) in id order.
    if (node[a] > node[b]) std::swap(a, b);

    const double d_ab = dist[a * n + b];
    dend.merges.push_back(Merge{node[a], node[b], d_ab, count[a] + count[b]});

    for (std::size_t k : live) {
      if (k == a || k == b) continue;
      const double updated =
          ward_update(dist[a * n + k], dist[b * n + k], d_ab, weight[a], weight[b], weight[k]);
      dist[a * n + k] = dist[k * n + a] = updated;
    }
    live.erase(std::lower_bound(live.begin(), live.end(), b));
    weight[a] += weight[b];
    count[a] += count[b];
    node[a] = n + step;

    if (step + 2 == n) break;
    rescan(a);
    const double* row_a = dist.data() + a * n;
    for (std::size_t k : live) {
      if (nn[k] == b || (k < a && nn[k] == a)) {
        rescan(k);
      } else if (k < a) {
        const double v = row_a[k];
        if (v < nn_dist[k] || (v == nn_dist[k] && node[a] < node[nn[k]])) {
          nn[k] = a;
          nn_dist[k] = v;
        }
      }
    }
  }
  return dend;
}

Assignment cut_dendrogram(const Dendrogram& dend, std::size_t max_clusters) {
  if (max_clusters < 1) throw InvalidArgument("max_clusters must be >= 1");
  const std::size_t n = dend.n_leaves;
  if (dend.merges.size() + 1 != n && n > 0) {
    throw InvalidArgument("dendrogram must contain n_leaves - 1 merges");
  }
  if (max_clusters >= n) {
    Assignment a;
    a.labels.resize(n);
    std::iota(a.labels.begin(), a.labels.end(), 0);
    a.k = n;
    return a;
  }

  // Cophenetic height of each merge node: the largest merge distance in its
  // subtree, which makes the heights monotone even if the input has
  // inversions.
  const std::size_t m = dend.merges.size();
  std::vector<double> height(m);
  for (std::size_t s = 0; s < m; ++s) {
    double h = dend.merges[s].distance;
    for (std::size_t child : {dend.merges[s].left, dend.merges[s].right}) {
      if (child >= n) h = std::max(h, height[child - n]);
    }
    height[s] = h;
  }

  // Smallest threshold t with n - #{height <= t} <= max_clusters.
  std::vector<double> sorted = height;
  std::sort(sorted.begin(), sorted.end());
  const double threshold = sorted[n - max_clusters - 1];

  std::vector<std::size_t> parent(n + m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t s = 0; s < m; ++s) {
    if (height[s] <= threshold) {
      parent[find(dend.merges[s].left)] = n + s;
      parent[find(dend.merges[s].right)] = n + s;
    }
  }
  std::vector<std::size_t> roots(n);
  for (std::size_t i = 0; i < n; ++i) roots[i] = find(i);
  return relabel_by_first_appearance(roots);
}

}  // namespace mvtp
