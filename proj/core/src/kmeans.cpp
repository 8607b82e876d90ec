#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "mvtp/clustering.hpp"
#include "mvtp/error.hpp"
#include "rng.hpp"

namespace mvtp {

namespace {

double cosine_distance(std::span<const float> a, std::span<const float> b) {
  return std::max(0.0, 1.0 - static_cast<double>(dot(a, b)));
}

// k-means++ seeding: first centre uniform, then proportional to the squared
// distance to the nearest chosen centre.
std::vector<std::size_t> seed_centers(const TokenMatrix& m, std::size_t k, std::mt19937_64& gen) {
  const std::size_t n = m.rows();
  std::vector<std::size_t> centers;
  centers.reserve(k);
  std::vector<char> chosen(n, 0);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  auto add_center = [&](std::size_t c) {
    centers.push_back(c);
    chosen[c] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], cosine_distance(m.row(i), m.row(c)));
    }
  };

  add_center(static_cast<std::size_t>(detail::uniform_index(gen, n)));
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i]) total += nearest[i] * nearest[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = detail::uniform01(gen) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        acc += nearest[i] * nearest[i];
        if (nearest[i] > 0.0) pick = i;
        if (acc > target) break;
      }
    }
    if (pick == n) {
      // Every remaining point coincides with a centre.
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
    }
    add_center(pick);
  }
  return centers;
}

// Centroids stored dimension-major so similarities to all centroids
// accumulate in one contiguous sweep per dimension.
class CentroidBlock {
 public:
  explicit CentroidBlock(const TokenMatrix& centroids)
      : k_(centroids.rows()), dim_(centroids.dim()), t_(k_ * dim_), sims_(k_) {
    for (std::size_t c = 0; c < k_; ++c) {
      for (std::size_t d = 0; d < dim_; ++d) t_[d * k_ + c] = centroids.row(c)[d];
    }
  }

  /// Index of the most similar centroid; the lowest index wins a tie.
  std::size_t closest(std::span<const float> v) {
    std::fill(sims_.begin(), sims_.end(), 0.0F);
    float* sims = sims_.data();
    std::size_t d = 0;
    for (; d + 4 <= dim_; d += 4) {
      const float x0 = v[d], x1 = v[d + 1], x2 = v[d + 2], x3 = v[d + 3];
      const float* c0 = t_.data() + d * k_;
      const float* c1 = c0 + k_;
      const float* c2 = c1 + k_;
      const float* c3 = c2 + k_;
      for (std::size_t c = 0; c < k_; ++c) sims[c] += (x0 * c0[c] + x1 * c1[c]) + (x2 * c2[c] + x3 * c3[c]);
    }
    for (; d < dim_; ++d) {
      const float x = v[d];
      const float* col = t_.data() + d * k_;
      for (std::size_t c = 0; c < k_; ++c) sims[c] += x * col[c];
    }
    return static_cast<std::size_t>(std::max_element(sims_.begin(), sims_.end()) - sims_.begin());
  }

 private:
  std::size_t k_;
  std::size_t dim_;
  std::vector<float> t_;
  std::vector<float> sims_;
};

// Normalized member means; a cluster whose mean vanishes keeps its centroid.
void update_centroids(const TokenMatrix& m, const std::vector<std::size_t>& labels,
                      TokenMatrix& centroids) {
  const std::size_t dim = m.dim();
  std::vector<double> sums(centroids.rows() * dim, 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    double* s = sums.data() + labels[i] * dim;
    for (std::size_t c = 0; c < dim; ++c) s[c] += row[c];
  }
  for (std::size_t k = 0; k < centroids.rows(); ++k) {
    const double* s = sums.data() + k * dim;
    double sq = 0.0;
    for (std::size_t c = 0; c < dim; ++c) sq += s[c] * s[c];
    if (!(sq > 0.0)) continue;
    const double inv = 1.0 / std::sqrt(sq);
    auto out = centroids.row(k);
    for (std::size_t c = 0; c < dim; ++c) out[c] = static_cast<float>(s[c] * inv);
  }
}

double objective(const TokenMatrix& m, const std::vector<std::size_t>& labels,
                 const TokenMatrix& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    total += 1.0 - static_cast<double>(dot(m.row(i), centroids.row(labels[i])));
  }
  return total;
}

}  // namespace

KMeansResult spherical_kmeans_detailed(const TokenMatrix& m, std::size_t k, std::uint64_t seed,
                                       std::size_t max_iters) {
  const std::size_t n = m.rows();
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (k > n) {
    throw InvalidArgument("k (" + std::to_string(k) + ") exceeds row count (" +
                          std::to_string(n) + ")");
  }

  std::mt19937_64 gen(seed);
  TokenMatrix centroids(k, m.dim());
  {
    const auto centers = seed_centers(m, k, gen);
    for (std::size_t c = 0; c < k; ++c) {
      std::copy_n(m.row(centers[c]).begin(), m.dim(), centroids.row(c).begin());
    }
  }

  KMeansResult result;
  std::vector<std::size_t> labels(n, 0);
  std::vector<std::size_t> previous;
  std::vector<std::size_t> members(k, 0);

  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iters, 1); ++iter) {
    std::fill(members.begin(), members.end(), 0);
    CentroidBlock block(centroids);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = block.closest(m.row(i));
      ++members[labels[i]];
    }
    // Refill empty clusters with the point farthest from its own centroid,
    // taken from clusters that can spare one.
    for (std::size_t c = 0; c < k; ++c) {
      if (members[c] != 0) continue;
      std::size_t far = n;
      float far_sim = std::numeric_limits<float>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (members[labels[i]] < 2) continue;
        const float s = dot(m.row(i), centroids.row(labels[i]));
        if (s < far_sim) {
          far_sim = s;
          far = i;
        }
      }
      --members[labels[far]];
      labels[far] = c;
      members[c] = 1;
    }

    result.iterations = iter + 1;
    if (!previous.empty() && labels == previous) {
      result.converged = true;
      break;
    }
    update_centroids(m, labels, centroids);
    result.objective_history.push_back(objective(m, labels, centroids));
    previous = labels;
  }

  // Renumber by first appearance and permute centroids to match.
  result.assignment = relabel_by_first_appearance(labels);
  TokenMatrix ordered(k, m.dim());
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(centroids.row(labels[i]).begin(), m.dim(),
                ordered.row(result.assignment.labels[i]).begin());
  }
  result.centroids = std::move(ordered);
  return result;
}

Assignment spherical_kmeans(const TokenMatrix& m, std::size_t k, std::uint64_t seed,
                            std::size_t max_iters) {
  return spherical_kmeans_detailed(m, k, seed, max_iters).assignment;
}

double spherical_objective(const TokenMatrix& m, const Assignment& a) {
  if (a.labels.size() != m.rows()) throw InvalidArgument("assignment length != row count");
  TokenMatrix centroids(a.k, m.dim());
  update_centroids(m, a.labels, centroids);
  return objective(m, a.labels, centroids);
}

}  // namespace mvtp
