#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mvtp/token_matrix.hpp"

namespace mvtp {

/// Upper triangle (i < j) of a symmetric n x n distance matrix, stored row by
/// row in the same order as scipy's condensed form.
struct CondensedDistances {
  std::size_t n = 0;
  std::vector<double> values;

  static std::size_t index(std::size_t n, std::size_t i, std::size_t j) noexcept {
    return n * i - i * (i + 1) / 2 + (j - i - 1);
  }
  /// Distance between i and j; 0 on the diagonal.
  double operator()(std::size_t i, std::size_t j) const noexcept {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    return values[index(n, i, j)];
  }
};

/// Cosine distance 1 - <a,b> between all row pairs, clamped to [0, 2].
/// Computed as |a - b|^2 / 2, which is identical for unit rows and exactly 0
/// for duplicate rows. Throws InvalidArgument for fewer than two rows.
CondensedDistances cosine_distance_matrix(const TokenMatrix& m);

/// One agglomeration step. Node ids follow scipy: leaves are 0..n-1, the
/// cluster created by merge s gets id n + s. left < right.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;

  bool operator==(const Merge&) const = default;
};

struct Dendrogram {
  std::size_t n_leaves = 0;
  std::vector<Merge> merges;
};

/// Flat clustering: labels[i] in 0..k-1, each id used at least once.
struct Assignment {
  std::vector<std::size_t> labels;
  std::size_t k = 0;

  bool operator==(const Assignment&) const = default;
};

/// Relabels so that cluster ids appear in order of first occurrence.
Assignment relabel_by_first_appearance(std::span<const std::size_t> labels);

/// Ward's d(i u j, k) from the Lance-Williams recurrence. Operands are
/// ordered so that `i` is the cluster with the lower node id; the expression
/// is evaluated in a fixed order so results are reproducible bit for bit.
double ward_update(double d_ik, double d_jk, double d_ij, double n_i, double n_j,
                   double n_k) noexcept;

/// Greedy Ward agglomeration over a condensed distance matrix. At every step
/// the active pair with the smallest (distance, lower id, higher id) merges.
/// `sizes` gives initial leaf weights (all 1 when empty).
/// Throws InvalidArgument for n < 2, a non-finite or negative distance, or a
/// size vector of the wrong length.
Dendrogram ward_linkage(const CondensedDistances& d,
                        std::span<const std::size_t> sizes = {});

/// Flat clusters from a dendrogram with at most `max_clusters` clusters.
///
/// Merges are undone from the top while the cluster count stays within the
/// bound. Merges with equal cophenetic height are undone together, so the
/// result can have fewer than `max_clusters` clusters when heights tie (for
/// example when duplicate vectors merge at distance 0). When max_clusters >=
/// n_leaves every leaf is its own cluster. Labels are numbered in order of
/// first appearance.
Assignment cut_dendrogram(const Dendrogram& dend, std::size_t max_clusters);

struct KMeansResult {
  Assignment assignment;
  /// Unit-norm centroid per cluster, indexed by label.
  TokenMatrix centroids;
  /// Objective after each centroid update; non-increasing.
  std::vector<double> objective_history;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Spherical k-means with k-means++ seeding (distance weight = squared cosine
/// distance). Stops at a label fixpoint or after max_iters iterations.
/// Empty clusters are refilled with the point farthest from its centroid, so
/// exactly k clusters are returned.
/// Throws InvalidArgument unless 1 <= k <= rows.
KMeansResult spherical_kmeans_detailed(const TokenMatrix& m, std::size_t k,
                                       std::uint64_t seed,
                                       std::size_t max_iters = 20);

Assignment spherical_kmeans(const TokenMatrix& m, std::size_t k, std::uint64_t seed,
                            std::size_t max_iters = 20);

/// sum_i (1 - <row_i, c(label_i)>) with c the normalized mean of each
/// cluster's members.
double spherical_objective(const TokenMatrix& m, const Assignment& a);

}  // namespace mvtp
