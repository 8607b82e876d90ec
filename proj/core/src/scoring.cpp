#include "mvtp/scoring.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "mvtp/error.hpp"
#include "mvtp/parallel.hpp"

namespace mvtp {

namespace {

void check_pair(const TokenMatrix& q, const TokenMatrix& d) {
  if (q.rows() == 0 || d.rows() == 0) throw InvalidArgument("maxsim on an empty matrix");
  if (q.dim() != d.dim()) {
    throw DimensionMismatch("dim mismatch: query dim " + std::to_string(q.dim()) +
                            ", document dim " + std::to_string(d.dim()));
  }
}

// Document-major kernel: streams each document row once and keeps a running
// maximum per query row.
double maxsim_doc_major(const TokenMatrix& q, const TokenMatrix& d, std::vector<float>& best) {
  best.assign(q.rows(), -std::numeric_limits<float>::infinity());
  for (std::size_t j = 0; j < d.rows(); ++j) {
    const auto drow = d.row(j);
    for (std::size_t i = 0; i < q.rows(); ++i) {
      best[i] = std::max(best[i], dot(q.row(i), drow));
    }
  }
  double total = 0.0;
  for (float b : best) total += b;
  return total;
}

}  // namespace

double maxsim(const TokenMatrix& query, const TokenMatrix& doc) {
  check_pair(query, doc);
  double total = 0.0;
  for (std::size_t i = 0; i < query.rows(); ++i) {
    const auto qrow = query.row(i);
    float best = -std::numeric_limits<float>::infinity();
    for (std::size_t j = 0; j < doc.rows(); ++j) best = std::max(best, dot(qrow, doc.row(j)));
    total += best;
  }
  return total;
}

std::vector<double> maxsim_batch(const TokenMatrix& query,
                                 std::span<const TokenMatrix* const> docs) {
  for (const TokenMatrix* d : docs) check_pair(query, *d);
  std::vector<double> scores(docs.size());
  parallel_for(docs.size(), [&](std::size_t i) {
    thread_local std::vector<float> best;
    scores[i] = maxsim_doc_major(query, *docs[i], best);
  });
  return scores;
}

std::vector<double> maxsim_batch(const TokenMatrix& query, std::span<const TokenMatrix> docs) {
  std::vector<const TokenMatrix*> ptrs;
  ptrs.reserve(docs.size());
  for (const auto& d : docs) ptrs.push_back(&d);
  return maxsim_batch(query, std::span<const TokenMatrix* const>(ptrs));
}

}  // namespace mvtp
