#include "mvtp/token_matrix.hpp"

#include <cmath>
#include <string>

#include "mvtp/error.hpp"

namespace mvtp {

TokenMatrix::TokenMatrix(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), data_(rows * dim, 0.0F) {}

TokenMatrix::TokenMatrix(std::size_t rows, std::size_t dim, std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (data_.size() != rows_ * dim_) {
    throw InvalidArgument("TokenMatrix: expected " + std::to_string(rows_ * dim_) +
                          " values, got " + std::to_string(data_.size()));
  }
}

TokenMatrix TokenMatrix::from_rows(const std::vector<std::vector<float>>& rows) {
  TokenMatrix m;
  for (const auto& r : rows) m.append_row(r);
  return m;
}

void TokenMatrix::append_row(std::span<const float> values) {
  if (rows_ == 0 && dim_ == 0) {
    dim_ = values.size();
  } else if (values.size() != dim_) {
    throw DimensionMismatch("dim mismatch: row has " + std::to_string(values.size()) +
                            " values, matrix dim is " + std::to_string(dim_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

double squared_norm(std::span<const float> v) noexcept {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return s;
}

bool normalize(std::span<float> v) noexcept {
  const double sq = squared_norm(v);
  if (!(sq > 0.0) || !std::isfinite(sq)) return false;
  if (std::abs(sq - 1.0) <= 1e-6) {
    return true;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (float& x : v) x = static_cast<float>(x * inv);
  return true;
}

void normalize_rows(TokenMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (!normalize(m.row(i))) {
      throw InvalidArgument("row " + std::to_string(i) + " has zero or non-finite norm");
    }
  }
}

}  // namespace mvtp
