#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mvtp {

/// Dense row-major matrix holding one vector per token.
class TokenMatrix {
 public:
  TokenMatrix() = default;
  /// Zero-filled rows x dim matrix.
  TokenMatrix(std::size_t rows, std::size_t dim);
  TokenMatrix(std::size_t rows, std::size_t dim, std::vector<float> data);

  static TokenMatrix from_rows(const std::vector<std::vector<float>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const float> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) noexcept {
    return {data_.data() + i * dim_, dim_};
  }

  std::span<const float> values() const noexcept { return data_; }
  std::span<float> values() noexcept { return data_; }

  void append_row(std::span<const float> values);

  bool operator==(const TokenMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

/// Float dot product (32-bit accumulation).
inline float dot(std::span<const float> a, std::span<const float> b) noexcept {
  // Eight independent partial sums let the compiler vectorize without
  // reassociating a single accumulator.
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  float tail = 0.0F;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
}

double squared_norm(std::span<const float> v) noexcept;

/// Scales v to unit L2 norm. Rows already unit-norm to within float rounding
/// are left untouched so normalization is idempotent bit for bit.
/// Returns false (and leaves v unchanged) when v has zero norm.
bool normalize(std::span<float> v) noexcept;

/// Normalizes every row; throws InvalidArgument on a zero-norm row.
void normalize_rows(TokenMatrix& m);

}  // namespace mvtp
