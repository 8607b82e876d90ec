#pragma once

#include <span>
#include <vector>

#include "mvtp/token_matrix.hpp"

namespace mvtp {

/// Late-interaction score: sum over query rows of the best dot product
/// against any document row. Dot products use 32-bit accumulation, the sum
/// over query rows a 64-bit accumulator.
/// Throws DimensionMismatch or InvalidArgument (empty matrix).
double maxsim(const TokenMatrix& query, const TokenMatrix& doc);

/// maxsim against many documents. Documents are scored in parallel with a
/// document-major kernel; results agree with maxsim to float rounding.
std::vector<double> maxsim_batch(const TokenMatrix& query,
                                 std::span<const TokenMatrix> docs);
std::vector<double> maxsim_batch(const TokenMatrix& query,
                                 std::span<const TokenMatrix* const> docs);

}  // namespace mvtp
