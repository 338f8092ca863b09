#pragma once

#include <vector>

#include "fht/tensor.hpp"

namespace fht {

inline constexpr double kSvdRelTol = 1e-10;
inline constexpr double kLstsqCutoff = 1e-10;

/// Rank-r factorization M ~= U * diag(singular_values) * V^T with orthonormal
/// columns of U and V and nonincreasing singular values.
struct TruncatedSvd {
    DenseTensor u;                       // m x r
    std::vector<double> singular_values; // length r, nonincreasing
    DenseTensor v;                       // n x r
    std::size_t rank() const { return singular_values.size(); }
};

/// Keeps r = min(r_max, #{sigma_i > rel_tol * sigma_1}) triples. An all-zero
/// matrix yields r = 1 with sigma_1 = 0 and unit-coordinate vectors.
TruncatedSvd truncated_svd(const DenseTensor& m, std::size_t r_max, double rel_tol = kSvdRelTol);

/// Minimum-norm least-squares solution X of A X = B via SVD pseudoinverse
/// with singular-value cutoff `cutoff * sigma_1`.
DenseTensor lstsq(const DenseTensor& a, const DenseTensor& b, double cutoff = kLstsqCutoff);

}  // namespace fht
