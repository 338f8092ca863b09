#pragma once

#include <cstddef>

namespace fht::kernels {

/// Hard truncation for sample moments: an entry is zeroed when its magnitude
/// does not exceed `factor` times the estimated standard deviation of the
/// sample mean.
struct TruncationRule {
    bool enabled = true;
    double factor = 2.0;
};

/// Moment matrix between two sketch-value blocks stored function-major
/// (`l` is rl x n, `r` is rr x n). out(mu, rho) is the truncated sample mean
/// of l(mu, i) * r(rho, i) over i.
///
/// Sums are accumulated exactly in 128-bit fixed point with a scale set from
/// the entry's maximum magnitude, so results are bit-identical under any
/// permutation of the samples and any thread count.
void moment_matrix(const double* l, std::size_t rl, const double* r, std::size_t rr,
                   std::size_t n, const TruncationRule& rule, double* out);

/// Three-way analogue; out has extents rl x rm x rr, row-major.
void moment_tensor3(const double* l, std::size_t rl, const double* m, std::size_t rm,
                    const double* r, std::size_t rr, std::size_t n, const TruncationRule& rule,
                    double* out);

namespace serial {
void moment_matrix(const double* l, std::size_t rl, const double* r, std::size_t rr,
                   std::size_t n, const TruncationRule& rule, double* out);
void moment_tensor3(const double* l, std::size_t rl, const double* m, std::size_t rm,
                    const double* r, std::size_t rr, std::size_t n, const TruncationRule& rule,
                    double* out);
}  // namespace serial

}  // namespace fht::kernels
