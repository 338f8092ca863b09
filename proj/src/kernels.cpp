#include "fht/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>

#include "fht/errors.hpp"

namespace fht::kernels {

namespace {

/// Rounds v * 2^scale to the nearest integer, working directly on the IEEE
/// representation so the mapping is exact and independent of evaluation order.
inline __int128 quantize(double v, int scale) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    const bool neg = (bits >> 63) != 0;
    int e = static_cast<int>((bits >> 52) & 0x7FF);
    std::uint64_t mant = bits & 0xFFFFFFFFFFFFFull;
    if (e == 0) {
        if (mant == 0) return 0;
        e = 1;  // subnormal: value = mant * 2^(1 - 1075)
    } else {
        mant |= 1ull << 52;
    }
    const int shift = e - 1075 + scale;
    __int128 q;
    if (shift >= 0) {
        q = static_cast<__int128>(mant) << shift;
    } else {
        const int rs = -shift;
        if (rs >= 64) return 0;
        const std::uint64_t half = rs > 0 ? (1ull << (rs - 1)) : 0;
        q = static_cast<__int128>((mant + half) >> rs);
    }
    return neg ? -q : q;
}

inline double dequantize(__int128 q, int scale) {
    return std::ldexp(static_cast<double>(q), -scale);
}

/// Scale placing the largest-magnitude term just below 2^59, leaving room for
/// 2^26 summands in the 128-bit accumulator.
inline int scale_for(double maxabs) { return 58 - std::ilogb(maxabs); }

struct EntryMoment {
    double mean = 0.0;
    double summand_var = 0.0;  // sample variance of the summand
};

template <typename ValueFn>
EntryMoment entry_moment(std::size_t n, ValueFn&& value) {
    double maxabs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::fabs(value(i));
        if (a > maxabs) maxabs = a;
    }
    if (!std::isfinite(maxabs)) throw Error("non-finite sketch value in moment estimation");
    EntryMoment out;
    if (maxabs == 0.0) return out;

    const int s1 = scale_for(maxabs);
    const int s2 = scale_for(maxabs * maxabs);
    __int128 acc = 0, acc2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = value(i);
        acc += quantize(v, s1);
        acc2 += quantize(v * v, s2);
    }
    const double sum = dequantize(acc, s1);
    const double sumsq = dequantize(acc2, s2);
    const double nn = static_cast<double>(n);
    out.mean = sum / nn;
    if (n > 1) {
        out.summand_var = std::fmax(0.0, (sumsq - nn * out.mean * out.mean) / (nn - 1.0));
    }
    return out;
}

inline double apply_truncation(const EntryMoment& m, std::size_t n, const TruncationRule& rule) {
    if (!rule.enabled) return m.mean;
    const double se = std::sqrt(m.summand_var / static_cast<double>(n));
    return std::fabs(m.mean) <= rule.factor * se ? 0.0 : m.mean;
}

}  // namespace

namespace serial {

void moment_matrix(const double* l, std::size_t rl, const double* r, std::size_t rr,
                   std::size_t n, const TruncationRule& rule, double* out) {
    for (std::size_t mu = 0; mu < rl; ++mu) {
        for (std::size_t rho = 0; rho < rr; ++rho) {
            const double* a = l + mu * n;
            const double* b = r + rho * n;
            const EntryMoment m = entry_moment(n, [&](std::size_t i) { return a[i] * b[i]; });
            out[mu * rr + rho] = apply_truncation(m, n, rule);
        }
    }
}

void moment_tensor3(const double* l, std::size_t rl, const double* m, std::size_t rm,
                    const double* r, std::size_t rr, std::size_t n, const TruncationRule& rule,
                    double* out) {
    for (std::size_t mu = 0; mu < rl; ++mu) {
        for (std::size_t nu = 0; nu < rm; ++nu) {
            for (std::size_t rho = 0; rho < rr; ++rho) {
                const double* a = l + mu * n;
                const double* b = m + nu * n;
                const double* c = r + rho * n;
                const EntryMoment mm =
                    entry_moment(n, [&](std::size_t i) { return a[i] * b[i] * c[i]; });
                out[(mu * rm + nu) * rr + rho] = apply_truncation(mm, n, rule);
            }
        }
    }
}

}  // namespace serial

void moment_matrix(const double* l, std::size_t rl, const double* r, std::size_t rr,
                   std::size_t n, const TruncationRule& rule, double* out) {
#pragma omp parallel for collapse(2) schedule(static)
    for (std::ptrdiff_t mu = 0; mu < static_cast<std::ptrdiff_t>(rl); ++mu) {
        for (std::ptrdiff_t rho = 0; rho < static_cast<std::ptrdiff_t>(rr); ++rho) {
            const double* a = l + static_cast<std::size_t>(mu) * n;
            const double* b = r + static_cast<std::size_t>(rho) * n;
            const EntryMoment m = entry_moment(n, [&](std::size_t i) { return a[i] * b[i]; });
            out[static_cast<std::size_t>(mu) * rr + static_cast<std::size_t>(rho)] =
                apply_truncation(m, n, rule);
        }
    }
}

void moment_tensor3(const double* l, std::size_t rl, const double* m, std::size_t rm,
                    const double* r, std::size_t rr, std::size_t n, const TruncationRule& rule,
                    double* out) {
#pragma omp parallel for collapse(3) schedule(static)
    for (std::ptrdiff_t mu = 0; mu < static_cast<std::ptrdiff_t>(rl); ++mu) {
        for (std::ptrdiff_t nu = 0; nu < static_cast<std::ptrdiff_t>(rm); ++nu) {
            for (std::ptrdiff_t rho = 0; rho < static_cast<std::ptrdiff_t>(rr); ++rho) {
                const double* a = l + static_cast<std::size_t>(mu) * n;
                const double* b = m + static_cast<std::size_t>(nu) * n;
                const double* c = r + static_cast<std::size_t>(rho) * n;
                const EntryMoment mm =
                    entry_moment(n, [&](std::size_t i) { return a[i] * b[i] * c[i]; });
                out[(static_cast<std::size_t>(mu) * rm + static_cast<std::size_t>(nu)) * rr +
                    static_cast<std::size_t>(rho)] = apply_truncation(mm, n, rule);
            }
        }
    }
}

}  // namespace fht::kernels
