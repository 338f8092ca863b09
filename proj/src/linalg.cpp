#include "fht/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <string>

#include "fht/errors.hpp"

namespace fht {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> as_matrix(const DenseTensor& t) {
    if (t.order() != 2) throw ShapeError("expected an order-2 tensor (matrix)");
    return Eigen::Map<const RowMat>(t.data(), static_cast<Eigen::Index>(t.extent(0)),
                                    static_cast<Eigen::Index>(t.extent(1)));
}

DenseTensor from_eigen(const RowMat& m) {
    DenseTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    std::copy(m.data(), m.data() + m.size(), t.data());
    return t;
}

}  // namespace

TruncatedSvd truncated_svd(const DenseTensor& m, std::size_t r_max, double rel_tol) {
    if (r_max < 1) throw ShapeError("truncated_svd requires r_max >= 1");
    if (rel_tol < 0.0 || rel_tol >= 1.0) throw ShapeError("truncated_svd requires 0 <= rel_tol < 1");
    auto a = as_matrix(m);
    Eigen::JacobiSVD<RowMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();

    const double sigma1 = sv.size() > 0 ? sv(0) : 0.0;
    std::size_t r;
    if (sigma1 <= 0.0) {
        // Degenerate all-zero matrix: rank 1 with a zero singular value.
        r = 1;
        TruncatedSvd out;
        out.u = DenseTensor({m.extent(0), 1});
        out.v = DenseTensor({m.extent(1), 1});
        out.u(static_cast<std::size_t>(0), static_cast<std::size_t>(0)) = 1.0;
        out.v(static_cast<std::size_t>(0), static_cast<std::size_t>(0)) = 1.0;
        out.singular_values.assign(1, 0.0);
        return out;
    }
    std::size_t kept = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > rel_tol * sigma1) ++kept;
    }
    r = std::min<std::size_t>(r_max, std::max<std::size_t>(kept, 1));

    TruncatedSvd out;
    RowMat u = svd.matrixU().leftCols(static_cast<Eigen::Index>(r));
    RowMat v = svd.matrixV().leftCols(static_cast<Eigen::Index>(r));
    out.u = from_eigen(u);
    out.v = from_eigen(v);
    out.singular_values.assign(sv.data(), sv.data() + r);
    return out;
}

DenseTensor lstsq(const DenseTensor& a, const DenseTensor& b, double cutoff) {
    auto am = as_matrix(a);
    auto bm = as_matrix(b);
    if (am.rows() != bm.rows()) {
        throw ShapeError("lstsq row mismatch: " + std::to_string(am.rows()) + " vs " +
                         std::to_string(bm.rows()));
    }
    Eigen::JacobiSVD<RowMat> svd(am, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double sigma1 = sv.size() > 0 ? sv(0) : 0.0;

    RowMat uy = svd.matrixU().transpose() * bm;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        const double s = sv(i);
        if (s > cutoff * sigma1 && s > 0.0) {
            uy.row(i) /= s;
        } else {
            uy.row(i).setZero();
        }
    }
    RowMat x = svd.matrixV() * uy;
    return from_eigen(x);
}

}  // namespace fht
