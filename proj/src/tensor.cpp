#include "fht/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fht/errors.hpp"

namespace fht {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
    std::size_t p = 1;
    for (std::size_t e : shape) p *= e;
    return p;
}

void check_extents(const std::vector<std::size_t>& shape) {
    for (std::size_t e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be >= 1");
    }
}

}  // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    check_extents(shape_);
    data_.assign(product(shape_), 0.0);
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents(shape_);
    if (product(shape_) != data_.size()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape product " + std::to_string(product(shape_)));
    }
}

DenseTensor DenseTensor::scalar(double value) { return DenseTensor({}, {value}); }

DenseTensor DenseTensor::identity(std::size_t n) {
    DenseTensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
    return t;
}

std::size_t DenseTensor::flatten(std::initializer_list<std::size_t> ix) const {
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : ix) {
        flat = flat * shape_[axis] + i;
        ++axis;
    }
    return flat;
}

DenseTensor DenseTensor::reshaped(std::vector<std::size_t> shape) const {
    check_extents(shape);
    if (product(shape) != data_.size()) {
        throw ShapeError("reshape changes total size");
    }
    return DenseTensor(std::move(shape), data_);
}

DenseTensor DenseTensor::permuted(const std::vector<std::size_t>& perm) const {
    if (perm.size() != shape_.size()) throw ShapeError("permutation order mismatch");
    std::vector<std::size_t> new_shape(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) new_shape[i] = shape_[perm[i]];
    DenseTensor out(new_shape);

    const std::size_t ord = shape_.size();
    if (ord == 0) {
        out.data_ = data_;
        return out;
    }
    std::vector<std::size_t> old_strides(ord, 1);
    for (std::size_t i = ord - 1; i > 0; --i) old_strides[i - 1] = old_strides[i] * shape_[i];

    std::vector<std::size_t> idx(ord, 0);
    const std::size_t total = data_.size();
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t src = 0;
        for (std::size_t i = 0; i < ord; ++i) src += idx[i] * old_strides[perm[i]];
        out.data_[flat] = data_[src];
        for (std::size_t i = ord; i-- > 0;) {
            if (++idx[i] < new_shape[i]) break;
            idx[i] = 0;
        }
    }
    return out;
}

namespace kernels {

namespace serial {
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        std::fill(crow, crow + n, 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}
}  // namespace serial

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        std::fill(crow, crow + n, 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[static_cast<std::size_t>(i) * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace kernels

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     const std::vector<std::pair<std::size_t, std::size_t>>& axes) {
    for (const auto& [ax_a, ax_b] : axes) {
        if (ax_a >= a.order() || ax_b >= b.order()) {
            throw ShapeError("contraction axis out of range: (" + std::to_string(ax_a) + "," +
                             std::to_string(ax_b) + ")");
        }
        if (a.extent(ax_a) != b.extent(ax_b)) {
            throw ShapeError("contraction extent mismatch on axis pair (" + std::to_string(ax_a) +
                             "," + std::to_string(ax_b) + "): " + std::to_string(a.extent(ax_a)) +
                             " vs " + std::to_string(b.extent(ax_b)));
        }
    }

    std::vector<bool> used_a(a.order(), false), used_b(b.order(), false);
    for (const auto& [ax_a, ax_b] : axes) {
        if (used_a[ax_a] || used_b[ax_b]) throw ShapeError("axis contracted twice");
        used_a[ax_a] = true;
        used_b[ax_b] = true;
    }

    std::vector<std::size_t> free_a, free_b;
    for (std::size_t i = 0; i < a.order(); ++i)
        if (!used_a[i]) free_a.push_back(i);
    for (std::size_t i = 0; i < b.order(); ++i)
        if (!used_b[i]) free_b.push_back(i);

    std::vector<std::size_t> perm_a = free_a;
    std::vector<std::size_t> perm_b;
    for (const auto& [ax_a, ax_b] : axes) {
        perm_a.push_back(ax_a);
        perm_b.push_back(ax_b);
    }
    for (std::size_t i : free_b) perm_b.push_back(i);

    DenseTensor ap = a.permuted(perm_a);
    DenseTensor bp = b.permuted(perm_b);

    std::size_t m = 1, kk = 1, n = 1;
    for (std::size_t i : free_a) m *= a.extent(i);
    for (const auto& [ax_a, ax_b] : axes) {
        (void)ax_b;
        kk *= a.extent(ax_a);
    }
    for (std::size_t i : free_b) n *= b.extent(i);

    std::vector<std::size_t> out_shape;
    for (std::size_t i : free_a) out_shape.push_back(a.extent(i));
    for (std::size_t i : free_b) out_shape.push_back(b.extent(i));

    DenseTensor out(out_shape);
    kernels::matmul(ap.data(), bp.data(), out.data(), m, kk, n);
    return out;
}

DenseTensor kron(const DenseTensor& a, const DenseTensor& b) {
    if (a.order() != b.order()) {
        throw ShapeError("kron order mismatch: " + std::to_string(a.order()) + " vs " +
                         std::to_string(b.order()));
    }
    const std::size_t ord = a.order();
    std::vector<std::size_t> out_shape(ord);
    for (std::size_t i = 0; i < ord; ++i) out_shape[i] = a.extent(i) * b.extent(i);
    DenseTensor out(out_shape);

    const std::size_t total = out.size();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(total); ++f) {
        std::size_t rem = static_cast<std::size_t>(f);
        std::size_t ia = 0, ib = 0;
        for (std::size_t ax = 0; ax < ord; ++ax) {
            std::size_t stride = 1;
            for (std::size_t ax2 = ax + 1; ax2 < ord; ++ax2) stride *= out_shape[ax2];
            const std::size_t comp = rem / stride;
            rem %= stride;
            const std::size_t alpha = comp / b.extent(ax);
            const std::size_t mu = comp % b.extent(ax);
            ia = ia * a.extent(ax) + alpha;
            ib = ib * b.extent(ax) + mu;
        }
        out[static_cast<std::size_t>(f)] = a[ia] * b[ib];
    }
    return out;
}

}  // namespace fht
