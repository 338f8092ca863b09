#pragma once

#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

namespace fht {

/// Dense multi-way array, row-major (last index fastest), float64 scalars.
/// Order-0 tensors (empty shape) hold a single scalar.
class DenseTensor {
  public:
    DenseTensor() : data_(1, 0.0) {}
    explicit DenseTensor(std::vector<std::size_t> shape);
    DenseTensor(std::vector<std::size_t> shape, std::vector<double> data);

    static DenseTensor scalar(double value);
    static DenseTensor identity(std::size_t n);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t order() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    template <typename... Ix>
    double& operator()(Ix... ix) {
        return data_[flatten({static_cast<std::size_t>(ix)...})];
    }
    template <typename... Ix>
    double operator()(Ix... ix) const {
        return data_[flatten({static_cast<std::size_t>(ix)...})];
    }

    std::size_t flatten(std::initializer_list<std::size_t> ix) const;

    /// Reinterprets the flat data with a new shape of equal total size.
    DenseTensor reshaped(std::vector<std::size_t> shape) const;
    /// Returns a copy with axes reordered as data[perm[0]], data[perm[1]], ...
    DenseTensor permuted(const std::vector<std::size_t>& perm) const;

    bool same_shape(const DenseTensor& other) const { return shape_ == other.shape_; }

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Contracts the paired axes of `a` and `b`. Remaining axes of `a` precede
/// those of `b` in the result. Throws ShapeError naming the first offending
/// pair when paired extents differ.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     const std::vector<std::pair<std::size_t, std::size_t>>& axes);

/// Kronecker product pairing axis i of `a` with axis i of `b`; output axis i
/// has extent ext_a(i)*ext_b(i) with composite index (alpha,mu) -> alpha*ext_b+mu.
DenseTensor kron(const DenseTensor& a, const DenseTensor& b);

namespace kernels {

/// C (m x n) = A (m x k) * B (k x n), row-major. Entry (i,j) accumulates over
/// k in ascending order, so the parallel and serial paths are bit-identical.
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n);

namespace serial {
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n);
}  // namespace serial

}  // namespace kernels

}  // namespace fht
