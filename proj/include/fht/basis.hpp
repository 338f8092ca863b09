#pragma once

#include <functional>
#include <vector>

namespace fht {

/// Gauss-Legendre nodes and weights on [-1, 1], exact for polynomials of
/// degree <= 2*order - 1.
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

Quadrature gauss_legendre(std::size_t order);

/// Orthonormal Legendre basis {psi_1, ..., psi_n} on an interval [a, b].
/// psi_1 is the constant 1/sqrt(b-a); the family is L2-orthonormal on [a, b].
class IntervalBasis {
  public:
    IntervalBasis(double a, double b, std::size_t n);

    double a() const { return a_; }
    double b() const { return b_; }
    std::size_t size() const { return n_; }
    double length() const { return b_ - a_; }

    bool contains(double z) const { return z >= a_ && z <= b_; }

    /// (psi_1(z), ..., psi_n(z)); throws DomainError when z is outside [a, b].
    std::vector<double> eval_vector(double z) const;

    /// Evaluates psi_1..psi_{degree+1} at z, writing degree+1 values to out.
    /// Same recurrence as eval_vector but with caller-chosen truncation.
    void eval_prefix(double z, std::size_t count, double* out) const;

    /// (sqrt(b-a), 0, ..., 0); dotting coefficients with it integrates over [a, b].
    std::vector<double> integration_vector() const;

    /// Coefficients of h in the basis via Gauss-Legendre quadrature.
    std::vector<double> project(const std::function<double(double)>& h,
                                std::size_t quad_order) const;

    bool operator==(const IntervalBasis& other) const {
        return a_ == other.a_ && b_ == other.b_ && n_ == other.n_;
    }

  private:
    double a_;
    double b_;
    std::size_t n_;
};

}  // namespace fht
