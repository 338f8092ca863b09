#include "fht/basis.hpp"

#include <cmath>
#include <string>

#include "fht/errors.hpp"

namespace fht {

Quadrature gauss_legendre(std::size_t order) {
    if (order < 1) throw Error("gauss_legendre requires order >= 1");
    Quadrature q;
    q.nodes.resize(order);
    q.weights.resize(order);

    // Newton iteration on P_order from Chebyshev-like initial guesses.
    const std::size_t n = order;
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            if (n == 1) p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        q.nodes[i] = -x;
        q.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        q.weights[i] = w;
        q.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) q.nodes[n / 2] = 0.0;
    if (n == 1) {
        q.nodes[0] = 0.0;
        q.weights[0] = 2.0;
    }
    return q;
}

IntervalBasis::IntervalBasis(double a, double b, std::size_t n) : a_(a), b_(b), n_(n) {
    if (!(a < b)) throw Error("IntervalBasis requires a < b");
    if (n < 1) throw Error("IntervalBasis requires n >= 1");
}

void IntervalBasis::eval_prefix(double z, std::size_t count, double* out) const {
    const double t = (2.0 * z - a_ - b_) / (b_ - a_);
    // Orthonormal on [a, b]: psi_{k+1}(z) = sqrt((2k+1)/(b-a)) * P_k(t).
    double p0 = 1.0, p1 = t;
    for (std::size_t k = 0; k < count; ++k) {
        double pk;
        if (k == 0) {
            pk = p0;
        } else if (k == 1) {
            pk = p1;
        } else {
            const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
            pk = p2;
        }
        out[k] = std::sqrt((2.0 * k + 1.0) / (b_ - a_)) * pk;
    }
}

std::vector<double> IntervalBasis::eval_vector(double z) const {
    if (!contains(z)) {
        throw DomainError("coordinate " + std::to_string(z) + " outside basis interval [" +
                          std::to_string(a_) + ", " + std::to_string(b_) + "]");
    }
    std::vector<double> out(n_);
    eval_prefix(z, n_, out.data());
    return out;
}

std::vector<double> IntervalBasis::integration_vector() const {
    std::vector<double> out(n_, 0.0);
    out[0] = std::sqrt(b_ - a_);
    return out;
}

std::vector<double> IntervalBasis::project(const std::function<double(double)>& h,
                                           std::size_t quad_order) const {
    if (quad_order < n_) throw Error("project requires quad_order >= basis size");
    const Quadrature q = gauss_legendre(quad_order);
    std::vector<double> out(n_, 0.0);
    std::vector<double> psi(n_);
    const double half = 0.5 * (b_ - a_);
    const double mid = 0.5 * (a_ + b_);
    for (std::size_t i = 0; i < quad_order; ++i) {
        const double z = mid + half * q.nodes[i];
        const double w = half * q.weights[i];
        eval_prefix(z, n_, psi.data());
        const double hz = h(z);
        for (std::size_t k = 0; k < n_; ++k) out[k] += w * hz * psi[k];
    }
    return out;
}

}  // namespace fht
