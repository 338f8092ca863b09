#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fht/basis.hpp"
#include "fht/rng.hpp"
#include "fht/tensor.hpp"
#include "fht/tree.hpp"

namespace fht {

/// Functional hierarchical tensor: a multivariate function represented by
/// per-node tensor cores on a bipartition tree, contracted at the leaves with
/// orthonormal basis evaluations. Core shapes:
///   root           r_left x r_right
///   internal node  r_childL x r_childR x r_parent
///   leaf           n x r_parent
/// A one-variable Fht is a lone leaf core of shape n x 1.
class Fht {
  public:
    Fht() = default;
    Fht(BipartitionTree tree, std::vector<IntervalBasis> bases, std::vector<DenseTensor> cores);

    const BipartitionTree& tree() const { return tree_; }
    const std::vector<IntervalBasis>& bases() const { return bases_; }
    const IntervalBasis& basis(int var) const { return bases_[var]; }
    int num_vars() const { return tree_.num_vars(); }

    const DenseTensor& core(int node_id) const { return cores_[node_id]; }
    DenseTensor& core(int node_id) { return cores_[node_id]; }
    const std::vector<DenseTensor>& cores() const { return cores_; }

    /// Pointwise evaluation; throws DomainError naming the variable when a
    /// coordinate is outside its basis interval.
    double evaluate(const std::vector<double>& z) const;

    /// Integral over the full hypercube.
    double integrate_all() const;

    /// Integrates out every variable not in `keep` (0-based, ascending).
    /// The result lives on the induced subtree, with the kept variables
    /// renumbered in order.
    Fht marginalize(const std::vector<int>& keep) const;

    /// Restriction f(., z_assigned): assigned leaves are contracted with
    /// basis evaluations. Keys are 0-based variable indices. Unnormalized.
    Fht condition_on(const std::map<int, double>& assignments) const;

    /// Draws one sample of all variables in leaf order by inverse-CDF sampling
    /// of successive univariate marginals on a uniform grid (clip-negative,
    /// renormalize). Throws SamplingFailureError when a marginal has no mass.
    std::vector<double> sample_autoregressive(RngStream& rng, std::size_t grid_size = 257) const;

    /// Multiplies the function by a scalar (applied to the top core).
    void scale(double factor);

    void save(std::ostream& os) const;
    static Fht load(std::istream& is);
    void save_file(const std::string& path) const;
    static Fht load_file(const std::string& path);

    /// Structural consistency: edge extents match between connected cores and
    /// leaf physical extents match basis sizes. Throws ShapeError otherwise.
    void validate() const;

  private:
    /// Contracts leaves against per-variable vectors (evaluation or
    /// integration weights) and reduces up the tree to a scalar.
    double reduce_with(const std::vector<std::vector<double>>& leaf_vectors) const;

    /// Shared core of marginalize/condition_on: contracts non-kept leaves
    /// with `dead_vector(var)` and rebuilds on the induced subtree.
    Fht reduced(const std::vector<int>& keep,
                const std::function<std::vector<double>(int)>& dead_vector) const;

    BipartitionTree tree_;
    std::vector<IntervalBasis> bases_;
    std::vector<DenseTensor> cores_;  // indexed by tree node id
};

/// Univariate restriction helper used by autoregressive sampling: evaluates
/// the (unnormalized) marginal coefficients of a single remaining variable.
std::vector<double> univariate_marginal_coefficients(const Fht& f, int var);

}  // namespace fht
