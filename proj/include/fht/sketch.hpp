#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fht/basis.hpp"
#include "fht/fht.hpp"
#include "fht/kernels.hpp"
#include "fht/linalg.hpp"
#include "fht/tensor.hpp"
#include "fht/tree.hpp"

namespace fht {

/// A cheap test function of a variable subset, used to compress cross-moments
/// for tensor-core recovery. Either a low-degree product of basis functions
/// over a node's index set, or a power of a coarse-grained cluster mean.
struct SketchFunction {
    enum class Kind { LegendreMonomial, ClusterMean };
    Kind kind = Kind::LegendreMonomial;

    /// LegendreMonomial: prod_{j in support} psi_{deg_j}(z_j), where absent
    /// variables in `degrees` carry degree 0 (the constant basis function).
    std::vector<int> support;                   // 0-based variables, ascending
    std::vector<std::pair<int, int>> degrees;   // (variable, degree >= 1)

    /// ClusterMean: ((1/|h|) sum_{j in h} z_j)^power over raw coordinates.
    std::vector<int> cluster;                   // h, 0-based ascending
    int power = 1;

    int total_degree() const;
    bool same_function(const SketchFunction& other) const;

    /// Evaluates on a full sample vector (indexed by variable id). Monomial
    /// coordinates must lie inside their basis intervals.
    double eval(const std::vector<IntervalBasis>& bases, const double* sample) const;

    std::string describe() const;
};

struct NodeSketchSet {
    std::vector<SketchFunction> branch;      // S_{I_k}
    std::vector<SketchFunction> complement;  // S over [num_vars] \ I_k
    bool branch_shortfall = false;
    bool complement_shortfall = false;
};

/// Per-node sketch sets plus rank-selection parameters.
struct SketchPlan {
    std::size_t r_max = 1;
    std::size_t oversample = 5;
    double svd_rel_tol = kSvdRelTol;
    std::vector<NodeSketchSet> per_node;  // indexed by tree node id; root unused
    std::size_t r_tilde() const { return r_max + oversample; }

    /// Node -> sketch descriptors, for experiment logging.
    std::string dump_json(const BipartitionTree& tree) const;
};

/// Moment-estimation configuration: hard truncation zeroes sample means that
/// are statistically indistinguishable from zero.
struct MomentEstimator {
    bool truncation_enabled = true;
    double truncation_factor = 2.0;
    kernels::TruncationRule rule() const { return {truncation_enabled, truncation_factor}; }
};

/// N samples of num_vars variables, row-major (sample-major).
struct SampleView {
    const double* data = nullptr;
    std::size_t count = 0;
    std::size_t num_vars = 0;
    const double* row(std::size_t i) const { return data + i * num_vars; }
};

/// Default sketch sets: the constant function, cluster means (and their
/// squares) of the node set and of its x/y interlaced halves, and singleton
/// basis monomials ordered by distance to the node boundary; the list is cut
/// to r_max + oversample entries by total degree. Nodes too small to fill the
/// quota use every available function and record the shortfall.
SketchPlan default_sketch_plan(const BipartitionTree& tree, const std::vector<IntervalBasis>& bases,
                               std::size_t r_max, std::size_t oversample,
                               double svd_rel_tol = kSvdRelTol);

double eval_sketch(const SketchFunction& s, const std::vector<IntervalBasis>& bases,
                   const double* sample);

/// Sketch values for a function list, stored function-major (r x N).
DenseTensor sketch_values(const std::vector<SketchFunction>& funcs,
                          const std::vector<IntervalBasis>& bases, const SampleView& samples);

DenseTensor estimate_moment(const SampleView& samples, const std::vector<SketchFunction>& left,
                            const std::vector<SketchFunction>& right,
                            const std::vector<IntervalBasis>& bases, const MomentEstimator& est);

DenseTensor estimate_moment3(const SampleView& samples, const std::vector<SketchFunction>& left,
                             const std::vector<SketchFunction>& mid,
                             const std::vector<SketchFunction>& right,
                             const std::vector<IntervalBasis>& bases, const MomentEstimator& est);

/// Source of cross-moments for core recovery. The sample-based implementation
/// below is the production path; tests substitute analytically exact moments.
class MomentSource {
  public:
    virtual ~MomentSource() = default;
    virtual DenseTensor pair(const std::vector<SketchFunction>& a,
                             const std::vector<SketchFunction>& b) = 0;
    virtual DenseTensor triple(const std::vector<SketchFunction>& a,
                               const std::vector<SketchFunction>& b,
                               const std::vector<SketchFunction>& f) = 0;
};

class SampleMoments : public MomentSource {
  public:
    SampleMoments(SampleView samples, const std::vector<IntervalBasis>& bases,
                  const MomentEstimator& est)
        : samples_(samples), bases_(bases), est_(est) {}
    DenseTensor pair(const std::vector<SketchFunction>& a,
                     const std::vector<SketchFunction>& b) override;
    DenseTensor triple(const std::vector<SketchFunction>& a, const std::vector<SketchFunction>& b,
                       const std::vector<SketchFunction>& f) override;

  private:
    SampleView samples_;
    const std::vector<IntervalBasis>& bases_;
    MomentEstimator est_;
};

/// Full-basis singleton monomials of one variable, psi_1 .. psi_n.
std::vector<SketchFunction> basis_monomials(int var, std::size_t n);

/// Hierarchical sketching: recovers every tensor core from cross-moments.
/// Branch gauges are U from the SVD of each node's branch/complement moment
/// matrix; exterior transfers are V * Sigma^+. Throws DegenerateNodeError when
/// a node's moment matrix is identically zero.
Fht solve_cores(MomentSource& source, const BipartitionTree& tree,
                const std::vector<IntervalBasis>& bases, const SketchPlan& plan);

/// Sample-moment front end; validates that samples lie inside the bases.
Fht solve_cores(const SampleView& samples, const BipartitionTree& tree,
                const std::vector<IntervalBasis>& bases, const SketchPlan& plan,
                const MomentEstimator& est);

}  // namespace fht
