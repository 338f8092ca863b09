#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fht/fht.hpp"
#include "fht/sde.hpp"
#include "fht/sketch.hpp"
#include "fht/tree.hpp"

namespace fht {

struct Hypercube {
    std::vector<std::pair<double, double>> bounds;  // per state coordinate
    int dim() const { return static_cast<int>(bounds.size()); }
    double volume() const;
    bool contains(const std::vector<double>& x) const;
    static Hypercube uniform(int dim, double lower, double upper);
};

/// Joint tree over the 2d interlaced variables (x_1, y_1, ..., x_d, y_d):
/// the site bipartition with every site leaf expanded into an (x, y) pair.
/// Coincides with the plain dyadic bipartition when d is a power of two.
BipartitionTree interlaced_joint_tree(int d);

struct EstimationConfig {
    std::size_t basis_size = 13;  // n = q + 1 for every leg
    std::size_t r_max = 10;
    std::size_t oversample = 5;
    MomentEstimator estimator;
    double svd_rel_tol = kSvdRelTol;
    /// Basis box for the y legs; defaults to the x domain when empty.
    std::vector<std::pair<double, double>> y_bounds;
    /// Lattice dimension for site ordering (1: identity, 2: bit-interleaved).
    int grid_delta = 1;
};

/// Estimated Markov operator: an FHT for the joint density of (X_0, X_t)
/// over the interlaced variables, together with the sampling box and times.
struct MarkovOperator {
    Fht joint;
    Hypercube domain;       // x-domain (initial states uniform here)
    double volume = 0.0;    // Vol(domain)
    double initial_time = 0.0;
    double terminal_time = 0.0;
    std::vector<int> site_of_coord;  // state coordinate -> 0-based site index
    std::size_t dropped_samples = 0;
    std::size_t used_samples = 0;

    int dim() const { return domain.dim(); }
    /// 0-based joint-variable index of the x / y leg of a state coordinate.
    int x_var(int coord) const { return 2 * site_of_coord[coord]; }
    int y_var(int coord) const { return 2 * site_of_coord[coord] + 1; }
    /// Reorders a state vector into site order.
    std::vector<double> to_site_order(const std::vector<double>& state) const;

    BipartitionTree site_tree() const;
    std::vector<IntervalBasis> x_bases() const;  // site order
    std::vector<IntervalBasis> y_bases() const;  // site order
};

/// Builds the interlaced joint sample matrix and runs hierarchical sketching.
/// y coordinates overflowing their basis box by at most `kYClipWindow` are
/// clipped just inside the boundary; samples overflowing further are dropped.
/// More than 1% dropped samples raises DataQualityError.
MarkovOperator estimate_markov(const TrajectoryBatch& batch, std::size_t snapshot_index,
                               const EstimationConfig& config, const Hypercube& domain);

inline constexpr double kYClipWindow = 0.5;
inline constexpr double kYClipInset = 1e-9;

/// Rank-1 terminal condition f(y) = prod_j h_j(y_j); h is indexed by site.
Fht terminal_separable_to_fht(const std::vector<std::function<double(double)>>& h,
                              const std::vector<IntervalBasis>& bases,
                              const BipartitionTree& tree, std::size_t quad_order = 64);

/// Rank-2 terminal condition f(y) = sum_j h_j(y_j); h is indexed by site.
Fht terminal_sum_to_fht(const std::vector<std::function<double(double)>>& h,
                        const std::vector<IntervalBasis>& bases, const BipartitionTree& tree,
                        std::size_t quad_order = 64);

/// u(x) = Vol(X) * integral g(x, y) f(y) dy as an FHT over the x variables
/// (site order). f must live on the y-restriction of the joint tree with the
/// same y bases.
Fht solve_backward_fht(const MarkovOperator& op, const Fht& f);

/// p(y) = Vol(X) * integral g(x, y) q(x) dx as an FHT over the y variables.
Fht solve_forward_fht(const MarkovOperator& op, const Fht& q);

/// Ratio form u(x) = integral g(x,y) f(y) dy / integral g(x,s) ds. Queries
/// take state-coordinate order and throw DegeneratePointError where the
/// denominator is nonpositive.
class NormalizedEvaluator {
  public:
    NormalizedEvaluator(Fht numerator, Fht denominator, std::vector<int> site_of_coord);

    double operator()(const std::vector<double>& x_state) const;

    const Fht& numerator() const { return numerator_; }
    const Fht& denominator() const { return denominator_; }

  private:
    Fht numerator_;
    Fht denominator_;
    std::vector<int> site_of_coord_;
};

NormalizedEvaluator normalized_solution(const MarkovOperator& op, const Fht& f);

using Evaluator = std::function<double(const std::vector<double>&)>;

/// Linear-in-time interpolation between two snapshot solutions.
Evaluator interpolate_in_time(Evaluator u_j, Evaluator u_j1, double t_j, double t_j1, double t);

/// Monte-Carlo solve for a black-box terminal condition: conditions the joint
/// density on X_0 = x, draws M autoregressive samples of y, and returns the
/// sample mean of f and its standard error. f takes state-coordinate order.
std::pair<double, double> solve_backward_general(
    const MarkovOperator& op, const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, std::size_t m_samples, RngStream& rng,
    std::size_t grid_size = 257);

/// iota(x) = u_plus(x) / (u_plus(x) + u_minus(x)) in [0, 1].
double propensity_ratio(const MarkovOperator& op, const Fht& g_plus, const Fht& g_minus,
                        const std::vector<double>& x_state);

/// Operator persistence: the joint FHT plus a JSON metadata sidecar.
void save_operator(const MarkovOperator& op, const std::string& fht_path,
                   const std::string& meta_path, const std::string& extra_json = "{}");
MarkovOperator load_operator(const std::string& fht_path, const std::string& meta_path);

}  // namespace fht
