#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fht/rng.hpp"

namespace fht {

/// Drift specification for the built-in dynamics. GL potentials use zero
/// Dirichlet boundaries and lattice spacing h = 1/(m+1).
class Potential {
  public:
    /// 1D Ginzburg-Landau chain of m sites.
    static Potential gl1d(int m, double lambda);
    /// 2D Ginzburg-Landau lattice of m x m sites (row-major state layout).
    static Potential gl2d(int m, double lambda);
    /// Quadratic well stiffness/2 * |x - center|^2.
    static Potential ou(int dim, double center, double stiffness);
    /// General drift f(x, t) and diagonal diffusion sigma(x, t) (may be zero).
    static Potential custom(int dim, std::function<void(const double*, double, double*)> drift,
                            std::function<void(const double*, double, double*)> diag_sigma);

    int dim() const { return dim_; }
    bool is_custom() const { return kind_ == Kind::Custom; }

    /// V(x); not available for custom drift.
    double value(const std::vector<double>& x) const;

    /// grad V(x) into `out` (length dim). Not available for custom drift.
    void gradient(const double* x, double* out) const;

    /// Euler-Maruyama drift term: -grad V for potentials, f(x, t) for custom.
    void drift(const double* x, double t, double* out) const;

    /// Per-coordinate diffusion amplitude multiplying sqrt(dt) * xi. For
    /// potential dynamics this is the constant sqrt(2/beta) passed by the
    /// simulator; for custom dynamics it is sigma(x, t).
    void diag_sigma(const double* x, double t, double* out) const;

  private:
    enum class Kind { Gl1d, Gl2d, Ou, Custom };
    Kind kind_ = Kind::Ou;
    int dim_ = 0;
    int m_ = 0;
    double lambda_ = 0.0;
    double center_ = 0.0;
    double stiffness_ = 1.0;
    std::function<void(const double*, double, double*)> drift_fn_;
    std::function<void(const double*, double, double*)> sigma_fn_;
};

std::vector<double> grad_potential(const Potential& p, const std::vector<double>& x);

struct SimConfig {
    double beta = 1.0;
    double dt = 1e-3;
    double t_final = 1.0;
    std::vector<double> snapshot_times;  // sorted, starts at 0, ends at t_final
    std::size_t n_traj = 0;
    std::uint64_t seed = 0;

    void validate() const;
    /// Step index for each snapshot (snapshots must sit on the dt grid).
    std::vector<std::size_t> snapshot_steps() const;
};

/// N particle paths sampled at K snapshot times; data is trajectory-major,
/// snapshot-minor, coordinate-innermost.
struct TrajectoryBatch {
    int dim = 0;
    std::size_t n_traj = 0;
    std::vector<double> snapshot_times;
    std::vector<double> data;  // n_traj * K * dim

    std::size_t num_snapshots() const { return snapshot_times.size(); }
    const double* state(std::size_t traj, std::size_t snap) const {
        return data.data() + (traj * num_snapshots() + snap) * static_cast<std::size_t>(dim);
    }

    void save(std::ostream& os) const;
    static TrajectoryBatch load(std::istream& is);
    void save_file(const std::string& path) const;
    static TrajectoryBatch load_file(const std::string& path);
};

/// Initial-state sampler; fills a state vector from the trajectory's stream.
using InitSampler = std::function<void(RngStream&, double*)>;

/// I.i.d. uniform coordinates over the hypercube.
InitSampler uniform_sampler(const std::vector<std::pair<double, double>>& hypercube);

/// Sampler pinned at a fixed point.
InitSampler fixed_point_sampler(std::vector<double> x0);

/// Euler-Maruyama batch simulation. Trajectory i consumes the independent
/// stream (seed, i), so results are bit-identical for any thread count.
/// Throws SimulationDivergedError if a state leaves [-10, 10]^d or turns
/// non-finite, reporting trajectory and step.
TrajectoryBatch simulate(const Potential& p, const SimConfig& cfg, const InitSampler& init);

}  // namespace fht
