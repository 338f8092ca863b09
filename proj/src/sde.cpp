#include "fht/sde.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "fht/errors.hpp"
#include "fht/io_util.hpp"

namespace fht {

namespace {
constexpr char kMagic[4] = {'T', 'R', 'J', '1'};
constexpr double kGuardBox = 10.0;  // trajectories leaving [-10,10]^d abort
}  // namespace

Potential Potential::gl1d(int m, double lambda) {
    if (m < 1 || lambda <= 0.0) throw Error("gl1d requires m >= 1 and lambda > 0");
    Potential p;
    p.kind_ = Kind::Gl1d;
    p.dim_ = m;
    p.m_ = m;
    p.lambda_ = lambda;
    return p;
}

Potential Potential::gl2d(int m, double lambda) {
    if (m < 1 || lambda <= 0.0) throw Error("gl2d requires m >= 1 and lambda > 0");
    Potential p;
    p.kind_ = Kind::Gl2d;
    p.dim_ = m * m;
    p.m_ = m;
    p.lambda_ = lambda;
    return p;
}

Potential Potential::ou(int dim, double center, double stiffness) {
    if (dim < 1) throw Error("ou requires dim >= 1");
    Potential p;
    p.kind_ = Kind::Ou;
    p.dim_ = dim;
    p.center_ = center;
    p.stiffness_ = stiffness;
    return p;
}

Potential Potential::custom(int dim, std::function<void(const double*, double, double*)> drift,
                            std::function<void(const double*, double, double*)> diag_sigma) {
    if (dim < 1) throw Error("custom dynamics requires dim >= 1");
    Potential p;
    p.kind_ = Kind::Custom;
    p.dim_ = dim;
    p.drift_fn_ = std::move(drift);
    p.sigma_fn_ = std::move(diag_sigma);
    return p;
}

double Potential::value(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != dim_) throw Error("potential dimension mismatch");
    switch (kind_) {
        case Kind::Ou: {
            double s = 0.0;
            for (double xi : x) s += (xi - center_) * (xi - center_);
            return 0.5 * stiffness_ * s;
        }
        case Kind::Gl1d: {
            const double h = 1.0 / (m_ + 1);
            double coupling = 0.0;
            for (int i = 0; i <= m_; ++i) {
                const double left = i == 0 ? 0.0 : x[i - 1];
                const double right = i == m_ ? 0.0 : x[i];
                const double d = (right - left) / h;
                coupling += d * d;
            }
            double onsite = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double w = 1.0 - x[i] * x[i];
                onsite += w * w;
            }
            return 0.5 * lambda_ * coupling + onsite / (4.0 * lambda_);
        }
        case Kind::Gl2d: {
            const double h = 1.0 / (m_ + 1);
            auto at = [&](int i, int j) {
                if (i < 0 || i >= m_ || j < 0 || j >= m_) return 0.0;
                return x[i * m_ + j];
            };
            double coupling = 0.0;
            // Horizontal and vertical bonds over the extended grid, counted once.
            for (int i = 0; i < m_; ++i) {
                for (int j = -1; j < m_; ++j) {
                    const double d = (at(i, j + 1) - at(i, j)) / h;
                    coupling += d * d;
                }
            }
            for (int j = 0; j < m_; ++j) {
                for (int i = -1; i < m_; ++i) {
                    const double d = (at(i + 1, j) - at(i, j)) / h;
                    coupling += d * d;
                }
            }
            double onsite = 0.0;
            for (int k = 0; k < dim_; ++k) {
                const double w = 1.0 - x[k] * x[k];
                onsite += w * w;
            }
            return 0.5 * lambda_ * coupling + onsite / (4.0 * lambda_);
        }
        case Kind::Custom:
            throw Error("custom dynamics has no potential value");
    }
    return 0.0;
}

void Potential::gradient(const double* x, double* out) const {
    switch (kind_) {
        case Kind::Ou:
            for (int i = 0; i < dim_; ++i) out[i] = stiffness_ * (x[i] - center_);
            return;
        case Kind::Gl1d: {
            const double h = 1.0 / (m_ + 1);
            const double c = lambda_ / (h * h);
            for (int i = 0; i < m_; ++i) {
                const double left = i == 0 ? 0.0 : x[i - 1];
                const double right = i == m_ - 1 ? 0.0 : x[i + 1];
                out[i] = c * (2.0 * x[i] - left - right) -
                         (1.0 / lambda_) * x[i] * (1.0 - x[i] * x[i]);
            }
            return;
        }
        case Kind::Gl2d: {
            const double h = 1.0 / (m_ + 1);
            const double c = lambda_ / (h * h);
            auto at = [&](int i, int j) {
                if (i < 0 || i >= m_ || j < 0 || j >= m_) return 0.0;
                return x[i * m_ + j];
            };
            for (int i = 0; i < m_; ++i) {
                for (int j = 0; j < m_; ++j) {
                    const double xi = at(i, j);
                    out[i * m_ + j] =
                        c * (4.0 * xi - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1)) -
                        (1.0 / lambda_) * xi * (1.0 - xi * xi);
                }
            }
            return;
        }
        case Kind::Custom:
            throw Error("custom dynamics has no potential gradient");
    }
}

void Potential::drift(const double* x, double t, double* out) const {
    if (kind_ == Kind::Custom) {
        drift_fn_(x, t, out);
        return;
    }
    gradient(x, out);
    for (int i = 0; i < dim_; ++i) out[i] = -out[i];
}

void Potential::diag_sigma(const double* x, double t, double* out) const {
    if (kind_ == Kind::Custom) {
        sigma_fn_(x, t, out);
        return;
    }
    throw Error("potential dynamics uses the simulator's thermal noise amplitude");
}

std::vector<double> grad_potential(const Potential& p, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != p.dim()) throw Error("potential dimension mismatch");
    std::vector<double> g(x.size());
    p.gradient(x.data(), g.data());
    return g;
}

void SimConfig::validate() const {
    if (dt <= 0.0) throw Error("dt must be positive");
    if (beta <= 0.0) throw Error("beta must be positive");
    if (n_traj < 1) throw Error("n_traj must be >= 1");
    if (snapshot_times.empty()) throw Error("at least one snapshot time required");
    if (snapshot_times.front() != 0.0) throw Error("first snapshot time must be 0");
    for (std::size_t i = 1; i < snapshot_times.size(); ++i) {
        if (snapshot_times[i] <= snapshot_times[i - 1]) {
            throw Error("snapshot times must be strictly increasing");
        }
    }
    if (std::abs(snapshot_times.back() - t_final) > 1e-12) {
        throw Error("last snapshot time must equal t_final");
    }
    snapshot_steps();  // grid-alignment check
}

std::vector<std::size_t> SimConfig::snapshot_steps() const {
    std::vector<std::size_t> steps(snapshot_times.size());
    for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
        const double ratio = snapshot_times[i] / dt;
        const double rounded = std::round(ratio);
        if (std::abs(ratio - rounded) > 1e-12 * std::max(1.0, std::abs(ratio))) {
            throw Error("snapshot time " + std::to_string(snapshot_times[i]) +
                        " is not a multiple of dt");
        }
        steps[i] = static_cast<std::size_t>(rounded);
    }
    return steps;
}

InitSampler uniform_sampler(const std::vector<std::pair<double, double>>& hypercube) {
    for (const auto& [a, b] : hypercube) {
        if (!(a < b)) throw Error("uniform_sampler requires a < b per coordinate");
    }
    return [hypercube](RngStream& rng, double* out) {
        for (std::size_t j = 0; j < hypercube.size(); ++j) {
            out[j] = rng.uniform(hypercube[j].first, hypercube[j].second);
        }
    };
}

InitSampler fixed_point_sampler(std::vector<double> x0) {
    return [x0 = std::move(x0)](RngStream&, double* out) {
        for (std::size_t j = 0; j < x0.size(); ++j) out[j] = x0[j];
    };
}

TrajectoryBatch simulate(const Potential& p, const SimConfig& cfg, const InitSampler& init) {
    cfg.validate();
    const int d = p.dim();
    const std::vector<std::size_t> snap_steps = cfg.snapshot_steps();
    const std::size_t n_steps = snap_steps.back();
    const std::size_t k = snap_steps.size();

    TrajectoryBatch batch;
    batch.dim = d;
    batch.n_traj = cfg.n_traj;
    batch.snapshot_times = cfg.snapshot_times;
    batch.data.assign(cfg.n_traj * k * static_cast<std::size_t>(d), 0.0);

    const double thermal = std::sqrt(2.0 * cfg.dt / cfg.beta);
    const bool custom = p.is_custom();
    const double sqrt_dt = std::sqrt(cfg.dt);

    std::size_t first_failure = static_cast<std::size_t>(-1);
    std::string failure;

#pragma omp parallel
    {
        std::vector<double> x(d), dr(d), sig(custom ? d : 0);
#pragma omp for schedule(static)
        for (std::ptrdiff_t ti = 0; ti < static_cast<std::ptrdiff_t>(cfg.n_traj); ++ti) {
            const std::size_t traj = static_cast<std::size_t>(ti);
            RngStream rng(cfg.seed, traj);
            init(rng, x.data());

            std::size_t next_snap = 0;
            bool bad = false;
            for (std::size_t step = 0; step <= n_steps && !bad; ++step) {
                if (next_snap < k && step == snap_steps[next_snap]) {
                    double* dst =
                        batch.data.data() + (traj * k + next_snap) * static_cast<std::size_t>(d);
                    for (int j = 0; j < d; ++j) dst[j] = x[j];
                    ++next_snap;
                }
                if (step == n_steps) break;

                const double t = static_cast<double>(step) * cfg.dt;
                p.drift(x.data(), t, dr.data());
                if (custom) p.diag_sigma(x.data(), t, sig.data());
                for (int j = 0; j < d; ++j) {
                    const double noise = custom ? sig[j] * sqrt_dt : thermal;
                    x[j] += dr[j] * cfg.dt + noise * rng.normal();
                }
                for (int j = 0; j < d; ++j) {
                    if (!std::isfinite(x[j]) || std::abs(x[j]) > kGuardBox) {
                        bad = true;
#pragma omp critical
                        {
                            if (traj < first_failure) {
                                first_failure = traj;
                                failure = "trajectory " + std::to_string(traj) +
                                          " diverged at step " + std::to_string(step + 1) +
                                          " (coordinate " + std::to_string(j + 1) + ")";
                            }
                        }
                        break;
                    }
                }
            }
        }
    }
    if (first_failure != static_cast<std::size_t>(-1)) throw SimulationDivergedError(failure);
    return batch;
}

void TrajectoryBatch::save(std::ostream& os) const {
    os.write(kMagic, 4);
    io::put_u32(os, static_cast<std::uint32_t>(dim));
    io::put_u64(os, static_cast<std::uint64_t>(n_traj));
    io::put_u32(os, static_cast<std::uint32_t>(num_snapshots()));
    for (double t : snapshot_times) io::put_f64(os, t);
    for (double v : data) io::put_f64(os, v);
}

TrajectoryBatch TrajectoryBatch::load(std::istream& is) {
    io::Reader r(is);
    r.expect_magic(kMagic);
    TrajectoryBatch b;
    b.dim = static_cast<int>(r.u32("dim"));
    b.n_traj = r.u64("n_traj");
    const std::uint32_t k = r.u32("num_snapshots");
    if (b.dim < 1 || k < 1) throw ParseError("invalid trajectory header", r.offset());
    b.snapshot_times.resize(k);
    for (auto& t : b.snapshot_times) t = r.f64("snapshot time");
    b.data.resize(b.n_traj * k * static_cast<std::size_t>(b.dim));
    for (auto& v : b.data) v = r.f64("trajectory datum");
    return b;
}

void TrajectoryBatch::save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    save(os);
    if (!os) throw Error("write failed for " + path);
}

TrajectoryBatch TrajectoryBatch::load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    return load(is);
}

}  // namespace fht
