#include "fht/operator.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "fht/errors.hpp"
#include "fht/linalg.hpp"

namespace fht {

double Hypercube::volume() const {
    double v = 1.0;
    for (const auto& [a, b] : bounds) v *= (b - a);
    return v;
}

bool Hypercube::contains(const std::vector<double>& x) const {
    if (x.size() != bounds.size()) return false;
    for (std::size_t c = 0; c < bounds.size(); ++c) {
        if (x[c] < bounds[c].first || x[c] > bounds[c].second) return false;
    }
    return true;
}

Hypercube Hypercube::uniform(int dim, double lower, double upper) {
    Hypercube h;
    h.bounds.assign(dim, {lower, upper});
    return h;
}

namespace {

void joint_lsizes_rec(const BipartitionTree& site_tree, int id, std::vector<std::uint32_t>& out) {
    const auto& n = site_tree.node(id);
    if (n.leaf()) {
        out.push_back(1);  // pair node: x leaf on the left
        return;
    }
    out.push_back(2 * static_cast<std::uint32_t>(site_tree.node(n.left).size()));
    joint_lsizes_rec(site_tree, n.left, out);
    joint_lsizes_rec(site_tree, n.right, out);
}

}  // namespace

BipartitionTree interlaced_joint_tree(int d) {
    if (d < 1) throw Error("interlaced tree requires d >= 1");
    if (d == 1) return BipartitionTree::build(2);
    const BipartitionTree site_tree = BipartitionTree::build(d);
    std::vector<std::uint32_t> lsizes;
    joint_lsizes_rec(site_tree, site_tree.root(), lsizes);
    return BipartitionTree::from_left_sizes(2 * d, lsizes);
}

std::vector<double> MarkovOperator::to_site_order(const std::vector<double>& state) const {
    std::vector<double> out(state.size());
    for (std::size_t c = 0; c < state.size(); ++c) out[site_of_coord[c]] = state[c];
    return out;
}

BipartitionTree MarkovOperator::site_tree() const {
    return dim() == 1 ? BipartitionTree::singleton() : BipartitionTree::build(dim());
}

std::vector<IntervalBasis> MarkovOperator::x_bases() const {
    std::vector<IntervalBasis> out;
    out.reserve(dim());
    for (int site = 0; site < dim(); ++site) out.push_back(joint.basis(2 * site));
    return out;
}

std::vector<IntervalBasis> MarkovOperator::y_bases() const {
    std::vector<IntervalBasis> out;
    out.reserve(dim());
    for (int site = 0; site < dim(); ++site) out.push_back(joint.basis(2 * site + 1));
    return out;
}

MarkovOperator estimate_markov(const TrajectoryBatch& batch, std::size_t snapshot_index,
                               const EstimationConfig& config, const Hypercube& domain) {
    const int d = batch.dim;
    if (domain.dim() != d) throw Error("domain dimension does not match trajectories");
    if (snapshot_index < 1 || snapshot_index >= batch.num_snapshots()) {
        throw Error("snapshot index " + std::to_string(snapshot_index) + " out of range");
    }

    std::vector<int> site_of_coord(d);
    if (config.grid_delta == 1) {
        for (int c = 0; c < d; ++c) site_of_coord[c] = c;
    } else if (config.grid_delta == 2) {
        int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d))));
        if (m * m != d) throw Error("2D site ordering requires a square state dimension");
        const GridMap gm(2, m);
        for (int c = 0; c < d; ++c) {
            site_of_coord[c] = gm.site_rank({c / m + 1, c % m + 1}) - 1;
        }
    } else {
        throw Error("grid_delta must be 1 or 2");
    }

    std::vector<std::pair<double, double>> y_bounds =
        config.y_bounds.empty() ? domain.bounds : config.y_bounds;
    if (static_cast<int>(y_bounds.size()) != d) throw Error("y_bounds dimension mismatch");

    const std::size_t n_traj = batch.n_traj;
    std::vector<double> jointdata;
    jointdata.reserve(n_traj * 2 * static_cast<std::size_t>(d));
    std::size_t dropped = 0;
    std::vector<double> row(2 * d);
    for (std::size_t i = 0; i < n_traj; ++i) {
        const double* x = batch.state(i, 0);
        const double* y = batch.state(i, snapshot_index);
        bool keep = true;
        for (int c = 0; c < d && keep; ++c) {
            const auto& [xa, xb] = domain.bounds[c];
            if (x[c] < xa || x[c] > xb) {
                throw Error("snapshot-0 sample " + std::to_string(i) + " coordinate " +
                            std::to_string(c + 1) + " lies outside the domain");
            }
            const auto& [ya, yb] = y_bounds[c];
            double yc = y[c];
            if (yc < ya) {
                if (ya - yc <= kYClipWindow) {
                    yc = ya + kYClipInset;
                } else {
                    keep = false;
                }
            } else if (yc > yb) {
                if (yc - yb <= kYClipWindow) {
                    yc = yb - kYClipInset;
                } else {
                    keep = false;
                }
            }
            if (keep) {
                const int site = site_of_coord[c];
                row[2 * site] = x[c];
                row[2 * site + 1] = yc;
            }
        }
        if (!keep) {
            ++dropped;
            continue;
        }
        jointdata.insert(jointdata.end(), row.begin(), row.end());
    }
    if (static_cast<double>(dropped) > 0.01 * static_cast<double>(n_traj)) {
        throw DataQualityError(std::to_string(dropped) + " of " + std::to_string(n_traj) +
                               " samples fell outside the y basis box by more than " +
                               std::to_string(kYClipWindow));
    }
    const std::size_t used = n_traj - dropped;
    if (used < 2) throw Error("too few usable samples for estimation");

    // Interval per joint variable, in site order.
    std::vector<std::pair<double, double>> by_var(2 * d);
    for (int c = 0; c < d; ++c) {
        by_var[2 * site_of_coord[c]] = domain.bounds[c];
        by_var[2 * site_of_coord[c] + 1] = y_bounds[c];
    }
    std::vector<IntervalBasis> bases;
    bases.reserve(2 * d);
    for (int v = 0; v < 2 * d; ++v) {
        bases.emplace_back(by_var[v].first, by_var[v].second, config.basis_size);
    }

    const BipartitionTree tree = interlaced_joint_tree(d);
    const SketchPlan plan =
        default_sketch_plan(tree, bases, config.r_max, config.oversample, config.svd_rel_tol);
    const SampleView samples{jointdata.data(), used, static_cast<std::size_t>(2 * d)};
    Fht joint = solve_cores(samples, tree, bases, plan, config.estimator);

    MarkovOperator op;
    op.joint = std::move(joint);
    op.domain = domain;
    op.volume = domain.volume();
    op.initial_time = batch.snapshot_times.front();
    op.terminal_time = batch.snapshot_times[snapshot_index];
    op.site_of_coord = std::move(site_of_coord);
    op.dropped_samples = dropped;
    op.used_samples = used;
    return op;
}

namespace {

std::vector<double> constant_coefficients(const IntervalBasis& basis) {
    std::vector<double> c(basis.size(), 0.0);
    c[0] = std::sqrt(basis.length());
    return c;
}

DenseTensor column_core(const std::vector<std::vector<double>>& cols) {
    const std::size_t n = cols[0].size();
    DenseTensor core({n, cols.size()});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) core(i, j) = cols[j][i];
    return core;
}

}  // namespace

Fht terminal_separable_to_fht(const std::vector<std::function<double(double)>>& h,
                              const std::vector<IntervalBasis>& bases,
                              const BipartitionTree& tree, std::size_t quad_order) {
    const int d = tree.num_vars();
    if (static_cast<int>(h.size()) != d || static_cast<int>(bases.size()) != d) {
        throw Error("terminal condition arity mismatch");
    }
    std::vector<DenseTensor> cores(tree.num_nodes());
    for (int id = 0; id < tree.num_nodes(); ++id) {
        const auto& n = tree.node(id);
        if (n.leaf()) {
            const std::size_t order = std::max<std::size_t>(quad_order, bases[n.var()].size());
            cores[id] = column_core({bases[n.var()].project(h[n.var()], order)});
        } else if (n.parent < 0) {
            cores[id] = DenseTensor({1, 1}, {1.0});
        } else {
            cores[id] = DenseTensor({1, 1, 1}, {1.0});
        }
    }
    if (d == 1) return Fht(BipartitionTree::singleton(), bases, std::move(cores));
    return Fht(tree, bases, std::move(cores));
}

Fht terminal_sum_to_fht(const std::vector<std::function<double(double)>>& h,
                        const std::vector<IntervalBasis>& bases, const BipartitionTree& tree,
                        std::size_t quad_order) {
    const int d = tree.num_vars();
    if (static_cast<int>(h.size()) != d || static_cast<int>(bases.size()) != d) {
        throw Error("terminal condition arity mismatch");
    }
    if (d == 1) {
        const std::size_t order = std::max<std::size_t>(quad_order, bases[0].size());
        std::vector<DenseTensor> cores = {column_core({bases[0].project(h[0], order)})};
        return Fht(BipartitionTree::singleton(), bases, std::move(cores));
    }
    std::vector<DenseTensor> cores(tree.num_nodes());
    for (int id = 0; id < tree.num_nodes(); ++id) {
        const auto& n = tree.node(id);
        if (n.leaf()) {
            const std::size_t order = std::max<std::size_t>(quad_order, bases[n.var()].size());
            cores[id] = column_core({constant_coefficients(bases[n.var()]),
                                     bases[n.var()].project(h[n.var()], order)});
        } else if (n.parent < 0) {
            DenseTensor root({2, 2});
            root(0, 1) = 1.0;
            root(1, 0) = 1.0;
            cores[id] = std::move(root);
        } else {
            // (const, const) -> const; (sum, const) + (const, sum) -> sum.
            DenseTensor core({2, 2, 2});
            core(0, 0, 0) = 1.0;
            core(1, 0, 1) = 1.0;
            core(0, 1, 1) = 1.0;
            cores[id] = std::move(core);
        }
    }
    return Fht(tree, bases, std::move(cores));
}

namespace {

enum class ContractSide { BackwardOverY, ForwardOverX };

/// Shared contraction of the joint density with a d-variable FHT attached to
/// one leg of every site pair; returns the FHT over the other leg.
Fht contract_joint(const MarkovOperator& op, const Fht& g, ContractSide side, bool with_volume) {
    const int d = op.dim();
    const Fht& joint = op.joint;
    const BipartitionTree& jt = joint.tree();
    const bool over_y = side == ContractSide::BackwardOverY;

    // g must live on the site tree with the bases of the contracted leg.
    if (g.num_vars() != d) throw ShapeError("terminal/initial condition arity mismatch");
    if (!g.tree().same_topology(op.site_tree())) {
        throw ShapeError("condition tree does not match the joint tree restriction");
    }
    for (int site = 0; site < d; ++site) {
        const IntervalBasis& jb = joint.basis(over_y ? 2 * site + 1 : 2 * site);
        if (!(g.basis(site) == jb)) {
            throw ShapeError("condition basis mismatch at site " + std::to_string(site + 1));
        }
    }

    std::vector<DenseTensor> cores;
    cores.reserve(g.tree().num_nodes());

    // Walks the joint tree and g's tree in lockstep; both are in preorder.
    auto rec = [&](auto&& self, int j_id, int g_id) -> void {
        const auto& jn = jt.node(j_id);
        if (jn.size() == 2) {
            // Site pair; g's node is the corresponding leaf.
            const DenseTensor& px = joint.core(jn.left);
            const DenseTensor& py = joint.core(jn.right);
            const DenseTensor& gf = g.num_vars() == 1 ? g.core(0) : g.core(g_id);
            DenseTensor pair_core = joint.core(j_id);
            if (pair_core.order() == 2) {  // d == 1: the pair node is the root
                pair_core = pair_core.reshaped({pair_core.extent(0), pair_core.extent(1), 1});
            }
            DenseTensor a, t;
            if (over_y) {
                a = contract(py, gf, {{0, 0}});        // (r_b, r_f)
                t = contract(px, pair_core, {{1, 0}}); // (n_x, r_b, r_p)
            } else {
                a = contract(px, gf, {{0, 0}});        // (r_a, r_f)
                t = contract(py, pair_core, {{1, 1}}); // (n_y, r_a, r_p)
            }
            DenseTensor u = contract(t, a, {{1, 0}});  // (n, r_p, r_f)
            cores.push_back(
                u.reshaped({u.extent(0), u.extent(1) * u.extent(2)}));
            return;
        }
        const DenseTensor& fk = g.core(g_id);
        cores.push_back(kron(joint.core(j_id), fk));
        const auto& gn = g.tree().node(g_id);
        self(self, jn.left, gn.left);
        self(self, jn.right, gn.right);
    };

    if (d == 1) {
        rec(rec, jt.root(), 0);
        // The lone leaf core came out as (n, r_p * r_f) with r_p = r_f = 1.
        Fht out(BipartitionTree::singleton(),
                {joint.basis(over_y ? 0 : 1)}, std::move(cores));
        if (with_volume) out.scale(op.volume);
        return out;
    }

    rec(rec, jt.root(), g.tree().root());
    std::vector<IntervalBasis> out_bases = over_y ? op.x_bases() : op.y_bases();
    Fht out(g.tree(), std::move(out_bases), std::move(cores));
    if (with_volume) out.scale(op.volume);
    return out;
}

}  // namespace

Fht solve_backward_fht(const MarkovOperator& op, const Fht& f) {
    return contract_joint(op, f, ContractSide::BackwardOverY, true);
}

Fht solve_forward_fht(const MarkovOperator& op, const Fht& q) {
    return contract_joint(op, q, ContractSide::ForwardOverX, true);
}

NormalizedEvaluator::NormalizedEvaluator(Fht numerator, Fht denominator,
                                         std::vector<int> site_of_coord)
    : numerator_(std::move(numerator)),
      denominator_(std::move(denominator)),
      site_of_coord_(std::move(site_of_coord)) {}

double NormalizedEvaluator::operator()(const std::vector<double>& x_state) const {
    std::vector<double> z(x_state.size());
    for (std::size_t c = 0; c < x_state.size(); ++c) z[site_of_coord_[c]] = x_state[c];
    const double den = denominator_.evaluate(z);
    if (!(den > 0.0)) {
        throw DegeneratePointError("denominator " + std::to_string(den) +
                                   " is not positive at the query point");
    }
    return numerator_.evaluate(z) / den;
}

NormalizedEvaluator normalized_solution(const MarkovOperator& op, const Fht& f) {
    Fht numerator = contract_joint(op, f, ContractSide::BackwardOverY, false);
    std::vector<int> x_vars(op.dim());
    for (int site = 0; site < op.dim(); ++site) x_vars[site] = 2 * site;
    Fht denominator = op.joint.marginalize(x_vars);
    return NormalizedEvaluator(std::move(numerator), std::move(denominator), op.site_of_coord);
}

Evaluator interpolate_in_time(Evaluator u_j, Evaluator u_j1, double t_j, double t_j1, double t) {
    if (!(t_j < t_j1)) throw Error("interpolation requires t_j < t_j1");
    if (t < t_j || t > t_j1) throw Error("interpolation time outside bracket");
    const double w = (t - t_j) / (t_j1 - t_j);
    return [u_j = std::move(u_j), u_j1 = std::move(u_j1), w](const std::vector<double>& x) {
        return (1.0 - w) * u_j(x) + w * u_j1(x);
    };
}

std::pair<double, double> solve_backward_general(
    const MarkovOperator& op, const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, std::size_t m_samples, RngStream& rng, std::size_t grid_size) {
    if (m_samples < 2) throw Error("solve_backward_general requires M >= 2");
    if (!op.domain.contains(x)) throw DomainError("query point outside the domain");
    std::map<int, double> assignments;
    for (int c = 0; c < op.dim(); ++c) assignments[op.x_var(c)] = x[c];
    const Fht conditional = op.joint.condition_on(assignments);

    double sum = 0.0, sumsq = 0.0;
    std::vector<double> y_state(op.dim());
    for (std::size_t i = 0; i < m_samples; ++i) {
        const std::vector<double> y_site = conditional.sample_autoregressive(rng, grid_size);
        for (int c = 0; c < op.dim(); ++c) y_state[c] = y_site[op.site_of_coord[c]];
        const double v = f(y_state);
        sum += v;
        sumsq += v * v;
    }
    const double n = static_cast<double>(m_samples);
    const double mean = sum / n;
    const double var = std::fmax(0.0, (sumsq - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
}

double propensity_ratio(const MarkovOperator& op, const Fht& g_plus, const Fht& g_minus,
                        const std::vector<double>& x_state) {
    const NormalizedEvaluator u_plus = normalized_solution(op, g_plus);
    const NormalizedEvaluator u_minus = normalized_solution(op, g_minus);
    const double up = u_plus(x_state);
    const double um = u_minus(x_state);
    if (!(up + um > 0.0)) {
        throw DegeneratePointError("u_plus + u_minus is not positive at the query point");
    }
    return up / (up + um);
}

void save_operator(const MarkovOperator& op, const std::string& fht_path,
                   const std::string& meta_path, const std::string& extra_json) {
    op.joint.save_file(fht_path);
    nlohmann::json meta;
    meta["schema"] = "fht-markov-operator-v1";
    nlohmann::json lower = nlohmann::json::array(), upper = nlohmann::json::array();
    for (const auto& [a, b] : op.domain.bounds) {
        lower.push_back(a);
        upper.push_back(b);
    }
    meta["domain"] = {{"lower", lower}, {"upper", upper}};
    meta["volume"] = op.volume;
    meta["initial_time"] = op.initial_time;
    meta["terminal_time"] = op.terminal_time;
    meta["site_of_coord"] = op.site_of_coord;
    meta["used_samples"] = op.used_samples;
    meta["dropped_samples"] = op.dropped_samples;
    meta["time_interpolation"] = "linear";
    meta["estimation"] = nlohmann::json::parse(extra_json);
    std::ofstream os(meta_path);
    if (!os) throw Error("cannot open " + meta_path + " for writing");
    os << meta.dump(2) << "\n";
}

MarkovOperator load_operator(const std::string& fht_path, const std::string& meta_path) {
    MarkovOperator op;
    op.joint = Fht::load_file(fht_path);
    std::ifstream is(meta_path);
    if (!is) throw Error("cannot open " + meta_path);
    nlohmann::json meta;
    try {
        is >> meta;
    } catch (const std::exception& e) {
        throw ParseError(std::string("bad operator metadata: ") + e.what(), 0);
    }
    if (meta.value("schema", "") != "fht-markov-operator-v1") {
        throw ParseError("unknown operator metadata schema", 0);
    }
    const auto& lower = meta.at("domain").at("lower");
    const auto& upper = meta.at("domain").at("upper");
    for (std::size_t c = 0; c < lower.size(); ++c) {
        op.domain.bounds.emplace_back(lower[c].get<double>(), upper[c].get<double>());
    }
    op.volume = meta.at("volume").get<double>();
    op.initial_time = meta.at("initial_time").get<double>();
    op.terminal_time = meta.at("terminal_time").get<double>();
    op.site_of_coord = meta.at("site_of_coord").get<std::vector<int>>();
    op.used_samples = meta.value("used_samples", 0ull);
    op.dropped_samples = meta.value("dropped_samples", 0ull);
    if (2 * op.dim() != op.joint.num_vars()) {
        throw ParseError("operator metadata does not match the joint tensor", 0);
    }
    return op;
}

}  // namespace fht
