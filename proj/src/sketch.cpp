#include "fht/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>
#include <string>

#include "fht/errors.hpp"

namespace fht {

int SketchFunction::total_degree() const {
    if (kind == Kind::ClusterMean) return power;
    int d = 0;
    for (const auto& [var, deg] : degrees) d += deg;
    return d;
}

bool SketchFunction::same_function(const SketchFunction& other) const {
    if (kind != other.kind) return false;
    if (kind == Kind::ClusterMean) return cluster == other.cluster && power == other.power;
    return support == other.support && degrees == other.degrees;
}

double SketchFunction::eval(const std::vector<IntervalBasis>& bases, const double* sample) const {
    if (kind == Kind::ClusterMean) {
        double s = 0.0;
        for (int j : cluster) s += sample[j];
        s /= static_cast<double>(cluster.size());
        return power == 1 ? s : s * s;
    }
    double prod = 1.0;
    std::size_t next = 0;
    double psi[64];
    for (int j : support) {
        int deg = 0;
        if (next < degrees.size() && degrees[next].first == j) deg = degrees[next++].second;
        const IntervalBasis& basis = bases[j];
        if (!basis.contains(sample[j])) {
            throw DomainError("sketch monomial coordinate for variable " + std::to_string(j + 1) +
                              " outside its basis interval");
        }
        if (deg == 0) {
            prod /= std::sqrt(basis.length());
        } else {
            basis.eval_prefix(sample[j], static_cast<std::size_t>(deg) + 1, psi);
            prod *= psi[deg];
        }
    }
    return prod;
}

std::string SketchFunction::describe() const {
    std::ostringstream os;
    if (kind == Kind::ClusterMean) {
        os << "cluster_mean(|h|=" << cluster.size() << ", p=" << power << ")";
    } else {
        os << "monomial(";
        if (degrees.empty()) {
            os << "const";
        } else {
            for (std::size_t i = 0; i < degrees.size(); ++i) {
                if (i) os << "*";
                os << "psi" << degrees[i].second << "[z" << degrees[i].first + 1 << "]";
            }
        }
        os << ")";
    }
    return os.str();
}

double eval_sketch(const SketchFunction& s, const std::vector<IntervalBasis>& bases,
                   const double* sample) {
    return s.eval(bases, sample);
}

namespace {

/// Distance from each member of `set` to the nearest variable outside it.
std::vector<int> boundary_distances(const std::vector<int>& set, int num_vars) {
    std::vector<bool> in(num_vars, false);
    for (int j : set) in[j] = true;
    std::vector<int> dist(set.size(), num_vars);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const int j = set[i];
        for (int k = 1; k <= num_vars; ++k) {
            const bool lo_out = j - k >= 0 && !in[j - k];
            const bool hi_out = j + k < num_vars && !in[j + k];
            if (lo_out || hi_out) {
                dist[i] = k;
                break;
            }
            if (j - k < 0 && j + k >= num_vars) break;
        }
    }
    return dist;
}

SketchFunction make_monomial(std::vector<int> support, std::vector<std::pair<int, int>> degrees) {
    SketchFunction f;
    f.kind = SketchFunction::Kind::LegendreMonomial;
    f.support = std::move(support);
    std::sort(f.support.begin(), f.support.end());
    std::sort(degrees.begin(), degrees.end());
    f.degrees = std::move(degrees);
    return f;
}

SketchFunction make_cluster(std::vector<int> h, int power) {
    SketchFunction f;
    f.kind = SketchFunction::Kind::ClusterMean;
    std::sort(h.begin(), h.end());
    f.cluster = std::move(h);
    f.power = power;
    return f;
}

/// Candidate sketch list for an index set, cut to r_tilde by total degree.
/// Candidates, in generation order: the constant; cluster means (and squares)
/// of the whole set and of its interlaced x/y halves, singleton clusters
/// canonicalized to basis monomials; then singleton monomials of increasing
/// degree ordered by distance to the set boundary.
std::vector<SketchFunction> build_sketch_set(const std::vector<int>& set, int num_vars,
                                             const std::vector<IntervalBasis>& bases,
                                             std::size_t r_tilde, bool* shortfall) {
    std::vector<SketchFunction> cand;
    auto push_new = [&](SketchFunction f) {
        for (const auto& g : cand) {
            if (g.same_function(f)) return;
        }
        cand.push_back(std::move(f));
    };

    auto max_degree = [&](int var) { return static_cast<int>(bases[var].size()) - 1; };

    push_new(make_monomial(set, {}));

    // Cluster means over the set and its x (odd 1-based position) / y halves.
    std::vector<int> hx, hy;
    for (int j : set) (j % 2 == 0 ? hx : hy).push_back(j);
    const std::vector<std::vector<int>> hs = {set, hx, hy};
    for (const auto& h : hs) {
        for (int p = 1; p <= 2; ++p) {
            if (h.empty()) continue;
            if (h.size() == 1) {
                if (p <= max_degree(h[0])) push_new(make_monomial(set, {{h[0], p}}));
            } else {
                push_new(make_cluster(h, p));
            }
        }
    }

    // Singleton monomials by (degree, boundary distance, variable).
    const std::vector<int> dist = boundary_distances(set, num_vars);
    std::vector<std::size_t> near_order(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) near_order[i] = i;
    std::stable_sort(near_order.begin(), near_order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    int global_qmax = 0;
    for (int j : set) global_qmax = std::max(global_qmax, max_degree(j));
    for (int deg = 1; deg <= global_qmax; ++deg) {
        for (std::size_t i : near_order) {
            const int j = set[i];
            if (deg <= max_degree(j)) push_new(make_monomial(set, {{j, deg}}));
        }
    }

    std::stable_sort(cand.begin(), cand.end(), [](const SketchFunction& a, const SketchFunction& b) {
        return a.total_degree() < b.total_degree();
    });

    if (cand.size() > r_tilde) {
        cand.resize(r_tilde);
    } else if (cand.size() < r_tilde && shortfall) {
        *shortfall = true;
    }
    return cand;
}

}  // namespace

SketchPlan default_sketch_plan(const BipartitionTree& tree, const std::vector<IntervalBasis>& bases,
                               std::size_t r_max, std::size_t oversample, double svd_rel_tol) {
    if (r_max < 1) throw Error("sketch plan requires r_max >= 1");
    SketchPlan plan;
    plan.r_max = r_max;
    plan.oversample = oversample;
    plan.svd_rel_tol = svd_rel_tol;
    plan.per_node.resize(tree.num_nodes());
    const std::size_t r_tilde = plan.r_tilde();
    for (int id = 0; id < tree.num_nodes(); ++id) {
        if (tree.node(id).parent < 0) continue;  // root has no sketch sets
        NodeSketchSet& s = plan.per_node[id];
        std::vector<int> branch_set, comp_set;
        for (int v : tree.index_set(id)) branch_set.push_back(v - 1);
        for (int v : tree.complement(id)) comp_set.push_back(v - 1);
        s.branch = build_sketch_set(branch_set, tree.num_vars(), bases, r_tilde,
                                    &s.branch_shortfall);
        s.complement = build_sketch_set(comp_set, tree.num_vars(), bases, r_tilde,
                                        &s.complement_shortfall);
    }
    return plan;
}

std::string SketchPlan::dump_json(const BipartitionTree& tree) const {
    nlohmann::json root;
    root["r_max"] = r_max;
    root["oversample"] = oversample;
    root["svd_rel_tol"] = svd_rel_tol;
    auto func_json = [](const SketchFunction& f) {
        nlohmann::json j;
        if (f.kind == SketchFunction::Kind::ClusterMean) {
            j["kind"] = "cluster_mean";
            nlohmann::json vars = nlohmann::json::array();
            for (int v : f.cluster) vars.push_back(v + 1);
            j["vars"] = vars;
            j["power"] = f.power;
        } else {
            j["kind"] = "monomial";
            nlohmann::json degs = nlohmann::json::object();
            for (const auto& [var, deg] : f.degrees) degs[std::to_string(var + 1)] = deg;
            j["degrees"] = degs;
            j["support_size"] = f.support.size();
        }
        j["total_degree"] = f.total_degree();
        return j;
    };
    nlohmann::json nodes = nlohmann::json::array();
    for (int id = 0; id < tree.num_nodes(); ++id) {
        if (tree.node(id).parent < 0) continue;
        const NodeSketchSet& s = per_node[id];
        nlohmann::json nj;
        nj["level"] = tree.node(id).level;
        nj["k"] = tree.node(id).pos + 1;
        nj["set"] = tree.index_set(id);
        nlohmann::json br = nlohmann::json::array(), co = nlohmann::json::array();
        for (const auto& f : s.branch) br.push_back(func_json(f));
        for (const auto& f : s.complement) co.push_back(func_json(f));
        nj["branch"] = br;
        nj["complement"] = co;
        if (s.branch_shortfall) nj["branch_shortfall"] = true;
        if (s.complement_shortfall) nj["complement_shortfall"] = true;
        nodes.push_back(nj);
    }
    root["nodes"] = nodes;
    return root.dump(2);
}

DenseTensor sketch_values(const std::vector<SketchFunction>& funcs,
                          const std::vector<IntervalBasis>& bases, const SampleView& samples) {
    const std::size_t r = funcs.size();
    const std::size_t n = samples.count;
    DenseTensor out({std::max<std::size_t>(r, 1), std::max<std::size_t>(n, 1)});

    // Per-function fast-path data: constant prefactor over degree-0 support
    // variables, plus the nonzero-degree factors.
    struct Prepared {
        bool cluster;
        double inv_h = 0.0;
        const std::vector<int>* vars = nullptr;
        int power = 1;
        double const_factor = 1.0;
        std::vector<std::pair<int, int>> degrees;
    };
    std::vector<Prepared> prep(r);
    for (std::size_t f = 0; f < r; ++f) {
        const SketchFunction& s = funcs[f];
        Prepared& p = prep[f];
        p.cluster = s.kind == SketchFunction::Kind::ClusterMean;
        if (p.cluster) {
            p.vars = &s.cluster;
            p.inv_h = 1.0 / static_cast<double>(s.cluster.size());
            p.power = s.power;
        } else {
            p.degrees = s.degrees;
            std::size_t next = 0;
            for (int j : s.support) {
                if (next < s.degrees.size() && s.degrees[next].first == j) {
                    ++next;
                } else {
                    p.const_factor /= std::sqrt(bases[j].length());
                }
            }
        }
    }

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const double* row = samples.row(static_cast<std::size_t>(i));
        double psi[64];
        for (std::size_t f = 0; f < r; ++f) {
            const Prepared& p = prep[f];
            double v;
            if (p.cluster) {
                double sum = 0.0;
                for (int j : *p.vars) sum += row[j];
                sum *= p.inv_h;
                v = p.power == 1 ? sum : sum * sum;
            } else {
                v = p.const_factor;
                for (const auto& [j, deg] : p.degrees) {
                    bases[j].eval_prefix(row[j], static_cast<std::size_t>(deg) + 1, psi);
                    v *= psi[deg];
                }
            }
            out[f * n + static_cast<std::size_t>(i)] = v;
        }
    }
    return out;
}

DenseTensor estimate_moment(const SampleView& samples, const std::vector<SketchFunction>& left,
                            const std::vector<SketchFunction>& right,
                            const std::vector<IntervalBasis>& bases, const MomentEstimator& est) {
    if (samples.count < 2) throw Error("moment estimation requires at least 2 samples");
    const DenseTensor lv = sketch_values(left, bases, samples);
    const DenseTensor rv = sketch_values(right, bases, samples);
    DenseTensor out({left.size(), right.size()});
    kernels::moment_matrix(lv.data(), left.size(), rv.data(), right.size(), samples.count,
                           est.rule(), out.data());
    return out;
}

DenseTensor estimate_moment3(const SampleView& samples, const std::vector<SketchFunction>& left,
                             const std::vector<SketchFunction>& mid,
                             const std::vector<SketchFunction>& right,
                             const std::vector<IntervalBasis>& bases, const MomentEstimator& est) {
    if (samples.count < 2) throw Error("moment estimation requires at least 2 samples");
    const DenseTensor lv = sketch_values(left, bases, samples);
    const DenseTensor mv = sketch_values(mid, bases, samples);
    const DenseTensor rv = sketch_values(right, bases, samples);
    DenseTensor out({left.size(), mid.size(), right.size()});
    kernels::moment_tensor3(lv.data(), left.size(), mv.data(), mid.size(), rv.data(), right.size(),
                            samples.count, est.rule(), out.data());
    return out;
}

DenseTensor SampleMoments::pair(const std::vector<SketchFunction>& a,
                                const std::vector<SketchFunction>& b) {
    return estimate_moment(samples_, a, b, bases_, est_);
}

DenseTensor SampleMoments::triple(const std::vector<SketchFunction>& a,
                                  const std::vector<SketchFunction>& b,
                                  const std::vector<SketchFunction>& f) {
    return estimate_moment3(samples_, a, b, f, bases_, est_);
}

std::vector<SketchFunction> basis_monomials(int var, std::size_t n) {
    std::vector<SketchFunction> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(i == 0 ? make_monomial({var}, {})
                             : make_monomial({var}, {{var, static_cast<int>(i)}}));
    }
    return out;
}

Fht solve_cores(MomentSource& source, const BipartitionTree& tree,
                const std::vector<IntervalBasis>& bases, const SketchPlan& plan) {
    const int num_nodes = tree.num_nodes();
    if (static_cast<int>(plan.per_node.size()) != num_nodes) {
        throw Error("sketch plan does not cover every tree node");
    }

    // Per non-root node: branch gauge U (r_tilde x r) and exterior transfer
    // T = V * Sigma^+ (r_tilde_comp x r) from the cross-moment SVD.
    std::vector<DenseTensor> gauge(num_nodes), transfer(num_nodes);
    std::vector<std::size_t> rank(num_nodes, 0);
    for (int id = 0; id < num_nodes; ++id) {
        if (tree.node(id).parent < 0) continue;
        const NodeSketchSet& s = plan.per_node[id];
        const DenseTensor m = source.pair(s.branch, s.complement);
        const TruncatedSvd svd = truncated_svd(m, plan.r_max, plan.svd_rel_tol);
        if (svd.singular_values[0] <= 0.0) {
            throw DegenerateNodeError("zero cross-moment matrix at node (level " +
                                      std::to_string(tree.node(id).level) + ", k " +
                                      std::to_string(tree.node(id).pos + 1) + ")");
        }
        rank[id] = svd.rank();
        gauge[id] = svd.u;
        DenseTensor t({m.extent(1), svd.rank()});
        for (std::size_t i = 0; i < m.extent(1); ++i) {
            for (std::size_t j = 0; j < svd.rank(); ++j) {
                const double sv = svd.singular_values[j];
                t(i, j) = sv > 0.0 ? svd.v(i, j) / sv : 0.0;
            }
        }
        transfer[id] = std::move(t);
    }

    std::vector<DenseTensor> cores(num_nodes);
    for (int id = 0; id < num_nodes; ++id) {
        const auto& node = tree.node(id);
        if (node.leaf()) {
            const int var = node.var();
            const auto monomials = basis_monomials(var, bases[var].size());
            const DenseTensor b = source.pair(monomials, plan.per_node[id].complement);
            cores[id] = contract(b, transfer[id], {{1, 0}});  // n x r
        } else if (node.parent >= 0) {
            const auto& sl = plan.per_node[node.left].branch;
            const auto& sr = plan.per_node[node.right].branch;
            const DenseTensor t3 = source.triple(sl, sr, plan.per_node[id].complement);
            const DenseTensor b = contract(t3, transfer[id], {{2, 0}});
            const DenseTensor a = kron(gauge[node.left], gauge[node.right]);
            const DenseTensor x =
                lstsq(a, b.reshaped({sl.size() * sr.size(), rank[id]}));
            cores[id] = x.reshaped({rank[node.left], rank[node.right], rank[id]});
        } else {
            const auto& sl = plan.per_node[node.left].branch;
            const auto& sr = plan.per_node[node.right].branch;
            const DenseTensor b2 = source.pair(sl, sr);
            const DenseTensor a = kron(gauge[node.left], gauge[node.right]);
            const DenseTensor x = lstsq(a, b2.reshaped({sl.size() * sr.size(), 1}));
            cores[id] = x.reshaped({rank[node.left], rank[node.right]});
        }
    }
    return Fht(tree, bases, std::move(cores));
}

Fht solve_cores(const SampleView& samples, const BipartitionTree& tree,
                const std::vector<IntervalBasis>& bases, const SketchPlan& plan,
                const MomentEstimator& est) {
    if (samples.num_vars != static_cast<std::size_t>(tree.num_vars())) {
        throw Error("sample dimension does not match tree");
    }
    for (std::size_t j = 0; j < samples.num_vars; ++j) {
        const IntervalBasis& basis = bases[j];
        for (std::size_t i = 0; i < samples.count; ++i) {
            const double z = samples.row(i)[j];
            if (!basis.contains(z)) {
                throw DomainError("sample " + std::to_string(i) + " variable " +
                                  std::to_string(j + 1) + " value " + std::to_string(z) +
                                  " outside its basis interval");
            }
        }
    }
    SampleMoments source(samples, bases, est);
    return solve_cores(source, tree, bases, plan);
}

}  // namespace fht
