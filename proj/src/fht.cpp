#include "fht/fht.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>

#include "fht/errors.hpp"
#include "fht/io_util.hpp"

namespace fht {

namespace {

constexpr char kMagic[4] = {'F', 'H', 'T', '1'};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

Fht::Fht(BipartitionTree tree, std::vector<IntervalBasis> bases, std::vector<DenseTensor> cores)
    : tree_(std::move(tree)), bases_(std::move(bases)), cores_(std::move(cores)) {
    validate();
}

void Fht::validate() const {
    if (static_cast<int>(bases_.size()) != tree_.num_vars()) {
        throw ShapeError("basis count does not match variable count");
    }
    if (static_cast<int>(cores_.size()) != tree_.num_nodes()) {
        throw ShapeError("core count does not match node count");
    }
    if (tree_.num_vars() == 1) {
        const DenseTensor& c = cores_[0];
        if (c.order() != 2 || c.extent(0) != bases_[0].size() || c.extent(1) != 1) {
            throw ShapeError("one-variable tensor must have a single n x 1 leaf core");
        }
        return;
    }
    for (int id = 0; id < tree_.num_nodes(); ++id) {
        const auto& n = tree_.node(id);
        const DenseTensor& c = cores_[id];
        if (n.leaf()) {
            if (c.order() != 2) throw ShapeError("leaf core must be a 2-tensor");
            if (c.extent(0) != bases_[n.var()].size()) {
                throw ShapeError("leaf physical extent " + std::to_string(c.extent(0)) +
                                 " does not match basis size for variable " +
                                 std::to_string(n.var() + 1));
            }
        } else {
            const std::size_t rl = cores_[n.left].shape().back();
            const std::size_t rr = cores_[n.right].shape().back();
            const bool root = n.parent < 0;
            if (root) {
                if (c.order() != 2) throw ShapeError("root core must be a 2-tensor");
                if (c.extent(0) != rl || c.extent(1) != rr) {
                    throw ShapeError("root core extents do not match child ranks");
                }
            } else {
                if (c.order() != 3) throw ShapeError("internal core must be a 3-tensor");
                if (c.extent(0) != rl || c.extent(1) != rr) {
                    throw ShapeError("internal core extents do not match child ranks at node " +
                                     std::to_string(id));
                }
            }
        }
    }
}

double Fht::reduce_with(const std::vector<std::vector<double>>& leaf_vectors) const {
    std::vector<std::vector<double>> up(tree_.num_nodes());
    const auto& order = tree_.preorder();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int id = *it;
        const auto& n = tree_.node(id);
        const DenseTensor& c = cores_[id];
        if (n.leaf()) {
            const std::vector<double>& v = leaf_vectors[n.var()];
            const std::size_t nn = c.extent(0), r = c.extent(1);
            std::vector<double> out(r, 0.0);
            for (std::size_t i = 0; i < nn; ++i) {
                const double vi = v[i];
                for (std::size_t t = 0; t < r; ++t) out[t] += vi * c(i, t);
            }
            up[id] = std::move(out);
        } else if (n.parent >= 0) {
            const auto& vl = up[n.left];
            const auto& vr = up[n.right];
            const std::size_t rl = c.extent(0), rr = c.extent(1), rp = c.extent(2);
            std::vector<double> out(rp, 0.0);
            for (std::size_t a = 0; a < rl; ++a) {
                for (std::size_t b = 0; b < rr; ++b) {
                    const double w = vl[a] * vr[b];
                    for (std::size_t t = 0; t < rp; ++t) out[t] += w * c(a, b, t);
                }
            }
            up[id] = std::move(out);
        }
    }
    const int root = tree_.root();
    if (tree_.node(root).leaf()) return up[root][0];
    const DenseTensor& c = cores_[root];
    const auto& vl = up[tree_.node(root).left];
    const auto& vr = up[tree_.node(root).right];
    double s = 0.0;
    for (std::size_t a = 0; a < c.extent(0); ++a)
        for (std::size_t b = 0; b < c.extent(1); ++b) s += vl[a] * vr[b] * c(a, b);
    return s;
}

double Fht::evaluate(const std::vector<double>& z) const {
    if (static_cast<int>(z.size()) != num_vars()) throw ShapeError("evaluate arity mismatch");
    std::vector<std::vector<double>> leaf_vectors(num_vars());
    for (int j = 0; j < num_vars(); ++j) {
        if (!bases_[j].contains(z[j])) {
            throw DomainError("variable " + std::to_string(j + 1) + " value " +
                              std::to_string(z[j]) + " outside its basis interval");
        }
        leaf_vectors[j].resize(bases_[j].size());
        bases_[j].eval_prefix(z[j], bases_[j].size(), leaf_vectors[j].data());
    }
    return reduce_with(leaf_vectors);
}

double Fht::integrate_all() const {
    std::vector<std::vector<double>> leaf_vectors(num_vars());
    for (int j = 0; j < num_vars(); ++j) leaf_vectors[j] = bases_[j].integration_vector();
    return reduce_with(leaf_vectors);
}

namespace {

/// Preorder fragment of a reduced tree: topology plus cores, top core first.
struct Sub {
    std::vector<std::uint32_t> lsizes;
    std::vector<DenseTensor> cores;
    int kept = 0;
};

}  // namespace

Fht Fht::condition_on(const std::map<int, double>& assignments) const {
    std::vector<int> keep;
    for (int j = 0; j < num_vars(); ++j) {
        auto it = assignments.find(j);
        if (it == assignments.end()) {
            keep.push_back(j);
        } else if (!bases_[j].contains(it->second)) {
            throw DomainError("assignment for variable " + std::to_string(j + 1) + " value " +
                              std::to_string(it->second) + " outside its basis interval");
        }
    }
    if (keep.size() + assignments.size() != static_cast<std::size_t>(num_vars())) {
        throw Error("assignment for unknown variable");
    }
    if (keep.empty()) throw Error("condition_on must leave at least one free variable");

    auto dead_vector = [&](int var) {
        const double z = assignments.at(var);
        std::vector<double> v(bases_[var].size());
        bases_[var].eval_prefix(z, bases_[var].size(), v.data());
        return v;
    };
    return reduced(keep, dead_vector);
}

Fht Fht::marginalize(const std::vector<int>& keep) const {
    if (keep.empty()) throw Error("marginalize requires a nonempty keep set");
    std::vector<int> sorted = keep;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] < 0 || sorted[i] >= num_vars()) throw Error("keep variable out of range");
        if (i > 0 && sorted[i] == sorted[i - 1]) throw Error("duplicate keep variable");
    }
    auto dead_vector = [&](int var) { return bases_[var].integration_vector(); };
    return reduced(sorted, dead_vector);
}

Fht Fht::reduced(const std::vector<int>& keep,
                 const std::function<std::vector<double>(int)>& dead_vector) const {
    std::vector<bool> kept_var(num_vars(), false);
    for (int j : keep) kept_var[j] = true;

    // dead(u): vector over u's parent-leg extent with everything below u
    // contracted out.
    std::function<std::vector<double>(int)> dead = [&](int id) -> std::vector<double> {
        const auto& n = tree_.node(id);
        const DenseTensor& c = cores_[id];
        if (n.leaf()) {
            const std::vector<double> v = dead_vector(n.var());
            std::vector<double> out(c.extent(1), 0.0);
            for (std::size_t i = 0; i < c.extent(0); ++i)
                for (std::size_t t = 0; t < c.extent(1); ++t) out[t] += v[i] * c(i, t);
            return out;
        }
        const std::vector<double> wl = dead(n.left);
        const std::vector<double> wr = dead(n.right);
        std::vector<double> out(c.extent(2), 0.0);
        for (std::size_t a = 0; a < c.extent(0); ++a)
            for (std::size_t b = 0; b < c.extent(1); ++b) {
                const double w = wl[a] * wr[b];
                for (std::size_t t = 0; t < c.extent(2); ++t) out[t] += w * c(a, b, t);
            }
        return out;
    };

    std::function<int(int)> kept_below = [&](int id) {
        const auto& n = tree_.node(id);
        int count = 0;
        for (int v = n.lo; v < n.hi; ++v) count += kept_var[v] ? 1 : 0;
        return count;
    };

    // emit(u): induced subtree for an alive node; the top core keeps u's
    // original parent-leg extent as its last axis.
    std::function<Sub(int)> emit = [&](int id) -> Sub {
        const auto& n = tree_.node(id);
        const DenseTensor& c = cores_[id];
        if (n.leaf()) {
            Sub s;
            s.kept = 1;
            s.cores.push_back(c);
            return s;
        }
        const int kl = kept_below(n.left);
        const int kr = kept_below(n.right);
        if (kl > 0 && kr > 0) {
            Sub sl = emit(n.left);
            Sub sr = emit(n.right);
            Sub s;
            s.kept = sl.kept + sr.kept;
            s.lsizes.push_back(static_cast<std::uint32_t>(sl.kept));
            s.lsizes.insert(s.lsizes.end(), sl.lsizes.begin(), sl.lsizes.end());
            s.lsizes.insert(s.lsizes.end(), sr.lsizes.begin(), sr.lsizes.end());
            s.cores.push_back(c);
            s.cores.insert(s.cores.end(), std::make_move_iterator(sl.cores.begin()),
                           std::make_move_iterator(sl.cores.end()));
            s.cores.insert(s.cores.end(), std::make_move_iterator(sr.cores.begin()),
                           std::make_move_iterator(sr.cores.end()));
            return s;
        }
        // Pass-through: one child fully contracted into a transfer matrix
        // that is absorbed into the surviving child's top core.
        const int alive = kl > 0 ? n.left : n.right;
        const int gone = kl > 0 ? n.right : n.left;
        const std::vector<double> w = dead(gone);
        const std::size_t ra = kl > 0 ? c.extent(0) : c.extent(1);
        const std::size_t rp = c.extent(2);
        DenseTensor m({ra, rp});
        for (std::size_t a = 0; a < ra; ++a)
            for (std::size_t t = 0; t < rp; ++t) {
                double s = 0.0;
                for (std::size_t b = 0; b < w.size(); ++b)
                    s += (kl > 0 ? c(a, b, t) : c(b, a, t)) * w[b];
                m(a, t) = s;
            }
        Sub s = emit(alive);
        const std::size_t last = s.cores[0].order() - 1;
        s.cores[0] = contract(s.cores[0], m, {{last, 0}});
        return s;
    };

    // Assemble at the root.
    const int root = tree_.root();
    const auto& rn = tree_.node(root);
    std::vector<std::uint32_t> lsizes;
    std::vector<DenseTensor> cores;
    if (rn.leaf()) {
        // Singleton tree: keep must be {0}.
        lsizes = {};
        cores = {cores_[root]};
    } else {
        const int kl = kept_below(rn.left);
        const int kr = kept_below(rn.right);
        const DenseTensor& rc = cores_[root];
        if (kl > 0 && kr > 0) {
            Sub sl = emit(rn.left);
            Sub sr = emit(rn.right);
            lsizes.push_back(static_cast<std::uint32_t>(sl.kept));
            lsizes.insert(lsizes.end(), sl.lsizes.begin(), sl.lsizes.end());
            lsizes.insert(lsizes.end(), sr.lsizes.begin(), sr.lsizes.end());
            cores.push_back(rc);
            cores.insert(cores.end(), std::make_move_iterator(sl.cores.begin()),
                         std::make_move_iterator(sl.cores.end()));
            cores.insert(cores.end(), std::make_move_iterator(sr.cores.begin()),
                         std::make_move_iterator(sr.cores.end()));
        } else {
            const int alive = kl > 0 ? rn.left : rn.right;
            const int gone = kl > 0 ? rn.right : rn.left;
            const std::vector<double> w = dead(gone);
            std::vector<double> v(kl > 0 ? rc.extent(0) : rc.extent(1), 0.0);
            for (std::size_t a = 0; a < v.size(); ++a)
                for (std::size_t b = 0; b < w.size(); ++b)
                    v[a] += (kl > 0 ? rc(a, b) : rc(b, a)) * w[b];
            Sub s = emit(alive);
            const std::size_t last = s.cores[0].order() - 1;
            DenseTensor vt({v.size()}, v);
            s.cores[0] = contract(s.cores[0], vt, {{last, 0}});
            if (s.kept == 1) {
                // Lone leaf: coefficients with a unit parent leg.
                s.cores[0] = s.cores[0].reshaped({s.cores[0].extent(0), 1});
            }
            lsizes = std::move(s.lsizes);
            cores = std::move(s.cores);
        }
    }

    std::vector<IntervalBasis> new_bases;
    new_bases.reserve(keep.size());
    for (int j : keep) new_bases.push_back(bases_[j]);
    BipartitionTree new_tree = keep.size() == 1
                                   ? BipartitionTree::singleton()
                                   : BipartitionTree::from_left_sizes(
                                         static_cast<int>(keep.size()), lsizes);
    return Fht(std::move(new_tree), std::move(new_bases), std::move(cores));
}

void Fht::scale(double factor) {
    DenseTensor& c = cores_[tree_.root()];
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= factor;
}

std::vector<double> univariate_marginal_coefficients(const Fht& f, int var) {
    const Fht uni = f.marginalize({var});
    const DenseTensor& c = uni.core(0);
    std::vector<double> out(c.extent(0));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c(i, static_cast<std::size_t>(0));
    return out;
}

std::vector<double> Fht::sample_autoregressive(RngStream& rng, std::size_t grid_size) const {
    if (grid_size < 64) throw Error("sample_autoregressive requires grid_size >= 64");
    std::vector<double> z(num_vars(), 0.0);
    Fht current = *this;
    std::vector<int> remaining(num_vars());
    for (int j = 0; j < num_vars(); ++j) remaining[j] = j;

    std::vector<double> psi;
    while (!remaining.empty()) {
        const int orig_var = remaining.front();
        const IntervalBasis& basis = current.basis(0);
        const std::vector<double> coeffs = univariate_marginal_coefficients(current, 0);

        const std::size_t g = grid_size;
        const double a = basis.a(), b = basis.b();
        const double dz = (b - a) / static_cast<double>(g - 1);
        psi.resize(basis.size());
        std::vector<double> density(g);
        for (std::size_t k = 0; k < g; ++k) {
            const double zk = a + dz * static_cast<double>(k);
            basis.eval_prefix(zk, basis.size(), psi.data());
            density[k] = std::max(dot(coeffs, psi), 0.0);
        }
        std::vector<double> cdf(g, 0.0);
        for (std::size_t k = 1; k < g; ++k) {
            cdf[k] = cdf[k - 1] + 0.5 * (density[k - 1] + density[k]) * dz;
        }
        const double total = cdf.back();
        if (!(total > 0.0)) {
            throw SamplingFailureError("univariate marginal of variable " +
                                       std::to_string(orig_var + 1) +
                                       " has no positive mass on its grid");
        }
        const double target = rng.uniform01() * total;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
        std::size_t k = it == cdf.end() ? g - 1 : static_cast<std::size_t>(it - cdf.begin());
        if (k == 0) k = 1;
        const double c0 = cdf[k - 1], c1 = cdf[k];
        double zs = a + dz * static_cast<double>(k - 1);
        if (c1 > c0) zs += dz * (target - c0) / (c1 - c0);
        z[orig_var] = zs;

        remaining.erase(remaining.begin());
        if (!remaining.empty()) {
            current = current.condition_on({{0, zs}});
        }
    }
    return z;
}

void Fht::save(std::ostream& os) const {
    os.write(kMagic, 4);
    io::put_u32(os, static_cast<std::uint32_t>(num_vars()));
    for (std::uint32_t s : tree_.left_sizes()) io::put_u32(os, s);
    for (int j = 0; j < num_vars(); ++j) {
        io::put_f64(os, bases_[j].a());
        io::put_f64(os, bases_[j].b());
        io::put_u32(os, static_cast<std::uint32_t>(bases_[j].size()));
    }
    for (int id : tree_.preorder()) {
        const DenseTensor& c = cores_[id];
        io::put_u32(os, static_cast<std::uint32_t>(c.order()));
        for (std::size_t e : c.shape()) io::put_u32(os, static_cast<std::uint32_t>(e));
        for (std::size_t i = 0; i < c.size(); ++i) io::put_f64(os, c[i]);
    }
}

Fht Fht::load(std::istream& is) {
    io::Reader r(is);
    r.expect_magic(kMagic);
    const std::uint32_t num_vars = r.u32("num_vars");
    if (num_vars < 1 || num_vars > (1u << 24)) {
        throw ParseError("implausible variable count " + std::to_string(num_vars), r.offset());
    }
    std::vector<std::uint32_t> lsizes(num_vars >= 2 ? num_vars - 1 : 0);
    for (auto& s : lsizes) s = r.u32("tree topology");
    BipartitionTree tree;
    try {
        tree = BipartitionTree::from_left_sizes(static_cast<int>(num_vars), lsizes);
    } catch (const Error& e) {
        throw ParseError(std::string("bad tree topology: ") + e.what(), r.offset());
    }
    std::vector<IntervalBasis> bases;
    bases.reserve(num_vars);
    for (std::uint32_t j = 0; j < num_vars; ++j) {
        const double a = r.f64("interval a");
        const double b = r.f64("interval b");
        const std::uint32_t n = r.u32("basis size");
        if (!(a < b) || n < 1 || n > (1u << 20)) {
            throw ParseError("invalid basis for variable " + std::to_string(j + 1), r.offset());
        }
        bases.emplace_back(a, b, n);
    }
    std::vector<DenseTensor> cores;
    cores.reserve(tree.num_nodes());
    for (int id = 0; id < tree.num_nodes(); ++id) {
        const std::uint32_t order = r.u32("core order");
        if (order > 3) throw ParseError("core order must be <= 3", r.offset());
        std::vector<std::size_t> shape(order);
        std::size_t total = 1;
        for (auto& e : shape) {
            e = r.u32("core extent");
            if (e == 0 || e > (1u << 24)) throw ParseError("invalid core extent", r.offset());
            total *= e;
        }
        std::vector<double> data(total);
        for (auto& v : data) v = r.f64("core datum");
        cores.emplace_back(std::move(shape), std::move(data));
    }
    try {
        return Fht(std::move(tree), std::move(bases), std::move(cores));
    } catch (const Error& e) {
        throw ParseError(std::string("inconsistent cores: ") + e.what(), r.offset());
    }
}

void Fht::save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    save(os);
    if (!os) throw Error("write failed for " + path);
}

Fht Fht::load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    return load(is);
}

}  // namespace fht
