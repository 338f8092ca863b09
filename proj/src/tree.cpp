#include "fht/tree.hpp"

#include <string>

#include "fht/errors.hpp"

namespace fht {

int BipartitionTree::build_range(int lo, int hi, int parent, int level, int pos) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[id].parent = parent;
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    nodes_[id].level = level;
    nodes_[id].pos = pos;
    if (level > depth_) depth_ = level;
    if (hi - lo > 1) {
        const int mid = lo + (hi - lo + 1) / 2;  // left gets ceil(size/2)
        nodes_[id].left = build_range(lo, mid, id, level + 1, 2 * pos);
        nodes_[id].right = build_range(mid, hi, id, level + 1, 2 * pos + 1);
    }
    return id;
}

BipartitionTree BipartitionTree::build(int num_vars) {
    if (num_vars < 2) throw Error("build_tree requires num_vars >= 2");
    BipartitionTree t;
    t.num_vars_ = num_vars;
    t.build_range(0, num_vars, -1, 0, 0);
    t.preorder_.resize(t.nodes_.size());
    for (int i = 0; i < t.num_nodes(); ++i) t.preorder_[i] = i;
    t.leaves_.assign(num_vars, -1);
    for (int i = 0; i < t.num_nodes(); ++i) {
        if (t.nodes_[i].leaf()) t.leaves_[t.nodes_[i].lo] = i;
    }
    return t;
}

BipartitionTree BipartitionTree::singleton() {
    BipartitionTree t;
    t.num_vars_ = 1;
    t.nodes_.push_back({});
    t.nodes_[0].hi = 1;
    t.preorder_ = {0};
    t.leaves_ = {0};
    return t;
}

BipartitionTree BipartitionTree::from_left_sizes(int num_vars,
                                                 const std::vector<std::uint32_t>& sizes) {
    if (num_vars < 1) throw Error("tree requires num_vars >= 1");
    if (num_vars == 1) {
        if (!sizes.empty()) throw Error("one-variable tree has no internal nodes");
        return singleton();
    }
    BipartitionTree t;
    t.num_vars_ = num_vars;
    std::size_t cursor = 0;
    // Recursive reconstruction in preorder.
    struct Builder {
        BipartitionTree& t;
        const std::vector<std::uint32_t>& sizes;
        std::size_t& cursor;
        int run(int lo, int hi, int parent, int level, int pos) {
            const int id = static_cast<int>(t.nodes_.size());
            t.nodes_.push_back({});
            t.nodes_[id].parent = parent;
            t.nodes_[id].lo = lo;
            t.nodes_[id].hi = hi;
            t.nodes_[id].level = level;
            t.nodes_[id].pos = pos;
            if (level > t.depth_) t.depth_ = level;
            if (hi - lo > 1) {
                if (cursor >= sizes.size()) throw Error("tree topology underflow");
                const int lsize = static_cast<int>(sizes[cursor++]);
                if (lsize < 1 || lsize >= hi - lo) {
                    throw Error("invalid left-subtree size " + std::to_string(lsize) +
                                " for range of " + std::to_string(hi - lo));
                }
                t.nodes_[id].left = run(lo, lo + lsize, id, level + 1, 2 * pos);
                t.nodes_[id].right = run(lo + lsize, hi, id, level + 1, 2 * pos + 1);
            }
            return id;
        }
    };
    Builder b{t, sizes, cursor};
    b.run(0, num_vars, -1, 0, 0);
    if (cursor != sizes.size()) throw Error("tree topology overflow");
    t.preorder_.resize(t.nodes_.size());
    for (int i = 0; i < t.num_nodes(); ++i) t.preorder_[i] = i;
    t.leaves_.assign(num_vars, -1);
    for (int i = 0; i < t.num_nodes(); ++i) {
        if (t.nodes_[i].leaf()) t.leaves_[t.nodes_[i].lo] = i;
    }
    return t;
}

int BipartitionTree::node_id(int level, int k) const {
    const int pos = k - 1;
    for (int i = 0; i < num_nodes(); ++i) {
        if (nodes_[i].level == level && nodes_[i].pos == pos) return i;
    }
    return -1;
}

std::vector<int> BipartitionTree::index_set(int id) const {
    std::vector<int> out;
    out.reserve(nodes_[id].size());
    for (int v = nodes_[id].lo; v < nodes_[id].hi; ++v) out.push_back(v + 1);
    return out;
}

std::vector<int> BipartitionTree::complement(int id) const {
    std::vector<int> out;
    out.reserve(num_vars_ - nodes_[id].size());
    for (int v = 0; v < nodes_[id].lo; ++v) out.push_back(v + 1);
    for (int v = nodes_[id].hi; v < num_vars_; ++v) out.push_back(v + 1);
    return out;
}

std::vector<std::uint32_t> BipartitionTree::left_sizes() const {
    std::vector<std::uint32_t> out;
    for (int id : preorder_) {
        const Node& n = nodes_[id];
        if (!n.leaf()) out.push_back(static_cast<std::uint32_t>(nodes_[n.left].size()));
    }
    return out;
}

bool BipartitionTree::same_topology(const BipartitionTree& other) const {
    return num_vars_ == other.num_vars_ && left_sizes() == other.left_sizes();
}

int joint_position(VarKind kind, int site, int d) {
    if (site < 1 || site > d) throw Error("site index out of range");
    return kind == VarKind::X ? 2 * site - 1 : 2 * site;
}

GridMap::GridMap(int delta, int m) : delta_(delta), m_(m) {
    if (delta != 1 && delta != 2) throw Error("GridMap supports delta in {1, 2}");
    if (m < 1 || (m & (m - 1)) != 0) {
        throw Error("GridMap requires m to be a power of two, got " + std::to_string(m));
    }
    mu_ = 0;
    while ((1 << mu_) < m) ++mu_;
    num_sites_ = 1;
    for (int i = 0; i < delta_; ++i) num_sites_ *= m_;
}

int GridMap::site_rank(const std::vector<int>& coords) const {
    if (static_cast<int>(coords.size()) != delta_) throw Error("GridMap coordinate count mismatch");
    for (int c : coords) {
        if (c < 1 || c > m_) throw Error("GridMap coordinate out of range");
    }
    // k-1 has bits a_{1,1} a_{2,1} ... a_{delta,mu}, digit-position-major with
    // a_{delta,1} the most significant bit of (i_delta - 1).
    int k = 0;
    for (int digit = 0; digit < mu_; ++digit) {
        for (int axis = 0; axis < delta_; ++axis) {
            const int bit = (coords[axis] - 1) >> (mu_ - 1 - digit) & 1;
            k = (k << 1) | bit;
        }
    }
    return k + 1;
}

}  // namespace fht
