#pragma once

#include <cstdint>
#include <vector>

namespace fht {

/// Hierarchical bipartition of the variable index set into a binary tree.
/// Node index sets are contiguous variable ranges; children split a range
/// nearly in half with the left child taking ceil(size/2). Variables and
/// (level, k) coordinates are 1-based at the API, 0-based internally.
class BipartitionTree {
  public:
    struct Node {
        int parent = -1;
        int left = -1;   // -1 for a leaf
        int right = -1;
        int lo = 0;      // variable range [lo, hi), 0-based
        int hi = 0;
        int level = 0;   // depth; root is level 0
        int pos = 0;     // 0-based position within its level in the full dyadic numbering
        bool leaf() const { return left < 0; }
        int var() const { return lo; }  // only meaningful for leaves
        int size() const { return hi - lo; }
    };

    /// Builds the bipartition over [num_vars]; requires num_vars >= 2
    /// (single-node trees arise only internally, via `singleton`).
    static BipartitionTree build(int num_vars);

    /// Degenerate one-variable tree (a lone leaf), used by marginalization.
    static BipartitionTree singleton();

    /// Reconstructs a tree from preorder left-subtree variable counts.
    static BipartitionTree from_left_sizes(int num_vars, const std::vector<std::uint32_t>& sizes);

    int num_vars() const { return num_vars_; }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    const Node& node(int id) const { return nodes_[id]; }
    int root() const { return 0; }
    int depth() const { return depth_; }

    /// Node id for paper coordinates (level l, 1-based k); -1 when absent.
    int node_id(int level, int k) const;

    /// I_k^(l) as 1-based variable indices.
    std::vector<int> index_set(int id) const;

    /// [num_vars] minus the node's index set, 1-based.
    std::vector<int> complement(int id) const;

    /// Node ids in preorder (root, left subtree, right subtree). Nodes are
    /// stored in this order, so this is just 0..num_nodes-1.
    const std::vector<int>& preorder() const { return preorder_; }

    /// Leaf node ids ordered by variable.
    const std::vector<int>& leaves() const { return leaves_; }

    /// Preorder left-subtree variable counts (the serialized topology).
    std::vector<std::uint32_t> left_sizes() const;

    bool same_topology(const BipartitionTree& other) const;

  private:
    int build_range(int lo, int hi, int parent, int level, int pos);

    int num_vars_ = 0;
    int depth_ = 0;
    std::vector<Node> nodes_;
    std::vector<int> preorder_;
    std::vector<int> leaves_;
};

/// Interlacing of the joint variable z = (x_1, y_1, ..., x_d, y_d).
enum class VarKind { X, Y };

/// 1-based position of x_j / y_j among the 2d joint variables.
int joint_position(VarKind kind, int site, int d);

/// Map from Cartesian grid coordinates to the site rank used for variable
/// ordering. Bits of (i_delta - 1) are interleaved axis-major per digit
/// position; 1D interleaving is the identity. Requires m = 2^mu.
class GridMap {
  public:
    GridMap(int delta, int m);

    int delta() const { return delta_; }
    int m() const { return m_; }
    int num_sites() const { return num_sites_; }

    /// coords are 1-based, each in [m]; returns a 1-based site rank.
    int site_rank(const std::vector<int>& coords) const;

  private:
    int delta_;
    int m_;
    int mu_;
    int num_sites_;
};

}  // namespace fht
