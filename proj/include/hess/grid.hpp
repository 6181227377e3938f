#pragma once

#include <functional>
#include <vector>

#include "hess/types.hpp"

// Tensor-product box grids and discrete derivative jets. Nodes are stored in
// lexicographic flat order with the last axis fastest; each axis needs at
// least four nodes so the one-sided boundary stencils fit.
namespace hess::grid {

struct GridField {
  Box box;
  std::vector<int> m;       // nodes per axis
  std::vector<double> v;    // values, flat order

  int n() const { return static_cast<int>(m.size()); }
  std::size_t size() const { return v.size(); }

  double h(int axis) const {
    return (box.hi[axis] - box.lo[axis]) / (m[axis] - 1);
  }
  std::size_t stride(int axis) const;
  std::size_t flat(const std::vector<int>& idx) const;
  void unflat(std::size_t f, std::vector<int>& idx) const;
  Vec node_x(const std::vector<int>& idx) const;
  bool is_boundary(const std::vector<int>& idx) const;
  bool is_interior(const std::vector<int>& idx) const;

  double& at(const std::vector<int>& idx) { return v[flat(idx)]; }
  double at(const std::vector<int>& idx) const { return v[flat(idx)]; }

  double max_abs() const;
};

// Zero field; validates box / m consistency and m_a >= 4.
GridField make_field(const Box& box, std::vector<int> m);
// Field sampled from a function of x.
GridField make_field(const Box& box, std::vector<int> m,
                     const std::function<double(const Vec&)>& f);

// Value, gradient, and symmetrized second-difference matrix at a node.
struct Jet2 {
  double z = 0.0;
  Vec p;
  Mat W;
};

// Central differences; the node must be interior.
Jet2 interior_jet(const GridField& u, const std::vector<int>& idx);

// Central differences on interior axes, second-order one-sided stencils on
// boundary axes. Valid at every node, exact on quadratics.
Jet2 node_jet(const GridField& u, const std::vector<int>& idx);

// Visit every node / every interior node in flat order.
void for_each_node(
    const GridField& u,
    const std::function<void(const std::vector<int>&, std::size_t)>& fn);
void for_each_interior(
    const GridField& u,
    const std::function<void(const std::vector<int>&, std::size_t)>& fn);

// flat index -> ordinal among interior nodes, or -1 on the boundary.
std::vector<std::ptrdiff_t> interior_map(const GridField& u);
std::size_t interior_count(const GridField& u);

}  // namespace hess::grid
