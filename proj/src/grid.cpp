#include "hess/grid.hpp"

#include <stdexcept>

namespace hess::grid {

std::size_t GridField::stride(int axis) const {
  std::size_t s = 1;
  for (int a = n() - 1; a > axis; --a) s *= static_cast<std::size_t>(m[a]);
  return s;
}

std::size_t GridField::flat(const std::vector<int>& idx) const {
  std::size_t f = 0;
  for (int a = 0; a < n(); ++a) f = f * m[a] + idx[a];
  return f;
}

void GridField::unflat(std::size_t f, std::vector<int>& idx) const {
  idx.resize(m.size());
  for (int a = n() - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(f % m[a]);
    f /= m[a];
  }
}

Vec GridField::node_x(const std::vector<int>& idx) const {
  Vec x(n());
  for (int a = 0; a < n(); ++a) x[a] = box.lo[a] + idx[a] * h(a);
  return x;
}

bool GridField::is_boundary(const std::vector<int>& idx) const {
  for (int a = 0; a < n(); ++a)
    if (idx[a] == 0 || idx[a] == m[a] - 1) return true;
  return false;
}

bool GridField::is_interior(const std::vector<int>& idx) const {
  return !is_boundary(idx);
}

double GridField::max_abs() const {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::abs(x));
  return r;
}

GridField make_field(const Box& box, std::vector<int> m) {
  box.validate();
  if (static_cast<int>(m.size()) != box.n())
    throw std::invalid_argument("grid rank does not match box dimension");
  std::size_t total = 1;
  for (int ma : m) {
    if (ma < 4)
      throw std::invalid_argument(
          "each grid axis needs at least 4 nodes for the boundary stencils");
    total *= static_cast<std::size_t>(ma);
  }
  GridField f{box, std::move(m), std::vector<double>(total, 0.0)};
  return f;
}

GridField make_field(const Box& box, std::vector<int> m,
                     const std::function<double(const Vec&)>& fn) {
  GridField f = make_field(box, std::move(m));
  std::vector<int> idx;
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.unflat(i, idx);
    f.v[i] = fn(f.node_x(idx));
  }
  return f;
}

namespace {

// Offset of +/- steps along one axis from a flat index.
inline std::size_t shifted(std::size_t f, std::size_t stride, int steps) {
  return steps >= 0 ? f + stride * static_cast<std::size_t>(steps)
                    : f - stride * static_cast<std::size_t>(-steps);
}

// One-axis first derivative: central inside, 3-point one-sided at the ends.
// dir = +1 at the low end (stencil runs inward), -1 at the high end.
double first_diff(const GridField& u, std::size_t f, int axis, int i) {
  const std::size_t s = u.stride(axis);
  const double h = u.h(axis);
  if (i == 0)
    return (-3.0 * u.v[f] + 4.0 * u.v[shifted(f, s, 1)] -
            u.v[shifted(f, s, 2)]) /
           (2.0 * h);
  if (i == u.m[axis] - 1)
    return (3.0 * u.v[f] - 4.0 * u.v[shifted(f, s, -1)] +
            u.v[shifted(f, s, -2)]) /
           (2.0 * h);
  return (u.v[shifted(f, s, 1)] - u.v[shifted(f, s, -1)]) / (2.0 * h);
}

// One-axis second derivative: central 3-point inside, 4-point one-sided at
// the ends. Both are exact on quadratics.
double second_diff(const GridField& u, std::size_t f, int axis, int i) {
  const std::size_t s = u.stride(axis);
  const double h = u.h(axis);
  if (i == 0)
    return (2.0 * u.v[f] - 5.0 * u.v[shifted(f, s, 1)] +
            4.0 * u.v[shifted(f, s, 2)] - u.v[shifted(f, s, 3)]) /
           (h * h);
  if (i == u.m[axis] - 1)
    return (2.0 * u.v[f] - 5.0 * u.v[shifted(f, s, -1)] +
            4.0 * u.v[shifted(f, s, -2)] - u.v[shifted(f, s, -3)]) /
           (h * h);
  return (u.v[shifted(f, s, 1)] - 2.0 * u.v[f] + u.v[shifted(f, s, -1)]) /
         (h * h);
}

// Mixed derivative: the axis-a difference operator applied to the axis-b
// first difference. Difference operators along distinct axes commute, so the
// result is symmetric in (a, b).
double mixed_diff(const GridField& u, std::size_t f, int a, int ia, int b,
                  int ib) {
  const std::size_t sa = u.stride(a);
  const double ha = u.h(a);
  auto g = [&](int step) {
    return first_diff(u, shifted(f, sa, step), b, ib);
  };
  if (ia == 0) return (-3.0 * g(0) + 4.0 * g(1) - g(2)) / (2.0 * ha);
  if (ia == u.m[a] - 1) return (3.0 * g(0) - 4.0 * g(-1) + g(-2)) / (2.0 * ha);
  return (g(1) - g(-1)) / (2.0 * ha);
}

}  // namespace

Jet2 interior_jet(const GridField& u, const std::vector<int>& idx) {
  const int n = u.n();
  for (int a = 0; a < n; ++a)
    if (idx[a] <= 0 || idx[a] >= u.m[a] - 1)
      throw std::out_of_range("interior_jet called on a boundary node");
  const std::size_t f = u.flat(idx);
  Jet2 J;
  J.z = u.v[f];
  J.p.resize(n);
  J.W.resize(n, n);
  for (int a = 0; a < n; ++a) {
    const std::size_t sa = u.stride(a);
    const double ha = u.h(a);
    const double up = u.v[f + sa], dn = u.v[f - sa];
    J.p[a] = (up - dn) / (2.0 * ha);
    J.W(a, a) = (up - 2.0 * J.z + dn) / (ha * ha);
    for (int b = a + 1; b < n; ++b) {
      const std::size_t sb = u.stride(b);
      const double hb = u.h(b);
      const double w = (u.v[f + sa + sb] - u.v[f + sa - sb] -
                        u.v[f - sa + sb] + u.v[f - sa - sb]) /
                       (4.0 * ha * hb);
      J.W(a, b) = J.W(b, a) = w;
    }
  }
  return J;
}

Jet2 node_jet(const GridField& u, const std::vector<int>& idx) {
  const int n = u.n();
  const std::size_t f = u.flat(idx);
  Jet2 J;
  J.z = u.v[f];
  J.p.resize(n);
  J.W.resize(n, n);
  for (int a = 0; a < n; ++a) {
    J.p[a] = first_diff(u, f, a, idx[a]);
    J.W(a, a) = second_diff(u, f, a, idx[a]);
    for (int b = a + 1; b < n; ++b) {
      const double w = mixed_diff(u, f, a, idx[a], b, idx[b]);
      J.W(a, b) = J.W(b, a) = w;
    }
  }
  return J;
}

void for_each_node(
    const GridField& u,
    const std::function<void(const std::vector<int>&, std::size_t)>& fn) {
  std::vector<int> idx(u.n(), 0);
  for (std::size_t f = 0; f < u.size(); ++f) {
    fn(idx, f);
    for (int a = u.n() - 1; a >= 0; --a) {
      if (++idx[a] < u.m[a]) break;
      idx[a] = 0;
    }
  }
}

void for_each_interior(
    const GridField& u,
    const std::function<void(const std::vector<int>&, std::size_t)>& fn) {
  for_each_node(u, [&](const std::vector<int>& idx, std::size_t f) {
    if (u.is_interior(idx)) fn(idx, f);
  });
}

std::vector<std::ptrdiff_t> interior_map(const GridField& u) {
  std::vector<std::ptrdiff_t> map(u.size(), -1);
  std::ptrdiff_t next = 0;
  for_each_interior(u, [&](const std::vector<int>&, std::size_t f) {
    map[f] = next++;
  });
  return map;
}

std::size_t interior_count(const GridField& u) {
  std::size_t c = 1;
  for (int ma : u.m) c *= static_cast<std::size_t>(ma - 2);
  return c;
}

}  // namespace hess::grid
