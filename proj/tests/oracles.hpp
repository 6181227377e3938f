#pragma once

// Independent reference implementations used only by tests. Everything here
// is deliberately brute force (subset enumeration, determinant sums, finite
// differences) so the library's recurrences are checked against a second,
// unrelated route.

#include <Eigen/Dense>
#include <Eigen/QR>

#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// --- deterministic RNG: one engine per (seed, stream, index) -----------------

inline std::mt19937_64 engine_for(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t index) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

inline Vec gaussian_vec(int n, std::mt19937_64& g) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = N(g);
  return v;
}

inline Mat random_sym(int n, std::mt19937_64& g, double scale = 1.0) {
  Mat m(n, n);
  std::normal_distribution<double> N(0.0, scale);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m(i, j) = m(j, i) = N(g);
  return m;
}

inline Mat random_orthogonal(int n, std::mt19937_64& g) {
  Mat a(n, n);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = N(g);
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;  // fix signs so Q is unique given a
  return q;
}

// --- combinatorial oracles ----------------------------------------------------

// Iterates all k-subsets of {0..n-1} and calls fn(indices).
inline void for_each_subset(int n, int k,
                            const std::function<void(const std::vector<int>&)>& fn) {
  if (k < 0 || k > n) return;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  if (k == 0) {
    fn(idx);
    return;
  }
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// S_k by direct subset enumeration.
inline double subset_Sk(const Vec& lambda, int k) {
  const int n = static_cast<int>(lambda.size());
  if (k == 0) return 1.0;
  if (k < 0 || k > n) return 0.0;
  double sum = 0.0;
  for_each_subset(n, k, [&](const std::vector<int>& idx) {
    double p = 1.0;
    for (int i : idx) p *= lambda[i];
    sum += p;
  });
  return sum;
}

// Sum of |products|: the natural conditioning scale for S_k comparisons.
inline double subset_Sk_abs(const Vec& lambda, int k) {
  const int n = static_cast<int>(lambda.size());
  if (k == 0) return 1.0;
  if (k < 0 || k > n) return 0.0;
  double sum = 0.0;
  for_each_subset(n, k, [&](const std::vector<int>& idx) {
    double p = 1.0;
    for (int i : idx) p *= std::abs(lambda[i]);
    sum += p;
  });
  return sum;
}

// dS_k/dlambda_i = S_{k-1} of the tuple with entry i removed.
inline Vec delete_one_grad(const Vec& lambda, int k) {
  const int n = static_cast<int>(lambda.size());
  Vec g(n);
  for (int i = 0; i < n; ++i) {
    Vec rest(n - 1);
    int w = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) rest[w++] = lambda[j];
    g[i] = subset_Sk(rest, k - 1);
  }
  return g;
}

// Sum of principal k x k minors via explicit determinants.
inline double minor_sum(const Mat& W, int k) {
  const int n = static_cast<int>(W.rows());
  if (k == 0) return 1.0;
  if (k < 0 || k > n) return 0.0;
  double sum = 0.0;
  for_each_subset(n, k, [&](const std::vector<int>& idx) {
    Mat sub(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) sub(a, b) = W(idx[a], idx[b]);
    sum += sub.determinant();
  });
  return sum;
}

// --- cone helpers --------------------------------------------------------------

inline bool in_gamma_k(const Vec& lambda, int k) {
  for (int j = 1; j <= k; ++j)
    if (subset_Sk(lambda, j) <= 0.0) return false;
  return true;
}

// Rejection sample a tuple strictly inside Gamma_k^+ with mixed-sign entries.
inline Vec random_cone_tuple(int n, int k, std::mt19937_64& g) {
  std::uniform_real_distribution<double> U(-0.4, 2.0);
  for (int tries = 0; tries < 10000; ++tries) {
    Vec l(n);
    for (int i = 0; i < n; ++i) l[i] = U(g);
    bool ok = true;
    for (int j = 1; j <= k; ++j)
      if (subset_Sk(l, j) < 1e-3) ok = false;
    if (ok) return l;
  }
  return Vec::Ones(n);  // unreachable in practice
}

// Admissible symmetric matrix with a prescribed eigenvalue tuple style.
inline Mat random_admissible_matrix(int n, int k, std::mt19937_64& g) {
  Vec l = random_cone_tuple(n, k, g);
  Mat q = random_orthogonal(n, g);
  return q * l.asDiagonal() * q.transpose();
}

// Unit vectors xi perp eta.
inline void random_orthopair(int n, std::mt19937_64& g, Vec& xi, Vec& eta) {
  xi = gaussian_vec(n, g);
  xi.normalize();
  do {
    eta = gaussian_vec(n, g);
    eta -= eta.dot(xi) * xi;
  } while (eta.norm() < 1e-8);
  eta.normalize();
}

// --- finite differences ---------------------------------------------------------

inline double central1(const std::function<double(double)>& f, double t) {
  return (f(t) - f(-t)) / (2.0 * t);
}

inline double central2(const std::function<double(double)>& f, double t) {
  return (f(t) - 2.0 * f(0.0) + f(-t)) / (t * t);
}

inline double rel_err(double a, double b, double floor_scale = 1.0) {
  return std::abs(a - b) / std::max({floor_scale, std::abs(a), std::abs(b)});
}

}  // namespace oracle
