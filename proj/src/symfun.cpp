#include "hess/symfun.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hess::symfun {

namespace {

void require_tuple(const Vec& lambda) {
  if (lambda.size() < 1) throw std::invalid_argument("empty eigenvalue tuple");
  if (!lambda.allFinite())
    throw std::invalid_argument("non-finite eigenvalue tuple");
}

void require_k(int k, int n) {
  if (k < 0 || k > n)
    throw std::domain_error("k = " + std::to_string(k) +
                            " outside [0, n] for n = " + std::to_string(n));
}

// One-pass coefficient recurrence of prod_i (1 + lambda_i t): after feeding
// all entries, e[j] = S_j(lambda) for every j <= kmax simultaneously.
std::vector<double> elem_sym_all(const Vec& lambda, int kmax) {
  std::vector<double> e(static_cast<size_t>(kmax) + 1, 0.0);
  e[0] = 1.0;
  const int n = static_cast<int>(lambda.size());
  for (int i = 0; i < n; ++i) {
    const int top = std::min(kmax, i + 1);
    for (int j = top; j >= 1; --j) e[j] += lambda[i] * e[j - 1];
  }
  return e;
}

}  // namespace

double ConeClass::min_margin() const {
  return *std::min_element(margins.begin(), margins.end());
}

int ConeClass::violated_j() const {
  for (size_t j = 0; j < margins.size(); ++j)
    if (margins[j] < -tol) return static_cast<int>(j) + 1;
  return 0;
}

double default_cone_tol(const Vec& lambda) {
  return 1e-10 * (1.0 + lambda.cwiseAbs().sum());
}

double elem_sym(const Vec& lambda, int k) {
  require_tuple(lambda);
  require_k(k, static_cast<int>(lambda.size()));
  if (k == 0) return 1.0;
  return elem_sym_all(lambda, k)[k];
}

double detail::elem_sym_deleted(const Vec& lambda, int k, int skip1, int skip2) {
  if (k < 0) return 0.0;
  if (k == 0) return 1.0;
  const int n = static_cast<int>(lambda.size());
  int kept = 0;
  std::vector<double> e(static_cast<size_t>(k) + 1, 0.0);
  e[0] = 1.0;
  for (int i = 0; i < n; ++i) {
    if (i == skip1 || i == skip2) continue;
    ++kept;
    const int top = std::min(k, kept);
    for (int j = top; j >= 1; --j) e[j] += lambda[i] * e[j - 1];
  }
  return (k <= kept) ? e[k] : 0.0;
}

Vec elem_sym_grad(const Vec& lambda, int k) {
  require_tuple(lambda);
  const int n = static_cast<int>(lambda.size());
  require_k(k, n);
  Vec g(n);
  if (k == 0) {
    g.setZero();
    return g;
  }
  for (int i = 0; i < n; ++i) g[i] = detail::elem_sym_deleted(lambda, k - 1, i);
  return g;
}

ConeClass cone_classify(const Vec& lambda, int k, double tol) {
  require_tuple(lambda);
  const int n = static_cast<int>(lambda.size());
  if (k < 1 || k > n)
    throw std::domain_error("cone index k must lie in [1, n]");
  auto e = elem_sym_all(lambda, k);
  ConeClass out;
  out.tol = tol;
  out.margins.assign(e.begin() + 1, e.end());
  out.label = ConeLabel::InteriorPositive;
  for (double m : out.margins) {
    if (m < -tol) {
      out.label = ConeLabel::Outside;
      return out;
    }
    if (m <= tol) out.label = ConeLabel::Boundary;
  }
  return out;
}

ConeClass cone_classify(const Vec& lambda, int k) {
  return cone_classify(lambda, k, default_cone_tol(lambda));
}

OperatorJet f_eval(const Vec& lambda, int k, double tol) {
  OperatorJet jet;
  jet.cone = cone_classify(lambda, k, tol);
  if (jet.cone.label == ConeLabel::Outside) {
    const int j = jet.cone.violated_j();
    throw AdmissibilityError("tuple outside Gamma_k", j, jet.cone.margins[j - 1]);
  }
  const int n = static_cast<int>(lambda.size());
  const double sk = jet.cone.margins[k - 1];
  jet.value = (sk > 0.0) ? std::pow(sk, 1.0 / k) : 0.0;
  const Vec gk = elem_sym_grad(lambda, k);
  jet.grad.resize(n);
  if (sk > 0.0 || k == 1) {
    const double factor = std::pow(std::max(sk, 0.0), 1.0 / k - 1.0) / k;
    jet.grad = factor * gk;
  } else {
    // On the boundary the normalized gradient diverges for k > 1.
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      jet.grad[i] = (gk[i] > 0.0) ? inf : (gk[i] < 0.0 ? -inf : 0.0);
  }
  return jet;
}

OperatorJet f_eval(const Vec& lambda, int k) {
  return f_eval(lambda, k, default_cone_tol(lambda));
}

detail::NewtonChain detail::newton_chain(const Mat& W, int k) {
  const int n = static_cast<int>(W.rows());
  NewtonChain out;
  out.S.assign(static_cast<size_t>(k) + 1, 0.0);
  out.S[0] = 1.0;
  Mat T = Mat::Identity(n, n);  // T_0
  if (k >= 1) out.S[1] = W.trace();
  for (int m = 1; m < k; ++m) {
    T = out.S[m] * Mat::Identity(n, n) - W * T;  // T_m
    out.S[m + 1] = (W * T).trace() / (m + 1);
  }
  out.T_km1 = 0.5 * (T + T.transpose());
  return out;
}

double matrix_Sk(const SymMat& W, int k) {
  const int n = W.n();
  require_k(k, n);
  if (k == 0) return 1.0;
  const double poly = detail::newton_chain(W.mat(), k).S[k];

  Eigen::SelfAdjointEigenSolver<Mat> es(W.mat(), Eigen::EigenvaluesOnly);
  const double eig = elem_sym(es.eigenvalues(), k);

  // Conditioning-aware disagreement gate between the two routes.
  const double amax = 1.0 + W.mat().cwiseAbs().maxCoeff();
  double scale = std::max({1.0, std::abs(poly), std::abs(eig)});
  scale = std::max(scale, 1e-3 * std::pow(static_cast<double>(n) * amax, k));
  if (std::abs(poly - eig) > 1e-9 * scale)
    throw NumericError("matrix_Sk dual-route disagreement: chain=" +
                       std::to_string(poly) + " eigen=" + std::to_string(eig));
  return poly;
}

FGrad matrix_F_grad(const SymMat& W, int k) {
  const int n = W.n();
  if (k < 1 || k > n)
    throw std::domain_error("operator index k must lie in [1, n]");
  auto chain = detail::newton_chain(W.mat(), k);

  const double tol = 1e-10 * (1.0 + n * W.mat().cwiseAbs().maxCoeff());
  for (int j = 1; j <= k; ++j)
    if (chain.S[j] < -tol)
      throw AdmissibilityError("matrix outside Gamma_k", j, chain.S[j]);
  const double sk = chain.S[k];
  if (k > 1 && sk <= 0.0)
    throw AdmissibilityError("F gradient undefined on the cone boundary", k, sk);

  FGrad out;
  out.value = (sk > 0.0) ? std::pow(sk, 1.0 / k) : 0.0;
  const double factor =
      (k == 1) ? 1.0 : std::pow(sk, 1.0 / k - 1.0) / k;
  out.Fij = factor * chain.T_km1;
  out.sum_Fii = out.Fij.trace();
  out.Sj.assign(chain.S.begin() + 1, chain.S.end());
  return out;
}

double andrews_form(const SymMat& W, const SymMat& Eta, int k) {
  const int n = W.n();
  if (Eta.n() != n) throw std::invalid_argument("direction dimension mismatch");
  if (k < 1 || k > n)
    throw std::domain_error("operator index k must lie in [1, n]");

  Eigen::SelfAdjointEigenSolver<Mat> es(W.mat());
  const Vec lambda = es.eigenvalues();
  auto cone = cone_classify(lambda, k);
  if (cone.label != ConeLabel::InteriorPositive) {
    const int j = std::max(cone.violated_j(), 1);
    throw AdmissibilityError("andrews_form needs the open cone", j,
                             cone.margins[j - 1]);
  }
  if (k == 1) return 0.0;  // trace is linear

  const Mat etil = es.eigenvectors().transpose() * Eta.mat() * es.eigenvectors();
  const double g = cone.margins[k - 1];  // S_k > 0
  const Vec gi = elem_sym_grad(lambda, k);
  const double inv_k = 1.0 / k;
  const double c1 = inv_k * (inv_k - 1.0) * std::pow(g, inv_k - 2.0);
  const double c2 = inv_k * std::pow(g, inv_k - 1.0);

  Mat gij(n, n);  // S_{k-2} with two entries removed
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      gij(i, j) = gij(j, i) = detail::elem_sym_deleted(lambda, k - 2, i, j);

  const double gap = 1e-8 * (1.0 + lambda.cwiseAbs().maxCoeff());
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // d2f/dl_i dl_j; the pure S_k part has no repeated-index second derivative.
      double hij = c1 * gi[i] * gi[j];
      if (i != j) hij += c2 * gij(i, j);
      sum += hij * etil(i, i) * etil(j, j);
      if (i != j) {
        const double diff = lambda[i] - lambda[j];
        const double q = (std::abs(diff) > gap)
                             ? c2 * (gi[i] - gi[j]) / diff
                             : -c2 * gij(i, j);  // analytic limit
        sum += q * etil(i, j) * etil(i, j);
      }
    }
  }
  return sum;
}

double find_R(const std::vector<Vec>& samples, double C, int k) {
  if (samples.empty()) throw std::invalid_argument("find_R: no samples");
  if (!(C > 0.0)) throw std::invalid_argument("find_R: C must be positive");
  const int n = static_cast<int>(samples.front().size());
  for (const Vec& s : samples) {
    if (static_cast<int>(s.size()) != n)
      throw std::invalid_argument("find_R: mixed tuple lengths");
    auto c = cone_classify(s, k);
    if (c.label == ConeLabel::Outside) {
      const int j = c.violated_j();
      throw AdmissibilityError("find_R sample outside closed Gamma_k", j,
                               c.margins[j - 1]);
    }
  }

  auto min_f = [&](double R) {
    double m = std::numeric_limits<double>::infinity();
    for (const Vec& s : samples) {
      Vec t = s;
      t[n - 1] += R;
      m = std::min(m, f_eval(t, k).value);
    }
    return m;
  };

  if (min_f(0.0) >= C) return 0.0;

  double lo = 0.0, hi = 1.0;
  double prev = min_f(0.0);
  constexpr double cap = 1.099511627776e12;  // 2^40
  while (min_f(hi) < C) {
    const double cur = min_f(hi);
    if (cur < prev - 1e-12 * (1.0 + std::abs(prev)))
      throw NumericError("find_R: f not monotone in R");
    prev = cur;
    lo = hi;
    hi *= 2.0;
    if (hi > cap)
      throw NumericError("find_R: bracket cap exceeded, C unreachable");
  }
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (min_f(mid) >= C ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace hess::symfun
