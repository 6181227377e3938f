#pragma once

#include <vector>

#include "hess/types.hpp"

// Elementary symmetric functions of eigenvalue tuples, the Garding cone
// structure, the normalized operator f = S_k^{1/k}, and its matrix calculus.
namespace hess::symfun {

enum class ConeLabel { InteriorPositive, Boundary, Outside };

// margins[j-1] = S_j(lambda) for j = 1..k; label decided against tol.
struct ConeClass {
  ConeLabel label = ConeLabel::Outside;
  std::vector<double> margins;
  double tol = 0.0;

  // Smallest S_j over j <= k; the quantity line searches keep positive.
  double min_margin() const;
  // First j with S_j < -tol, or 0 when none.
  int violated_j() const;
};

struct OperatorJet {
  double value = 0.0;  // S_k^{1/k}, zero on the cone boundary
  Vec grad;            // df/dlambda_i; diverges on the boundary for k > 1
  ConeClass cone;
};

// Value and matrix gradient of F(W) = S_k(lambda(W))^{1/k}.
struct FGrad {
  double value = 0.0;
  Mat Fij;              // dF/dw_ij, independent-entry convention
  double sum_Fii = 0.0; // trace of Fij
  std::vector<double> Sj;  // S_1..S_k of the eigenvalues, polynomial route
};

// Scale-aware default tolerance for cone membership decisions.
double default_cone_tol(const Vec& lambda);

// S_k(lambda) by the one-pass coefficient recurrence of prod(1 + lambda_i t).
// k = 0 gives 1; k outside [0, n] throws std::domain_error.
double elem_sym(const Vec& lambda, int k);

// Gradient dS_k/dlambda_i = S_{k-1}(lambda with entry i removed).
Vec elem_sym_grad(const Vec& lambda, int k);

ConeClass cone_classify(const Vec& lambda, int k, double tol);
ConeClass cone_classify(const Vec& lambda, int k);  // default tol

// Jet of f = S_k^{1/k}. Requires the tuple not Outside; throws
// AdmissibilityError (carrying the violated j and margin) otherwise.
OperatorJet f_eval(const Vec& lambda, int k);
OperatorJet f_eval(const Vec& lambda, int k, double tol);

// Sum of all principal k x k minors of W. Computed by the
// Faddeev-LeVerrier chain and cross-checked against the elementary symmetric
// function of the eigenvalue tuple; disagreement raises NumericError.
double matrix_Sk(const SymMat& W, int k);

// F value and dF/dw_ij via the Newton transformation T_{k-1}(W), which is
// polynomial in W and therefore exact under eigenvalue degeneracy.
// Requires eigenvalues not Outside; requires S_k > 0 when k > 1.
FGrad matrix_F_grad(const SymMat& W, int k);

// Quadratic form of the second derivative of F at W in direction Eta,
// evaluated in the eigenframe of W:
//   sum_{ij} (d2f/dl_i dl_j) eta~_ii eta~_jj
//   + sum_{i != j} ((f_i - f_j)/(l_i - l_j)) eta~_ij^2,
// the divided difference switching to its analytic limit below a gap of
// 1e-8 * (1 + spectral radius). Nonpositive for admissible W (concavity).
double andrews_form(const SymMat& W, const SymMat& Eta, int k);

// Smallest R >= 0 with f(lambda_1..lambda_{n-1}, lambda_n + R) >= C for every
// sample, bisected to 1e-6. Monotonicity in R is asserted en route; an
// unreachable C raises NumericError once the bracket cap is passed.
double find_R(const std::vector<Vec>& samples, double C, int k);

namespace detail {

// S_1..S_k of W plus the Newton transformation chain, no cross-checks.
// Lean path shared by the solver's per-node loops.
struct NewtonChain {
  std::vector<double> S;  // S[j] = S_j(W) for j = 0..k (S[0] = 1)
  Mat T_km1;              // T_{k-1}(W) = dS_k/dW
};

NewtonChain newton_chain(const Mat& W, int k);

// S_j of the tuple with one (or two) entries removed; delete-list recomputation.
double elem_sym_deleted(const Vec& lambda, int k, int skip1, int skip2 = -1);

}  // namespace detail

}  // namespace hess::symfun
