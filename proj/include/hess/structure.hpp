#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hess/grid.hpp"
#include "hess/model.hpp"
#include "hess/types.hpp"

// Certification of the structural hypotheses a problem instance must satisfy
// before the solve and the estimate audits mean anything: regularity of A,
// convexity of the normalized source, monotonicity in u, admissibility of
// candidate fields, gradient-bound structure, and boundary convexity relative
// to A. Every check returns a CertificateReport with a signed worst margin and
// a concrete witness, so a failed certificate is reproducible, not just a flag.

namespace hess::structure {

enum class Verdict { Holds, Fails, Inconclusive };

const char* to_string(Verdict v);

// Where the worst margin was attained. Sampled checks fill (x, z, p) and,
// for pair-form checks, (xi, eta); grid checks fill the flat node index.
struct Witness {
  Vec x;
  double z = 0.0;
  Vec p;
  Vec xi;
  Vec eta;
  long node = -1;
};

struct CertificateReport {
  std::string condition;
  Verdict verdict = Verdict::Inconclusive;
  double margin = 0.0;     // worst (minimal) margin over all samples
  double threshold = 0.0;  // holds iff margin >= threshold - tol
  double tol = 1e-8;
  Witness witness;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

// Sample budget for coefficient-level checks. x is drawn uniformly from
// `domain` (falls back to [-1,1]^n when unset), z on an inclusive linspace
// over [z_lo, z_hi] so endpoint margins are hit exactly, p uniformly from the
// ball of radius p_radius, and orthonormal pairs Gaussian + Gram-Schmidt.
// Every sample is derived from (seed, index) alone, so partitioning the index
// range across workers cannot change any result.
struct SamplingSpec {
  int nx = 24;
  int nz = 9;
  int np = 48;
  int npairs = 8;
  double z_lo = -1.0;
  double z_hi = 1.0;
  double p_radius = 2.0;
  Box domain;  // empty => [-1,1]^n
  std::uint64_t seed = 1;
  int workers = 1;
  double tol = 1e-8;
};

// The quadratic form sum_{ijkl} A_{ij,p_k p_l} xi_i xi_j eta_k eta_l that the
// regularity check minimizes. Exposed so invariance of the margin under
// simultaneous rotation of (x, p, xi, eta) can be tested directly.
double regular_form(const model::CoefficientA& A, const Vec& x, double z,
                    const Vec& p, const Vec& xi, const Vec& eta);

// Regularity of A: the pair form must be >= 0 (>= c0 for the strict variant)
// over unit orthogonal pairs. Sampling is followed by projected gradient
// descent in (xi, eta) from the worst sampled pair, with re-orthonormalization
// after each step, so smooth interior minima are located below sample
// resolution. The reported margin is the raw form minimum; the verdict
// compares it against 0 or c0.
CertificateReport check_regular(const model::CoefficientA& A,
                                const SamplingSpec& s, bool strict = false,
                                double c0 = 1.0);

// Convexity of Btilde = B^{1/k} in p: margin is the smallest eigenvalue of
// D^2_pp Btilde over all samples.
CertificateReport check_Btilde_convex(const model::SourceB& B, int k,
                                      const SamplingSpec& s);

// Monotonicity in u: smallest eigenvalue of D_z A and smallest D_z Btilde.
// Analytic inputs that depend on u but carry no z-derivative closure are
// reported Inconclusive rather than silently treated as constant.
std::pair<CertificateReport, CertificateReport> check_monotone(
    const model::CoefficientA& A, const model::SourceB& B, int k,
    const SamplingSpec& s);

// Admissibility classification of a discrete field. Cone margins are the
// Newton-chain values S_1..S_k of the augmented Hessian; sub/supersolution
// modes additionally require the signed equation residual S_k - B -+ delta.
enum class FieldMode {
  AdmissibleCone,       // W_h in the closed cone
  StrictInterior,       // W_h strictly inside the cone
  Subsolution,          // cone + S_k - B >= 0
  StrictSubsolution,    // cone + S_k - B >= delta
  Supersolution,        // cone + B - S_k >= 0
  StrictSupersolution,  // cone + B - S_k >= delta
};

CertificateReport check_admissible_field(const grid::GridField& u,
                                         const model::ProblemSpec& P,
                                         FieldMode mode, double delta = 0.0,
                                         double tol = 1e-8);

// Gradient-bound structure: for a certified field u and gauge vphi on the
// same grid, margin = lambda_min(D^2 vphi - A_p(x, u, Du) . D vphi) - delta0
// over interior nodes.
CertificateReport check_A_bounded(const grid::GridField& vphi,
                                  const grid::GridField& u,
                                  const model::ProblemSpec& P, double delta0,
                                  double tol = 1e-8);

// A boundary point with its outer unit normal, a tangent basis (columns), and
// the second fundamental form expressed in that basis.
struct BoundaryFrame {
  Vec x;
  Vec normal;
  Mat tangents;   // n x (n-1), orthonormal columns orthogonal to normal
  Mat curvature;  // (n-1) x (n-1), tangential Jacobian of the normal field
};

std::vector<BoundaryFrame> disc_frames(const Vec& center, double radius,
                                       int count);
std::vector<BoundaryFrame> ellipse_frames(const Vec& center, double a,
                                          double b, int count);
std::vector<BoundaryFrame> box_face_frames(const Box& box, int per_face);

// (Gamma_{k-1})-convexity of the boundary relative to A: at each frame the
// matrix c_{ab} - xi_a . (A_p gamma) xi_b is formed over sampled (z, p) and
// the margin is S_{k-1}(kappa) - delta0 for its eigenvalues kappa. S_0 = 1,
// so k = 1 needs no curvature.
CertificateReport check_domain_convex(const std::vector<BoundaryFrame>& frames,
                                      const model::CoefficientA& A, int k,
                                      double delta0, const SamplingSpec& s);

// Rigid motions of a problem. Rotations must map the box to an axis-aligned
// box, i.e. Q must be a signed permutation; general orthogonal Q is supported
// at the coefficient level only (CoefficientA::transformed).
struct Motion {
  Vec shift;
  Mat rotation;  // empty => identity

  static Motion translate(Vec x0);
  static Motion rotate(Mat Q);
  static Motion rigid(Vec x0, Mat Q);
};

bool is_signed_permutation(const Mat& Q, double tol = 1e-12);

model::ProblemSpec transform_problem(const model::ProblemSpec& P,
                                     const Motion& motion);

}  // namespace hess::structure
