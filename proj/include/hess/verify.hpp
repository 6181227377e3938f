#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "hess/grid.hpp"
#include "hess/model.hpp"
#include "hess/solver.hpp"
#include "hess/structure.hpp"
#include "hess/types.hpp"

// Numerical audits of the estimate machinery on computed or supplied fields:
// second-derivative statistics, the interior and boundary barrier
// inequalities, the double-normal decomposition of S_k at a face, tangential
// frame identities, and trace ellipticity. Audits report what the grid shows;
// they never tune a field to make an inequality pass.

namespace hess::verify {

// Constants entering the barrier inequalities. The interior barrier uses
// (K, eps1, C); the boundary barrier adds (mu, N, delta, M); the auxiliary
// probe adds (a, b, theta). a == 0 lets the probe pick a from the observed
// gradient range so that eta'' - (eta')^2 >= 0 stays true.
struct BarrierParams {
  double K = 1.0;
  double eps1 = 0.0;
  double C = 0.0;
  double mu = 1.0;
  double N = 1.0;
  double delta = 0.25;
  double M = 1.0;
  double a = 0.0;
  double b = 1.0;
  double theta = 1.0 / 3.0;

  void validate() const;
};

// One face of the box: axis index plus side (0 = lo, 1 = hi).
struct Face {
  int axis = 0;
  int side = 0;
};

double face_distance(const Box& box, Face face, const Vec& x);

// Strict interior gap below u: u minus a quadratic well that vanishes only at
// the box corners farthest from the center, so u_sub < u at every interior
// node and D^2 u_sub = D^2 u + 2c I stays admissible.
grid::GridField gap_subfield(const grid::GridField& u, double c);

struct NodeExtreme {
  long node = -1;
  double value = 0.0;
};

// Second-derivative statistics of a field. sup norms are spectral norms of
// the raw Hessian jet; the boundary sup uses the one-sided node stencils. At
// single-face boundary nodes with S_{k-1} of the tangential augmented block
// >= 0.1, the double-normal entry is cross-checked against the value the
// equation itself implies, and the worst gap is reported.
struct EstimateAudit {
  double sup_interior = 0.0;
  double sup_boundary = 0.0;
  double c_emp = 0.0;  // sup_interior / (1 + sup_boundary)
  NodeExtreme worst_interior;
  NodeExtreme worst_boundary;
  std::size_t dnn_checked = 0;
  double dnn_max_err = 0.0;
};

EstimateAudit d2_stats(const grid::GridField& u, const model::ProblemSpec& P);

// One row of the interior barrier table: the smallest constant C that makes
// L phi >= eps1 * sum_i F^{ii} - C hold at every interior node, for
// phi = exp(K (u_sub - u)).
struct BarrierEntry {
  double K = 0.0;
  double eps1 = 0.0;
  double C = 0.0;
  long witness = -1;  // node attaining the max of eps1 sumF - L phi
  bool feasible = false;
};

struct InteriorBarrierAudit {
  std::vector<BarrierEntry> table;  // K outer, eps1 inner
  bool informative = false;         // some entry has eps1 > 0 and C <= c_cap
  double c_cap = 0.0;
  double sum_F_max = 0.0;
  double sum_F_min = 0.0;
  // 1 / (2 n sup |A_p|); +inf when A is gradient-free.
  double rho_bound = std::numeric_limits<double>::infinity();
};

std::vector<double> default_K_sweep();  // 1, 2, 4, ..., 256

InteriorBarrierAudit interior_barrier_audit(
    const grid::GridField& u, const grid::GridField& u_sub,
    const model::ProblemSpec& P, const std::vector<double>& Ks,
    const std::vector<double>& eps1s, double c_cap = 1e3,
    solver::LinVariant variant = solver::LinVariant::Transport);

// Boundary barrier psi = 1 - exp(K [(u_sub - u) - mu d + N d^2]) on the slab
// d <= delta next to a face. margin_pde >= 0 means
// L psi <= -(eps1/2) sum F - M holds at every slab interior node;
// margin_sign >= 0 means psi >= 0 on the slab rim (face, lateral boundary,
// and the last node layer before d exceeds delta).
struct BoundaryBarrierReport {
  double margin_pde = 0.0;
  double margin_sign = 0.0;
  long witness_pde = -1;
  long witness_sign = -1;
  std::size_t slab_nodes = 0;
  std::size_t rim_nodes = 0;
  bool ok = false;
};

BoundaryBarrierReport boundary_barrier_audit(
    const grid::GridField& u, const grid::GridField& u_sub,
    const model::ProblemSpec& P, const BarrierParams& prm, Face face,
    solver::LinVariant variant = solver::LinVariant::Transport,
    double tol = 1e-8);

struct BoundarySweepResult {
  bool found = false;
  BarrierParams params;
  BoundaryBarrierReport report;  // winning attempt, or the least bad one
  int tried = 0;
};

// Ladder search over (K, N, mu, delta) at fixed (M, eps1); stops at the first
// parameter set with both margins nonnegative.
BoundarySweepResult boundary_barrier_sweep(
    const grid::GridField& u, const grid::GridField& u_sub,
    const model::ProblemSpec& P, Face face, double M = 1.0,
    double eps1 = 0.01,
    solver::LinVariant variant = solver::LinVariant::Transport);

// At each node lying on exactly the chosen face, S_k of the augmented Hessian
// splits as w_nn * S_{k-1}[(W)'] + R with R independent of w_nn; the audit
// recombines the split and compares it against B. budget <= 0 selects
// 1e-6 * (1 + max |B|) over the face.
structure::CertificateReport boundary_decomposition_check(
    const grid::GridField& u, const model::ProblemSpec& P, Face face,
    double budget = -1.0);

// For diagonal W the gradient F of the normalized operator is diagonal too,
// so the mixed normal-tangential sums F^{bj} w_{nj} vanish identically; for
// non-diagonal W the residual is reported without a verdict.
structure::CertificateReport tangential_frame_check(const SymMat& W, int k);

// min over interior nodes of tr(D^2 u - A); membership in the cone forces
// this to be nonnegative.
structure::CertificateReport trace_ellipticity_check(
    const grid::GridField& u, const model::ProblemSpec& P, double tol = 1e-8);

// Diagnostic field v = log lambda_max(W) + a (1 + t)^2 / 2 + b vphi with
// t = |Du|^2 / 2, evaluated at every node. A probe, not an assertion: it
// reports where the composite quantity peaks.
struct AuxProbe {
  grid::GridField v;
  double max_value = 0.0;
  long argmax = -1;
  double a = 0.0;
  double b = 0.0;
  double theta = 0.0;
  double t_max = 0.0;
  bool eta_ok = false;  // a (1 + t_max)^2 <= 1, i.e. eta'' - (eta')^2 >= 0
};

AuxProbe aux_function_probe(const grid::GridField& u,
                            const model::ProblemSpec& P,
                            const grid::GridField& vphi,
                            const BarrierParams& prm);

}  // namespace hess::verify
