#pragma once

#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <vector>

#include "hess/grid.hpp"
#include "hess/model.hpp"
#include "hess/symfun.hpp"

// Damped Newton solve of S_k[D^2 u - A(x, u, Du)] = B(x, u, Du) on a box
// grid with Dirichlet data, written in normalized form f(W) = B^(1/k).
// Admissibility (W strictly inside the cone) is enforced along the whole
// iteration; the source is connected to an automatically satisfiable one by
// a homotopy so the start is consistent.
namespace hess::solver {

using grid::GridField;
using model::ProblemSpec;

// Terms kept in the linearized operator applied to a perturbation v:
//   SecondOrder: sum_ab F^ab D_ab v
//   Transport:   + first-order terms from DA/Dp and DB/Dp
//   FullNewton:  + zero-order terms from DA/Dz and DB/Dz
enum class LinVariant { SecondOrder, Transport, FullNewton };

// Right-hand side of the stage problem: (1 - t) base + t Btilde(x, u, Du).
// base holds per-node values in flat order (boundary entries unused); it is
// required whenever t < 1.
struct SourceBlend {
  double t = 1.0;
  std::vector<double> base;
};

// Everything the linearization needs at one interior node.
struct NodeState {
  Vec x;
  double z = 0.0;
  Vec p;
  Mat W;               // D^2 u - A, symmetrized
  symfun::FGrad F;     // f(W) and dF/dW
  model::AJet a;       // order-1 jet of A
  model::BtJet b;      // order-1 normalized jet of B
  double source = 0.0;
  double residual = 0.0;
};

NodeState eval_state(const ProblemSpec& P, const GridField& u,
                     const std::vector<int>& idx,
                     const SourceBlend& blend = {});

// Residual f(W) - source at every interior node, in flat (interior ordinal)
// order. Throws AdmissibilityError if some node leaves the cone and
// PositivityError if the source is nonpositive.
std::vector<double> residual_field(const ProblemSpec& P, const GridField& u,
                                   const SourceBlend& blend = {});

// min over interior nodes of min_{1<=j<=k} S_j(W). Positive iff the field is
// strictly admissible; never throws for finite fields.
double admissibility_margin(const ProblemSpec& P, const GridField& u);

// Jacobian of the interior residual with respect to interior node values
// (boundary values pinned). Rows/columns follow the interior ordinal order.
Eigen::SparseMatrix<double> assemble_linearized(const ProblemSpec& P,
                                                const GridField& u,
                                                const SourceBlend& blend,
                                                LinVariant variant);

// Action of the same operator on a full grid field (boundary values of v
// participate instead of being pinned to zero). One value per interior node.
std::vector<double> apply_linearized(const ProblemSpec& P, const GridField& u,
                                     const SourceBlend& blend,
                                     LinVariant variant, const GridField& v);

struct DampingEntry {
  double t = 1.0;          // homotopy parameter of the stage
  int iter = 0;            // Newton iteration within the stage
  double tau = 1.0;        // accepted step fraction
  double res_before = 0.0;
  double res_after = 0.0;
  double margin_after = 0.0;
};

struct StageLog {
  double t = 1.0;
  int iters = 0;
  double final_residual = 0.0;
  bool ok = false;
};

struct SolveOptions {
  LinVariant variant = LinVariant::FullNewton;
  int max_newton = 50;        // per homotopy stage
  double r_tol = 1e-10;       // residual sup-norm target
  double tau_min = 1.0 / (1 << 24);
  int geometric_stages = 8;   // targets 1 - 2^-j, then 1
  int max_bisect = 4;         // per scheduled target
  double margin_floor = 1e-12;  // scaled by 1 + |u|_inf
  double mu0 = 1.0;           // initial convexification strength
  int max_mu_doublings = 60;
  double lin_tol = 1e-13;     // iterative linear solver
  // Start from this field instead of the harmonic-plus-bump construction.
  // Must live on the requested grid, match the boundary data, and be
  // strictly admissible.
  std::optional<GridField> initial_field;
};

struct SolveReport {
  bool converged = false;
  std::string message;
  double mu = 0.0;            // convexification used by the initial guess
  int newton_iterations = 0;  // accepted steps over all stages
  double final_residual = 0.0;
  double final_margin = 0.0;
  std::vector<StageLog> stages;
  std::vector<DampingEntry> damping;
};

struct SolveResult {
  GridField u;
  SolveReport report;
};

// Strictly admissible start with boundary rows at phi. First tries the nodal
// extension of phi itself (mu_out = 0); otherwise the harmonic extension of
// phi lowered at interior nodes by mu (|x - c|^2 / 2 - R^2), with mu doubled
// until the field is strictly admissible. Throws NoConvergence if no mu
// within the budget works.
GridField initial_guess(const ProblemSpec& P, const std::vector<int>& m,
                        const SolveOptions& opts = {}, double* mu_out = nullptr);

// Full damped-Newton homotopy solve. Convergence failures are reported via
// SolveReport::converged; hypothesis breaches (cone exit that damping cannot
// avoid, nonpositive source, linear solver breakdown) surface as exceptions
// only when no admissible continuation exists.
SolveResult solve(const ProblemSpec& P, const std::vector<int>& m,
                  const SolveOptions& opts = {});

// Second-order-accurate Dirichlet Poisson solve (sum of axis second
// differences), used for the harmonic start and as an independent reference
// for the k = 1 operator.
GridField poisson_dirichlet(const Box& box, const std::vector<int>& m,
                            const std::function<double(const Vec&)>& rhs,
                            const std::function<double(const Vec&)>& phi,
                            double lin_tol = 1e-13);

}  // namespace hess::solver
