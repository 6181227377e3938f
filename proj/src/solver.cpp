#include "hess/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>

namespace hess::solver {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using symfun::detail::newton_chain;

double blended(const SourceBlend& blend, std::size_t f, double bt) {
  if (blend.t >= 1.0) return bt;
  return (1.0 - blend.t) * blend.base[f] + blend.t * bt;
}

void check_blend(const SourceBlend& blend, const GridField& u) {
  if (!(blend.t >= 0.0 && blend.t <= 1.0))
    throw std::invalid_argument("blend parameter must lie in [0, 1]");
  if (blend.t < 1.0 && blend.base.size() != u.size())
    throw std::invalid_argument("source blend needs a base field when t < 1");
}

Mat augmented_hessian(const ProblemSpec& P, const grid::Jet2& J, const Vec& x) {
  Mat W = J.W - P.A.value(x, J.z, J.p);
  return 0.5 * (W + W.transpose());
}

struct Pass {
  std::vector<double> r;
  double sup_r = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  bool admissible = true;
  int bad_j = 0;
  double bad_margin = 0.0;
  long bad_node = -1;
};

// One sweep over the interior: cone margins from the derivative-free S_j
// chain, residual f(W) - source only where strictly admissible (> floor).
Pass residual_pass(const ProblemSpec& P, const GridField& u,
                   const SourceBlend& blend, double floor) {
  check_blend(blend, u);
  Pass out;
  out.r.reserve(grid::interior_count(u));
  const int k = P.k;
  grid::for_each_interior(u, [&](const std::vector<int>& idx, std::size_t f) {
    if (!out.admissible) return;
    grid::Jet2 J = grid::interior_jet(u, idx);
    const Vec x = u.node_x(idx);
    const Mat W = augmented_hessian(P, J, x);
    auto chain = newton_chain(W, k);
    double margin = chain.S[1];
    int worst = 1;
    for (int j = 2; j <= k; ++j)
      if (chain.S[j] < margin) {
        margin = chain.S[j];
        worst = j;
      }
    out.margin = std::min(out.margin, margin);
    if (!(margin > floor)) {
      out.admissible = false;
      out.bad_j = worst;
      out.bad_margin = margin;
      out.bad_node = static_cast<long>(f);
      return;
    }
    const double fval = std::pow(chain.S[k], 1.0 / k);
    const double bt = P.B.btilde_jet(k, x, J.z, J.p, 0).Bt;
    const double src = blended(blend, f, bt);
    const double r = fval - src;
    out.r.push_back(r);
    out.sup_r = std::max(out.sup_r, std::abs(r));
  });
  return out;
}

Vec lin_solve(const SpMat& A, const Vec& rhs, bool direct, double tol) {
  if (direct) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
      throw LinearSolveFailure("sparse LU factorization failed");
    Vec x = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
      throw LinearSolveFailure("sparse LU back-substitution failed");
    return x;
  }
  Eigen::BiCGSTAB<SpMat> it(A);
  it.setTolerance(tol);
  it.setMaxIterations(std::max<Eigen::Index>(2000, 4 * A.cols()));
  Vec x = it.solve(rhs);
  // Stagnation just above the target still gives a usable inexact Newton
  // step; only genuine breakdown is fatal.
  if (it.info() != Eigen::Success && it.error() > 1e-6)
    throw LinearSolveFailure("iterative linear solve failed (error=" +
                             std::to_string(it.error()) + ")");
  return x;
}

bool use_direct(const GridField& u) {
  int max_m = 0;
  for (int ma : u.m) max_m = std::max(max_m, ma);
  return u.n() == 2 && max_m <= 257;
}

}  // namespace

NodeState eval_state(const ProblemSpec& P, const GridField& u,
                     const std::vector<int>& idx, const SourceBlend& blend) {
  check_blend(blend, u);
  grid::Jet2 J = grid::interior_jet(u, idx);
  NodeState s;
  s.x = u.node_x(idx);
  s.z = J.z;
  s.p = J.p;
  s.W = augmented_hessian(P, J, s.x);
  try {
    s.F = symfun::matrix_F_grad(SymMat(s.W), P.k);
  } catch (const AdmissibilityError& e) {
    throw AdmissibilityError("node left the admissibility cone",
                             e.violated_j(), e.margin(),
                             static_cast<long>(u.flat(idx)));
  }
  s.a = P.A.jet(s.x, s.z, s.p, 1);
  s.b = P.B.btilde_jet(P.k, s.x, s.z, s.p, 1);
  s.source = blended(blend, u.flat(idx), s.b.Bt);
  s.residual = s.F.value - s.source;
  return s;
}

std::vector<double> residual_field(const ProblemSpec& P, const GridField& u,
                                   const SourceBlend& blend) {
  Pass pass = residual_pass(P, u, blend, 0.0);
  if (!pass.admissible)
    throw AdmissibilityError("grid field leaves the admissibility cone",
                             pass.bad_j, pass.bad_margin, pass.bad_node);
  return std::move(pass.r);
}

double admissibility_margin(const ProblemSpec& P, const GridField& u) {
  double m = std::numeric_limits<double>::infinity();
  grid::for_each_interior(u, [&](const std::vector<int>& idx, std::size_t) {
    grid::Jet2 J = grid::interior_jet(u, idx);
    auto chain = newton_chain(augmented_hessian(P, J, u.node_x(idx)), P.k);
    for (int j = 1; j <= P.k; ++j) m = std::min(m, chain.S[j]);
  });
  return m;
}

namespace {

// Stencil coefficients of the linearized operator at one interior node,
// reported as (neighbor flat index, weight) pairs; boundary neighbors
// included (callers decide whether those columns participate).
template <typename Emit>
void linearized_row(const ProblemSpec& P, const GridField& u,
                    const std::vector<int>& idx, std::size_t f,
                    const SourceBlend& blend, LinVariant variant,
                    Emit&& emit) {
  const int n = u.n();
  NodeState s = eval_state(P, u, idx, blend);

  Vec cg = Vec::Zero(n);
  double cz = 0.0;
  if (variant != LinVariant::SecondOrder) {
    for (int d = 0; d < n; ++d) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) acc += s.F.Fij(a, b) * s.a.dp(a, b, d);
      cg[d] = -(acc + blend.t * s.b.dp[d]);
    }
  }
  if (variant == LinVariant::FullNewton) {
    double acc = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) acc += s.F.Fij(a, b) * s.a.dz(a, b);
    cz = -(acc + blend.t * s.b.dz);
  }

  double self = cz;
  for (int a = 0; a < n; ++a) {
    const double ha = u.h(a);
    self -= 2.0 * s.F.Fij(a, a) / (ha * ha);
  }
  emit(f, self);

  for (int d = 0; d < n; ++d) {
    const double hd = u.h(d);
    const std::size_t sd = u.stride(d);
    for (int sgn : {+1, -1}) {
      const std::size_t nf = sgn > 0 ? f + sd : f - sd;
      emit(nf, s.F.Fij(d, d) / (hd * hd) + sgn * cg[d] / (2.0 * hd));
    }
  }

  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double scale = s.F.Fij(a, b) / (2.0 * u.h(a) * u.h(b));
      if (scale == 0.0) continue;
      const std::size_t sa = u.stride(a), sb = u.stride(b);
      for (int sga : {+1, -1})
        for (int sgb : {+1, -1}) {
          std::size_t nf = f;
          nf = sga > 0 ? nf + sa : nf - sa;
          nf = sgb > 0 ? nf + sb : nf - sb;
          emit(nf, sga * sgb * scale);
        }
    }
}

}  // namespace

Eigen::SparseMatrix<double> assemble_linearized(const ProblemSpec& P,
                                                const GridField& u,
                                                const SourceBlend& blend,
                                                LinVariant variant) {
  check_blend(blend, u);
  const int n = u.n();
  const auto imap = grid::interior_map(u);
  const auto N = static_cast<Eigen::Index>(grid::interior_count(u));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(N) * (1 + 2 * n + 2 * n * (n - 1)));

  grid::for_each_interior(u, [&](const std::vector<int>& idx, std::size_t f) {
    const auto row = static_cast<Eigen::Index>(imap[f]);
    linearized_row(P, u, idx, f, blend, variant,
                   [&](std::size_t nf, double coeff) {
                     if (imap[nf] < 0) return;  // Dirichlet column dropped
                     trip.emplace_back(row, static_cast<Eigen::Index>(imap[nf]),
                                       coeff);
                   });
  });

  SpMat J(N, N);
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

std::vector<double> apply_linearized(const ProblemSpec& P, const GridField& u,
                                     const SourceBlend& blend,
                                     LinVariant variant, const GridField& v) {
  check_blend(blend, u);
  if (v.m != u.m) throw std::invalid_argument("direction field grid mismatch");
  std::vector<double> out;
  out.reserve(grid::interior_count(u));
  grid::for_each_interior(u, [&](const std::vector<int>& idx, std::size_t f) {
    double acc = 0.0;
    linearized_row(P, u, idx, f, blend, variant,
                   [&](std::size_t nf, double coeff) {
                     acc += coeff * v.v[nf];
                   });
    out.push_back(acc);
  });
  return out;
}

namespace {

// One homotopy stage: damped Newton at fixed blend. Mutates u only through
// accepted steps, so a failing stage leaves the last admissible iterate.
bool run_stage(const ProblemSpec& P, GridField& u, const SourceBlend& blend,
               const SolveOptions& opts, SolveReport& rep, StageLog& log) {
  log = StageLog{blend.t, 0, 0.0, false};
  const bool direct = use_direct(u);
  for (int iter = 1; iter <= opts.max_newton; ++iter) {
    const double floor0 = opts.margin_floor * (1.0 + u.max_abs());
    Pass pass = residual_pass(P, u, blend, floor0);
    if (!pass.admissible) return false;  // current iterate degraded: give up
    log.final_residual = pass.sup_r;
    if (pass.sup_r <= opts.r_tol) {
      log.ok = true;
      return true;
    }
    log.iters = iter;

    SpMat J;
    try {
      J = assemble_linearized(P, u, blend, opts.variant);
    } catch (const AdmissibilityError&) {
      return false;  // margin too thin for the derivative's cone gate
    }
    Vec rhs = -Eigen::Map<const Vec>(pass.r.data(),
                                     static_cast<Eigen::Index>(pass.r.size()));
    Vec delta;
    try {
      delta = lin_solve(J, rhs, direct, opts.lin_tol);
    } catch (const LinearSolveFailure&) {
      return false;
    }
    if (!all_finite(delta)) return false;

    bool accepted = false;
    for (double tau = 1.0; tau >= opts.tau_min; tau *= 0.5) {
      GridField trial = u;
      std::size_t ord = 0;
      grid::for_each_interior(trial,
                              [&](const std::vector<int>&, std::size_t f) {
                                trial.v[f] += tau * delta[ord++];
                              });
      const double floor = opts.margin_floor * (1.0 + trial.max_abs());
      Pass tp = residual_pass(P, trial, blend, floor);
      if (tp.admissible && (tp.sup_r < pass.sup_r || tp.sup_r <= opts.r_tol)) {
        u = std::move(trial);
        rep.damping.push_back(
            {blend.t, iter, tau, pass.sup_r, tp.sup_r, tp.margin});
        ++rep.newton_iterations;
        log.final_residual = tp.sup_r;
        accepted = true;
        break;
      }
    }
    if (!accepted) return false;
  }
  return false;
}

}  // namespace

GridField initial_guess(const ProblemSpec& P, const std::vector<int>& m,
                        const SolveOptions& opts, double* mu_out) {
  // The boundary data is a total function; when its own nodal extension is
  // already strictly admissible (exact quadratics, manufactured solutions),
  // start there. The bump construction below keeps the boundary rows at phi,
  // so its added curvature has a kink at the boundary whose mixed second
  // differences near corners grow like mu/h and close the admissibility
  // window on fine grids; the data extension has no such limit.
  {
    GridField u = grid::make_field(P.box, m, P.phi);
    if (admissibility_margin(P, u) > opts.margin_floor * (1.0 + u.max_abs())) {
      if (mu_out) *mu_out = 0.0;
      return u;
    }
  }

  GridField harm = poisson_dirichlet(
      P.box, m, [](const Vec&) { return 0.0; }, P.phi, opts.lin_tol);

  const Vec c = P.box.center();
  const int n = P.n;
  double R2 = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Vec corner(n);
    for (int a = 0; a < n; ++a)
      corner[a] = (mask >> a) & 1u ? P.box.hi[a] : P.box.lo[a];
    R2 = std::max(R2, 0.5 * (corner - c).squaredNorm());
  }

  double mu = opts.mu0;
  for (int d = 0; d <= opts.max_mu_doublings; ++d, mu *= 2.0) {
    GridField u = harm;
    grid::for_each_interior(u, [&](const std::vector<int>& idx, std::size_t f) {
      const Vec x = u.node_x(idx);
      u.v[f] += mu * (0.5 * (x - c).squaredNorm() - R2);
    });
    const double margin = admissibility_margin(P, u);
    if (margin > opts.margin_floor * (1.0 + u.max_abs())) {
      if (mu_out) *mu_out = mu;
      return u;
    }
  }
  throw NoConvergence(
      "no strictly admissible start within the convexification budget");
}

SolveResult solve(const ProblemSpec& P, const std::vector<int>& m,
                  const SolveOptions& opts) {
  SolveResult R{grid::make_field(P.box, m), {}};
  if (opts.initial_field) {
    if (opts.initial_field->m != m)
      throw std::invalid_argument("initial field grid mismatch");
    R.u = *opts.initial_field;
    const double margin = admissibility_margin(P, R.u);
    if (!(margin > opts.margin_floor * (1.0 + R.u.max_abs()))) {
      R.report.message = "supplied initial field is not strictly admissible";
      return R;
    }
  } else {
    try {
      R.u = initial_guess(P, m, opts, &R.report.mu);
    } catch (const NoConvergence& e) {
      R.report.message = e.what();
      return R;
    }
  }

  // Stage-zero source: the operator value of the start field, so the
  // homotopy begins from an exactly satisfied problem.
  SourceBlend blend;
  blend.base.assign(R.u.size(), 0.0);
  grid::for_each_interior(
      R.u, [&](const std::vector<int>& idx, std::size_t f) {
        grid::Jet2 J = grid::interior_jet(R.u, idx);
        auto chain = newton_chain(augmented_hessian(P, J, R.u.node_x(idx)), P.k);
        blend.base[f] = std::pow(chain.S[P.k], 1.0 / P.k);
      });

  std::vector<double> targets;
  for (int j = 1; j <= opts.geometric_stages; ++j)
    targets.push_back(1.0 - std::pow(2.0, -j));
  targets.push_back(1.0);

  double t_prev = 0.0;
  for (double target : targets) {
    if (target <= t_prev) continue;
    int budget = opts.max_bisect;
    while (t_prev < target) {
      double t_try = target;
      bool ok = false;
      for (;;) {
        blend.t = t_try;
        GridField backup = R.u;
        StageLog log;
        ok = run_stage(P, R.u, blend, opts, R.report, log);
        R.report.stages.push_back(log);
        if (ok) break;
        R.u = std::move(backup);
        if (budget == 0) break;
        --budget;
        t_try = 0.5 * (t_prev + t_try);
      }
      if (!ok) {
        R.report.message = "homotopy stalled at t=" + std::to_string(t_try) +
                           " (target " + std::to_string(target) + ")";
        return R;
      }
      t_prev = t_try;
    }
  }

  R.report.converged = true;
  R.report.final_residual = R.report.stages.back().final_residual;
  R.report.final_margin = admissibility_margin(P, R.u);
  R.report.message = "converged";
  return R;
}

GridField poisson_dirichlet(const Box& box, const std::vector<int>& m,
                            const std::function<double(const Vec&)>& rhs,
                            const std::function<double(const Vec&)>& phi,
                            double lin_tol) {
  GridField u = grid::make_field(box, m, phi);
  const int n = u.n();
  const auto imap = grid::interior_map(u);
  const auto N = static_cast<Eigen::Index>(grid::interior_count(u));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(N) * (1 + 2 * n));
  Vec b(N);

  grid::for_each_interior(u, [&](const std::vector<int>& idx, std::size_t f) {
    const auto row = static_cast<Eigen::Index>(imap[f]);
    double self = 0.0;
    double r = rhs(u.node_x(idx));
    for (int a = 0; a < n; ++a) {
      const double ha = u.h(a);
      const double w = 1.0 / (ha * ha);
      self -= 2.0 * w;
      const std::size_t sa = u.stride(a);
      for (int sgn : {+1, -1}) {
        const int na = idx[a] + sgn;
        const std::size_t nf = sgn > 0 ? f + sa : f - sa;
        if (na < 1 || na > u.m[a] - 2)
          r -= w * u.v[nf];  // known Dirichlet value
        else
          trip.emplace_back(row, static_cast<Eigen::Index>(imap[nf]), w);
      }
    }
    trip.emplace_back(row, row, self);
    b[row] = r;
  });

  SpMat L(N, N);
  L.setFromTriplets(trip.begin(), trip.end());
  Vec x = lin_solve(L, b, use_direct(u), lin_tol);
  std::size_t ord = 0;
  grid::for_each_interior(u, [&](const std::vector<int>&, std::size_t f) {
    u.v[f] = x[ord++];
  });
  return u;
}

}  // namespace hess::solver
