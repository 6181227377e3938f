#include "hess/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hess/symfun.hpp"

namespace hess::verify {
namespace {

double spectral_norm(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double lambda_max(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

void require_same_grid(const grid::GridField& a, const grid::GridField& b,
                       const char* who) {
  bool ok = a.m == b.m && a.box.n() == b.box.n();
  if (ok)
    ok = (a.box.lo - b.box.lo).cwiseAbs().maxCoeff() <= 1e-12 &&
         (a.box.hi - b.box.hi).cwiseAbs().maxCoeff() <= 1e-12;
  if (!ok)
    throw std::invalid_argument(std::string(who) +
                                ": fields live on different grids");
}

void require_face(const model::ProblemSpec& P, Face face, const char* who) {
  if (face.axis < 0 || face.axis >= P.n || face.side < 0 || face.side > 1)
    throw std::invalid_argument(std::string(who) + ": face out of range");
}

// Number of boundary axes of a node, and whether the single one is `face`.
int boundary_axes(const grid::GridField& u, const std::vector<int>& idx,
                  int* only_axis) {
  int count = 0;
  for (int a = 0; a < u.n(); ++a)
    if (idx[a] == 0 || idx[a] == u.m[a] - 1) {
      ++count;
      if (only_axis) *only_axis = a;
    }
  return count;
}

bool on_face(const grid::GridField& u, const std::vector<int>& idx,
             Face face) {
  return face.side == 0 ? idx[face.axis] == 0
                        : idx[face.axis] == u.m[face.axis] - 1;
}

Mat drop_axis(const Mat& W, int axis) {
  const int n = static_cast<int>(W.rows());
  Mat T(n - 1, n - 1);
  int r = 0;
  for (int i = 0; i < n; ++i) {
    if (i == axis) continue;
    int c = 0;
    for (int j = 0; j < n; ++j) {
      if (j == axis) continue;
      T(r, c++) = W(i, j);
    }
    ++r;
  }
  return T;
}

// S_k[W] is affine in the diagonal entry W(axis,axis); its slope is
// S_{k-1} of the block with that axis deleted, and the remainder is S_k of
// W with the entry zeroed. Shared by the decomposition check and d2_stats.
struct NormalSplit {
  double slope = 0.0;  // S_{k-1}[(W)']
  double rest = 0.0;   // S_k[W with w_nn = 0]
};

NormalSplit normal_split(const Mat& W, int k, int axis) {
  NormalSplit out;
  if (k == 1) {
    out.slope = 1.0;
    out.rest = W.trace() - W(axis, axis);
    return out;
  }
  out.slope = symfun::detail::newton_chain(drop_axis(W, axis), k - 1).S[k - 1];
  Mat Z = W;
  Z(axis, axis) = 0.0;
  out.rest = symfun::detail::newton_chain(Z, k).S[k];
  return out;
}

// Trace of F and max |A_p| entry per interior node, shared by the audits.
struct FieldCoeffs {
  std::vector<double> trF;        // interior ordinal order
  std::vector<std::size_t> flat;  // matching flat indices
  double trF_max = 0.0;
  double trF_min = std::numeric_limits<double>::infinity();
  double dp_max = 0.0;
};

FieldCoeffs field_coeffs(const model::ProblemSpec& P,
                         const grid::GridField& u) {
  FieldCoeffs out;
  out.trF.reserve(grid::interior_count(u));
  grid::for_each_interior(
      u, [&](const std::vector<int>& idx, std::size_t flat) {
        solver::NodeState s = solver::eval_state(P, u, idx);
        double tr = s.F.sum_Fii;
        out.trF.push_back(tr);
        out.flat.push_back(flat);
        out.trF_max = std::max(out.trF_max, tr);
        out.trF_min = std::min(out.trF_min, tr);
        out.dp_max = std::max(out.dp_max, s.a.dp.max_abs());
      });
  return out;
}

}  // namespace

void BarrierParams::validate() const {
  auto bad = [](const char* what) {
    throw std::invalid_argument(std::string("BarrierParams: ") + what);
  };
  if (!(K > 0.0)) bad("K must be positive");
  if (!(eps1 >= 0.0)) bad("eps1 must be nonnegative");
  if (!(C >= 0.0)) bad("C must be nonnegative");
  if (!(mu > 0.0)) bad("mu must be positive");
  if (!(N > 0.0)) bad("N must be positive");
  if (!(delta > 0.0)) bad("delta must be positive");
  if (!(M > 0.0)) bad("M must be positive");
  if (!(a >= 0.0)) bad("a must be nonnegative (0 = auto)");
  if (!(b > 0.0)) bad("b must be positive");
  if (!(theta > 0.0 && theta < 1.0)) bad("theta must lie in (0, 1)");
}

double face_distance(const Box& box, Face face, const Vec& x) {
  return face.side == 0 ? x[face.axis] - box.lo[face.axis]
                        : box.hi[face.axis] - x[face.axis];
}

grid::GridField gap_subfield(const grid::GridField& u, double c) {
  const Vec center = u.box.center();
  double R2 = 0.0;
  for (int a = 0; a < u.n(); ++a) {
    double e = 0.5 * u.box.extent(a);
    R2 += e * e;
  }
  grid::GridField out = u;
  grid::for_each_node(u, [&](const std::vector<int>& idx, std::size_t f) {
    Vec x = u.node_x(idx);
    out.v[f] = u.v[f] - c * (R2 - (x - center).squaredNorm());
  });
  return out;
}

EstimateAudit d2_stats(const grid::GridField& u,
                       const model::ProblemSpec& P) {
  if (u.n() != P.n)
    throw std::invalid_argument("d2_stats: dimension mismatch");
  EstimateAudit out;
  grid::for_each_node(u, [&](const std::vector<int>& idx, std::size_t flat) {
    grid::Jet2 J = grid::node_jet(u, idx);
    double nrm = spectral_norm(J.W);
    if (u.is_interior(idx)) {
      if (nrm > out.sup_interior) {
        out.sup_interior = nrm;
        out.worst_interior = {static_cast<long>(flat), nrm};
      }
      return;
    }
    if (nrm > out.sup_boundary) {
      out.sup_boundary = nrm;
      out.worst_boundary = {static_cast<long>(flat), nrm};
    }
    int axis = -1;
    if (boundary_axes(u, idx, &axis) != 1) return;
    // Single-face node: invert the equation for the double-normal entry and
    // compare with the stencil value when the tangential block allows it.
    Vec x = u.node_x(idx);
    Mat W = J.W - P.A.value(x, J.z, J.p);
    W = 0.5 * (W + W.transpose());
    NormalSplit sp = normal_split(W, P.k, axis);
    if (sp.slope < 0.1) return;
    double wnn_pde = (P.B.value(x, J.z, J.p) - sp.rest) / sp.slope;
    double err = std::abs(W(axis, axis) - wnn_pde) /
                 (1.0 + std::abs(W(axis, axis)));
    ++out.dnn_checked;
    out.dnn_max_err = std::max(out.dnn_max_err, err);
  });
  out.c_emp = out.sup_interior / (1.0 + out.sup_boundary);
  return out;
}

std::vector<double> default_K_sweep() {
  std::vector<double> ks;
  for (double k = 1.0; k <= 256.0; k *= 2.0) ks.push_back(k);
  return ks;
}

InteriorBarrierAudit interior_barrier_audit(
    const grid::GridField& u, const grid::GridField& u_sub,
    const model::ProblemSpec& P, const std::vector<double>& Ks,
    const std::vector<double>& eps1s, double c_cap,
    solver::LinVariant variant) {
  require_same_grid(u, u_sub, "interior_barrier_audit");
  if (u.n() != P.n)
    throw std::invalid_argument("interior_barrier_audit: dimension mismatch");
  if (Ks.empty() || eps1s.empty())
    throw std::invalid_argument("interior_barrier_audit: empty sweep");

  double sub_margin = solver::admissibility_margin(P, u_sub);
  if (sub_margin < 0.0)
    throw AdmissibilityError("interior_barrier_audit: u_sub leaves the cone",
                             0, sub_margin);

  InteriorBarrierAudit out;
  out.c_cap = c_cap;
  FieldCoeffs fc = field_coeffs(P, u);  // throws if u is inadmissible
  out.sum_F_max = fc.trF_max;
  out.sum_F_min = fc.trF_min;
  if (fc.dp_max > 0.0) out.rho_bound = 1.0 / (2.0 * P.n * fc.dp_max);

  const std::size_t ni = fc.trF.size();
  for (double K : Ks) {
    grid::GridField phi = u;
    for (std::size_t i = 0; i < phi.v.size(); ++i)
      phi.v[i] = std::exp(K * (u_sub.v[i] - u.v[i]));
    std::vector<double> lphi = solver::apply_linearized(P, u, {}, variant, phi);
    for (double e1 : eps1s) {
      BarrierEntry row;
      row.K = K;
      row.eps1 = e1;
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < ni; ++i) {
        double v = e1 * fc.trF[i] - lphi[i];
        if (v > worst) {
          worst = v;
          row.witness = static_cast<long>(fc.flat[i]);
        }
      }
      row.C = std::max(0.0, worst);
      row.feasible = e1 > 0.0 && row.C <= c_cap;
      out.informative = out.informative || row.feasible;
      out.table.push_back(row);
    }
  }
  return out;
}

BoundaryBarrierReport boundary_barrier_audit(const grid::GridField& u,
                                             const grid::GridField& u_sub,
                                             const model::ProblemSpec& P,
                                             const BarrierParams& prm,
                                             Face face,
                                             solver::LinVariant variant,
                                             double tol) {
  require_same_grid(u, u_sub, "boundary_barrier_audit");
  if (u.n() != P.n)
    throw std::invalid_argument("boundary_barrier_audit: dimension mismatch");
  require_face(P, face, "boundary_barrier_audit");
  prm.validate();

  const double h_face = u.h(face.axis);
  grid::GridField psi = u;
  std::vector<double> dist(u.size());
  grid::for_each_node(u, [&](const std::vector<int>& idx, std::size_t flat) {
    double d = face_distance(u.box, face, u.node_x(idx));
    dist[flat] = d;
    double g = prm.K * ((u_sub.v[flat] - u.v[flat]) - prm.mu * d +
                        prm.N * d * d);
    psi.v[flat] = 1.0 - std::exp(g);
  });

  std::vector<double> lpsi = solver::apply_linearized(P, u, {}, variant, psi);
  FieldCoeffs fc = field_coeffs(P, u);

  BoundaryBarrierReport rep;
  rep.margin_pde = std::numeric_limits<double>::infinity();
  rep.margin_sign = std::numeric_limits<double>::infinity();

  const double edge = prm.delta + 1e-14;
  for (std::size_t i = 0; i < fc.trF.size(); ++i) {
    std::size_t flat = fc.flat[i];
    if (dist[flat] > edge) continue;
    if (dist[flat] + h_face <= edge) {
      // Slab interior: the PDE inequality must hold here.
      ++rep.slab_nodes;
      double m = -lpsi[i] - 0.5 * prm.eps1 * fc.trF[i] - prm.M;
      if (m < rep.margin_pde) {
        rep.margin_pde = m;
        rep.witness_pde = static_cast<long>(flat);
      }
    }
  }
  if (rep.slab_nodes == 0)
    throw std::invalid_argument(
        "boundary_barrier_audit: slab has no interior nodes at this delta "
        "and grid spacing");

  grid::for_each_node(u, [&](const std::vector<int>& idx, std::size_t flat) {
    if (dist[flat] > edge) return;
    bool rim = !u.is_interior(idx) || dist[flat] + h_face > edge;
    if (!rim) return;
    ++rep.rim_nodes;
    if (psi.v[flat] < rep.margin_sign) {
      rep.margin_sign = psi.v[flat];
      rep.witness_sign = static_cast<long>(flat);
    }
  });

  rep.ok = rep.margin_pde >= -tol && rep.margin_sign >= -tol;
  return rep;
}

BoundarySweepResult boundary_barrier_sweep(const grid::GridField& u,
                                           const grid::GridField& u_sub,
                                           const model::ProblemSpec& P,
                                           Face face, double M, double eps1,
                                           solver::LinVariant variant) {
  BoundarySweepResult out;
  double best = -std::numeric_limits<double>::infinity();
  for (double delta : {0.25, 0.125}) {
    for (double mu : {0.5, 1.0, 2.0}) {
      for (double N : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
        for (double K : default_K_sweep()) {
          BarrierParams prm;
          prm.K = K;
          prm.eps1 = eps1;
          prm.mu = mu;
          prm.N = N;
          prm.delta = delta;
          prm.M = M;
          BoundaryBarrierReport rep;
          try {
            rep = boundary_barrier_audit(u, u_sub, P, prm, face, variant);
          } catch (const std::invalid_argument&) {
            continue;  // slab empty at this delta
          }
          ++out.tried;
          double score = std::min(rep.margin_pde, rep.margin_sign);
          if (score > best) {
            best = score;
            out.params = prm;
            out.report = rep;
          }
          if (rep.ok) {
            out.found = true;
            out.params = prm;
            out.report = rep;
            return out;
          }
        }
      }
    }
  }
  return out;
}

structure::CertificateReport boundary_decomposition_check(
    const grid::GridField& u, const model::ProblemSpec& P, Face face,
    double budget) {
  if (u.n() != P.n)
    throw std::invalid_argument(
        "boundary_decomposition_check: dimension mismatch");
  require_face(P, face, "boundary_decomposition_check");

  structure::CertificateReport rep;
  rep.condition = "boundary_decomposition";
  rep.tol = 0.0;

  double max_err = 0.0, max_b = 0.0;
  long worst = -1;
  std::size_t count = 0;
  grid::for_each_node(u, [&](const std::vector<int>& idx, std::size_t flat) {
    int axis = -1;
    if (boundary_axes(u, idx, &axis) != 1 || axis != face.axis) return;
    if (!on_face(u, idx, face)) return;
    grid::Jet2 J = grid::node_jet(u, idx);
    Vec x = u.node_x(idx);
    Mat W = J.W - P.A.value(x, J.z, J.p);
    W = 0.5 * (W + W.transpose());
    NormalSplit sp = normal_split(W, P.k, face.axis);
    double lhs = W(face.axis, face.axis) * sp.slope + sp.rest;
    double b = P.B.value(x, J.z, J.p);
    double err = std::abs(lhs - b);
    max_b = std::max(max_b, std::abs(b));
    ++count;
    if (err > max_err) {
      max_err = err;
      worst = static_cast<long>(flat);
    }
  });
  if (count == 0)
    throw std::invalid_argument(
        "boundary_decomposition_check: face has no single-face nodes");

  if (budget <= 0.0) budget = 1e-6 * (1.0 + max_b);
  rep.samples = count;
  rep.margin = budget - max_err;
  rep.witness.node = worst;
  if (worst >= 0) {
    std::vector<int> idx(static_cast<std::size_t>(u.n()));
    u.unflat(static_cast<std::size_t>(worst), idx);
    rep.witness.x = u.node_x(idx);
  }
  rep.verdict = rep.margin >= 0.0 ? structure::Verdict::Holds
                                  : structure::Verdict::Fails;
  return rep;
}

structure::CertificateReport tangential_frame_check(const SymMat& W, int k) {
  const Mat& M = W.mat();
  const int n = static_cast<int>(M.rows());
  if (n < 2)
    throw std::invalid_argument("tangential_frame_check: need n >= 2");
  symfun::FGrad fg = symfun::matrix_F_grad(W, k);

  double resid = 0.0;
  for (int b = 0; b + 1 < n; ++b) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += fg.Fij(b, j) * M(j, n - 1);
    resid = std::max(resid, std::abs(s));
  }
  double offdiag = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) offdiag = std::max(offdiag, std::abs(M(i, j)));
  bool diagonal = offdiag <= 1e-12 * (1.0 + M.cwiseAbs().maxCoeff());

  structure::CertificateReport rep;
  rep.condition = "tangential_frame";
  rep.samples = static_cast<std::size_t>(n - 1);
  rep.margin = -resid;
  rep.tol = 1e-12;
  if (diagonal)
    rep.verdict = rep.margin >= -rep.tol ? structure::Verdict::Holds
                                         : structure::Verdict::Fails;
  else
    rep.verdict = structure::Verdict::Inconclusive;  // recorded, not asserted
  return rep;
}

structure::CertificateReport trace_ellipticity_check(
    const grid::GridField& u, const model::ProblemSpec& P, double tol) {
  if (u.n() != P.n)
    throw std::invalid_argument("trace_ellipticity_check: dimension mismatch");
  structure::CertificateReport rep;
  rep.condition = "trace_ellipticity";
  rep.tol = tol;
  rep.samples = grid::interior_count(u);

  double worst = std::numeric_limits<double>::infinity();
  long node = -1;
  grid::for_each_interior(u, [&](const std::vector<int>& idx,
                                 std::size_t flat) {
    grid::Jet2 J = grid::interior_jet(u, idx);
    Vec x = u.node_x(idx);
    double tr = (J.W - P.A.value(x, J.z, J.p)).trace();
    if (tr < worst) {
      worst = tr;
      node = static_cast<long>(flat);
    }
  });
  rep.margin = worst;
  rep.witness.node = node;
  if (node >= 0) {
    std::vector<int> idx(static_cast<std::size_t>(u.n()));
    u.unflat(static_cast<std::size_t>(node), idx);
    rep.witness.x = u.node_x(idx);
  }
  rep.verdict = rep.margin >= -tol ? structure::Verdict::Holds
                                   : structure::Verdict::Fails;
  return rep;
}

AuxProbe aux_function_probe(const grid::GridField& u,
                            const model::ProblemSpec& P,
                            const grid::GridField& vphi,
                            const BarrierParams& prm) {
  require_same_grid(u, vphi, "aux_function_probe");
  if (u.n() != P.n)
    throw std::invalid_argument("aux_function_probe: dimension mismatch");

  AuxProbe out;
  out.b = prm.b;
  out.theta = prm.theta;

  std::vector<double> lmax(u.size()), tval(u.size());
  grid::for_each_node(u, [&](const std::vector<int>& idx, std::size_t flat) {
    grid::Jet2 J = grid::node_jet(u, idx);
    Vec x = u.node_x(idx);
    Mat W = J.W - P.A.value(x, J.z, J.p);
    double lm = lambda_max(W);
    if (!(lm > 0.0))
      throw AdmissibilityError("aux_function_probe: lambda_max(W) <= 0", 1, lm,
                               static_cast<long>(flat));
    lmax[flat] = lm;
    tval[flat] = 0.5 * J.p.squaredNorm();
    out.t_max = std::max(out.t_max, tval[flat]);
  });

  // eta(t) = a (1+t)^2 / 2 needs a (1+t)^2 <= 1 for eta'' - (eta')^2 >= 0;
  // the automatic choice keeps a factor-2 slack at the observed t_max.
  out.a = prm.a > 0.0 ? prm.a : 0.5 / ((1.0 + out.t_max) * (1.0 + out.t_max));
  out.eta_ok = out.a * (1.0 + out.t_max) * (1.0 + out.t_max) <= 1.0 + 1e-12;

  out.v = u;
  out.max_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) {
    double t = tval[i];
    out.v.v[i] =
        std::log(lmax[i]) + 0.5 * out.a * (1.0 + t) * (1.0 + t) + prm.b * vphi.v[i];
    if (out.v.v[i] > out.max_value) {
      out.max_value = out.v.v[i];
      out.argmax = static_cast<long>(i);
    }
  }
  return out;
}

}  // namespace hess::verify
