#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "hess/grid.hpp"
#include "hess/model.hpp"
#include "hess/solver.hpp"
#include "hess/structure.hpp"
#include "hess/symfun.hpp"
#include "hess/verify.hpp"
#include "oracles.hpp"

using namespace hess;
using namespace hess::verify;

namespace {

model::ProblemSpec const_problem(int n, int k, double b0,
                                 const std::string& a_name = "zero_A",
                                 double a_param = 1.0) {
  Box box{Vec::Constant(n, -1.0), Vec::Constant(n, 1.0)};
  model::CatalogParams prm;
  prm.b0 = b0;
  prm.s = a_param;
  prm.a = a_param;
  return model::make_problem(
      n, k, std::move(box), model::make_A(a_name, n, prm),
      model::make_B("const_B", n, prm),
      [](const Vec& x) { return 0.5 * x.squaredNorm(); });
}

grid::GridField quad_field(const Box& box, std::vector<int> m, double mu) {
  return grid::make_field(box, std::move(m), [mu](const Vec& x) {
    return 0.5 * mu * x.squaredNorm();
  });
}

// u_sub = u - c (R^2 - |x|^2): strictly inside the cone, below u, equal only
// where |x|^2 = R^2 (outside the box for R^2 = 2... the corners).
grid::GridField gap_subfield(const grid::GridField& u, double c, double r2) {
  grid::GridField s = u;
  grid::for_each_node(u, [&](const std::vector<int>& idx, std::size_t flat) {
    Vec x = u.node_x(idx);
    s.v[flat] = u.v[flat] - c * (r2 - x.squaredNorm());
  });
  return s;
}

}  // namespace

TEST_CASE("d2_stats on the unit paraboloid") {
  auto P = const_problem(2, 1, 2.0);  // tr(I) = 2 = B, so u solves exactly
  auto u = quad_field(P.box, {9, 9}, 1.0);
  auto st = d2_stats(u, P);
  CHECK(st.sup_interior == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(st.sup_boundary == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(st.c_emp == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(st.worst_interior.node >= 0);
  CHECK(st.worst_boundary.node >= 0);
  // 4 faces x 7 non-corner nodes, all with tangential S_0 = 1 >= 0.1.
  CHECK(st.dnn_checked == 28);
  CHECK(st.dnn_max_err < 1e-12);
}

TEST_CASE("d2_stats on an affine field reports zero and an honest dnn gap") {
  auto P = const_problem(2, 1, 1.0);
  auto u = grid::make_field(P.box, {9, 9}, [](const Vec& x) {
    return 0.3 * x[0] - 0.2 * x[1] + 1.0;
  });
  auto st = d2_stats(u, P);
  CHECK(st.sup_interior < 1e-13);
  CHECK(st.sup_boundary < 1e-13);
  CHECK(st.c_emp < 1e-13);
  // An affine field does not solve tr(W) = 1; the inversion crosscheck must
  // say so rather than smooth it over: |0 - (B - 0)/1| = b0.
  CHECK(st.dnn_max_err == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("one-sided stencils catch boundary-dominated second derivatives") {
  auto P = const_problem(2, 1, 1.0);
  auto u = grid::make_field(P.box, {17, 17},
                            [](const Vec& x) { return std::exp(x[0]); });
  auto st = d2_stats(u, P);
  CHECK(st.sup_boundary > st.sup_interior);
  // One-sided truncation ~ (11/12) h^2 e at h = 1/8.
  CHECK(st.sup_boundary == doctest::Approx(std::exp(1.0)).epsilon(2e-2));
}

TEST_CASE("C_emp ignores affine shifts of the field") {
  auto P = const_problem(2, 2, 1.0);
  auto u = grid::make_field(P.box, {17, 17}, [](const Vec& x) {
    return std::exp(0.25 * x.squaredNorm());
  });
  auto shifted = u;
  grid::for_each_node(u, [&](const std::vector<int>& idx, std::size_t flat) {
    Vec x = u.node_x(idx);
    shifted.v[flat] = u.v[flat] + 0.7 * x[0] - 1.3 * x[1] + 2.0;
  });
  auto a = d2_stats(u, P);
  auto b = d2_stats(shifted, P);
  CHECK(b.c_emp == doctest::Approx(a.c_emp).epsilon(1e-10));
}

TEST_CASE("C_emp is stable under one refinement on a smooth field") {
  auto star = model::make_u_star("exp_radial", 2, 0.5, Vec::Zero(2));
  auto A = model::make_A("zero_A", 2, {});
  auto B = model::manufactured_B(A, 2, star);
  Box box{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)};
  auto P = model::make_problem(2, 2, box, std::move(A), std::move(B),
                               star.value);
  auto coarse = grid::make_field(P.box, {9, 9}, star.value);
  auto fine = grid::make_field(P.box, {17, 17}, star.value);
  double r = d2_stats(coarse, P).c_emp / d2_stats(fine, P).c_emp;
  CHECK(r > 0.8);
  CHECK(r < 1.25);
}

TEST_CASE("interior barrier with a degenerate gap is pure ellipticity") {
  // u_sub = u gives phi = 1, L phi = 0, so C(K, e1) = e1 * max sum F^{ii};
  // for k = 1 the trace of F is exactly n.
  auto P = const_problem(2, 1, 2.0);
  auto u = quad_field(P.box, {9, 9}, 1.0);
  auto audit = interior_barrier_audit(u, u, P, {1.0, 4.0}, {0.0, 0.5}, 1e3);

  CHECK(audit.sum_F_max == 2.0);
  CHECK(audit.sum_F_min == 2.0);
  CHECK(std::isinf(audit.rho_bound));
  CHECK(audit.table.size() == 4);
  for (const auto& row : audit.table) {
    if (row.eps1 == 0.0)
      CHECK(row.C < 1e-10);
    else
      CHECK(row.C == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK(audit.informative);
}

TEST_CASE("interior barrier table is monotone in eps1 and witnesses exist") {
  auto P = const_problem(2, 2, 1.0);  // S_2[I] = 1: u solves
  auto u = quad_field(P.box, {17, 17}, 1.0);
  auto u_sub = gap_subfield(u, 0.05, 2.0);
  std::vector<double> eps{0.0, 0.01, 0.1, 1.0};
  auto audit =
      interior_barrier_audit(u, u_sub, P, default_K_sweep(), eps, 1e3);

  CHECK(audit.table.size() == 9 * eps.size());
  for (std::size_t i = 0; i < audit.table.size(); ++i) {
    const auto& row = audit.table[i];
    CHECK(row.C >= 0.0);
    CHECK(row.witness >= 0);
    if (i % eps.size() != 0) {
      const auto& prev = audit.table[i - 1];
      CHECK(row.K == prev.K);
      CHECK(row.C >= prev.C - 1e-12);  // monotone in eps1 at fixed K
    }
  }
  CHECK(audit.informative);  // some eps1 > 0 entry stays under the cap
}

TEST_CASE("interior barrier sees the gradient drift through rho_bound") {
  auto P = const_problem(2, 1, 2.0, "skew_projector_A", 0.5);
  auto u = quad_field(P.box, {9, 9}, 1.0);
  // |A_p| at p = Du = x: dp(i,j,m) = 2 c1 p_m d_ij + c2(...); entries scale
  // with s and |p|, so the bound is finite and positive.
  auto audit = interior_barrier_audit(u, u, P, {1.0}, {0.0}, 1e3);
  CHECK(std::isfinite(audit.rho_bound));
  CHECK(audit.rho_bound > 0.0);
}

TEST_CASE("interior barrier rejects inadmissible inputs") {
  auto P = const_problem(2, 2, 1.0);
  auto u = quad_field(P.box, {9, 9}, 1.0);
  auto concave = quad_field(P.box, {9, 9}, -1.0);

  CHECK_THROWS_AS(
      interior_barrier_audit(concave, u, P, {1.0}, {0.0}, 1e3),
      AdmissibilityError);
  bool sub_flagged = false;
  try {
    interior_barrier_audit(u, concave, P, {1.0}, {0.0}, 1e3);
  } catch (const AdmissibilityError& e) {
    sub_flagged = std::string(e.what()).find("u_sub") != std::string::npos;
  }
  CHECK(sub_flagged);
}

TEST_CASE("boundary barrier margins are nonnegative for honest parameters") {
  auto P = const_problem(2, 2, 1.0);
  auto u = quad_field(P.box, {17, 17}, 1.0);
  auto u_sub = gap_subfield(u, 0.05, 2.0);

  BarrierParams prm;
  prm.K = 8.0;
  prm.eps1 = 0.01;
  prm.mu = 1.0;
  prm.N = 1.0;
  prm.delta = 0.25;
  prm.M = 1.0;
  auto rep = boundary_barrier_audit(u, u_sub, P, prm, Face{0, 0});
  CHECK(rep.slab_nodes > 0);
  CHECK(rep.rim_nodes > 0);
  CHECK(rep.margin_pde > 0.0);
  // u_sub meets u exactly at the box corners, where psi = 0.
  CHECK(rep.margin_sign == 0.0);
  CHECK(rep.ok);
}

TEST_CASE("boundary barrier psi vanishes exactly where the data coincide") {
  auto P = const_problem(2, 2, 1.0);
  auto u = quad_field(P.box, {17, 17}, 1.0);
  BarrierParams prm;
  prm.K = 4.0;
  prm.eps1 = 0.0;
  CHECK(prm.theta == doctest::Approx(1.0 / 3.0));
  auto rep = boundary_barrier_audit(u, u, P, prm, Face{1, 1});
  // u_sub = u: on the face d = 0 and psi = 1 - e^0 = 0; off the face the
  // exponent -mu d + N d^2 stays negative for d < mu / N, so psi > 0.
  CHECK(rep.margin_sign == 0.0);
  CHECK(rep.witness_sign >= 0);
}

TEST_CASE("boundary barrier refuses an empty slab") {
  auto P = const_problem(2, 2, 1.0);
  auto u = quad_field(P.box, {9, 9}, 1.0);
  BarrierParams prm;
  prm.delta = 0.01;  // below one grid spacing
  CHECK_THROWS_AS(boundary_barrier_audit(u, u, P, prm, Face{0, 0}),
                  std::invalid_argument);
}

TEST_CASE("boundary barrier parameter validation") {
  auto P = const_problem(2, 2, 1.0);
  auto u = quad_field(P.box, {9, 9}, 1.0);
  BarrierParams prm;
  prm.K = -1.0;
  CHECK_THROWS_AS(boundary_barrier_audit(u, u, P, prm, Face{0, 0}),
                  std::invalid_argument);
  prm.K = 1.0;
  prm.theta = 1.5;
  CHECK_THROWS_AS(boundary_barrier_audit(u, u, P, prm, Face{0, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(boundary_barrier_audit(u, u, P, prm, Face{5, 0}),
                  std::invalid_argument);
}

TEST_CASE("boundary barrier sweep finds feasible constants with M = 1") {
  auto P = const_problem(2, 2, 1.0);
  auto u = quad_field(P.box, {17, 17}, 1.0);
  auto u_sub = gap_subfield(u, 0.05, 2.0);
  auto sw = boundary_barrier_sweep(u, u_sub, P, Face{0, 0}, 1.0, 0.01);
  CHECK(sw.found);
  CHECK(sw.report.ok);
  CHECK(sw.params.M == 1.0);
  CHECK(sw.tried >= 1);
}

TEST_CASE("normal split identity against the subset oracle") {
  // S_k[W] = w_nn S_{k-1}[(W)'] + S_k[W with w_nn zeroed], verified on random
  // admissible matrices with every S computed from eigenvalue subsets.
  auto eng = oracle::engine_for(71, 0, 0);
  for (int rep = 0; rep < 20; ++rep) {
    Mat W = oracle::random_admissible_matrix(3, 2, eng);
    Eigen::SelfAdjointEigenSolver<Mat> full(W);
    double sk = oracle::subset_Sk(full.eigenvalues(), 2);

    Mat Wp = W.topLeftCorner(2, 2);  // drop the last axis
    Eigen::SelfAdjointEigenSolver<Mat> minor(Wp);
    double slope = oracle::subset_Sk(minor.eigenvalues(), 1);

    Mat Z = W;
    Z(2, 2) = 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> zeroed(Z);
    double rest = oracle::subset_Sk(zeroed.eigenvalues(), 2);

    CHECK(W(2, 2) * slope + rest ==
          doctest::Approx(sk).epsilon(1e-12).scale(1.0 + std::abs(sk)));
  }
}

TEST_CASE("boundary decomposition holds on exact solutions") {
  // mu = 1.3, k = 2: S_2[1.3 I] = 1.69 = B, checked on every face.
  auto P = const_problem(2, 2, 1.69);
  auto u = quad_field(P.box, {9, 9}, 1.3);
  for (int axis = 0; axis < 2; ++axis)
    for (int side = 0; side < 2; ++side) {
      auto rep = boundary_decomposition_check(u, P, Face{axis, side});
      CHECK(rep.verdict == structure::Verdict::Holds);
      CHECK(rep.margin > 0.0);
      CHECK(rep.samples == 7);  // 9 nodes minus 2 corners
    }

  auto wrong = const_problem(2, 2, 2.0);  // same field, wrong source
  auto bad = boundary_decomposition_check(u, wrong, Face{0, 0});
  CHECK(bad.verdict == structure::Verdict::Fails);
  CHECK(bad.witness.node >= 0);
}

TEST_CASE("boundary decomposition with a nonconstant augmented operator") {
  auto star = model::make_u_star("quadratic", 2, 1.5, Vec::Zero(2));
  model::CatalogParams prm;
  prm.a = 0.25;
  auto A = model::make_A("x_diag_A", 2, prm);
  auto B = model::manufactured_B(A, 2, star);
  Box box{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)};
  auto P = model::make_problem(2, 2, box, std::move(A), std::move(B),
                               star.value);
  auto u = grid::make_field(P.box, {9, 9}, star.value);
  auto rep = boundary_decomposition_check(u, P, Face{1, 0});
  CHECK(rep.verdict == structure::Verdict::Holds);  // exact on quadratics
  CHECK(rep.margin > 0.0);
}

TEST_CASE("boundary decomposition k = 1 is the trace identity") {
  auto P = const_problem(3, 1, 3.0);  // tr(I) = 3
  auto u = quad_field(P.box, {5, 5, 5}, 1.0);
  auto rep = boundary_decomposition_check(u, P, Face{2, 1});
  CHECK(rep.verdict == structure::Verdict::Holds);
  CHECK(rep.samples == 9);  // 5x5 face minus the 16-node edge ring
}

TEST_CASE("boundary decomposition residual shrinks at second order") {
  auto star = model::make_u_star("exp_radial", 2, 0.5, Vec::Zero(2));
  auto A = model::make_A("zero_A", 2, {});
  auto B = model::manufactured_B(A, 2, star);
  Box box{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)};
  auto P = model::make_problem(2, 2, box, std::move(A), std::move(B),
                               star.value);
  // Fixed unit budget turns the margin into 1 - max_err.
  double e_coarse =
      1.0 -
      boundary_decomposition_check(grid::make_field(P.box, {17, 17},
                                                    star.value),
                                   P, Face{0, 0}, 1.0)
          .margin;
  double e_fine =
      1.0 -
      boundary_decomposition_check(grid::make_field(P.box, {33, 33},
                                                    star.value),
                                   P, Face{0, 0}, 1.0)
          .margin;
  double ratio = e_coarse / e_fine;
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}

TEST_CASE("tangential frame sums vanish exactly in a diagonal frame") {
  Mat W1 = Eigen::Vector3d(3.0, 2.0, 1.0).asDiagonal();
  auto rep = tangential_frame_check(SymMat(W1), 2);
  CHECK(rep.verdict == structure::Verdict::Holds);
  CHECK(rep.margin == 0.0);
  CHECK(rep.samples == 2);

  auto repI = tangential_frame_check(SymMat::Identity(4), 3);
  CHECK(repI.verdict == structure::Verdict::Holds);
  CHECK(repI.margin == 0.0);

  auto eng = oracle::engine_for(83, 0, 0);
  Mat W2 = oracle::random_admissible_matrix(3, 2, eng);
  auto repR = tangential_frame_check(SymMat(W2), 2);
  CHECK(repR.verdict == structure::Verdict::Inconclusive);
}

TEST_CASE("trace ellipticity margins") {
  auto P = const_problem(2, 1, 2.0);
  auto convex = quad_field(P.box, {9, 9}, 1.0);
  auto rep = trace_ellipticity_check(convex, P);
  CHECK(rep.verdict == structure::Verdict::Holds);
  CHECK(rep.margin == doctest::Approx(2.0).epsilon(1e-12));

  auto saddle = grid::make_field(P.box, {9, 9}, [](const Vec& x) {
    return 0.5 * (x[0] * x[0] - x[1] * x[1]);
  });
  auto on_edge = trace_ellipticity_check(saddle, P);
  CHECK(on_edge.verdict == structure::Verdict::Holds);
  CHECK(on_edge.margin == doctest::Approx(0.0));

  auto concave = quad_field(P.box, {9, 9}, -1.0);
  auto neg = trace_ellipticity_check(concave, P);
  CHECK(neg.verdict == structure::Verdict::Fails);
  CHECK(neg.witness.node >= 0);
}

TEST_CASE("cone membership implies trace ellipticity") {
  auto P = const_problem(2, 2, 1.0);
  auto u = quad_field(P.box, {9, 9}, 1.2);
  auto cone =
      structure::check_admissible_field(u, P, structure::FieldMode::AdmissibleCone);
  REQUIRE(cone.verdict == structure::Verdict::Holds);
  auto tr = trace_ellipticity_check(u, P);
  CHECK(tr.verdict == structure::Verdict::Holds);
  CHECK(tr.margin >= cone.margin - 1e-12);  // S_1 >= min_j S_j
}

TEST_CASE("auxiliary probe peaks at the corner for radial data") {
  auto P = const_problem(2, 2, 2.25);
  double mu = 1.5;
  auto u = quad_field(P.box, {9, 9}, mu);
  auto vphi = grid::make_field(P.box, {9, 9},
                               [](const Vec& x) { return x.squaredNorm(); });
  BarrierParams prm;
  prm.b = 0.3;
  auto probe = aux_function_probe(u, P, vphi, prm);

  // t = |Du|^2/2 = mu^2 |x|^2 / 2 peaks at the corner: t_max = mu^2.
  CHECK(probe.t_max == doctest::Approx(mu * mu).epsilon(1e-12));
  CHECK(probe.a ==
        doctest::Approx(0.5 / ((1 + mu * mu) * (1 + mu * mu))).epsilon(1e-12));
  CHECK(probe.eta_ok);
  // v = log mu + a(1+t)^2/2 + b |x|^2maxes at a corner: log mu + 1/4 + 2b.
  CHECK(probe.max_value ==
        doctest::Approx(std::log(mu) + 0.25 + 2.0 * prm.b).epsilon(1e-12));
  REQUIRE(probe.argmax >= 0);
  std::vector<int> idx(2);
  u.unflat(static_cast<std::size_t>(probe.argmax), idx);
  CHECK(u.node_x(idx).cwiseAbs().minCoeff() == doctest::Approx(1.0));

  // A caller-forced a that violates the smallness condition is reported.
  BarrierParams big;
  big.a = 0.2;
  auto probe2 = aux_function_probe(u, P, vphi, big);
  CHECK_FALSE(probe2.eta_ok);
  CHECK(probe2.a == 0.2);

  auto concave = quad_field(P.box, {9, 9}, -1.0);
  CHECK_THROWS_AS(aux_function_probe(concave, P, vphi, prm),
                  AdmissibilityError);
}
