#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hess/model.hpp"
#include "hess/symfun.hpp"
#include "oracles.hpp"

using namespace hess;
using namespace hess::model;

namespace {

double t3_diff(const Tensor3& a, const Tensor3& b) {
  REQUIRE(a.n == b.n);
  double d = 0.0;
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j)
      for (int m = 0; m < a.n; ++m)
        d = std::max(d, std::abs(a(i, j, m) - b(i, j, m)));
  return d;
}

double t4_diff(const Tensor4& a, const Tensor4& b) {
  REQUIRE(a.n == b.n);
  double d = 0.0;
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j)
      for (int k = 0; k < a.n; ++k)
        for (int l = 0; l < a.n; ++l)
          d = std::max(d, std::abs(a(i, j, k, l) - b(i, j, k, l)));
  return d;
}

// sum_{ijkl} T(i,j,k,l) xi_i xi_j eta_k eta_l
double dpp_form(const Tensor4& T, const Vec& xi, const Vec& eta) {
  double s = 0.0;
  for (int i = 0; i < T.n; ++i)
    for (int j = 0; j < T.n; ++j)
      for (int k = 0; k < T.n; ++k)
        for (int l = 0; l < T.n; ++l)
          s += T(i, j, k, l) * xi[i] * xi[j] * eta[k] * eta[l];
  return s;
}

CatalogParams params() { return CatalogParams{}; }

}  // namespace

TEST_CASE("conformal coefficient frozen values at p = e1") {
  auto A = make_A("conformal_A_as_printed", 2, params());
  Vec x = Vec::Zero(2), p = Vec::Zero(2);
  p[0] = 1.0;
  Mat v = A.value(x, 0.3, p);
  CHECK(v(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(v(1, 1) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(std::abs(v(0, 1)) < 1e-15);

  AJet J = A.jet(x, 0.3, p, 2);
  // dp(i,j,m) = -p_m d_ij + d_im p_j + d_jm p_i at p = e1
  CHECK(J.dp(0, 0, 0) == doctest::Approx(1.0));
  CHECK(J.dp(1, 1, 0) == doctest::Approx(-1.0));
  CHECK(J.dp(0, 1, 1) == doctest::Approx(1.0));
  CHECK(J.dp(1, 0, 1) == doctest::Approx(1.0));
  CHECK(std::abs(J.dp(0, 1, 0)) < 1e-15);
  // constant dpp: -d_kl d_ij + d_ik d_jl + d_il d_jk
  CHECK(J.dpp(0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(J.dpp(0, 0, 1, 1) == doctest::Approx(-1.0));
  CHECK(J.dpp(0, 1, 0, 1) == doctest::Approx(1.0));
  CHECK(J.dpp(0, 1, 1, 0) == doctest::Approx(1.0));
  CHECK(J.dx.max_abs() == 0.0);
  CHECK(J.dz.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sign-flipped conformal negates the printed variant; unit skew projector matches it") {
  auto prm = params();
  prm.s = 1.0;
  for (int n : {2, 3, 4}) {
    auto Ap = make_A("conformal_A_as_printed", n, prm);
    auto Am = make_A("conformal_A_signflip", n, prm);
    auto As = make_A("skew_projector_A", n, prm);
    auto eng = oracle::engine_for(11, 0, n);
    for (int rep = 0; rep < 20; ++rep) {
      Vec x = oracle::gaussian_vec(n, eng);
      Vec p = oracle::gaussian_vec(n, eng);
      double z = oracle::gaussian_vec(1, eng)[0];
      AJet a = Ap.jet(x, z, p, 2), b = Am.jet(x, z, p, 2),
           c = As.jet(x, z, p, 2);
      CHECK((a.A + b.A).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((b.A - c.A).cwiseAbs().maxCoeff() < 1e-14);
      CHECK(t3_diff(b.dp, c.dp) < 1e-14);
      CHECK(t4_diff(b.dpp, c.dpp) < 1e-14);
    }
  }
}

TEST_CASE("skew projector quadratic form on unit orthogonal pairs is the strength s") {
  // For A = c1 |p|^2 I + c2 p p^T the pair form sum dpp xi xi eta eta equals
  // 2 c1 + 2 c2 (xi . eta)^2 on unit vectors, i.e. 2 c1 on orthogonal pairs.
  auto eng = oracle::engine_for(12, 0, 0);
  for (int n : {2, 3, 5}) {
    auto prm = params();
    prm.s = 0.7;
    auto As = make_A("skew_projector_A", n, prm);
    auto Ap = make_A("conformal_A_as_printed", n, prm);
    auto Af = make_A("conformal_A_signflip", n, prm);
    for (int rep = 0; rep < 25; ++rep) {
      Vec xi, eta;
      oracle::random_orthopair(n, eng, xi, eta);
      Vec x = oracle::gaussian_vec(n, eng), p = oracle::gaussian_vec(n, eng);
      Tensor4 Ts = As.jet(x, 0.0, p, 2).dpp;
      Tensor4 Tp = Ap.jet(x, 0.0, p, 2).dpp;
      Tensor4 Tf = Af.jet(x, 0.0, p, 2).dpp;
      CHECK(dpp_form(Ts, xi, eta) == doctest::Approx(0.7).epsilon(1e-10));
      CHECK(dpp_form(Tp, xi, eta) == doctest::Approx(-1.0).epsilon(1e-10));
      CHECK(dpp_form(Tf, xi, eta) == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("analytic coefficient jets agree with finite differences across the catalog") {
  auto prm = params();
  prm.s = 0.7;
  prm.a = 0.3;
  prm.slope = -0.8;
  std::vector<CoefficientA> entries;
  for (const char* name :
       {"zero_A", "conformal_A_as_printed", "conformal_A_signflip",
        "skew_projector_A", "x_diag_A", "ot_quadratic_cost"})
    for (int n : {2, 3}) entries.push_back(make_A(name, n, prm));
  for (int n : {2, 3}) {
    entries.push_back(make_A("u_diag_A", n, prm));  // exp profile
    auto lin = prm;
    lin.g = "linear";
    entries.push_back(make_A("u_diag_A", n, lin));
  }
  auto eng = oracle::engine_for(13, 0, 0);
  for (const auto& A : entries) {
    const int n = A.n();
    auto Afd = A.with_fd_derivatives();
    CHECK(Afd.mode() == CoefficientA::Mode::FiniteDifference);
    for (int rep = 0; rep < 6; ++rep) {
      Vec x = oracle::gaussian_vec(n, eng);
      Vec p = oracle::gaussian_vec(n, eng);
      double z = 0.4 * oracle::gaussian_vec(1, eng)[0];
      AJet a = A.jet(x, z, p, 2), f = Afd.jet(x, z, p, 2);
      double scale = 1.0 + a.A.cwiseAbs().maxCoeff();
      CHECK((a.A - f.A).cwiseAbs().maxCoeff() == 0.0);
      CHECK(t3_diff(a.dx, f.dx) < 1e-6 * scale);
      CHECK((a.dz - f.dz).cwiseAbs().maxCoeff() < 1e-6 * scale);
      CHECK(t3_diff(a.dp, f.dp) < 1e-6 * scale);
      CHECK(t4_diff(a.dpp, f.dpp) < 1e-5 * scale);
    }
  }
}

TEST_CASE("x_diag and u_diag derivative structure") {
  auto prm = params();
  prm.a = 0.25;
  auto Ax = make_A("x_diag_A", 3, prm);
  Vec x(3), p = Vec::Zero(3);
  x << 1.0, -2.0, 0.5;
  Mat v = Ax.value(x, 0.0, p);
  CHECK(v(0, 0) == doctest::Approx(0.25));
  CHECK(v(1, 1) == doctest::Approx(-0.5));
  CHECK(v(2, 2) == doctest::Approx(0.125));
  AJet J = Ax.jet(x, 0.0, p, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int m = 0; m < 3; ++m) {
        double want = (i == j && j == m) ? 0.25 : 0.0;
        CHECK(J.dx(i, j, m) == doctest::Approx(want));
      }
  CHECK(J.dp.max_abs() == 0.0);
  CHECK(J.dpp.max_abs() == 0.0);
  CHECK_FALSE(Ax.depends_on_u());

  auto Au = make_A("u_diag_A", 2, params());
  CHECK(Au.depends_on_u());
  AJet Ju = Au.jet(Vec::Zero(2), 0.7, Vec::Zero(2), 1);
  CHECK((Ju.dz - Ju.A).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(Ju.A(0, 0) == doctest::Approx(std::exp(0.7)));

  auto lin = params();
  lin.g = "linear";
  lin.slope = -1.5;
  auto Al = make_A("u_diag_A", 2, lin);
  AJet Jl = Al.jet(Vec::Zero(2), 0.7, Vec::Zero(2), 1);
  CHECK(Jl.A(0, 0) == doctest::Approx(-1.05));
  CHECK(Jl.dz(0, 0) == doctest::Approx(-1.5));
  CHECK(std::abs(Jl.dz(0, 1)) < 1e-15);
}

TEST_CASE("catalog rejects unknown names, bad profiles, and bad dimensions") {
  CHECK_THROWS_AS((void)make_A("no_such_A", 2, params()), std::invalid_argument);
  CHECK_THROWS_AS((void)make_B("no_such_B", 2, params()), std::invalid_argument);
  auto bad = params();
  bad.g = "cubic";
  CHECK_THROWS_AS((void)make_A("u_diag_A", 2, bad), std::invalid_argument);
  auto neg = params();
  neg.s = -0.1;
  CHECK_THROWS_AS((void)make_A("skew_projector_A", 2, neg),
                  std::invalid_argument);
  auto A = make_A("zero_A", 3, params());
  CHECK_THROWS_AS((void)A.value(Vec::Zero(2), 0.0, Vec::Zero(3)),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)A.value(Vec::Zero(3), 0.0, Vec::Zero(4)),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      (void)make_u_star("quadratic", 3, 1.0, Vec::Zero(2)),
      std::invalid_argument);
  CHECK_THROWS_AS((void)make_u_star("no_such_field", 2, 1.0, Vec()),
                  std::invalid_argument);
}

TEST_CASE("constant source jets and positivity gate") {
  auto prm = params();
  prm.b0 = 2.0;
  auto B = make_B("const_B", 3, prm);
  BtJet J = B.btilde_jet(2, Vec::Zero(3), 0.1, Vec::Ones(3), 2);
  CHECK(J.B == doctest::Approx(2.0));
  CHECK(J.Bt == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(J.dp.cwiseAbs().maxCoeff() == 0.0);
  CHECK(J.dz == 0.0);
  CHECK(J.dpp.cwiseAbs().maxCoeff() == 0.0);

  auto nonpos = params();
  nonpos.b0 = -1.0;
  CHECK_THROWS_AS((void)make_B("const_B", 2, nonpos), PositivityError);
  nonpos.b0 = 0.0;
  CHECK_THROWS_AS((void)make_B("const_B", 2, nonpos), PositivityError);
  CHECK_THROWS_AS((void)make_B("power_B", 2, nonpos), PositivityError);
  CHECK_THROWS_AS((void)make_B("exp_u_B", 2, nonpos), PositivityError);
}

TEST_CASE("power source frozen normalized jet at unit gradient") {
  // b0 = 1, t = 1, k = 2, p = e1: B = 2, Bt = sqrt(2),
  // dBt/dp = e1 / sqrt(2), dBt/dpp = diag(2^-1.5, 2^-0.5).
  auto prm = params();
  prm.b0 = 1.0;
  prm.t = 1.0;
  auto B = make_B("power_B", 2, prm);
  Vec p = Vec::Zero(2);
  p[0] = 1.0;
  BtJet J = B.btilde_jet(2, Vec::Zero(2), 0.0, p, 2);
  CHECK(J.B == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(J.Bt == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(J.dp[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(std::abs(J.dp[1]) < 1e-15);
  CHECK(J.dz == 0.0);
  CHECK(J.dpp(0, 0) == doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-14));
  CHECK(J.dpp(1, 1) == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-14));
  CHECK(std::abs(J.dpp(0, 1)) < 1e-15);

  // Radial/tangential eigenvalues of the normalized Hessian for general tau:
  // radial 2 tau (1+q)^(tau-2) (1 + (2 tau - 1) q), tangential 2 tau (1+q)^(tau-1).
  const double tau = prm.t / 2.0, q = 1.0;
  CHECK(J.dpp(0, 0) ==
        doctest::Approx(2.0 * tau * std::pow(1.0 + q, tau - 2.0) *
                        (1.0 + (2.0 * tau - 1.0) * q)));
  CHECK(J.dpp(1, 1) ==
        doctest::Approx(2.0 * tau * std::pow(1.0 + q, tau - 1.0)));
}

TEST_CASE("power source normalized Hessian loses convexity past |p|^2 = 1/(1-2t)") {
  auto prm = params();
  prm.b0 = 1.0;
  prm.t = 0.25;  // k = 1: threshold |p|^2 = 2
  auto B = make_B("power_B", 2, prm);
  auto min_eig = [&](double r) {
    Vec p = Vec::Zero(2);
    p[0] = r;
    BtJet J = B.btilde_jet(1, Vec::Zero(2), 0.0, p, 2);
    return Eigen::SelfAdjointEigenSolver<Mat>(J.dpp).eigenvalues().minCoeff();
  };
  CHECK(min_eig(std::sqrt(1.8)) > 0.0);
  CHECK(min_eig(std::sqrt(2.2)) < 0.0);
  // Exactly at threshold the radial eigenvalue crosses zero.
  CHECK(std::abs(min_eig(std::sqrt(2.0))) < 1e-12);
}

TEST_CASE("normalized source chain rule agrees with finite differences of B^(1/k)") {
  auto eng = oracle::engine_for(14, 0, 0);
  struct Case {
    SourceB B;
    int k;
  };
  auto prm = params();
  prm.b0 = 0.7;
  prm.t = -0.4;
  std::vector<Case> cases;
  cases.push_back({make_B("power_B", 3, prm), 3});
  cases.push_back({make_B("ot_quadratic_cost", 2, params()), 2});
  cases.push_back({make_B("exp_u_B", 2, params()), 2});
  for (auto& c : cases) {
    const int n = c.B.n();
    for (int rep = 0; rep < 8; ++rep) {
      Vec x = oracle::gaussian_vec(n, eng);
      Vec p = 0.8 * oracle::gaussian_vec(n, eng);
      double z = 0.5 * oracle::gaussian_vec(1, eng)[0];
      BtJet J = c.B.btilde_jet(c.k, x, z, p, 2);
      auto bt = [&](const Vec& pp, double zz) {
        return std::pow(c.B.value(x, zz, pp), 1.0 / c.k);
      };
      const double h = 1e-5;
      for (int m = 0; m < n; ++m) {
        Vec e = Vec::Zero(n);
        e[m] = h;
        double fd = (bt(p + e, z) - bt(p - e, z)) / (2.0 * h);
        CHECK(J.dp[m] == doctest::Approx(fd).epsilon(1e-6));
        double fd2 = (bt(p + e, z) - 2.0 * J.Bt + bt(p - e, z)) / (h * h);
        CHECK(J.dpp(m, m) == doctest::Approx(fd2).epsilon(1e-4));
      }
      double fdz = (bt(p, z + h) - bt(p, z - h)) / (2.0 * h);
      CHECK(J.dz == doctest::Approx(fdz).epsilon(1e-6));
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
          Vec ea = Vec::Zero(n), eb = Vec::Zero(n);
          ea[a] = h;
          eb[b] = h;
          double fd = (bt(p + ea + eb, z) - bt(p + ea - eb, z) -
                       bt(p - ea + eb, z) + bt(p - ea - eb, z)) /
                      (4.0 * h * h);
          CHECK(J.dpp(a, b) == doctest::Approx(fd).epsilon(1e-4));
        }
    }
  }
}

TEST_CASE("exponential source: z-derivative of the normalized value is Bt / k") {
  auto prm = params();
  prm.b0 = 0.3;
  auto B = make_B("exp_u_B", 2, prm);
  CHECK(B.depends_on_u());
  for (int k = 1; k <= 3; ++k) {
    if (k > 2) continue;  // n = 2 catalog entry; k <= n not enforced here
    for (double z : {-1.0, 0.0, 1.7}) {
      BtJet J = B.btilde_jet(k, Vec::Zero(2), z, Vec::Ones(2), 1);
      CHECK(J.dz == doctest::Approx(J.Bt / k).epsilon(1e-14));
    }
  }
}

TEST_CASE("nonpositive source value surfaces as PositivityError at evaluation") {
  auto B = SourceB::finite_difference(
      "linear_in_z", 2, true,
      [](const Vec&, double z, const Vec&) { return z; });
  CHECK_THROWS_AS((void)B.btilde_jet(1, Vec::Zero(2), -1.0, Vec::Zero(2), 0),
                  PositivityError);
  CHECK_THROWS_AS((void)B.btilde_jet(1, Vec::Zero(2), 0.0, Vec::Zero(2), 0),
                  PositivityError);
  BtJet J = B.btilde_jet(2, Vec::Zero(2), 4.0, Vec::Zero(2), 1);
  CHECK(J.Bt == doctest::Approx(2.0));
  CHECK(J.dz == doctest::Approx(0.25).epsilon(1e-6));  // (1/2) 4^(-1/2)
}

TEST_CASE("quadratic-cost transport pair: identity coefficient and convex normalized source") {
  auto A = make_A("ot_quadratic_cost", 2, params());
  auto B = make_B("ot_quadratic_cost", 2, params());
  auto eng = oracle::engine_for(15, 0, 0);
  Vec x0 = oracle::gaussian_vec(2, eng);
  CHECK((A.value(x0, 0.0, x0) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-15);
  CHECK(B.value(x0, 0.0, x0) == doctest::Approx(1.0));
  BtJet at_center = B.btilde_jet(2, x0, 0.0, x0, 2);
  // At p = x the normalized Hessian is I / k.
  CHECK((at_center.dpp - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-14);
  for (int rep = 0; rep < 30; ++rep) {
    Vec x = oracle::gaussian_vec(2, eng), p = oracle::gaussian_vec(2, eng);
    for (int k = 1; k <= 2; ++k) {
      BtJet J = B.btilde_jet(k, x, 0.0, p, 2);
      double lmin =
          Eigen::SelfAdjointEigenSolver<Mat>(J.dpp).eigenvalues().minCoeff();
      CHECK(lmin > -1e-12);
    }
  }
}

TEST_CASE("manufactured source: isotropic quadratic field against binomial values") {
  // W = mu I, so S_k = mu^k C(n, k).
  auto eng = oracle::engine_for(16, 0, 0);
  struct Want {
    int n, k;
    double mu, expect;
  };
  for (Want w : {Want{3, 2, 1.0, 3.0}, Want{3, 2, 2.0, 12.0},
                 Want{2, 1, 1.0, 2.0}, Want{4, 3, 1.5, 4.0 * 3.375},
                 Want{2, 2, 3.0, 9.0}}) {
    auto A = make_A("zero_A", w.n, params());
    auto us = make_u_star("quadratic", w.n, w.mu, Vec::Zero(w.n), 0.0);
    auto B = manufactured_B(A, w.k, us);
    for (int rep = 0; rep < 5; ++rep) {
      Vec x = oracle::gaussian_vec(w.n, eng);
      CHECK(B.value(x, 0.0, Vec::Zero(w.n)) ==
            doctest::Approx(w.expect).epsilon(1e-13));
    }
  }
}

TEST_CASE("manufactured source reproduces a hand-computed anisotropic product") {
  // u* = x1^2 + x2^2/2, A = x_diag(0.25):
  // W = diag(2 - x1/4, 1 - x2/4), S_2 = product of the diagonal.
  SmoothFn us;
  us.value = [](const Vec& x) { return x[0] * x[0] + 0.5 * x[1] * x[1]; };
  us.grad = [](const Vec& x) {
    Vec g(2);
    g << 2.0 * x[0], x[1];
    return g;
  };
  us.hess = [](const Vec&) {
    Mat h = Mat::Zero(2, 2);
    h(0, 0) = 2.0;
    h(1, 1) = 1.0;
    return h;
  };
  auto prm = params();
  prm.a = 0.25;
  auto B0 = manufactured_B(make_A("zero_A", 2, prm), 2, us);
  auto Bd = manufactured_B(make_A("x_diag_A", 2, prm), 2, us);
  auto eng = oracle::engine_for(17, 0, 0);
  for (int rep = 0; rep < 10; ++rep) {
    Vec x = oracle::gaussian_vec(2, eng);
    CHECK(B0.value(x, 0.0, Vec::Zero(2)) == doctest::Approx(2.0));
    double want = (2.0 - 0.25 * x[0]) * (1.0 - 0.25 * x[1]);
    CHECK(Bd.value(x, 0.0, Vec::Zero(2)) ==
          doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("manufactured source with gradient-dependent coefficient: trace-free skew part") {
  // In two dimensions tr(|p|^2 I / 2 - p p^T) = 0, so with u* = |x|^2/2 the
  // k = 1 source is identically n regardless of the skew strength.
  auto prm = params();
  prm.s = 0.9;
  auto A = make_A("skew_projector_A", 2, prm);
  auto us = make_u_star("quadratic", 2, 1.0, Vec::Zero(2), 0.0);
  auto B = manufactured_B(A, 1, us);
  auto eng = oracle::engine_for(18, 0, 0);
  for (int rep = 0; rep < 10; ++rep) {
    Vec x = 2.0 * oracle::gaussian_vec(2, eng);
    CHECK(B.value(x, 0.0, Vec::Zero(2)) == doctest::Approx(2.0).epsilon(1e-13));
  }
}

TEST_CASE("exponential radial field: analytic Hessian matches differentiated gradient") {
  auto us = make_u_star("exp_radial", 3, 0.4, Vec::Zero(3), 0.0);
  auto eng = oracle::engine_for(19, 0, 0);
  for (int rep = 0; rep < 10; ++rep) {
    Vec x = oracle::gaussian_vec(3, eng);
    Mat H = us.hess(x);
    const double h = 1e-5;
    for (int m = 0; m < 3; ++m) {
      Vec e = Vec::Zero(3);
      e[m] = h;
      Vec fd = (us.grad(x + e) - us.grad(x - e)) / (2.0 * h);
      for (int i = 0; i < 3; ++i)
        CHECK(H(i, m) == doctest::Approx(fd[i]).epsilon(1e-7));
    }
    // Laplacian by hand: e^(s|x|^2/2) (n s + s^2 |x|^2).
    double s = 0.4, q = x.squaredNorm();
    CHECK(H.trace() == doctest::Approx(std::exp(0.5 * s * q) *
                                       (3.0 * s + s * s * q)));
  }
}

TEST_CASE("translation transform round-trips exactly") {
  auto prm = params();
  prm.s = 0.8;
  auto A = make_A("skew_projector_A", 3, prm);
  Vec shift(3);
  shift << 0.3, -1.2, 2.0;
  Mat I = Mat::Identity(3, 3);
  auto At = A.transformed(shift, I);
  auto Aback = At.transformed(-shift, I);
  auto eng = oracle::engine_for(20, 0, 0);
  for (int rep = 0; rep < 10; ++rep) {
    Vec x = oracle::gaussian_vec(3, eng), p = oracle::gaussian_vec(3, eng);
    double z = oracle::gaussian_vec(1, eng)[0];
    CHECK((At.value(x + shift, z, p) - A.value(x, z, p)).cwiseAbs().maxCoeff() <
          1e-15);
    CHECK((Aback.value(x, z, p) - A.value(x, z, p)).cwiseAbs().maxCoeff() <
          1e-15);
    AJet a = A.jet(x, z, p, 2), b = Aback.jet(x, z, p, 2);
    CHECK(t3_diff(a.dp, b.dp) < 1e-14);
    CHECK(t4_diff(a.dpp, b.dpp) < 1e-14);
  }

  auto prmB = params();
  prmB.t = 0.6;
  auto B = make_B("power_B", 3, prmB);
  auto Bt = B.transformed(shift, I);
  for (int rep = 0; rep < 5; ++rep) {
    Vec x = oracle::gaussian_vec(3, eng), p = oracle::gaussian_vec(3, eng);
    BtJet a = B.btilde_jet(2, x, 0.0, p, 2);
    BtJet b = Bt.btilde_jet(2, x + shift, 0.0, p, 2);
    CHECK(a.Bt == doctest::Approx(b.Bt).epsilon(1e-15));
    CHECK((a.dp - b.dp).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((a.dpp - b.dpp).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("rotation transform: conjugated jets agree with finite differences of the conjugated value") {
  auto eng = oracle::engine_for(21, 0, 0);
  Mat Q = oracle::random_orthogonal(3, eng);
  Vec shift = oracle::gaussian_vec(3, eng);
  auto prm = params();
  prm.a = 0.3;
  auto A = make_A("x_diag_A", 3, prm).transformed(shift, Q);
  auto Afd = A.with_fd_derivatives();
  for (int rep = 0; rep < 6; ++rep) {
    Vec x = oracle::gaussian_vec(3, eng), p = oracle::gaussian_vec(3, eng);
    double z = oracle::gaussian_vec(1, eng)[0];
    AJet a = A.jet(x, z, p, 2), f = Afd.jet(x, z, p, 2);
    double scale = 1.0 + a.A.cwiseAbs().maxCoeff();
    CHECK(t3_diff(a.dx, f.dx) < 1e-6 * scale);
    CHECK(t3_diff(a.dp, f.dp) < 1e-6 * scale);
    CHECK(t4_diff(a.dpp, f.dpp) < 1e-5 * scale);
    CHECK((a.dz - f.dz).cwiseAbs().maxCoeff() < 1e-6 * scale);
  }

  // Radially symmetric source is rotation invariant.
  auto prmB = params();
  prmB.t = 0.6;
  auto B = make_B("power_B", 3, prmB);
  auto Brot = B.transformed(Vec::Zero(3), Q);
  for (int rep = 0; rep < 6; ++rep) {
    Vec x = oracle::gaussian_vec(3, eng), p = oracle::gaussian_vec(3, eng);
    BtJet a = B.btilde_jet(2, x, 0.0, p, 2);
    BtJet b = Brot.btilde_jet(2, x, 0.0, p, 2);
    CHECK(std::abs(a.Bt - b.Bt) < 1e-14);
    CHECK((a.dp - b.dp).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((a.dpp - b.dpp).cwiseAbs().maxCoeff() < 1e-13);
  }

  Mat notQ = Mat::Identity(3, 3);
  notQ(0, 1) = 0.5;
  CHECK_THROWS_AS((void)B.transformed(Vec::Zero(3), notQ),
                  std::invalid_argument);
}

TEST_CASE("dpp tensors are symmetric in both index pairs") {
  auto eng = oracle::engine_for(22, 0, 0);
  auto prm = params();
  prm.s = 0.4;
  for (const char* name : {"conformal_A_as_printed", "skew_projector_A"}) {
    auto A = make_A(name, 3, prm);
    Vec x = oracle::gaussian_vec(3, eng), p = oracle::gaussian_vec(3, eng);
    Tensor4 T = A.jet(x, 0.0, p, 2).dpp;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            CHECK(T(i, j, k, l) == T(j, i, k, l));
            CHECK(T(i, j, k, l) == T(i, j, l, k));
          }
  }
}

TEST_CASE("problem assembly validates inputs and propagates the u-dependence flag") {
  Box box{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)};
  auto phi = [](const Vec&) { return 0.0; };
  auto A0 = make_A("zero_A", 2, params());
  auto B0 = make_B("const_B", 2, params());

  auto P = make_problem(2, 2, box, A0, B0, phi);
  CHECK(P.n == 2);
  CHECK(P.k == 2);
  CHECK_FALSE(P.depends_on_u);

  auto Pu = make_problem(2, 1, box, make_A("u_diag_A", 2, params()), B0, phi);
  CHECK(Pu.depends_on_u);
  auto Pb = make_problem(2, 1, box, A0, make_B("exp_u_B", 2, params()), phi);
  CHECK(Pb.depends_on_u);

  CHECK_THROWS_AS((void)make_problem(2, 3, box, A0, B0, phi),
                  std::domain_error);
  CHECK_THROWS_AS((void)make_problem(2, 0, box, A0, B0, phi),
                  std::domain_error);
  CHECK_THROWS_AS(
      (void)make_problem(2, 1, box, make_A("zero_A", 3, params()), B0, phi),
      std::invalid_argument);
  CHECK_THROWS_AS((void)make_problem(2, 1, box, A0, B0, nullptr),
                  std::invalid_argument);
  Box bad{Vec::Constant(2, 1.0), Vec::Constant(2, -1.0)};
  CHECK_THROWS_AS((void)make_problem(2, 1, bad, A0, B0, phi),
                  std::invalid_argument);
}

TEST_CASE("jet order field and lower-order evaluation") {
  auto A = make_A("conformal_A_signflip", 2, params());
  Vec x = Vec::Zero(2), p = Vec::Ones(2);
  AJet j0 = A.jet(x, 0.0, p, 0);
  CHECK(j0.order == 0);
  CHECK(j0.A(0, 0) == doctest::Approx(1.0 * 0.5 * 2.0 - 1.0));
  AJet j1 = A.jet(x, 0.0, p, 1);
  CHECK(j1.order == 1);
  CHECK(j1.dp.n == 2);

  auto B = make_B("const_B", 2, params());
  BtJet b0 = B.btilde_jet(1, x, 0.0, p, 0);
  CHECK(b0.order == 0);
  CHECK(b0.Bt == doctest::Approx(1.0));
}
