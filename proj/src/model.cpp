#include "hess/model.hpp"

#include <cmath>

#include "hess/symfun.hpp"

namespace hess::model {

namespace {

double kron(int i, int j) { return i == j ? 1.0 : 0.0; }

void check_point(int n, const Vec& x, const Vec& p) {
  if (static_cast<int>(x.size()) != n || static_cast<int>(p.size()) != n)
    throw std::invalid_argument("evaluation point dimension mismatch");
}

Tensor3 rotate3(const Tensor3& in, const Mat& Q) {
  const int n = in.n;
  Tensor3 out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < n; ++m) {
        double s = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
              s += Q(i, a) * Q(j, b) * Q(m, c) * in(a, b, c);
        out(i, j, m) = s;
      }
  return out;
}

Tensor4 rotate4(const Tensor4& in, const Mat& Q) {
  const int n = in.n;
  // Contract one slot at a time to keep this O(n^5) instead of O(n^8).
  Tensor4 t1(n), t2(n), t3(n), out(n);
  for (int i = 0; i < n; ++i)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = 0.0;
          for (int a = 0; a < n; ++a) s += Q(i, a) * in(a, b, c, d);
          t1(i, b, c, d) = s;
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = 0.0;
          for (int b = 0; b < n; ++b) s += Q(j, b) * t1(i, b, c, d);
          t2(i, j, c, d) = s;
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int d = 0; d < n; ++d) {
          double s = 0.0;
          for (int c = 0; c < n; ++c) s += Q(k, c) * t2(i, j, c, d);
          t3(i, j, k, d) = s;
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int d = 0; d < n; ++d) s += Q(l, d) * t3(i, j, k, d);
          out(i, j, k, l) = s;
        }
  return out;
}

double fd_step(double scale) { return 1e-5 * (1.0 + scale); }

}  // namespace

// --- CoefficientA -------------------------------------------------------------

CoefficientA CoefficientA::analytic(std::string id, int n, bool depends_on_u,
                                    ValueFn value, Derivatives der) {
  CoefficientA a;
  a.id_ = std::move(id);
  a.n_ = n;
  a.depends_on_u_ = depends_on_u;
  a.mode_ = Mode::Analytic;
  a.value_ = std::move(value);
  a.der_ = std::move(der);
  return a;
}

CoefficientA CoefficientA::finite_difference(std::string id, int n,
                                             bool depends_on_u, ValueFn value) {
  CoefficientA a;
  a.id_ = std::move(id);
  a.n_ = n;
  a.depends_on_u_ = depends_on_u;
  a.mode_ = Mode::FiniteDifference;
  a.value_ = std::move(value);
  return a;
}

Mat CoefficientA::value(const Vec& x, double z, const Vec& p) const {
  check_point(n_, x, p);
  return value_(x, z, p);
}

AJet CoefficientA::jet(const Vec& x, double z, const Vec& p, int order) const {
  check_point(n_, x, p);
  AJet J;
  J.A = value_(x, z, p);
  J.order = order;
  if (order < 1) return J;

  const bool an = (mode_ == Mode::Analytic);
  const double hx = fd_step(x.norm());
  const double hz = fd_step(std::abs(z));
  const double hp = fd_step(p.norm());

  if (an && der_.dx) {
    J.dx = der_.dx(x, z, p);
  } else if (an) {
    J.dx = Tensor3(n_);
  } else {
    J.dx = Tensor3(n_);
    for (int m = 0; m < n_; ++m) {
      Vec xp = x, xm = x;
      xp[m] += hx;
      xm[m] -= hx;
      Mat d = (value_(xp, z, p) - value_(xm, z, p)) / (2.0 * hx);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) J.dx(i, j, m) = d(i, j);
    }
  }

  if (an && der_.dz) {
    J.dz = der_.dz(x, z, p);
  } else if (an) {
    J.dz = Mat::Zero(n_, n_);
  } else {
    J.dz = (value_(x, z + hz, p) - value_(x, z - hz, p)) / (2.0 * hz);
  }

  if (an && der_.dp) {
    J.dp = der_.dp(x, z, p);
  } else if (an) {
    J.dp = Tensor3(n_);
  } else {
    J.dp = Tensor3(n_);
    for (int m = 0; m < n_; ++m) {
      Vec pp = p, pm = p;
      pp[m] += hp;
      pm[m] -= hp;
      Mat d = (value_(x, z, pp) - value_(x, z, pm)) / (2.0 * hp);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) J.dp(i, j, m) = d(i, j);
    }
  }

  if (order < 2) return J;

  if (an && der_.dpp) {
    J.dpp = der_.dpp(x, z, p);
  } else if (an) {
    J.dpp = Tensor4(n_);
  } else {
    J.dpp = Tensor4(n_);
    const Mat A0 = J.A;
    for (int k = 0; k < n_; ++k) {
      for (int l = k; l < n_; ++l) {
        Mat d;
        if (k == l) {
          Vec pp = p, pm = p;
          pp[k] += hp;
          pm[k] -= hp;
          d = (value_(x, z, pp) - 2.0 * A0 + value_(x, z, pm)) / (hp * hp);
        } else {
          Vec a = p, b = p, c = p, e = p;
          a[k] += hp; a[l] += hp;
          b[k] += hp; b[l] -= hp;
          c[k] -= hp; c[l] += hp;
          e[k] -= hp; e[l] -= hp;
          d = (value_(x, z, a) - value_(x, z, b) - value_(x, z, c) +
               value_(x, z, e)) /
              (4.0 * hp * hp);
        }
        for (int i = 0; i < n_; ++i)
          for (int j = 0; j < n_; ++j) {
            J.dpp(i, j, k, l) = d(i, j);
            J.dpp(i, j, l, k) = d(i, j);
          }
      }
    }
  }
  return J;
}

CoefficientA CoefficientA::with_fd_derivatives() const {
  return finite_difference(id_ + "#fd", n_, depends_on_u_, value_);
}

CoefficientA CoefficientA::transformed(const Vec& shift, const Mat& Q) const {
  if (static_cast<int>(shift.size()) != n_ || Q.rows() != n_ || Q.cols() != n_)
    throw std::invalid_argument("transform dimension mismatch");
  const Mat Qt = Q.transpose();
  if ((Q * Qt - Mat::Identity(n_, n_)).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("transform matrix is not orthogonal");

  CoefficientA inner = *this;
  auto map_x = [shift, Qt](const Vec& x) { return Vec(Qt * (x - shift)); };
  auto map_p = [Qt](const Vec& p) { return Vec(Qt * p); };

  Derivatives der;
  der.dx = [inner, map_x, map_p, Q](const Vec& x, double z, const Vec& p) {
    return rotate3(inner.jet(map_x(x), z, map_p(p), 1).dx, Q);
  };
  der.dz = [inner, map_x, map_p, Q, Qt](const Vec& x, double z, const Vec& p) {
    return Mat(Q * inner.jet(map_x(x), z, map_p(p), 1).dz * Qt);
  };
  der.dp = [inner, map_x, map_p, Q](const Vec& x, double z, const Vec& p) {
    return rotate3(inner.jet(map_x(x), z, map_p(p), 1).dp, Q);
  };
  der.dpp = [inner, map_x, map_p, Q](const Vec& x, double z, const Vec& p) {
    return rotate4(inner.jet(map_x(x), z, map_p(p), 2).dpp, Q);
  };
  auto val = [inner, map_x, map_p, Q, Qt](const Vec& x, double z, const Vec& p) {
    return Mat(Q * inner.value(map_x(x), z, map_p(p)) * Qt);
  };
  return analytic(id_ + "#transformed", n_, depends_on_u_, val, der);
}

// --- SourceB -------------------------------------------------------------------

SourceB SourceB::analytic(std::string id, int n, bool depends_on_u, ValueFn value,
                          Derivatives der) {
  SourceB b;
  b.id_ = std::move(id);
  b.n_ = n;
  b.depends_on_u_ = depends_on_u;
  b.mode_ = Mode::Analytic;
  b.value_ = std::move(value);
  b.der_ = std::move(der);
  return b;
}

SourceB SourceB::finite_difference(std::string id, int n, bool depends_on_u,
                                   ValueFn value) {
  SourceB b;
  b.id_ = std::move(id);
  b.n_ = n;
  b.depends_on_u_ = depends_on_u;
  b.mode_ = Mode::FiniteDifference;
  b.value_ = std::move(value);
  return b;
}

double SourceB::value(const Vec& x, double z, const Vec& p) const {
  check_point(n_, x, p);
  return value_(x, z, p);
}

BtJet SourceB::btilde_jet(int k, const Vec& x, double z, const Vec& p,
                          int order) const {
  check_point(n_, x, p);
  if (k < 1) throw std::domain_error("btilde_jet: k must be >= 1");
  BtJet J;
  J.order = order;
  J.B = value_(x, z, p);
  if (!(J.B > 0.0))
    throw PositivityError("source B = " + std::to_string(J.B) +
                          " is not positive (hypothesis breach)");
  const double inv_k = 1.0 / k;
  J.Bt = std::pow(J.B, inv_k);
  if (order < 1) return J;

  const bool an = (mode_ == Mode::Analytic);
  const double hp = fd_step(p.norm());
  const double hz = fd_step(std::abs(z));

  Vec dBdp;
  if (an) {
    dBdp = der_.dp ? der_.dp(x, z, p) : Vec(Vec::Zero(n_));
  } else {
    dBdp.resize(n_);
    for (int m = 0; m < n_; ++m) {
      Vec pp = p, pm = p;
      pp[m] += hp;
      pm[m] -= hp;
      dBdp[m] = (value_(x, z, pp) - value_(x, z, pm)) / (2.0 * hp);
    }
  }
  double dBdz;
  if (an) {
    dBdz = der_.dz ? der_.dz(x, z, p) : 0.0;
  } else {
    dBdz = (value_(x, z + hz, p) - value_(x, z - hz, p)) / (2.0 * hz);
  }
  const double c = inv_k * std::pow(J.B, inv_k - 1.0);
  J.dp = c * dBdp;
  J.dz = c * dBdz;
  if (order < 2) return J;

  Mat dBdpp;
  if (an) {
    dBdpp = der_.dpp ? der_.dpp(x, z, p) : Mat(Mat::Zero(n_, n_));
  } else {
    dBdpp.resize(n_, n_);
    const double B0 = J.B;
    for (int a = 0; a < n_; ++a) {
      for (int b = a; b < n_; ++b) {
        double d;
        if (a == b) {
          Vec pp = p, pm = p;
          pp[a] += hp;
          pm[a] -= hp;
          d = (value_(x, z, pp) - 2.0 * B0 + value_(x, z, pm)) / (hp * hp);
        } else {
          Vec q1 = p, q2 = p, q3 = p, q4 = p;
          q1[a] += hp; q1[b] += hp;
          q2[a] += hp; q2[b] -= hp;
          q3[a] -= hp; q3[b] += hp;
          q4[a] -= hp; q4[b] -= hp;
          d = (value_(x, z, q1) - value_(x, z, q2) - value_(x, z, q3) +
               value_(x, z, q4)) /
              (4.0 * hp * hp);
        }
        dBdpp(a, b) = dBdpp(b, a) = d;
      }
    }
  }
  J.dpp = inv_k * (inv_k - 1.0) * std::pow(J.B, inv_k - 2.0) * dBdp *
              dBdp.transpose() +
          c * dBdpp;
  return J;
}

SourceB SourceB::with_fd_derivatives() const {
  return finite_difference(id_ + "#fd", n_, depends_on_u_, value_);
}

SourceB SourceB::transformed(const Vec& shift, const Mat& Q) const {
  if (static_cast<int>(shift.size()) != n_ || Q.rows() != n_ || Q.cols() != n_)
    throw std::invalid_argument("transform dimension mismatch");
  const Mat Qt = Q.transpose();
  if ((Q * Qt - Mat::Identity(n_, n_)).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("transform matrix is not orthogonal");
  SourceB inner = *this;
  auto val = [inner, shift, Qt](const Vec& x, double z, const Vec& p) {
    return inner.value(Qt * (x - shift), z, Qt * p);
  };
  // Derivatives route through the inner jet so both modes transform alike.
  Derivatives der;
  der.dp = [inner, shift, Q, Qt](const Vec& x, double z, const Vec& p) {
    return Vec(Q * inner.btilde_jet(1, Qt * (x - shift), z, Qt * p, 1).dp);
  };
  der.dz = [inner, shift, Qt](const Vec& x, double z, const Vec& p) {
    return inner.btilde_jet(1, Qt * (x - shift), z, Qt * p, 1).dz;
  };
  der.dpp = [inner, shift, Q, Qt](const Vec& x, double z, const Vec& p) {
    return Mat(Q * inner.btilde_jet(1, Qt * (x - shift), z, Qt * p, 2).dpp * Qt);
  };
  return analytic(id_ + "#transformed", n_, depends_on_u_, val, der);
}

// --- catalog -------------------------------------------------------------------

namespace {

// A = c1 |p|^2 I + c2 p p^T with constant second derivative tensor.
CoefficientA quadratic_p_A(std::string id, int n, double c1, double c2) {
  auto val = [c1, c2](const Vec&, double, const Vec& p) {
    const int nn = static_cast<int>(p.size());
    return Mat(c1 * p.squaredNorm() * Mat::Identity(nn, nn) +
               c2 * p * p.transpose());
  };
  CoefficientA::Derivatives der;
  der.dp = [c1, c2, n](const Vec&, double, const Vec& p) {
    Tensor3 t(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int m = 0; m < n; ++m)
          t(i, j, m) = 2.0 * c1 * p[m] * kron(i, j) +
                       c2 * (kron(i, m) * p[j] + kron(j, m) * p[i]);
    return t;
  };
  der.dpp = [c1, c2, n](const Vec&, double, const Vec&) {
    Tensor4 t(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            t(i, j, k, l) = 2.0 * c1 * kron(k, l) * kron(i, j) +
                            c2 * (kron(i, k) * kron(j, l) +
                                  kron(i, l) * kron(j, k));
    return t;
  };
  return CoefficientA::analytic(std::move(id), n, false, val, der);
}

}  // namespace

CoefficientA make_A(const std::string& name, int n, const CatalogParams& prm) {
  if (name == "zero_A") {
    auto val = [n](const Vec&, double, const Vec&) {
      return Mat(Mat::Zero(n, n));
    };
    CoefficientA::Derivatives der;
    der.dx = [n](const Vec&, double, const Vec&) { return Tensor3(n); };
    der.dz = [n](const Vec&, double, const Vec&) {
      return Mat(Mat::Zero(n, n));
    };
    der.dp = [n](const Vec&, double, const Vec&) { return Tensor3(n); };
    der.dpp = [n](const Vec&, double, const Vec&) { return Tensor4(n); };
    return CoefficientA::analytic("zero_A", n, false, val, der);
  }
  if (name == "conformal_A_as_printed")
    return quadratic_p_A(name, n, -0.5, 1.0);
  if (name == "conformal_A_signflip")
    return quadratic_p_A(name, n, 0.5, -1.0);
  if (name == "skew_projector_A") {
    if (prm.s < 0.0)
      throw std::invalid_argument("skew_projector_A: s must be >= 0");
    return quadratic_p_A(name, n, 0.5 * prm.s, -prm.s);
  }
  if (name == "x_diag_A") {
    const double a = prm.a;
    auto val = [a, n](const Vec& x, double, const Vec&) {
      Mat m = Mat::Zero(n, n);
      for (int i = 0; i < n; ++i) m(i, i) = a * x[i];
      return m;
    };
    CoefficientA::Derivatives der;
    der.dx = [a, n](const Vec&, double, const Vec&) {
      Tensor3 t(n);
      for (int i = 0; i < n; ++i) t(i, i, i) = a;
      return t;
    };
    return CoefficientA::analytic("x_diag_A", n, false, val, der);
  }
  if (name == "u_diag_A") {
    std::function<double(double)> g, gprime;
    if (prm.g == "exp") {
      g = [](double z) { return std::exp(z); };
      gprime = [](double z) { return std::exp(z); };
    } else if (prm.g == "linear") {
      const double sl = prm.slope;
      g = [sl](double z) { return sl * z; };
      gprime = [sl](double) { return sl; };
    } else {
      throw std::invalid_argument("u_diag_A: unknown profile '" + prm.g + "'");
    }
    auto val = [g, n](const Vec&, double z, const Vec&) {
      return Mat(g(z) * Mat::Identity(n, n));
    };
    CoefficientA::Derivatives der;
    der.dz = [gprime, n](const Vec&, double z, const Vec&) {
      return Mat(gprime(z) * Mat::Identity(n, n));
    };
    return CoefficientA::analytic("u_diag_A", n, true, val, der);
  }
  if (name == "ot_quadratic_cost") {
    auto val = [n](const Vec&, double, const Vec&) {
      return Mat(Mat::Identity(n, n));
    };
    CoefficientA::Derivatives der;  // constant: derivative closures default to zero
    der.dx = [n](const Vec&, double, const Vec&) { return Tensor3(n); };
    der.dz = [n](const Vec&, double, const Vec&) {
      return Mat(Mat::Zero(n, n));
    };
    der.dp = [n](const Vec&, double, const Vec&) { return Tensor3(n); };
    der.dpp = [n](const Vec&, double, const Vec&) { return Tensor4(n); };
    return CoefficientA::analytic("ot_quadratic_cost_A", n, false, val, der);
  }
  throw std::invalid_argument("unknown coefficient catalog entry '" + name + "'");
}

SourceB make_B(const std::string& name, int n, const CatalogParams& prm) {
  if (name == "const_B") {
    if (!(prm.b0 > 0.0))
      throw PositivityError("const_B: b0 must be positive");
    const double b0 = prm.b0;
    auto val = [b0](const Vec&, double, const Vec&) { return b0; };
    SourceB::Derivatives der;
    der.dp = [n](const Vec&, double, const Vec&) { return Vec(Vec::Zero(n)); };
    der.dz = [](const Vec&, double, const Vec&) { return 0.0; };
    der.dpp = [n](const Vec&, double, const Vec&) {
      return Mat(Mat::Zero(n, n));
    };
    return SourceB::analytic("const_B", n, false, val, der);
  }
  if (name == "power_B") {
    if (!(prm.b0 > 0.0))
      throw PositivityError("power_B: b0 must be positive");
    const double b0 = prm.b0, t = prm.t;
    auto val = [b0, t](const Vec&, double, const Vec& p) {
      return b0 * std::pow(1.0 + p.squaredNorm(), t);
    };
    SourceB::Derivatives der;
    der.dp = [b0, t](const Vec&, double, const Vec& p) {
      const double q = p.squaredNorm();
      return Vec(2.0 * b0 * t * std::pow(1.0 + q, t - 1.0) * p);
    };
    der.dz = [](const Vec&, double, const Vec&) { return 0.0; };
    der.dpp = [b0, t, n](const Vec&, double, const Vec& p) {
      const double q = p.squaredNorm();
      return Mat(2.0 * b0 * t * std::pow(1.0 + q, t - 1.0) *
                     Mat::Identity(n, n) +
                 4.0 * b0 * t * (t - 1.0) * std::pow(1.0 + q, t - 2.0) * p *
                     p.transpose());
    };
    return SourceB::analytic("power_B", n, false, val, der);
  }
  if (name == "exp_u_B") {
    if (!(prm.b0 > 0.0))
      throw PositivityError("exp_u_B: b0 must be positive");
    const double b0 = prm.b0;
    auto val = [b0](const Vec&, double z, const Vec&) {
      return b0 * std::exp(z);
    };
    SourceB::Derivatives der;
    der.dp = [n](const Vec&, double, const Vec&) { return Vec(Vec::Zero(n)); };
    der.dz = [b0](const Vec&, double z, const Vec&) { return b0 * std::exp(z); };
    der.dpp = [n](const Vec&, double, const Vec&) {
      return Mat(Mat::Zero(n, n));
    };
    return SourceB::analytic("exp_u_B", n, true, val, der);
  }
  if (name == "ot_quadratic_cost") {
    // Quadratic-cost transport with unit source density and Gaussian target:
    // B(x, p) = exp(|x - p|^2 / 2), log-convex in p.
    auto val = [](const Vec& x, double, const Vec& p) {
      return std::exp(0.5 * (x - p).squaredNorm());
    };
    SourceB::Derivatives der;
    der.dp = [](const Vec& x, double, const Vec& p) {
      return Vec(std::exp(0.5 * (x - p).squaredNorm()) * (p - x));
    };
    der.dz = [](const Vec&, double, const Vec&) { return 0.0; };
    der.dpp = [n](const Vec& x, double, const Vec& p) {
      const Vec d = p - x;
      return Mat(std::exp(0.5 * d.squaredNorm()) *
                 (d * d.transpose() + Mat::Identity(n, n)));
    };
    return SourceB::analytic("ot_quadratic_cost_B", n, false, val, der);
  }
  throw std::invalid_argument("unknown source catalog entry '" + name + "'");
}

SmoothFn make_u_star(const std::string& name, int n, double mu_or_scale,
                     const Vec& center, double offset) {
  Vec c = center.size() ? center : Vec(Vec::Zero(n));
  if (static_cast<int>(c.size()) != n)
    throw std::invalid_argument("u_star center dimension mismatch");
  SmoothFn f;
  if (name == "quadratic") {
    const double mu = mu_or_scale;
    f.value = [mu, c, offset](const Vec& x) {
      return 0.5 * mu * (x - c).squaredNorm() + offset;
    };
    f.grad = [mu, c](const Vec& x) { return Vec(mu * (x - c)); };
    f.hess = [mu, n](const Vec&) {
      return Mat(mu * Mat::Identity(n, n));
    };
    return f;
  }
  if (name == "exp_radial") {
    const double s = mu_or_scale;
    f.value = [s, c, offset](const Vec& x) {
      return std::exp(0.5 * s * (x - c).squaredNorm()) + offset;
    };
    f.grad = [s, c](const Vec& x) {
      const Vec d = x - c;
      return Vec(s * std::exp(0.5 * s * d.squaredNorm()) * d);
    };
    f.hess = [s, c, n](const Vec& x) {
      const Vec d = x - c;
      const double e = std::exp(0.5 * s * d.squaredNorm());
      return Mat(e * (s * Mat::Identity(n, n) + s * s * d * d.transpose()));
    };
    return f;
  }
  throw std::invalid_argument("unknown u_star '" + name + "'");
}

SourceB manufactured_B(const CoefficientA& A, int k, const SmoothFn& u_star) {
  const int n = A.n();
  CoefficientA Ac = A;
  SmoothFn us = u_star;
  auto val = [Ac, us, k, n](const Vec& x, double, const Vec&) {
    const Vec g = us.grad(x);
    const Mat W = us.hess(x) - Ac.value(x, us.value(x), g);
    return symfun::detail::newton_chain(0.5 * (W + W.transpose()), k).S[k];
  };
  SourceB::Derivatives der;
  der.dp = [n](const Vec&, double, const Vec&) { return Vec(Vec::Zero(n)); };
  der.dz = [](const Vec&, double, const Vec&) { return 0.0; };
  der.dpp = [n](const Vec&, double, const Vec&) { return Mat(Mat::Zero(n, n)); };
  return SourceB::analytic("manufactured_B[" + Ac.id() + "]", n, false, val,
                           der);
}

ProblemSpec make_problem(int n, int k, Box box, CoefficientA A, SourceB B,
                         std::function<double(const Vec&)> phi) {
  box.validate();
  if (box.n() != n) throw std::invalid_argument("problem box dimension mismatch");
  if (A.n() != n || B.n() != n)
    throw std::invalid_argument("problem coefficient dimension mismatch");
  if (k < 1 || k > n)
    throw std::domain_error("problem index k must lie in [1, n]");
  if (!phi) throw std::invalid_argument("problem boundary data missing");
  const bool dep = A.depends_on_u() || B.depends_on_u();
  return ProblemSpec{n,          k,            std::move(box), std::move(A),
                     std::move(B), std::move(phi), dep};
}

}  // namespace hess::model
