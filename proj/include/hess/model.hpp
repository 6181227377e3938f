#pragma once

#include <functional>
#include <map>
#include <string>

#include "hess/types.hpp"

// Problem data: the augmenting coefficient A(x, z, p), the source B(x, z, p)
// with its normalized jet, boundary data, and a named catalog of instances.
namespace hess::model {

// dT(i,j,m) = derivative of A_ij along axis m (x or p).
struct Tensor3 {
  int n = 0;
  std::vector<double> a;

  Tensor3() = default;
  explicit Tensor3(int n_) : n(n_), a(static_cast<size_t>(n_) * n_ * n_, 0.0) {}

  double& operator()(int i, int j, int m) {
    return a[(static_cast<size_t>(i) * n + j) * n + m];
  }
  double operator()(int i, int j, int m) const {
    return a[(static_cast<size_t>(i) * n + j) * n + m];
  }
  double max_abs() const {
    double r = 0.0;
    for (double v : a) r = std::max(r, std::abs(v));
    return r;
  }
};

// dT(i,j,k,l) = d^2 A_ij / dp_k dp_l.
struct Tensor4 {
  int n = 0;
  std::vector<double> a;

  Tensor4() = default;
  explicit Tensor4(int n_)
      : n(n_), a(static_cast<size_t>(n_) * n_ * n_ * n_, 0.0) {}

  double& operator()(int i, int j, int k, int l) {
    return a[((static_cast<size_t>(i) * n + j) * n + k) * n + l];
  }
  double operator()(int i, int j, int k, int l) const {
    return a[((static_cast<size_t>(i) * n + j) * n + k) * n + l];
  }
  double max_abs() const {
    double r = 0.0;
    for (double v : a) r = std::max(r, std::abs(v));
    return r;
  }
};

// Jet of A at one evaluation point. Orders: 0 fills A only, 1 adds dx/dz/dp,
// 2 adds dpp.
struct AJet {
  Mat A;
  Tensor3 dx;
  Mat dz;
  Tensor3 dp;
  Tensor4 dpp;
  int order = 0;
};

class CoefficientA {
 public:
  using ValueFn = std::function<Mat(const Vec& x, double z, const Vec& p)>;
  struct Derivatives {
    std::function<Tensor3(const Vec&, double, const Vec&)> dx;
    std::function<Mat(const Vec&, double, const Vec&)> dz;
    std::function<Tensor3(const Vec&, double, const Vec&)> dp;
    std::function<Tensor4(const Vec&, double, const Vec&)> dpp;
  };
  enum class Mode { Analytic, FiniteDifference };

  static CoefficientA analytic(std::string id, int n, bool depends_on_u,
                               ValueFn value, Derivatives der);
  static CoefficientA finite_difference(std::string id, int n,
                                        bool depends_on_u, ValueFn value);

  Mat value(const Vec& x, double z, const Vec& p) const;
  AJet jet(const Vec& x, double z, const Vec& p, int order) const;

  // Same evaluator, derivatives by central differences with step
  // 1e-5 * (1 + |argument|); used to cross-check analytic closures.
  CoefficientA with_fd_derivatives() const;

  // Conjugated and shifted instance: A'(x, z, p) =
  // Q A(Q^T (x - shift), z, Q^T p) Q^T, with all derivative tensors rotated.
  CoefficientA transformed(const Vec& shift, const Mat& Q) const;

  const std::string& id() const { return id_; }
  int n() const { return n_; }
  bool depends_on_u() const { return depends_on_u_; }
  Mode mode() const { return mode_; }
  bool has_analytic_dz() const { return static_cast<bool>(der_.dz); }

 private:
  CoefficientA() = default;

  std::string id_;
  int n_ = 0;
  bool depends_on_u_ = false;
  Mode mode_ = Mode::Analytic;
  ValueFn value_;
  Derivatives der_;
};

// Jet of the normalized source Btilde = B^{1/k}. Evaluation with B <= 0
// raises PositivityError (a hypothesis breach, never masked).
struct BtJet {
  double B = 0.0;
  double Bt = 0.0;
  Vec dp;
  double dz = 0.0;
  Mat dpp;
  int order = 0;
};

class SourceB {
 public:
  using ValueFn = std::function<double(const Vec& x, double z, const Vec& p)>;
  struct Derivatives {
    std::function<Vec(const Vec&, double, const Vec&)> dp;
    std::function<double(const Vec&, double, const Vec&)> dz;
    std::function<Mat(const Vec&, double, const Vec&)> dpp;
  };
  enum class Mode { Analytic, FiniteDifference };

  static SourceB analytic(std::string id, int n, bool depends_on_u,
                          ValueFn value, Derivatives der);
  static SourceB finite_difference(std::string id, int n, bool depends_on_u,
                                   ValueFn value);

  double value(const Vec& x, double z, const Vec& p) const;
  BtJet btilde_jet(int k, const Vec& x, double z, const Vec& p,
                   int order) const;

  SourceB with_fd_derivatives() const;
  SourceB transformed(const Vec& shift, const Mat& Q) const;

  const std::string& id() const { return id_; }
  int n() const { return n_; }
  bool depends_on_u() const { return depends_on_u_; }
  Mode mode() const { return mode_; }
  bool has_analytic_dz() const { return static_cast<bool>(der_.dz); }

 private:
  SourceB() = default;

  std::string id_;
  int n_ = 0;
  bool depends_on_u_ = false;
  Mode mode_ = Mode::Analytic;
  ValueFn value_;
  Derivatives der_;
};

struct ProblemSpec {
  int n = 0;
  int k = 1;
  Box box;
  CoefficientA A;
  SourceB B;
  std::function<double(const Vec&)> phi;  // Dirichlet boundary data
  bool depends_on_u = false;
};

// --- catalog -----------------------------------------------------------------

struct CatalogParams {
  double s = 1.0;            // skew_projector_A strength
  double a = 0.1;            // x_diag_A slope
  std::string g = "exp";     // u_diag_A profile: "exp" or "linear"
  double slope = 1.0;        // u_diag_A linear slope
  double b0 = 1.0;           // const_B / power_B / exp_u_B amplitude
  double t = 1.0;            // power_B exponent
};

// Names: zero_A, conformal_A_as_printed, conformal_A_signflip,
// skew_projector_A, x_diag_A, u_diag_A, ot_quadratic_cost.
CoefficientA make_A(const std::string& name, int n, const CatalogParams& prm);

// Names: const_B, power_B, exp_u_B, ot_quadratic_cost.
SourceB make_B(const std::string& name, int n, const CatalogParams& prm);

// Smooth scalar field with analytic first and second derivatives.
struct SmoothFn {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
};

// Names: quadratic (mu/2 |x-c|^2 + offset), exp_radial (exp(scale |x|^2 / 2)).
SmoothFn make_u_star(const std::string& name, int n, double mu_or_scale,
                     const Vec& center, double offset = 0.0);

// Source manufactured from a smooth field: B(x) = S_k[D^2 u* - A(x, u*, Du*)],
// evaluated with the analytic jet of u*. The result depends on x only.
SourceB manufactured_B(const CoefficientA& A, int k, const SmoothFn& u_star);

ProblemSpec make_problem(int n, int k, Box box, CoefficientA A, SourceB B,
                         std::function<double(const Vec&)> phi);

}  // namespace hess::model
