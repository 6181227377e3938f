#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace hess {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Thrown when a tuple or matrix leaves the admissible cone. Carries the first
// violated symmetric-function index j and the margin S_j that went negative.
class AdmissibilityError : public std::runtime_error {
 public:
  AdmissibilityError(const std::string& what, int violated_j, double margin,
                     long node = -1)
      : std::runtime_error(what + " (j=" + std::to_string(violated_j) +
                           ", margin=" + std::to_string(margin) +
                           (node >= 0 ? ", node=" + std::to_string(node) : "") +
                           ")"),
        j_(violated_j),
        margin_(margin),
        node_(node) {}

  int violated_j() const noexcept { return j_; }
  double margin() const noexcept { return margin_; }
  long node() const noexcept { return node_; }

 private:
  int j_;
  double margin_;
  long node_;
};

// Hypothesis breach on the source term (B must stay positive). Reported, never masked.
class PositivityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal numerical inconsistency (dual-route disagreement, bracket cap, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid run configuration; pointer is a JSON-pointer locating the offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string pointer = "")
      : std::runtime_error(pointer.empty() ? what
                                           : what + " [at " + pointer + "]"),
        pointer_(std::move(pointer)) {}

  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

class NoConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LinearSolveFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

// Axis-aligned box domain.
struct Box {
  Vec lo, hi;

  int n() const { return static_cast<int>(lo.size()); }
  Vec center() const { return 0.5 * (lo + hi); }
  double extent(int axis) const { return hi[axis] - lo[axis]; }

  void validate() const {
    if (lo.size() != hi.size() || lo.size() == 0)
      throw std::invalid_argument("Box: dimension mismatch");
    for (int a = 0; a < n(); ++a)
      if (!(hi[a] > lo[a])) throw std::invalid_argument("Box: hi <= lo");
  }
};

// Symmetric matrix; construction symmetrizes and rejects inputs that are not
// symmetric to 1e-12 relative.
class SymMat {
 public:
  explicit SymMat(Mat m) {
    if (m.rows() != m.cols())
      throw std::invalid_argument("SymMat: matrix must be square");
    if (!m.allFinite()) throw std::invalid_argument("SymMat: non-finite entries");
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
      throw std::invalid_argument("SymMat: asymmetry " + std::to_string(asym) +
                                  " exceeds tolerance");
    m_ = 0.5 * (m + m.transpose());
  }

  static SymMat Identity(int n) { return SymMat(Mat::Identity(n, n)); }

  const Mat& mat() const noexcept { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  int n() const noexcept { return static_cast<int>(m_.rows()); }

 private:
  Mat m_;
};

}  // namespace hess
