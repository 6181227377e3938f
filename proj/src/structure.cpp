#include "hess/structure.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "hess/symfun.hpp"

namespace hess::structure {
namespace {

// Every sampled quantity is a pure function of (seed, stream, index), so the
// partition of the index range across workers cannot influence any margin.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 engine_at(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(stream));
  return std::mt19937_64(splitmix64(h ^ splitmix64(index)));
}

Vec gaussian(int n, std::mt19937_64& g) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(g);
  return v;
}

Vec draw_x(const Box& box, std::mt19937_64& g) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Vec x(box.n());
  for (int a = 0; a < box.n(); ++a)
    x[a] = box.lo[a] + ud(g) * (box.hi[a] - box.lo[a]);
  return x;
}

// Uniform in the ball of radius R: Gaussian direction, radius R * U^{1/n}.
Vec draw_p(int n, double R, std::mt19937_64& g) {
  Vec d = gaussian(n, g);
  double nrm = d.norm();
  if (nrm < 1e-300) return Vec::Zero(n);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  return d * (R * std::pow(ud(g), 1.0 / n) / nrm);
}

void draw_orthopair(int n, std::mt19937_64& g, Vec& xi, Vec& eta) {
  for (;;) {
    xi = gaussian(n, g);
    eta = gaussian(n, g);
    if (xi.norm() < 1e-8) continue;
    xi.normalize();
    eta -= eta.dot(xi) * xi;
    if (eta.norm() < 1e-8) continue;
    eta.normalize();
    return;
  }
}

Box sampling_box(const SamplingSpec& s, int n) {
  if (s.domain.n() == 0)
    return Box{Vec::Constant(n, -1.0), Vec::Constant(n, 1.0)};
  if (s.domain.n() != n)
    throw std::invalid_argument("SamplingSpec: domain dimension mismatch");
  return s.domain;
}

double linspace_at(double lo, double hi, int count, int i) {
  if (count <= 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / (count - 1);
}

double min_eig(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

struct Best {
  double margin = std::numeric_limits<double>::infinity();
  std::size_t index = 0;
};

// Minimum margin and its argmin index over [0, total). Workers take
// contiguous blocks; the reduction compares (margin, index) lexicographically,
// so the result is independent of the partition.
template <class MarginAt>
Best min_over(std::size_t total, int workers, const MarginAt& margin_at) {
  Best best;
  int nw = std::max(1, workers);
  nw = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(nw), std::max<std::size_t>(total, 1)));
  auto take = [&](Best& out, std::size_t lo, std::size_t hi,
                  std::exception_ptr& err) noexcept {
    try {
      for (std::size_t i = lo; i < hi; ++i) {
        double m = margin_at(i);
        if (m < out.margin || (m == out.margin && i < out.index))
          out = Best{m, i};
      }
    } catch (...) {
      err = std::current_exception();
    }
  };
  std::vector<Best> part(static_cast<std::size_t>(nw));
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(nw));
  if (nw == 1) {
    take(part[0], 0, total, errs[0]);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (total + nw - 1) / nw;
    for (int w = 0; w < nw; ++w) {
      std::size_t lo = std::min(total, static_cast<std::size_t>(w) * chunk);
      std::size_t hi = std::min(total, lo + chunk);
      pool.emplace_back(take, std::ref(part[w]), lo, hi, std::ref(errs[w]));
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  for (const auto& p : part)
    if (p.margin < best.margin ||
        (p.margin == best.margin && p.index < best.index))
      best = p;
  return best;
}

Verdict judge(double margin, double threshold, double tol) {
  return margin >= threshold - tol ? Verdict::Holds : Verdict::Fails;
}

double pair_form(const model::Tensor4& dpp, const Vec& xi, const Vec& eta) {
  const int n = static_cast<int>(xi.size());
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double w = xi[i] * xi[j];
      if (w == 0.0) continue;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s += dpp(i, j, k, l) * w * eta[k] * eta[l];
    }
  return s;
}

// Projected gradient descent of the pair form over unit orthogonal (xi, eta)
// at a fixed jet. Retraction: normalize xi, then re-orthonormalize eta.
double descend_pair(const model::Tensor4& dpp, Vec& xi, Vec& eta) {
  const int n = static_cast<int>(xi.size());
  double val = pair_form(dpp, xi, eta);
  double step = 0.1;
  for (int it = 0; it < 200 && step > 1e-12; ++it) {
    Mat m_eta = Mat::Zero(n, n), m_xi = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            m_eta(i, j) += dpp(i, j, k, l) * eta[k] * eta[l];
            m_xi(k, l) += dpp(i, j, k, l) * xi[i] * xi[j];
          }
    Vec gx = 2.0 * m_eta * xi, ge = 2.0 * m_xi * eta;
    Vec cx = xi - step * gx, ce = eta - step * ge;
    if (cx.norm() < 1e-12) break;
    cx.normalize();
    ce -= ce.dot(cx) * cx;
    if (ce.norm() < 1e-12) break;
    ce.normalize();
    double cand = pair_form(dpp, cx, ce);
    if (cand < val) {
      xi = cx;
      eta = ce;
      val = cand;
      step *= 1.5;
    } else {
      step *= 0.5;
    }
  }
  return val;
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

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    default: return "inconclusive";
  }
}

double regular_form(const model::CoefficientA& A, const Vec& x, double z,
                    const Vec& p, const Vec& xi, const Vec& eta) {
  return pair_form(A.jet(x, z, p, 2).dpp, xi, eta);
}

CertificateReport check_regular(const model::CoefficientA& A,
                                const SamplingSpec& s, bool strict,
                                double c0) {
  const int n = A.n();
  const Box box = sampling_box(s, n);
  const std::size_t npoint = static_cast<std::size_t>(s.nx) * s.nz * s.np;
  const std::size_t total = npoint * static_cast<std::size_t>(s.npairs);
  if (total == 0) throw std::invalid_argument("check_regular: empty sample budget");

  auto decode = [&](std::size_t idx, Vec& x, double& z, Vec& p, Vec& xi,
                    Vec& eta) {
    std::size_t pidx = idx / s.npairs;
    std::size_t ip = pidx % s.np;
    std::size_t rest = pidx / s.np;
    std::size_t iz = rest % s.nz;
    std::size_t ix = rest / s.nz;
    auto gx = engine_at(s.seed, 0, ix);
    x = draw_x(box, gx);
    z = linspace_at(s.z_lo, s.z_hi, s.nz, static_cast<int>(iz));
    auto gp = engine_at(s.seed, 1, ip);
    p = draw_p(n, s.p_radius, gp);
    auto gq = engine_at(s.seed, 2, idx);
    draw_orthopair(n, gq, xi, eta);
  };

  auto margin_at = [&](std::size_t idx) {
    Vec x, p, xi, eta;
    double z;
    decode(idx, x, z, p, xi, eta);
    return regular_form(A, x, z, p, xi, eta);
  };

  Best best = min_over(total, s.workers, margin_at);

  CertificateReport rep;
  rep.condition = std::string("regular:") + A.id();
  rep.tol = s.tol;
  rep.seed = s.seed;
  rep.samples = total;
  rep.threshold = strict ? c0 : 0.0;
  decode(best.index, rep.witness.x, rep.witness.z, rep.witness.p,
         rep.witness.xi, rep.witness.eta);

  // Polish below sample resolution from the worst pair.
  Vec xi = rep.witness.xi, eta = rep.witness.eta;
  double polished =
      descend_pair(A.jet(rep.witness.x, rep.witness.z, rep.witness.p, 2).dpp,
                   xi, eta);
  if (polished < best.margin) {
    rep.witness.xi = xi;
    rep.witness.eta = eta;
    best.margin = polished;
  }
  rep.margin = best.margin;
  rep.verdict = judge(rep.margin, rep.threshold, rep.tol);
  return rep;
}

CertificateReport check_Btilde_convex(const model::SourceB& B, int k,
                                      const SamplingSpec& s) {
  const int n = B.n();
  const Box box = sampling_box(s, n);
  const std::size_t total = static_cast<std::size_t>(s.nx) * s.nz * s.np;
  if (total == 0)
    throw std::invalid_argument("check_Btilde_convex: empty sample budget");

  auto decode = [&](std::size_t idx, Vec& x, double& z, Vec& p) {
    std::size_t ip = idx % s.np;
    std::size_t rest = idx / s.np;
    std::size_t iz = rest % s.nz;
    std::size_t ix = rest / s.nz;
    auto gx = engine_at(s.seed, 0, ix);
    x = draw_x(box, gx);
    z = linspace_at(s.z_lo, s.z_hi, s.nz, static_cast<int>(iz));
    auto gp = engine_at(s.seed, 1, ip);
    p = draw_p(n, s.p_radius, gp);
  };

  auto margin_at = [&](std::size_t idx) {
    Vec x, p;
    double z;
    decode(idx, x, z, p);
    return min_eig(B.btilde_jet(k, x, z, p, 2).dpp);
  };

  Best best = min_over(total, s.workers, margin_at);

  CertificateReport rep;
  rep.condition = std::string("btilde_convex:") + B.id();
  rep.tol = s.tol;
  rep.seed = s.seed;
  rep.samples = total;
  rep.margin = best.margin;
  decode(best.index, rep.witness.x, rep.witness.z, rep.witness.p);
  rep.verdict = judge(rep.margin, rep.threshold, rep.tol);
  return rep;
}

std::pair<CertificateReport, CertificateReport> check_monotone(
    const model::CoefficientA& A, const model::SourceB& B, int k,
    const SamplingSpec& s) {
  const int n = A.n();
  if (B.n() != n)
    throw std::invalid_argument("check_monotone: A and B dimension mismatch");
  const Box box = sampling_box(s, n);
  const std::size_t total = static_cast<std::size_t>(s.nx) * s.nz * s.np;
  if (total == 0)
    throw std::invalid_argument("check_monotone: empty sample budget");

  auto decode = [&](std::size_t idx, Vec& x, double& z, Vec& p) {
    std::size_t ip = idx % s.np;
    std::size_t rest = idx / s.np;
    std::size_t iz = rest % s.nz;
    std::size_t ix = rest / s.nz;
    auto gx = engine_at(s.seed, 0, ix);
    x = draw_x(box, gx);
    z = linspace_at(s.z_lo, s.z_hi, s.nz, static_cast<int>(iz));
    auto gp = engine_at(s.seed, 1, ip);
    p = draw_p(n, s.p_radius, gp);
  };

  auto base = [&](const std::string& cond) {
    CertificateReport rep;
    rep.condition = cond;
    rep.tol = s.tol;
    rep.seed = s.seed;
    rep.samples = total;
    return rep;
  };

  CertificateReport ra = base(std::string("monotone_A:") + A.id());
  if (!A.depends_on_u()) {
    ra.margin = 0.0;
    ra.verdict = Verdict::Holds;
  } else if (A.mode() == model::CoefficientA::Mode::Analytic &&
             !A.has_analytic_dz()) {
    // Depends on u but carries no z-derivative: cannot distinguish "constant"
    // from "closure not provided", so refuse to certify.
    ra.verdict = Verdict::Inconclusive;
  } else {
    auto margin_at = [&](std::size_t idx) {
      Vec x, p;
      double z;
      decode(idx, x, z, p);
      return min_eig(A.jet(x, z, p, 1).dz);
    };
    Best best = min_over(total, s.workers, margin_at);
    ra.margin = best.margin;
    decode(best.index, ra.witness.x, ra.witness.z, ra.witness.p);
    ra.verdict = judge(ra.margin, 0.0, s.tol);
  }

  CertificateReport rb = base(std::string("monotone_Btilde:") + B.id());
  if (!B.depends_on_u()) {
    rb.margin = 0.0;
    rb.verdict = Verdict::Holds;
  } else if (B.mode() == model::SourceB::Mode::Analytic &&
             !B.has_analytic_dz()) {
    rb.verdict = Verdict::Inconclusive;
  } else {
    auto margin_at = [&](std::size_t idx) {
      Vec x, p;
      double z;
      decode(idx, x, z, p);
      return B.btilde_jet(k, x, z, p, 1).dz;
    };
    Best best = min_over(total, s.workers, margin_at);
    rb.margin = best.margin;
    decode(best.index, rb.witness.x, rb.witness.z, rb.witness.p);
    rb.verdict = judge(rb.margin, 0.0, s.tol);
  }
  return {std::move(ra), std::move(rb)};
}

CertificateReport check_admissible_field(const grid::GridField& u,
                                         const model::ProblemSpec& P,
                                         FieldMode mode, double delta,
                                         double tol) {
  if (u.n() != P.n)
    throw std::invalid_argument("check_admissible_field: dimension mismatch");
  if ((u.box.lo - P.box.lo).cwiseAbs().maxCoeff() > 1e-12 ||
      (u.box.hi - P.box.hi).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument(
        "check_admissible_field: field box differs from the problem box");

  const char* tag = nullptr;
  switch (mode) {
    case FieldMode::AdmissibleCone: tag = "cone"; break;
    case FieldMode::StrictInterior: tag = "cone_strict"; break;
    case FieldMode::Subsolution: tag = "subsolution"; break;
    case FieldMode::StrictSubsolution: tag = "subsolution_strict"; break;
    case FieldMode::Supersolution: tag = "supersolution"; break;
    case FieldMode::StrictSupersolution: tag = "supersolution_strict"; break;
  }

  CertificateReport rep;
  rep.condition = std::string("admissible_field:") + tag;
  rep.tol = tol;
  rep.samples = grid::interior_count(u);

  double worst = std::numeric_limits<double>::infinity();
  long worst_node = -1;
  grid::for_each_interior(u, [&](const std::vector<int>& idx,
                                 std::size_t flat) {
    grid::Jet2 J = grid::interior_jet(u, idx);
    Vec x = u.node_x(idx);
    Mat W = J.W - P.A.value(x, J.z, J.p);
    W = 0.5 * (W + W.transpose());
    auto chain = symfun::detail::newton_chain(W, P.k);
    double m = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= P.k; ++j) m = std::min(m, chain.S[j]);
    if (mode == FieldMode::StrictInterior) m -= delta;
    if (mode == FieldMode::Subsolution || mode == FieldMode::StrictSubsolution ||
        mode == FieldMode::Supersolution ||
        mode == FieldMode::StrictSupersolution) {
      double b = P.B.value(x, J.z, J.p);
      double eq = chain.S[P.k] - b;
      if (mode == FieldMode::Supersolution ||
          mode == FieldMode::StrictSupersolution)
        eq = -eq;
      if (mode == FieldMode::StrictSubsolution ||
          mode == FieldMode::StrictSupersolution)
        eq -= delta;
      m = std::min(m, eq);
    }
    if (m < worst) {
      worst = m;
      worst_node = static_cast<long>(flat);
    }
  });

  rep.margin = worst;
  rep.witness.node = worst_node;
  if (worst_node >= 0) {
    std::vector<int> idx(static_cast<std::size_t>(u.n()));
    u.unflat(static_cast<std::size_t>(worst_node), idx);
    rep.witness.x = u.node_x(idx);
  }
  rep.verdict = judge(rep.margin, 0.0, tol);
  return rep;
}

CertificateReport check_A_bounded(const grid::GridField& vphi,
                                  const grid::GridField& u,
                                  const model::ProblemSpec& P, double delta0,
                                  double tol) {
  require_same_grid(vphi, u, "check_A_bounded");
  if (u.n() != P.n)
    throw std::invalid_argument("check_A_bounded: dimension mismatch");

  CertificateReport rep;
  rep.condition = std::string("A_bounded:") + P.A.id();
  rep.tol = tol;
  rep.samples = grid::interior_count(u);

  const int n = P.n;
  double worst = std::numeric_limits<double>::infinity();
  long worst_node = -1;
  grid::for_each_interior(u, [&](const std::vector<int>& idx,
                                 std::size_t flat) {
    grid::Jet2 Jphi = grid::interior_jet(vphi, idx);
    grid::Jet2 Ju = grid::interior_jet(u, idx);
    Vec x = u.node_x(idx);
    model::AJet a = P.A.jet(x, Ju.z, Ju.p, 1);
    Mat M = Jphi.W;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int m = 0; m < n; ++m) M(i, j) -= a.dp(i, j, m) * Jphi.p[m];
    double val = min_eig(M) - delta0;
    if (val < worst) {
      worst = val;
      worst_node = static_cast<long>(flat);
    }
  });

  rep.margin = worst;
  rep.witness.node = worst_node;
  if (worst_node >= 0) {
    std::vector<int> idx(static_cast<std::size_t>(u.n()));
    u.unflat(static_cast<std::size_t>(worst_node), idx);
    rep.witness.x = u.node_x(idx);
  }
  rep.verdict = judge(rep.margin, 0.0, tol);
  return rep;
}

std::vector<BoundaryFrame> disc_frames(const Vec& center, double radius,
                                       int count) {
  if (center.size() != 2)
    throw std::invalid_argument("disc_frames: n = 2 only");
  if (!(radius > 0.0) || count < 1)
    throw std::invalid_argument("disc_frames: bad radius or count");
  std::vector<BoundaryFrame> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    double th = 2.0 * M_PI * i / count;
    BoundaryFrame f;
    f.normal = Vec(2);
    f.normal << std::cos(th), std::sin(th);
    f.x = center + radius * f.normal;
    f.tangents = Mat(2, 1);
    f.tangents << -std::sin(th), std::cos(th);
    f.curvature = Mat::Constant(1, 1, 1.0 / radius);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<BoundaryFrame> ellipse_frames(const Vec& center, double a,
                                          double b, int count) {
  if (center.size() != 2)
    throw std::invalid_argument("ellipse_frames: n = 2 only");
  if (!(a > 0.0) || !(b > 0.0) || count < 1)
    throw std::invalid_argument("ellipse_frames: bad axes or count");
  std::vector<BoundaryFrame> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    double th = 2.0 * M_PI * i / count;
    double c = std::cos(th), s = std::sin(th);
    BoundaryFrame f;
    f.x = Vec(2);
    f.x << center[0] + a * c, center[1] + b * s;
    Vec nrm(2);
    nrm << b * c, a * s;
    nrm.normalize();
    f.normal = nrm;
    f.tangents = Mat(2, 1);
    f.tangents << -nrm[1], nrm[0];
    double w = a * a * s * s + b * b * c * c;
    f.curvature = Mat::Constant(1, 1, a * b / std::pow(w, 1.5));
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<BoundaryFrame> box_face_frames(const Box& box, int per_face) {
  box.validate();
  if (per_face < 1)
    throw std::invalid_argument("box_face_frames: per_face < 1");
  const int n = box.n();
  std::vector<BoundaryFrame> out;
  // Kronecker sequence across the tangential coordinates: deterministic,
  // spreads points over the face without favoring an edge.
  auto frac = [](double v) { return v - std::floor(v); };
  for (int axis = 0; axis < n; ++axis) {
    for (int side = 0; side < 2; ++side) {
      for (int i = 0; i < per_face; ++i) {
        BoundaryFrame f;
        f.x = Vec(n);
        f.normal = Vec::Zero(n);
        f.normal[axis] = side == 0 ? -1.0 : 1.0;
        f.tangents = Mat::Zero(n, n - 1);
        int col = 0;
        for (int b = 0; b < n; ++b) {
          if (b == axis) {
            f.x[b] = side == 0 ? box.lo[b] : box.hi[b];
            continue;
          }
          double t = frac((i + 0.5) * std::sqrt(2.0 + col) * 0.7548776662);
          f.x[b] = box.lo[b] + (0.1 + 0.8 * t) * (box.hi[b] - box.lo[b]);
          f.tangents(b, col) = 1.0;
          ++col;
        }
        f.curvature = Mat::Zero(n - 1, n - 1);
        out.push_back(std::move(f));
      }
    }
  }
  return out;
}

CertificateReport check_domain_convex(const std::vector<BoundaryFrame>& frames,
                                      const model::CoefficientA& A, int k,
                                      double delta0, const SamplingSpec& s) {
  if (frames.empty())
    throw std::invalid_argument("check_domain_convex: no frames");
  const int n = A.n();
  const std::size_t per_frame = static_cast<std::size_t>(s.nz) * s.np;
  const std::size_t total = frames.size() * per_frame;

  auto decode = [&](std::size_t idx, std::size_t& fi, double& z, Vec& p) {
    fi = idx / per_frame;
    std::size_t rest = idx % per_frame;
    std::size_t iz = rest / s.np;
    std::size_t ip = rest % s.np;
    z = linspace_at(s.z_lo, s.z_hi, s.nz, static_cast<int>(iz));
    auto gp = engine_at(s.seed, 1, ip);
    p = draw_p(n, s.p_radius, gp);
  };

  auto margin_at = [&](std::size_t idx) {
    std::size_t fi;
    double z;
    Vec p;
    decode(idx, fi, z, p);
    const BoundaryFrame& f = frames[fi];
    model::AJet a = A.jet(f.x, z, p, 1);
    Mat C = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int m = 0; m < n; ++m) C(i, j) += a.dp(i, j, m) * f.normal[m];
    Mat T = f.curvature - f.tangents.transpose() * C * f.tangents;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (T + T.transpose()),
                                          Eigen::EigenvaluesOnly);
    Vec kappa = es.eigenvalues();
    return symfun::elem_sym(kappa, k - 1) - delta0;
  };

  Best best = min_over(total, s.workers, margin_at);

  CertificateReport rep;
  rep.condition = std::string("domain_convex:") + A.id();
  rep.tol = s.tol;
  rep.seed = s.seed;
  rep.samples = total;
  rep.margin = best.margin;
  std::size_t fi;
  decode(best.index, fi, rep.witness.z, rep.witness.p);
  rep.witness.x = frames[fi].x;
  rep.witness.node = static_cast<long>(fi);
  rep.verdict = judge(rep.margin, 0.0, s.tol);
  return rep;
}

Motion Motion::translate(Vec x0) {
  Motion m;
  m.shift = std::move(x0);
  return m;
}

Motion Motion::rotate(Mat Q) {
  Motion m;
  m.rotation = std::move(Q);
  return m;
}

Motion Motion::rigid(Vec x0, Mat Q) {
  Motion m;
  m.shift = std::move(x0);
  m.rotation = std::move(Q);
  return m;
}

bool is_signed_permutation(const Mat& Q, double tol) {
  if (Q.rows() != Q.cols() || Q.rows() == 0) return false;
  const int n = static_cast<int>(Q.rows());
  std::vector<int> col_hits(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    int hits = 0;
    for (int j = 0; j < n; ++j) {
      double v = std::abs(Q(i, j));
      if (v > tol) {
        if (std::abs(v - 1.0) > tol) return false;
        ++hits;
        ++col_hits[static_cast<std::size_t>(j)];
      }
    }
    if (hits != 1) return false;
  }
  for (int j = 0; j < n; ++j)
    if (col_hits[static_cast<std::size_t>(j)] != 1) return false;
  return true;
}

model::ProblemSpec transform_problem(const model::ProblemSpec& P,
                                     const Motion& motion) {
  const int n = P.n;
  Vec S = motion.shift.size() == 0 ? Vec::Zero(n) : motion.shift;
  Mat Q = motion.rotation.size() == 0 ? Mat::Identity(n, n) : motion.rotation;
  if (S.size() != n || Q.rows() != n || Q.cols() != n)
    throw std::invalid_argument("transform_problem: motion dimension mismatch");
  bool rotated = (Q - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > 0.0;
  if (rotated && !is_signed_permutation(Q))
    throw std::invalid_argument(
        "transform_problem: rotation must map the box to an axis-aligned box "
        "(signed permutation); general Q is coefficient-level only");

  Box nb;
  nb.lo = Vec(n);
  nb.hi = Vec(n);
  for (int i = 0; i < n; ++i) {
    int src = 0;
    double q = 0.0;
    for (int a = 0; a < n; ++a)
      if (std::abs(Q(i, a)) > 0.5) {
        src = a;
        q = Q(i, a);
      }
    double v0 = q * P.box.lo[src], v1 = q * P.box.hi[src];
    nb.lo[i] = std::min(v0, v1) + S[i];
    nb.hi[i] = std::max(v0, v1) + S[i];
  }

  auto phi = P.phi;
  Mat Qt = Q.transpose();
  std::function<double(const Vec&)> phi_hat = [phi, S, Qt](const Vec& xh) {
    return phi(Qt * (xh - S));
  };
  return model::ProblemSpec{n,
                            P.k,
                            std::move(nb),
                            P.A.transformed(S, Q),
                            P.B.transformed(S, Q),
                            std::move(phi_hat),
                            P.depends_on_u};
}

}  // namespace hess::structure
