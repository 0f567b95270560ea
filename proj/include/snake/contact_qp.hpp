// Contact-force quadratic program
//
//   minimize  1/2 f^T G f + f^T c   over  f_i in K_i = {|f_T| <= mu f_N}
//
// solved by block Gauss-Seidel. Each 3x3 block subproblem is solved
// exactly: the unconstrained minimizer if it lies in the cone, otherwise
// the best point on the cone surface (ray optimum per direction, searched
// over the direction angle).
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "snake/model.hpp"

namespace snake {

struct ContactQpProblem {
  MatX G;  // 3m x 3m, PSD
  VecX c;  // 3m
  std::vector<double> mu;  // one per point
};

struct ContactQpOptions {
  double tol = 1e-6;  // N, max force change per sweep
  int max_sweeps = 500;
  bool check_psd = true;
};

struct ContactQpResult {
  VecX f;
  double cost = 0.0;
  int sweeps = 0;
  bool converged = true;
  double complementarity = 0.0;  // normalized, see qp_complementarity
};

inline double qp_cost(const MatX& G, const VecX& c, const VecX& f) {
  if (f.size() == 0) return 0.0;
  return 0.5 * f.dot(G * f) + f.dot(c);
}

inline bool in_cone(const Vec3& f, double mu, double slack = 1e-12) {
  return f.x() >= -slack && std::hypot(f.y(), f.z()) <= mu * f.x() + slack;
}

namespace detail {

/// Best point on the ray through direction a: r = max(0, -b.a / a.A.a).
inline double ray_value(const Mat3& A, const Vec3& b, const Vec3& a, double& r) {
  const double aa = a.dot(A * a);
  const double ba = b.dot(a);
  if (ba >= 0.0) {
    r = 0.0;
    return 0.0;
  }
  if (aa <= 1e-300) {
    r = 1e300;  // unbounded descent; caller guards with a ridge
    return -1e300;
  }
  r = -ba / aa;
  return -0.5 * ba * ba / aa;
}

}  // namespace detail

/// Euclidean projection onto the cone |f_T| <= mu f_N.
inline Vec3 project_cone(const Vec3& f, double mu) {
  const double t = std::hypot(f.y(), f.z());
  if (t <= mu * f.x()) return f;
  if (mu * t <= -f.x()) return Vec3::Zero();
  const double fn = (f.x() + mu * t) / (1.0 + mu * mu);
  return Vec3(fn, mu * fn * f.y() / t, mu * fn * f.z() / t);
}

/// Pulls a point that rounding left just outside the cone back onto it, so
/// that in_cone holds with zero slack.
inline Vec3 snap_into_cone(Vec3 f, double mu) {
  if (f.x() <= 0.0) return Vec3::Zero();
  for (int i = 0; i < 8 && !in_cone(f, mu, 0.0); ++i) {
    const double t = std::hypot(f.y(), f.z());
    const double s = std::nextafter(mu * f.x() / t, 0.0);
    f.y() *= s;
    f.z() *= s;
  }
  if (!in_cone(f, mu, 0.0)) f.tail<2>().setZero();
  return f;
}

/// Exact minimizer of 1/2 f^T A f + b^T f over the cone |f_T| <= mu f_N.
inline Vec3 solve_cone_block(Mat3 A, const Vec3& b, double mu) {
  // A ridge keeps rank-deficient blocks bounded without moving regular
  // solutions measurably.
  const double ridge = 1e-12 * (A.trace() / 3.0) + 1e-300;
  A.diagonal().array() += ridge;
  Eigen::LDLT<Mat3> ldlt(A);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    const Vec3 f = ldlt.solve(-b);
    if (in_cone(f, mu, 0.0)) return f;
  }
  if (mu <= 0.0) {
    const double r = b.x() < 0.0 ? -b.x() / A(0, 0) : 0.0;
    return Vec3(r, 0.0, 0.0);
  }
  auto value = [&](double th, double& r) {
    return detail::ray_value(A, b, Vec3(1.0, mu * std::cos(th), mu * std::sin(th)), r);
  };
  constexpr int kSamples = 180;
  double best_th = 0.0, best = 0.0, r = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const double th = 2.0 * kPi * i / kSamples;
    const double v = value(th, r);
    if (v < best) {
      best = v;
      best_th = th;
    }
  }
  if (best >= 0.0) return Vec3::Zero();
  // Golden-section refinement inside the neighbouring samples.
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = best_th - 2.0 * kPi / kSamples, hi = best_th + 2.0 * kPi / kSamples;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = value(x1, r), f2 = value(x2, r);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = value(x1, r);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = value(x2, r);
    }
  }
  double th = 0.5 * (lo + hi);
  double v = value(th, r);
  if (v > best) {
    th = best_th;
    value(th, r);
  }
  return snap_into_cone(r * Vec3(1.0, mu * std::cos(th), mu * std::sin(th)), mu);
}

/// Normalized conic complementarity: max_i |f_i . lambda_i| with
/// lambda = G f + c, scaled by max(1, |f|_inf * |c|_inf).
inline double qp_complementarity(const ContactQpProblem& p, const VecX& f) {
  if (f.size() == 0) return 0.0;
  const VecX lambda = p.G * f + p.c;
  double worst = 0.0;
  for (int i = 0; i < static_cast<int>(p.mu.size()); ++i)
    worst = std::max(worst, std::abs(f.segment<3>(3 * i).dot(lambda.segment<3>(3 * i))));
  const double scale = std::max(1.0, f.lpNorm<Eigen::Infinity>() * p.c.lpNorm<Eigen::Infinity>());
  return worst / scale;
}

/// Largest violation of the dual cone mu |lambda_T| <= lambda_N, normalized
/// like qp_complementarity.
inline double qp_dual_infeasibility(const ContactQpProblem& p, const VecX& f) {
  if (f.size() == 0) return 0.0;
  const VecX lambda = p.G * f + p.c;
  double worst = 0.0;
  for (int i = 0; i < static_cast<int>(p.mu.size()); ++i) {
    const Vec3 l = lambda.segment<3>(3 * i);
    worst = std::max(worst, p.mu[i] * std::hypot(l.y(), l.z()) - l.x());
  }
  return worst / std::max(1.0, p.c.lpNorm<Eigen::Infinity>());
}

/// `warm` (optional) is projected onto the cones and used as the first iterate.
inline ContactQpResult solve_contact_qp(const ContactQpProblem& p,
                                        const ContactQpOptions& opt = {},
                                        const VecX* warm = nullptr) {
  const int n = static_cast<int>(p.c.size());
  if (p.G.rows() != n || p.G.cols() != n || n % 3 != 0 ||
      static_cast<int>(p.mu.size()) * 3 != n)
    throw std::invalid_argument("solve_contact_qp: inconsistent dimensions");
  ContactQpResult out;
  out.f = VecX::Zero(n);
  if (n == 0) return out;
  if (warm && warm->size() == n) {
    for (int i = 0; i < n / 3; ++i) {
      Vec3 f = warm->segment<3>(3 * i);
      if (!in_cone(f, p.mu[i], 0.0)) f = snap_into_cone(project_cone(f, p.mu[i]), p.mu[i]);
      out.f.segment<3>(3 * i) = f;
    }
  }
  if (opt.check_psd) {
    const MatX sym = 0.5 * (p.G + p.G.transpose());
    if ((p.G - sym).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + sym.lpNorm<Eigen::Infinity>()))
      throw std::invalid_argument("solve_contact_qp: G is not symmetric");
    Eigen::SelfAdjointEigenSolver<MatX> eig(sym, Eigen::EigenvaluesOnly);
    const double lmax = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -1e-9 * lmax)
      throw std::invalid_argument("solve_contact_qp: G is not positive semidefinite");
  }
  const int m = n / 3;
  VecX lambda = p.G * out.f + p.c;  // maintained incrementally
  out.converged = false;
  for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < m; ++i) {
      const Mat3 A = p.G.block<3, 3>(3 * i, 3 * i);
      const Vec3 fi = out.f.segment<3>(3 * i);
      const Vec3 b = lambda.segment<3>(3 * i) - A * fi;
      const Vec3 fn = solve_cone_block(A, b, p.mu[i]);
      const Vec3 df = fn - fi;
      if (df.isZero(0.0)) continue;
      change = std::max(change, df.lpNorm<Eigen::Infinity>());
      out.f.segment<3>(3 * i) = fn;
      lambda.noalias() += p.G.middleCols<3>(3 * i) * df;
    }
    out.sweeps = sweep;
    if (change <= opt.tol) {
      out.converged = true;
      break;
    }
  }
  out.cost = qp_cost(p.G, p.c, out.f);
  out.complementarity = qp_complementarity(p, out.f);
  return out;
}

}  // namespace snake
