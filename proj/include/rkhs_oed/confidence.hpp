#pragma once

#include "rkhs_oed/estimators.hpp"

namespace rkhs_oed {

enum class EllipsoidKind { fixed_interp, fixed_ridge, adaptive, projected_biased, projected_full };

inline const char *to_string(EllipsoidKind k) {
  switch (k) {
    case EllipsoidKind::fixed_interp: return "fixed_interp";
    case EllipsoidKind::fixed_ridge: return "fixed_ridge";
    case EllipsoidKind::adaptive: return "adaptive";
    case EllipsoidKind::projected_biased: return "projected_biased";
    case EllipsoidKind::projected_full: return "projected_full";
  }
  return "?";
}

/** {v : ||v - center||_M <= radius}. */
struct ConfidenceEllipsoid {
  Vec center;
  InfoMatrix metric;
  double radius = 0.0;
  double delta = 0.0;
  EllipsoidKind kind = EllipsoidKind::fixed_ridge;

  double distance(const Vec &v) const {
    const Vec d = v - center;
    return std::sqrt(std::max(0.0, d.dot(metric.matrix * d)));
  }
  bool contains(const Vec &v) const { return distance(v) <= radius; }
};

/** xi(delta) = p + 2 sqrt(p log(1/delta)). */
inline double xi(double delta, int p) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error("xi: delta must lie in (0,1)");
  if (p < 1) throw Error("xi: p must be positive");
  return p + 2.0 * std::sqrt(p * std::log(1.0 / delta));
}

/** Radius (sigma/sqrt(T)) sqrt(xi) + nu/sqrt(lam), metric W-dagger. */
inline ConfidenceEllipsoid fixed_interp_ellipsoid(const Vec &estimate, const InfoMatrix &W, double nu, double lam,
                                                  double sigma, int reps, double delta) {
  if (W.kind != InfoKind::interp_dagger) throw Error("fixed_interp_ellipsoid: metric must be W-dagger");
  if (nu < 0) throw Error("fixed_interp_ellipsoid: nu must be nonnegative");
  if (reps < 1) throw Error("fixed_interp_ellipsoid: reps must be >= 1");
  if (!(lam > 0)) throw Error("fixed_interp_ellipsoid: lam must be positive");
  const int p = static_cast<int>(estimate.size());
  const double r = sigma / std::sqrt(static_cast<double>(reps)) * std::sqrt(xi(delta, p)) + nu / std::sqrt(lam);
  return {estimate, W, r, delta, EllipsoidKind::fixed_interp};
}

/** Radius sqrt(xi) + 1, metric W_lambda. */
inline ConfidenceEllipsoid fixed_ridge_ellipsoid(const Vec &estimate, const InfoMatrix &W, double delta) {
  if (W.kind != InfoKind::ridge_lambda) throw Error("fixed_ridge_ellipsoid: metric must be W_lambda");
  const int p = static_cast<int>(estimate.size());
  return {estimate, W, std::sqrt(xi(delta, p)) + 1.0, delta, EllipsoidKind::fixed_ridge};
}

/** sqrt(2 log((1/delta) det(Omega)^{1/2} / det(lam S)^{1/2})) + 1. */
inline double adaptive_radius(const Mat &Omega, const Mat &S, double lam, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error("adaptive_radius: delta must lie in (0,1)");
  const double log_ratio = 0.5 * (logdet_spd(Omega) - logdet_spd(lam * S));
  if (log_ratio < std::log(1.0 - 1e-9)) throw Error("adaptive_radius: det(Omega) < det(lam S)");
  return std::sqrt(2.0 * (std::log(1.0 / delta) + std::max(0.0, log_ratio))) + 1.0;
}

inline ConfidenceEllipsoid adaptive_ellipsoid(const Vec &estimate, const InfoMatrix &Omega, const Mat &S, double lam,
                                              double delta) {
  return {estimate, Omega, adaptive_radius(Omega.matrix, S, lam, delta), delta, EllipsoidKind::adaptive};
}

/** sqrt(p log(t L^2 / (p lam) + 1) + 2 log(1/delta)). */
inline double adaptive_radius_closed_form(int p, double t, double L, double lam, double delta) {
  if (t < 0 || L < 0) throw Error("adaptive_radius_closed_form: t and L must be nonnegative");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("adaptive_radius_closed_form: delta must lie in (0,1)");
  return std::sqrt(p * std::log(t * L * L / (p * lam) + 1.0) + 2.0 * std::log(1.0 / delta));
}

/* lambda_min(M)^{-1/2} * radius.  With restrict_identifiable, eigenvalues
   below 1e-12 * lambda_max are ignored and *flagged is set. */
inline double l2_error_bound(const ConfidenceEllipsoid &e, bool restrict_identifiable = false, bool *flagged = nullptr) {
  const Vec ev = sym_eigenvalues(e.metric.matrix);
  const double top = ev(ev.size() - 1);
  double lo = ev(0);
  if (flagged) *flagged = false;
  if (!(lo > 1e-12 * top)) {
    if (!restrict_identifiable || !(top > 0)) throw Error("l2_error_bound: metric has a zero eigenvalue");
    if (flagged) *flagged = true;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) > 1e-12 * top) {
        lo = ev(i);
        break;
      }
  }
  return e.radius / std::sqrt(lo);
}

/** [c.u - r sqrt(u^T M^{-1} u), c.u + r sqrt(u^T M^{-1} u)]. */
inline std::pair<double, double> interval(const ConfidenceEllipsoid &e, const Vec &u) {
  if (u.size() != e.center.size() || u.norm() == 0.0) throw Error("interval: direction must be nonzero");
  Eigen::LLT<Mat> llt(e.metric.matrix);
  if (llt.info() != Eigen::Success) throw Error("interval: singular metric");
  const double w = e.radius * std::sqrt(std::max(0.0, u.dot(llt.solve(u))));
  const double c = e.center.dot(u);
  return {c - w, c + w};
}

struct BiasedProjectedResult {
  Vec estimate;
  ConfidenceEllipsoid ellipsoid;
};

/* Regression on the projected data only: (Z^T Z/sigma^2 + lam S)^{-1} Z^T y / sigma^2,
   radius 1 + sqrt(2 log(det ratio / delta)) + theta_bound * sum_i ||j_i||. */
inline BiasedProjectedResult projected_biased_adaptive(const ProjectedData &pd, const Vec &y, double theta_bound,
                                                       double lam, double sigma, double delta) {
  if (y.size() != pd.Z.rows()) throw Error("projected_biased_adaptive: length mismatch");
  const InfoMatrix Om = info_matrix_adaptive(pd, lam, sigma);
  Vec est = Vec::Zero(pd.S.rows());
  if (pd.Z.rows() > 0) est = spd_solve(Om.matrix, pd.Z.transpose() * y / (sigma * sigma));
  double bias = 0.0;
  for (Eigen::Index i = 0; i < pd.J.rows(); ++i) bias += pd.J.row(i).norm();
  const double r = adaptive_radius(Om.matrix, pd.S, lam, delta) + theta_bound * bias;
  return {est, {est, Om, r, delta, EllipsoidKind::projected_biased}};
}

/* Full-space self-normalised set for theta with V = X^T X / sigma^2 + lam V0,
   radius sqrt(2 log(det(V)^{1/2} / (det(lam V0)^{1/2} delta))) + sqrt(lam) theta_bound,
   projected through C: metric (C V^{-1} C^T)^{-1}. */
inline ConfidenceEllipsoid projected_full_adaptive(const Mat &X, const Vec &y, const LinearFunctional &C,
                                                   const PriorOperator &V0, double lam, double sigma, double delta,
                                                   double theta_bound) {
  Mat V = lam * V0.matrix();
  if (X.rows() > 0) V += X.transpose() * X / (sigma * sigma);
  V = symmetrize(V);
  Vec theta = Vec::Zero(X.cols());
  if (X.rows() > 0) theta = spd_solve(V, X.transpose() * y / (sigma * sigma));
  const double log_ratio = 0.5 * (logdet_spd(V) - logdet_spd(lam * V0.matrix()));
  const double r = std::sqrt(2.0 * (std::log(1.0 / delta) + std::max(0.0, log_ratio))) + std::sqrt(lam) * theta_bound;
  const Mat metric = spd_inverse(symmetrize(C.C * spd_solve(V, C.C.transpose())));
  return {C.C * theta, {metric, InfoKind::ridge_lambda}, r, delta, EllipsoidKind::projected_full};
}

/* Full-space fixed-design set: radius sqrt(xi(delta, m)) + 1 with metric
   V = X^T X/sigma^2 + lam V0, projected through C. */
inline ConfidenceEllipsoid projected_full_fixed(const Mat &X, const Vec &y, const LinearFunctional &C,
                                                const PriorOperator &V0, double lam, double sigma, double delta) {
  Mat V = lam * V0.matrix();
  if (X.rows() > 0) V += X.transpose() * X / (sigma * sigma);
  V = symmetrize(V);
  Vec theta = Vec::Zero(X.cols());
  if (X.rows() > 0) theta = spd_solve(V, X.transpose() * y / (sigma * sigma));
  const Mat metric = spd_inverse(symmetrize(C.C * spd_solve(V, C.C.transpose())));
  return {C.C * theta, {metric, InfoKind::ridge_lambda}, std::sqrt(xi(delta, static_cast<int>(X.cols()))) + 1.0, delta,
          EllipsoidKind::projected_full};
}

}  // namespace rkhs_oed
