#pragma once

#include "rkhs_oed/functionals.hpp"

#include <optional>

namespace rkhs_oed {

enum class EstimatorKind { interp, ridge };
enum class InfoKind { interp_dagger, ridge_lambda, adaptive_omega };

inline const char *to_string(EstimatorKind k) { return k == EstimatorKind::interp ? "interp" : "ridge"; }

inline EstimatorKind estimator_kind_from_string(const std::string &s) {
  if (s == "interp") return EstimatorKind::interp;
  if (s == "ridge") return EstimatorKind::ridge;
  throw Error("unknown estimator kind: " + s);
}

/** Observations y = X theta + noise together with the model constants. */
struct Dataset {
  Mat X;
  Vec y;
  double sigma;
  PriorOperator V0;
  std::optional<double> lam;
  std::optional<Vec> theta_true;

  Dataset(Mat X_, Vec y_, double sigma_, PriorOperator V0_, std::optional<double> lam_ = std::nullopt,
          std::optional<Vec> theta_ = std::nullopt)
      : X(std::move(X_)), y(std::move(y_)), sigma(sigma_), V0(std::move(V0_)), lam(lam_), theta_true(std::move(theta_)) {
    validate();
  }

  void validate() const {
    if (y.size() != X.rows()) throw Error("Dataset: length(y) must equal rows(X)");
    if (!(sigma > 0)) throw Error("Dataset: sigma must be positive");
    if (lam && !(*lam > 0)) throw Error("Dataset: lam must be positive");
    if (X.cols() != V0.dim()) throw Error("Dataset: V0 dimension mismatch");
    if (theta_true && lam) {
      const Vec &t = *theta_true;
      const double q = V0.is_identity() ? t.squaredNorm() : t.dot(V0.matrix() * t);
      if (q > 1.0 / *lam + 1e-9) throw Error("Dataset: theta violates theta^T V0 theta <= 1/lam");
    }
  }
};

struct InfoMatrix {
  Mat matrix;
  InfoKind kind;
};

/** C V0^{-1} X^T K^{-1} ybar with duplicate rows averaged. */
inline Vec interpolate(const Dataset &ds, const LinearFunctional &C) {
  if (ds.X.rows() == 0) throw Error("interpolate: empty dataset");
  InterpFactor f(ds.X, C.C, ds.V0);
  return f.L() * group_average(f.groups, ds.y);
}

/** C V0^{-1} X^T (lam sigma^2 I + K)^{-1} y. */
inline Vec ridge(const Dataset &ds, const LinearFunctional &C) {
  if (!ds.lam) throw Error("ridge: lam is required");
  if (ds.X.rows() == 0) throw Error("ridge: empty dataset");
  const Mat VX = ds.V0.apply_inverse(ds.X.transpose());  // V0^{-1} X^T
  Mat Q = ds.X * VX;
  Q.diagonal().array() += *ds.lam * ds.sigma * ds.sigma;
  return C.C * (VX * spd_solve(symmetrize(Q), ds.y));
}

/** W-dagger = (C V0^{-1} X^T K^{-2} X V0^{-1} C^T)^{-1} on distinct rows. */
inline InfoMatrix info_matrix_interp(const Mat &X, const LinearFunctional &C, const PriorOperator &V0) {
  InterpFactor f(X, C.C, V0);
  const Mat L = f.L();
  const Mat inner = symmetrize(L * L.transpose());
  const Vec ev = sym_eigenvalues(inner);
  if (!(ev(0) > 1e-14 * ev(ev.size() - 1)))
    throw Error("info_matrix_interp: functional not identifiable from design");
  return {spd_inverse(inner), InfoKind::interp_dagger};
}

/* C (a V0 + X^T D X)^{-1} C^T with a = sigma^2 lam and row weights D;
   kernel (Woodbury) form when the feature space is large. */
inline Mat ridge_inner(const Mat &X, const Vec &row_weights, const Mat &C, const PriorOperator &V0, double a) {
  const Eigen::Index n = X.rows(), m = X.cols();
  if (n == 0) return symmetrize(V0.apply_inverse(C.transpose()).transpose() * C.transpose()) / a;
  if (m <= 128 || m <= n) {
    Mat M = a * V0.matrix();
    M += X.transpose() * row_weights.asDiagonal() * X;
    return symmetrize(C * spd_solve(symmetrize(M), C.transpose()));
  }
  const Mat VC = V0.apply_inverse(C.transpose());  // m x p
  const Mat VX = V0.apply_inverse(X.transpose());  // m x n
  const Mat A = C * VC;
  const Vec dh = row_weights.cwiseMax(0.0).cwiseSqrt();
  const Mat B = (C * VX) * dh.asDiagonal();
  Mat Q = dh.asDiagonal() * (X * VX) * dh.asDiagonal();
  Q.diagonal().array() += a;
  return symmetrize((A - B * spd_solve(symmetrize(Q), B.transpose())) / a);
}

/** W_lambda = sigma^{-2} (C (sigma^2 lam V0 + X^T X)^{-1} C^T)^{-1}. */
inline InfoMatrix info_matrix_ridge(const Mat &X, const LinearFunctional &C, const PriorOperator &V0, double lam,
                                    double sigma, const Vec &row_weights = Vec()) {
  if (!(lam > 0) || !(sigma > 0)) throw Error("info_matrix_ridge: lam and sigma must be positive");
  const Vec w = row_weights.size() ? row_weights : Vec(Vec::Ones(X.rows()));
  const Mat R = ridge_inner(X, w, C.C, V0, sigma * sigma * lam);
  return {spd_inverse(R) / (sigma * sigma), InfoKind::ridge_lambda};
}

/** Omega = Z^T Z / sigma^2 + lam S. */
inline InfoMatrix info_matrix_adaptive(const ProjectedData &pd, double lam, double sigma) {
  Mat O = lam * pd.S;
  if (pd.Z.rows() > 0) O += pd.Z.transpose() * pd.Z / (sigma * sigma);
  return {symmetrize(O), InfoKind::adaptive_omega};
}

inline void check_simplex(const Vec &eta) {
  if (eta.size() == 0) throw Error("allocation: empty weight vector");
  if (eta.minCoeff() < 0.0 || std::abs(eta.sum() - 1.0) > 1e-10)
    throw Error("allocation: eta must lie on the simplex");
}

/* Information matrix of the design D(eta)^{1/2} X_S (times scale).  The
   interpolation variant restricts to eta_i > 0 and merges identical rows. */
inline InfoMatrix weighted_info_matrix(const Mat &XS, const Vec &eta, const LinearFunctional &C,
                                       const PriorOperator &V0, EstimatorKind kind, double lam, double sigma,
                                       double scale = 1.0) {
  check_simplex(eta);
  if (eta.size() != XS.rows()) throw Error("weighted_info_matrix: eta length mismatch");
  if (kind == EstimatorKind::ridge) return info_matrix_ridge(XS, C, V0, lam, sigma, scale * eta);
  std::vector<int> supp;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    if (eta(i) > 0.0) supp.push_back(static_cast<int>(i));
  Mat Xs(static_cast<Eigen::Index>(supp.size()), XS.cols());
  for (size_t r = 0; r < supp.size(); ++r) Xs.row(r) = XS.row(supp[r]);
  InterpFactor f(Xs, C.C, V0);
  Vec w = Vec::Zero(f.groups.unique.rows());
  for (size_t r = 0; r < supp.size(); ++r) w(f.groups.group_of[r]) += eta(supp[r]);
  const Mat L = f.L();
  const Mat inner = symmetrize(L * w.cwiseInverse().asDiagonal() * L.transpose()) / scale;
  const Vec ev = sym_eigenvalues(inner);
  if (!(ev(0) > 1e-14 * ev(ev.size() - 1)))
    throw Error("weighted_info_matrix: functional not identifiable from design");
  return {spd_inverse(inner), InfoKind::interp_dagger};
}

/* Upper bound on E[(C theta - L y)(C theta - L y)^T] over theta^T V0 theta <= 1/lam.
   interp: sigma^2/reps L L^T + (1/lam) C V0^{-1/2}(I - P) V0^{-1/2} C^T.
   ridge:  sigma^2 L L^T + (1/lam)(C - L X) V0^{-1} (C - L X)^T. */
inline Mat residual_covariance_bound(const Mat &X, const LinearFunctional &C, const PriorOperator &V0, double lam,
                                     double sigma, EstimatorKind kind, int reps = 1) {
  if (!(lam > 0)) throw Error("residual_covariance_bound: lam must be positive");
  if (reps < 1) throw Error("residual_covariance_bound: reps must be >= 1");
  if (kind == EstimatorKind::interp) {
    InterpFactor f(X, C.C, V0);
    const Mat L = f.L();
    const Mat R = f.residual();
    return symmetrize(sigma * sigma / reps * L * L.transpose() + R * R.transpose() / lam);
  }
  const Mat VX = V0.apply_inverse(X.transpose());
  Mat Q = X * VX;
  Q.diagonal().array() += lam * sigma * sigma;
  const Mat L = C.C * VX * spd_solve(symmetrize(Q), Mat::Identity(X.rows(), X.rows()));
  const Mat E = C.C - L * X;
  const Mat Es = V0.is_identity() ? E : Mat(E * V0.inverse_sqrt());
  return symmetrize(sigma * sigma * L * L.transpose() + Es * Es.transpose() / lam);
}

}  // namespace rkhs_oed
