#pragma once

#include "rkhs_oed/features.hpp"

#include <sstream>

namespace rkhs_oed {

/** p x m matrix C of full row rank acting on RKHS coefficients. */
struct LinearFunctional {
  Mat C;
  int p = 0;
  std::string label;

  static LinearFunctional make(const Mat &C, std::string label = {}) {
    if (C.rows() == 0 || C.cols() == 0) throw Error("LinearFunctional: empty matrix");
    Eigen::BDCSVD<Mat> svd(C);
    const Vec &s = svd.singularValues();
    if (!(s(0) > 0.0)) throw Error("LinearFunctional: rank deficient (zero functional)");
    if (C.rows() > C.cols() || s(C.rows() - 1) / s(0) <= 1e-10)
      throw Error("LinearFunctional: rank deficient, sigma_p/sigma_1 <= 1e-10");
    LinearFunctional f;
    f.C = C;
    f.p = static_cast<int>(C.rows());
    f.label = std::move(label);
    return f;
  }

  Vec apply(const Vec &theta) const { return C * theta; }
};

/** gamma -> C_gamma over a finite parameter grid. */
struct FunctionalFamily {
  std::function<LinearFunctional(const Vec &)> generator;
  std::vector<Vec> gamma_grid;

  std::vector<LinearFunctional> materialize() const {
    std::vector<LinearFunctional> out;
    out.reserve(gamma_grid.size());
    for (const auto &g : gamma_grid) out.push_back(generator(g));
    return out;
  }
};

/** Rows Phi(target_j)^T. */
inline LinearFunctional evaluation_functional(const FeatureMap &map, const std::vector<Vec> &targets) {
  Mat C = evaluate_design_matrix(map, targets);
  for (Eigen::Index j = 1; j <= C.rows(); ++j) {
    const Mat top = C.topRows(j);
    Eigen::BDCSVD<Mat> svd(top);
    const Vec &s = svd.singularValues();
    if (!(s(0) > 0.0) || j > C.cols() || s(j - 1) / s(0) <= 1e-10) {
      std::ostringstream os;
      os << "evaluation_functional: rank deficient, target " << (j - 1)
         << " is dependent on targets 0.." << (j - 2);
      if (j == 1) os.str("evaluation_functional: rank deficient, target 0 evaluates to zero");
      throw Error(os.str());
    }
  }
  return LinearFunctional::make(C, "evaluation");
}

/** C = grad_x Phi(x), so C theta is the gradient of theta^T Phi at x. */
inline LinearFunctional gradient_functional(const FeatureMap &map, const Vec &x) {
  if (!map.jacobian) throw Error("gradient_functional: feature map has no jacobian");
  return LinearFunctional::make(map.jacobian(x), "gradient");
}

/** C = sum_k w_k q(t_k) Phi(t_k)^T. */
inline LinearFunctional integral_functional(const FeatureMap &map, const std::function<double(const Vec &)> &density,
                                            const QuadratureRule &quad) {
  Vec c = Vec::Zero(map.dim);
  bool any = false;
  for (size_t k = 0; k < quad.nodes.size(); ++k) {
    const double a = quad.weights[k] * density(quad.nodes[k]);
    if (a != 0.0) any = true;
    c += a * map.eval(quad.nodes[k]);
  }
  if (!any) throw Error("integral_functional: rank deficient (zero functional)");
  return LinearFunctional::make(c.transpose(), "integral");
}

struct NullspaceFunctional {
  LinearFunctional functional;
  Vec particular;
};

/* Rows of C span the numerical null space of the discretised operator T
   (singular values <= tau_null * sigma_1).  When grid_eval (the feature
   evaluations on the same grid) is given, T is measured against the grid
   norm of the function, which removes directions invisible on the grid. */
inline NullspaceFunctional ode_nullspace_functional(const Mat &T, const Vec &source = Vec(),
                                                    const Mat &grid_eval = Mat(), double tau_null = 1e-8) {
  const Eigen::Index m = T.cols();
  Mat basis;  // m x k coordinates in which the null space is sought
  if (grid_eval.size() > 0) {
    if (grid_eval.cols() != m) throw Error("ode_nullspace_functional: grid_eval has wrong width");
    Eigen::BDCSVD<Mat> se(grid_eval, Eigen::ComputeThinV);
    const Vec &s = se.singularValues();
    int k = 0;
    while (k < s.size() && s(k) > 1e-8 * s(0)) ++k;
    basis = se.matrixV().leftCols(k) * s.head(k).cwiseInverse().asDiagonal();
  } else {
    basis = Mat::Identity(m, m);
  }
  const Mat M = T * basis;
  const Eigen::Index k = M.cols();
  Eigen::BDCSVD<Mat> svd(M, Eigen::ComputeFullV);
  const Vec &s = svd.singularValues();
  const double s1 = s.size() ? s(0) : 0.0;
  std::vector<Eigen::Index> null_idx;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double si = i < s.size() ? s(i) : 0.0;
    if (si <= tau_null * s1 || s1 == 0.0) null_idx.push_back(i);
  }
  if (null_idx.empty()) throw Error("ode_nullspace_functional: equation over-determines the space (empty null space)");
  Mat V(m, static_cast<Eigen::Index>(null_idx.size()));
  for (size_t j = 0; j < null_idx.size(); ++j) V.col(j) = basis * svd.matrixV().col(null_idx[j]);
  Eigen::HouseholderQR<Mat> qr(V);
  Mat Q = qr.householderQ() * Mat::Identity(m, V.cols());
  NullspaceFunctional out{LinearFunctional::make(Q.transpose(), "ode_nullspace"), Vec::Zero(m)};
  if (source.size() > 0) {
    if (source.size() != T.rows()) throw Error("ode_nullspace_functional: source length mismatch");
    out.particular = pinv(T) * source;
  }
  return out;
}

/** C_x = vec(Sigma (x - x_ref) phi^T)^T with column-major vec, for theta = vec(A). */
inline LinearFunctional lyapunov_functional_from_phi(const Mat &Sigma, const Vec &x, const Vec &x_ref, const Vec &phi) {
  const Eigen::Index d = x.size();
  if (Sigma.rows() != d || Sigma.cols() != d || x_ref.size() != d)
    throw Error("lyapunov_functional: dimension mismatch");
  const Vec sz = Sigma * (x - x_ref);
  Mat M = sz * phi.transpose();  // d x m
  Mat row = Eigen::Map<const Mat>(M.data(), 1, M.size());
  if (row.cwiseAbs().maxCoeff() == 0.0)
    throw Error("lyapunov_functional: rank deficient (x equals the reference point)");
  return LinearFunctional::make(row, "lyapunov");
}

inline LinearFunctional lyapunov_functional(const Mat &Sigma, const Vec &x, const Vec &x_ref, const FeatureMap &map) {
  return lyapunov_functional_from_phi(Sigma, x, x_ref, map.eval(x));
}

/** Row selector keeping the given coordinates. */
inline LinearFunctional contamination_selector(const std::vector<int> &keep, int m) {
  if (keep.empty()) throw Error("contamination_selector: empty index set");
  Mat C = Mat::Zero(static_cast<Eigen::Index>(keep.size()), m);
  std::vector<bool> used(m, false);
  for (size_t r = 0; r < keep.size(); ++r) {
    if (keep[r] < 0 || keep[r] >= m) throw Error("contamination_selector: index out of range");
    if (used[keep[r]]) throw Error("contamination_selector: duplicate index");
    used[keep[r]] = true;
    C(r, keep[r]) = 1.0;
  }
  return LinearFunctional::make(C, "selector");
}

/* Thin SVD of B = X_u V0^{-1/2} for the distinct rows of X; shared by the
   interpolation quantities. */
struct InterpFactor {
  RowGroups groups;
  Mat U, V;  // n x n, m x n
  Vec s;     // n
  Mat Cs;    // C V0^{-1/2}

  InterpFactor(const Mat &X, const Mat &C, const PriorOperator &V0) {
    if (X.rows() == 0) throw Error("interpolation: empty design");
    if (X.cols() != C.cols() || X.cols() != V0.dim()) throw Error("interpolation: dimension mismatch");
    groups = group_rows(X);
    const Mat B = V0.is_identity() ? groups.unique : Mat(groups.unique * V0.inverse_sqrt());
    Cs = V0.is_identity() ? C : Mat(C * V0.inverse_sqrt());
    const Eigen::Index n = B.rows();
    if (n > B.cols()) throw Error("interpolation: singular K (more distinct rows than features)");
    Eigen::BDCSVD<Mat> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
    s = svd.singularValues();
    if (!(s(0) > 0.0) || s(n - 1) <= kPinvCutoff * s(0))
      throw Error("interpolation: singular K after deduplication");
    if (s(n - 1) / s(0) < 1e-6) warn("interpolation: K condition number exceeds 1e12");
    U = svd.matrixU();
    V = svd.matrixV();
  }

  // L-dagger for the distinct rows: C V0^{-1} X^T K^{-1} = Cs B^+
  Mat L() const { return (Cs * V) * s.cwiseInverse().asDiagonal() * U.transpose(); }
  // C V0^{-1/2} (I - P_B)
  Mat residual() const { return Cs - (Cs * V) * V.transpose(); }
};

/** nu = ||(C - L X) V0^{-1/2}||_F / ||L||_F on deduplicated rows. */
inline double relative_bias(const LinearFunctional &C, const Mat &X, const PriorOperator &V0) {
  InterpFactor f(X, C.C, V0);
  const double lnorm = f.L().norm();
  return f.residual().norm() / lnorm;
}

/** MMD between sum_i w_i delta_{x_i} and the quadrature measure of q. */
inline double mmd_bias(const std::function<double(const Vec &)> &density, const QuadratureRule &quad,
                       const std::vector<Vec> &nodes, const Vec &weights, const Kernel &kernel) {
  if (weights.size() != static_cast<Eigen::Index>(nodes.size())) throw Error("mmd_bias: weight length mismatch");
  const size_t n = nodes.size(), k = quad.nodes.size();
  Vec a(k);
  for (size_t j = 0; j < k; ++j) a(j) = quad.weights[j] * density(quad.nodes[j]);
  double s = 0.0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) s += weights(i) * weights(j) * kernel.value(nodes[i], nodes[j]);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < k; ++j) s -= 2.0 * weights(i) * a(j) * kernel.value(nodes[i], quad.nodes[j]);
  for (size_t i = 0; i < k; ++i)
    for (size_t j = 0; j < k; ++j) s += a(i) * a(j) * kernel.value(quad.nodes[i], quad.nodes[j]);
  return std::sqrt(std::max(0.0, s));
}

/** X V0^{-1/2} = Z C V0^{-1/2} + J with C V0^{-1/2} J^T = 0. */
struct ProjectedData {
  Mat Z;  // n x p
  Mat J;  // n x m
  Mat S;  // p x p, (C V0^{-1} C^T)^{-1}
};

inline ProjectedData project_data(const Mat &X, const LinearFunctional &C, const PriorOperator &V0) {
  if (X.cols() != C.C.cols()) throw Error("project_data: dimension mismatch");
  const Mat CV = V0.apply_inverse(C.C.transpose()).transpose();  // C V0^{-1}
  const Mat G = symmetrize(CV * C.C.transpose());
  Eigen::LDLT<Mat> ldlt(G);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-14 * ldlt.vectorD().cwiseAbs().maxCoeff())
    throw Error("project_data: C V0^{-1} C^T is singular");
  ProjectedData pd;
  pd.S = spd_inverse(G);
  pd.Z = X * CV.transpose() * pd.S;
  const Mat Cs = V0.is_identity() ? C.C : Mat(C.C * V0.inverse_sqrt());
  const Mat Xs = V0.is_identity() ? X : Mat(X * V0.inverse_sqrt());
  pd.J = Xs - pd.Z * Cs;
  return pd;
}

}  // namespace rkhs_oed
