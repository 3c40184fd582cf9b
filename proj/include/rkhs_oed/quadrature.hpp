#pragma once

#include "rkhs_oed/linalg.hpp"

namespace rkhs_oed {

struct QuadratureRule {
  std::vector<Vec> nodes;
  std::vector<double> weights;
};

/* Golub-Welsch on a symmetric tridiagonal Jacobi matrix. */
inline void golub_welsch(const Vec &diag, const Vec &offdiag, double mu0, Vec &nodes, Vec &weights) {
  Eigen::SelfAdjointEigenSolver<Mat> es;
  es.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  nodes = es.eigenvalues();
  weights = mu0 * es.eigenvectors().row(0).transpose().array().square();
}

/** Gauss-Hermite nodes/weights for the weight exp(-t^2) on the real line. */
inline void gauss_hermite(int q, Vec &t, Vec &w) {
  if (q < 1) throw Error("gauss_hermite: q must be positive");
  Vec diag = Vec::Zero(q);
  Vec off(q - 1);
  for (int k = 1; k < q; ++k) off(k - 1) = std::sqrt(k / 2.0);
  golub_welsch(diag, off, std::sqrt(M_PI), t, w);
  // enforce exact symmetry of the rule
  for (int i = 0; i < q / 2; ++i) {
    const double a = 0.5 * (t(q - 1 - i) - t(i));
    const double b = 0.5 * (w(i) + w(q - 1 - i));
    t(i) = -a;
    t(q - 1 - i) = a;
    w(i) = w(q - 1 - i) = b;
  }
  if (q % 2 == 1) t(q / 2) = 0.0;
}

/** Gauss-Legendre rule on [a, b]. */
inline QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw Error("gauss_legendre: n must be positive");
  Vec diag = Vec::Zero(n);
  Vec off(n - 1);
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  Vec t, w;
  golub_welsch(diag, off, 2.0, t, w);
  QuadratureRule r;
  for (int i = 0; i < n; ++i) {
    Vec x(1);
    x(0) = 0.5 * (b - a) * t(i) + 0.5 * (a + b);
    r.nodes.push_back(x);
    r.weights.push_back(0.5 * (b - a) * w(i));
  }
  return r;
}

}  // namespace rkhs_oed
