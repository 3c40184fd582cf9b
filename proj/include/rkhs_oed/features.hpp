#pragma once

#include "rkhs_oed/linalg.hpp"
#include "rkhs_oed/quadrature.hpp"

#include <memory>
#include <optional>

namespace rkhs_oed {

/** Explicit finite dimensional feature map x -> Phi(x) in R^m. */
struct FeatureMap {
  int dim = 0;        // m
  int input_dim = 0;  // d
  std::function<Vec(const Vec &)> eval;
  std::function<Mat(const Vec &)> jacobian;  // d x m, column k = grad Phi_k
  // k-th derivative in t for one dimensional maps, empty when unsupported
  std::function<Vec(double, int)> derivative_1d;
  std::string kind;
  Vec lower, upper;  // domain box, empty if unbounded

  Vec operator()(const Vec &x) const { return eval(x); }
};

/** Positive definite prior operator V0 with cached inverse factors. */
class PriorOperator {
public:
  static PriorOperator identity(int m) {
    PriorOperator p;
    p.m_ = m;
    p.identity_ = true;
    return p;
  }

  explicit PriorOperator(const Mat &V0) : m_(static_cast<int>(V0.rows())), identity_(false) {
    if (V0.rows() != V0.cols()) throw Error("PriorOperator: matrix must be square");
    if ((V0 - V0.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, V0.cwiseAbs().maxCoeff()))
      throw Error("PriorOperator: matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(V0));
    if (es.eigenvalues()(0) <= 0.0) throw Error("PriorOperator: minimum eigenvalue must be positive");
    auto d = std::make_shared<Dense>();
    d->V0 = symmetrize(V0);
    const Mat &U = es.eigenvectors();
    const Vec &ev = es.eigenvalues();
    d->inv = U * ev.cwiseInverse().asDiagonal() * U.transpose();
    d->inv_sqrt = U * ev.cwiseSqrt().cwiseInverse().asDiagonal() * U.transpose();
    dense_ = d;
  }

  int dim() const { return m_; }
  bool is_identity() const { return identity_; }

  Mat matrix() const { return identity_ ? Mat(Mat::Identity(m_, m_)) : dense_->V0; }
  Mat inverse() const { return identity_ ? Mat(Mat::Identity(m_, m_)) : dense_->inv; }
  Mat inverse_sqrt() const { return identity_ ? Mat(Mat::Identity(m_, m_)) : dense_->inv_sqrt; }

  // V0^{-1} A and V0^{-1/2} A without forming identities
  Mat apply_inverse(const Mat &A) const { return identity_ ? A : Mat(dense_->inv * A); }
  Mat apply_inverse_sqrt(const Mat &A) const { return identity_ ? A : Mat(dense_->inv_sqrt * A); }

private:
  PriorOperator() = default;
  struct Dense {
    Mat V0, inv, inv_sqrt;
  };
  int m_ = 0;
  bool identity_ = true;
  std::shared_ptr<const Dense> dense_;
};

/** Scalar kernel with optional gradient in its first argument. */
struct Kernel {
  std::function<double(const Vec &, const Vec &)> value;
  std::function<Vec(const Vec &, const Vec &)> grad_x;
};

inline Kernel se_kernel(double lengthscale) {
  if (!(lengthscale > 0)) throw Error("se_kernel: lengthscale must be positive");
  const double l2 = lengthscale * lengthscale;
  Kernel k;
  k.value = [l2](const Vec &a, const Vec &b) { return std::exp(-0.5 * (a - b).squaredNorm() / l2); };
  k.grad_x = [l2](const Vec &a, const Vec &b) -> Vec {
    return -(a - b) / l2 * std::exp(-0.5 * (a - b).squaredNorm() / l2);
  };
  return k;
}

/** Phi(x) = x. */
inline FeatureMap linear_features(int d) {
  FeatureMap f;
  f.dim = d;
  f.input_dim = d;
  f.kind = "linear";
  f.eval = [d](const Vec &x) -> Vec {
    if (x.size() != d) throw Error("linear_features: dimension mismatch");
    return x;
  };
  f.jacobian = [d](const Vec &) -> Mat { return Mat::Identity(d, d); };
  return f;
}

/** One dimensional monomials (x^lo, ..., x^hi). */
inline FeatureMap polynomial_features(int lo, int hi) {
  if (lo < 0 || hi < lo) throw Error("polynomial_features: need 0 <= lo <= hi");
  FeatureMap f;
  f.dim = hi - lo + 1;
  f.input_dim = 1;
  f.kind = "polynomial";
  auto deriv = [lo, hi](double x, int k) -> Vec {
    Vec v(hi - lo + 1);
    for (int p = lo; p <= hi; ++p) {
      if (k > p) {
        v(p - lo) = 0.0;
        continue;
      }
      double c = 1.0;
      for (int j = 0; j < k; ++j) c *= (p - j);
      v(p - lo) = c * std::pow(x, p - k);
    }
    return v;
  };
  f.derivative_1d = deriv;
  f.eval = [deriv](const Vec &x) -> Vec {
    if (x.size() != 1) throw Error("polynomial_features: dimension mismatch");
    return deriv(x(0), 0);
  };
  f.jacobian = [deriv](const Vec &x) -> Mat { return deriv(x(0), 1).transpose(); };
  return f;
}

/* Deterministic quadrature Fourier features of the squared exponential kernel.
   q Gauss-Hermite nodes per axis give q^d frequencies; +w and -w are merged, so
   m = q^d features (cosine block then sine block). */
inline FeatureMap qff_squared_exponential(double lengthscale, int m, const Vec &lower, const Vec &upper) {
  if (!(lengthscale > 0)) throw Error("qff_squared_exponential: lengthscale must be positive");
  if (m <= 0 || m % 2 != 0) throw Error("qff_squared_exponential: m must be a positive even integer");
  const int d = static_cast<int>(lower.size());
  if (d < 1 || d > 3 || upper.size() != d) throw Error("qff_squared_exponential: domain must be a box in R^d, d <= 3");
  for (int i = 0; i < d; ++i)
    if (!(lower(i) < upper(i)) || !std::isfinite(lower(i)) || !std::isfinite(upper(i)))
      throw Error("qff_squared_exponential: domain must be bounded");
  const int q = static_cast<int>(std::lround(std::pow(static_cast<double>(m), 1.0 / d)));
  int qd = 1;
  for (int i = 0; i < d; ++i) qd *= q;
  if (qd != m || q % 2 != 0)
    throw Error("qff_squared_exponential: m must equal q^d with q even (q nodes per axis)");

  Vec t, w;
  gauss_hermite(q, t, w);
  const int half = m / 2;
  Mat omega(half, d);
  Vec amp(half);
  std::vector<int> idx(d, 0);
  int row = 0;
  for (int flat = 0; flat < m; ++flat) {
    int rem = flat;
    for (int k = d - 1; k >= 0; --k) {
      idx[k] = rem % q;
      rem /= q;
    }
    if (idx[0] >= q / 2) continue;  // mirror image of a kept frequency
    double weight = 2.0;
    for (int k = 0; k < d; ++k) {
      omega(row, k) = std::sqrt(2.0) * t(idx[k]) / lengthscale;
      weight *= w(idx[k]) / std::sqrt(M_PI);
    }
    amp(row) = std::sqrt(weight);
    ++row;
  }

  FeatureMap f;
  f.dim = m;
  f.input_dim = d;
  f.kind = "qff_se";
  f.lower = lower;
  f.upper = upper;
  f.eval = [omega, amp, d, half](const Vec &x) -> Vec {
    if (x.size() != d) throw Error("qff: dimension mismatch");
    Vec a = omega * x;
    Vec out(2 * half);
    for (int i = 0; i < half; ++i) {
      out(i) = amp(i) * std::cos(a(i));
      out(half + i) = amp(i) * std::sin(a(i));
    }
    return out;
  };
  f.jacobian = [omega, amp, d, half](const Vec &x) -> Mat {
    if (x.size() != d) throw Error("qff: dimension mismatch");
    Vec a = omega * x;
    Mat J(d, 2 * half);
    for (int i = 0; i < half; ++i) {
      J.col(i) = -amp(i) * std::sin(a(i)) * omega.row(i).transpose();
      J.col(half + i) = amp(i) * std::cos(a(i)) * omega.row(i).transpose();
    }
    return J;
  };
  if (d == 1) {
    f.derivative_1d = [omega, amp, half](double x, int k) -> Vec {
      Vec out(2 * half);
      const double shift = k * M_PI / 2.0;
      for (int i = 0; i < half; ++i) {
        const double om = omega(i, 0);
        const double s = amp(i) * std::pow(om, k);
        out(i) = s * std::cos(om * x + shift);
        out(half + i) = s * std::sin(om * x + shift);
      }
      return out;
    };
  }
  return f;
}

/* Nystrom features Phi(x) = Lambda^{-1/2} U^T k(Z, x) from the landmark gram.
   Eigenvalues below 1e-10 * lambda_max are dropped. */
inline FeatureMap nystrom_features(const Kernel &kernel, const std::vector<Vec> &landmarks) {
  if (landmarks.empty()) throw Error("nystrom_features: need at least one landmark");
  const int n = static_cast<int>(landmarks.size());
  const int d = static_cast<int>(landmarks[0].size());
  Mat G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) G(i, j) = G(j, i) = kernel.value(landmarks[i], landmarks[j]);
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  const Vec &ev = es.eigenvalues();
  if (ev(0) < -1e-8) throw Error("nystrom_features: landmark gram is not positive semidefinite");
  const double tau = 1e-10 * ev(n - 1);
  std::vector<int> keep;
  for (int i = n - 1; i >= 0; --i)
    if (ev(i) > tau) keep.push_back(i);
  const int m = static_cast<int>(keep.size());
  Mat P(m, n);  // Lambda^{-1/2} U^T
  for (int r = 0; r < m; ++r) P.row(r) = es.eigenvectors().col(keep[r]).transpose() / std::sqrt(ev(keep[r]));

  FeatureMap f;
  f.dim = m;
  f.input_dim = d;
  f.kind = "nystrom";
  f.eval = [kernel, landmarks, P, d](const Vec &x) -> Vec {
    if (x.size() != d) throw Error("nystrom: dimension mismatch");
    Vec kz(landmarks.size());
    for (size_t i = 0; i < landmarks.size(); ++i) kz(i) = kernel.value(landmarks[i], x);
    return P * kz;
  };
  if (kernel.grad_x) {
    f.jacobian = [kernel, landmarks, P, d](const Vec &x) -> Mat {
      Mat Kg(landmarks.size(), d);
      for (size_t i = 0; i < landmarks.size(); ++i) Kg.row(i) = kernel.grad_x(x, landmarks[i]).transpose();
      return (P * Kg).transpose();
    };
  }
  return f;
}

/** Row i = Phi(points[i])^T. */
inline Mat evaluate_design_matrix(const FeatureMap &map, const std::vector<Vec> &points) {
  Mat X(static_cast<Eigen::Index>(points.size()), map.dim);
  for (size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != map.input_dim) throw Error("evaluate_design_matrix: dimension mismatch");
    X.row(i) = map.eval(points[i]).transpose();
  }
  return X;
}

}  // namespace rkhs_oed
