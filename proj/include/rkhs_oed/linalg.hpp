#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rkhs_oed {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/** Raised when an operation's numerical or structural precondition fails. */
class Error : public std::runtime_error {
public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

/** Sink for non-fatal diagnostics (ill-conditioning etc). Defaults to a no-op. */
inline std::function<void(const std::string &)> &warning_sink() {
  static std::function<void(const std::string &)> sink = [](const std::string &) {};
  return sink;
}

inline void warn(const std::string &msg) { warning_sink()(msg); }

inline constexpr double kPinvCutoff = 1e-12;

inline Mat symmetrize(const Mat &A) { return 0.5 * (A + A.transpose()); }

/* Moore-Penrose pseudo-inverse, singular values below rcond*s1 treated as zero. */
inline Mat pinv(const Mat &A, double rcond = kPinvCutoff) {
  if (A.size() == 0) return Mat::Zero(A.cols(), A.rows());
  Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec &s = svd.singularValues();
  const double cut = rcond * (s.size() ? s(0) : 0.0);
  Vec sinv = Vec::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) sinv(i) = 1.0 / s(i);
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

inline int numerical_rank(const Mat &A, double rcond = kPinvCutoff) {
  if (A.size() == 0) return 0;
  Eigen::BDCSVD<Mat> svd(A);
  const Vec &s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rcond * s(0)) ++r;
  return r;
}

/* Solve A X = B for symmetric positive (semi)definite A.  Cholesky first,
   pseudo-inverse if the factorisation breaks down. */
inline Mat spd_solve(const Mat &A, const Mat &B) {
  Eigen::LLT<Mat> llt(A);
  if (llt.info() == Eigen::Success) {
    Mat X = llt.solve(B);
    if (X.allFinite()) return X;
  }
  warn("spd_solve: Cholesky failed, falling back to SVD");
  return pinv(A) * B;
}

inline Mat spd_inverse(const Mat &A) {
  return symmetrize(spd_solve(A, Mat::Identity(A.rows(), A.cols())));
}

/* log det of an SPD matrix via Cholesky; eigenvalues if Cholesky fails. */
inline double logdet_spd(const Mat &A) {
  if (A.rows() == 0) return 0.0;
  Eigen::LLT<Mat> llt(A);
  if (llt.info() == Eigen::Success) {
    const auto &L = llt.matrixL();
    double s = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) s += std::log(L(i, i));
    return 2.0 * s;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(A), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    if (es.eigenvalues()(i) <= 0.0) throw Error("logdet_spd: matrix not positive definite");
    s += std::log(es.eigenvalues()(i));
  }
  return s;
}

inline Vec sym_eigenvalues(const Mat &A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(A), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double lambda_min(const Mat &A) { return sym_eigenvalues(A)(0); }
inline double lambda_max(const Mat &A) {
  Vec e = sym_eigenvalues(A);
  return e(e.size() - 1);
}

/* A^{p} for symmetric PSD A (negative powers drop zero eigenvalues). */
inline Mat sym_power(const Mat &A, double power) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(A));
  Vec ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) <= 1e-14 * top) ev(i) = power < 0 ? 0.0 : std::max(ev(i), 0.0);
    else ev(i) = std::pow(ev(i), power);
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline double condition_number_spd(const Mat &A) {
  Vec e = sym_eigenvalues(A);
  if (e(0) <= 0) return std::numeric_limits<double>::infinity();
  return e(e.size() - 1) / e(0);
}

/** Result of merging byte-identical rows. */
struct RowGroups {
  Mat unique;                 // distinct rows in order of first appearance
  std::vector<int> group_of;  // original row -> index into unique
  std::vector<int> counts;    // multiplicity of each distinct row
};

inline RowGroups group_rows(const Mat &X) {
  struct Key {
    std::vector<double> v;
    bool operator<(const Key &o) const {
      return std::lexicographical_compare(v.begin(), v.end(), o.v.begin(), o.v.end(),
                                          [](double a, double b) {
                                            return std::memcmp(&a, &b, sizeof(double)) < 0;
                                          });
    }
  };
  std::map<Key, int> seen;
  RowGroups g;
  std::vector<int> firsts;
  g.group_of.resize(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Key k{std::vector<double>(X.cols())};
    for (Eigen::Index j = 0; j < X.cols(); ++j) k.v[j] = X(i, j);
    auto it = seen.find(k);
    if (it == seen.end()) {
      const int id = static_cast<int>(firsts.size());
      seen.emplace(std::move(k), id);
      firsts.push_back(static_cast<int>(i));
      g.counts.push_back(1);
      g.group_of[i] = id;
    } else {
      g.group_of[i] = it->second;
      ++g.counts[it->second];
    }
  }
  g.unique.resize(static_cast<Eigen::Index>(firsts.size()), X.cols());
  for (size_t r = 0; r < firsts.size(); ++r) g.unique.row(r) = X.row(firsts[r]);
  return g;
}

/** Average y within groups of identical rows. */
inline Vec group_average(const RowGroups &g, const Vec &y) {
  Vec s = Vec::Zero(g.unique.rows());
  for (size_t i = 0; i < g.group_of.size(); ++i) s(g.group_of[i]) += y(i);
  for (Eigen::Index r = 0; r < s.size(); ++r) s(r) /= g.counts[r];
  return s;
}

}  // namespace rkhs_oed
