#pragma once

#include "rkhs_oed/confidence.hpp"

#include <unordered_map>

namespace rkhs_oed {

enum class Scalarization { E, A };

inline const char *to_string(Scalarization s) { return s == Scalarization::E ? "E" : "A"; }

inline Scalarization scalarization_from_string(const std::string &s) {
  if (s == "E") return Scalarization::E;
  if (s == "A") return Scalarization::A;
  throw Error("unknown objective kind: " + s);
}

/* f(W(eta)) with f = lambda_min (E) or trace (A).  A family is stored as its
   materialised gamma grid; the objective is then the minimum over the grid.
   scale multiplies eta before it enters the information matrix. */
struct DesignObjective {
  Scalarization kind;
  EstimatorKind estimator;
  std::vector<LinearFunctional> functionals;
  PriorOperator V0;
  double lam;
  double sigma;
  double scale = 1.0;

  DesignObjective(Scalarization k, EstimatorKind e, const LinearFunctional &C, PriorOperator V0_, double lam_,
                  double sigma_)
      : kind(k), estimator(e), functionals{C}, V0(std::move(V0_)), lam(lam_), sigma(sigma_) {
    validate();
  }
  DesignObjective(Scalarization k, EstimatorKind e, const FunctionalFamily &family, PriorOperator V0_, double lam_,
                  double sigma_)
      : kind(k), estimator(e), functionals(family.materialize()), V0(std::move(V0_)), lam(lam_), sigma(sigma_) {
    validate();
  }

  void validate() const {
    if (functionals.empty()) throw Error("DesignObjective: empty functional family");
    for (const auto &f : functionals)
      if (f.C.cols() != V0.dim()) throw Error("DesignObjective: functional width differs from V0");
    if (estimator == EstimatorKind::ridge && !(lam > 0 && sigma > 0))
      throw Error("DesignObjective: ridge needs lam > 0 and sigma > 0");
    if (!(scale > 0)) throw Error("DesignObjective: scale must be positive");
  }
};

struct Allocation {
  Mat X;                    // feature rows of the support
  std::vector<Vec> points;  // optional input points, parallel to X rows
  Vec eta;
  std::optional<std::vector<int>> counts;
  int budget = 0;
  double value = -std::numeric_limits<double>::infinity();
  std::vector<double> trace;
};

namespace detail {

inline double scalarize(Scalarization kind, const Mat &W) {
  if (kind == Scalarization::A) return W.trace();
  return lambda_min(W);
}

/* Objective and gradient in raw row weights w (w = scale * eta). */
class Evaluator {
public:
  Evaluator(const DesignObjective &obj, const Mat &X) : obj_(obj), X_(X) {
    if (X.cols() != obj.V0.dim()) throw Error("design: candidate feature width differs from V0");
    if (X.rows() == 0) throw Error("design: empty support");
    if (obj.estimator == EstimatorKind::ridge) {
      a_ = obj.sigma * obj.sigma * obj.lam;
      kernel_form_ = X.rows() < X.cols();
      if (kernel_form_) {
        const Mat VX = obj.V0.apply_inverse(X.transpose());
        G_ = symmetrize(X * VX);
        for (const auto &f : obj.functionals) {
          A_.push_back(symmetrize(f.C * obj.V0.apply_inverse(f.C.transpose())));
          B0_.push_back(f.C * VX);
        }
      } else {
        V0m_ = obj.V0.matrix();
      }
    } else {
      groups_ = group_rows(X);
    }
  }

  const DesignObjective &objective() const { return obj_; }
  Eigen::Index size() const { return X_.rows(); }

  double value(const Vec &w) { return eval(w, nullptr); }
  double value_grad(const Vec &w, Vec &grad) { return eval(w, &grad); }

  // Ridge only: R_k = C_k M^{-1} C_k^T, columns of Gc_k = C_k M^{-1} x_i, q_i = x_i^T M^{-1} x_i.
  void ridge_state(const Vec &w, std::vector<Mat> &R, std::vector<Mat> &Gc, Vec *q) {
    R.clear();
    Gc.clear();
    if (kernel_form_) {
      Mat F = w.asDiagonal() * G_;
      F.diagonal().array() += a_;
      Eigen::PartialPivLU<Mat> lut(F.transpose());
      for (size_t k = 0; k < A_.size(); ++k) {
        Mat g = lut.solve(B0_[k].transpose()).transpose();  // B0 F^{-1}
        R.push_back(symmetrize((A_[k] - g * w.asDiagonal() * B0_[k].transpose()) / a_));
        Gc.push_back(std::move(g));
      }
      if (q) *q = lut.solve(G_).diagonal();
      return;
    }
    Mat M = a_ * V0m_;
    M.noalias() += X_.transpose() * w.asDiagonal() * X_;
    Eigen::LLT<Mat> llt(symmetrize(M));
    if (llt.info() != Eigen::Success) throw Error("design: ridge system is not positive definite");
    Mat P;
    if (q) {
      P = llt.solve(X_.transpose());  // m x N
      *q = (X_.transpose().cwiseProduct(P)).colwise().sum().transpose();
    }
    for (const auto &f : obj_.functionals) {
      const Mat HC = llt.solve(f.C.transpose());  // M^{-1} C^T
      R.push_back(symmetrize(f.C * HC));
      Gc.push_back(HC.transpose() * X_.transpose());
    }
  }

  double a() const { return a_; }

private:
  double eval(const Vec &w, Vec *grad) {
    if (w.size() != X_.rows()) throw Error("design: weight length mismatch");
    if (obj_.estimator == EstimatorKind::ridge) return eval_ridge(w, grad);
    return eval_interp(w, grad);
  }

  /* Value and (super)gradient of f at W given dW/dw_i = c_i u_i u_i^T (columns of U).
     When lambda_min is repeated the gradient averages over its eigenspace. */
  double finish(const Mat &W, const Mat &U, const Vec &c, Vec *grad) const {
    if (obj_.kind == Scalarization::A) {
      if (grad) *grad = c.cwiseProduct(U.colwise().squaredNorm().transpose());
      return W.trace();
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(W);
    const Vec &ev = es.eigenvalues();
    if (grad) {
      Eigen::Index k = 1;
      while (k < ev.size() && ev(k) - ev(0) < 1e-8 * std::max(1.0, std::abs(ev(k)))) ++k;
      const Mat P = es.eigenvectors().leftCols(k).transpose() * U;
      *grad = c.cwiseProduct(P.colwise().squaredNorm().transpose()) / static_cast<double>(k);
    }
    return ev(0);
  }

  double eval_ridge(const Vec &w, Vec *grad) {
    std::vector<Mat> R, Gc;
    ridge_state(w, R, Gc, nullptr);
    const double s2 = obj_.sigma * obj_.sigma;
    double best = std::numeric_limits<double>::infinity();
    Vec best_grad;
    for (size_t k = 0; k < R.size(); ++k) {
      const Mat W = spd_inverse(R[k]) / s2;
      Vec g;
      const Mat U = W * Gc[k];
      const double v = finish(W, U, Vec::Constant(w.size(), s2), grad ? &g : nullptr);
      if (v < best) {
        best = v;
        best_grad = g;
      }
    }
    if (grad) *grad = best_grad;
    return best;
  }

  const std::vector<Mat> *interp_factors(const std::vector<char> &on) {
    std::string key(on.begin(), on.end());
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second.ok ? &it->second.L : nullptr;
    Cached c;
    std::vector<int> rows;
    for (size_t g = 0; g < on.size(); ++g)
      if (on[g] == '1') rows.push_back(static_cast<int>(g));
    Mat Xs(static_cast<Eigen::Index>(rows.size()), X_.cols());
    for (size_t r = 0; r < rows.size(); ++r) Xs.row(r) = groups_.unique.row(rows[r]);
    try {
      for (const auto &f : obj_.functionals) c.L.push_back(InterpFactor(Xs, f.C, obj_.V0).L());
      c.ok = true;
    } catch (const Error &) {
      c.ok = false;
      c.L.clear();
    }
    auto res = cache_.emplace(key, std::move(c));
    return res.first->second.ok ? &res.first->second.L : nullptr;
  }

  double eval_interp(const Vec &w, Vec *grad) {
    const double ninf = -std::numeric_limits<double>::infinity();
    const Eigen::Index ng = groups_.unique.rows();
    Vec wg = Vec::Zero(ng);
    for (Eigen::Index i = 0; i < w.size(); ++i) wg(groups_.group_of[i]) += w(i);
    std::vector<char> on(ng);
    std::vector<int> idx;
    for (Eigen::Index g = 0; g < ng; ++g) {
      on[g] = wg(g) > 0.0 ? '1' : '0';
      if (wg(g) > 0.0) idx.push_back(static_cast<int>(g));
    }
    auto fail = [&]() {
      if (grad) *grad = Vec::Constant(w.size(), std::numeric_limits<double>::quiet_NaN());
      return ninf;
    };
    if (idx.empty()) return fail();
    const std::vector<Mat> *Ls = interp_factors(on);
    if (!Ls) return fail();
    Vec ws(static_cast<Eigen::Index>(idx.size()));
    for (size_t r = 0; r < idx.size(); ++r) ws(r) = wg(idx[r]);
    double best = std::numeric_limits<double>::infinity();
    Vec best_g;
    for (const Mat &L : *Ls) {
      const Mat inner = symmetrize(L * ws.cwiseInverse().asDiagonal() * L.transpose());
      const Vec ev = sym_eigenvalues(inner);
      if (!(ev(0) > 1e-14 * ev(ev.size() - 1))) return fail();
      const Mat W = spd_inverse(inner);
      Vec gg;
      const double v = finish(W, W * L, ws.array().square().inverse().matrix(), grad ? &gg : nullptr);
      if (v < best) {
        best = v;
        best_g = gg;
      }
    }
    if (grad) {
      grad->setZero(w.size());
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const int g = groups_.group_of[i];
        if (on[g] != '1') continue;
        const auto pos = std::lower_bound(idx.begin(), idx.end(), g) - idx.begin();
        (*grad)(i) = best_g(pos);
      }
    }
    return best;
  }

  struct Cached {
    std::vector<Mat> L;
    bool ok = false;
  };

  const DesignObjective &obj_;
  Mat X_;
  double a_ = 0.0;
  bool kernel_form_ = false;
  Mat G_, V0m_;
  std::vector<Mat> A_, B0_;
  RowGroups groups_;
  std::unordered_map<std::string, Cached> cache_;
};

}  // namespace detail

/* f(W(D(scale eta)^{1/2} X)), minimum over the family.  An unidentifiable
   interpolation design returns -infinity. */
inline double evaluate_objective(const DesignObjective &obj, const Allocation &alloc) {
  check_simplex(alloc.eta);
  if (alloc.eta.size() != alloc.X.rows()) throw Error("evaluate_objective: eta length mismatch");
  detail::Evaluator ev(obj, alloc.X);
  return ev.value(obj.scale * alloc.eta);
}

inline Allocation make_allocation(const Mat &X, const Vec &eta, const std::vector<Vec> &points = {}) {
  Allocation a;
  a.X = X;
  a.eta = eta;
  a.points = points;
  return a;
}

/* Evenly spaced seed indices round(k (N-1) / p), k = 0..p. */
inline std::vector<int> default_seeds(int N, int p) {
  std::vector<int> s;
  for (int k = 0; k <= p; ++k)
    s.push_back(p == 0 ? 0 : static_cast<int>(std::lround(static_cast<double>(k) * (N - 1) / p)));
  return s;
}

/* Greedy: start from one count at each seed, then add the candidate that
   maximises f(W(counts + e_j)) until the total reaches the budget.  Ties go to
   the lowest index.  Ridge only. */
inline Allocation greedy_design(const DesignObjective &obj, const Mat &candidates, int budget,
                                std::vector<int> seeds = {}) {
  if (obj.estimator != EstimatorKind::ridge)
    throw Error("greedy_design: the interpolation estimator is not supported, use mirror_descent_design");
  const int N = static_cast<int>(candidates.rows());
  if (N == 0) throw Error("greedy_design: no candidates");
  if (seeds.empty()) {
    int p = 0;
    for (const auto &f : obj.functionals) p = std::max(p, f.p);
    seeds = default_seeds(N, p);
  }
  if (static_cast<int>(seeds.size()) > budget) throw Error("greedy_design: budget smaller than the seed set");
  detail::Evaluator ev(obj, candidates);
  Vec w = Vec::Zero(N);
  for (int s : seeds) {
    if (s < 0 || s >= N) throw Error("greedy_design: seed index out of range");
    w(s) += 1.0;
  }
  Allocation out;
  out.X = candidates;
  out.trace.push_back(ev.value(w));
  const double s2 = obj.sigma * obj.sigma;
  std::vector<Mat> R, Gc;
  Vec q;
  for (int t = static_cast<int>(seeds.size()); t < budget; ++t) {
    ev.ridge_state(w, R, Gc, &q);
    int best_j = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < N; ++j) {
      double v = std::numeric_limits<double>::infinity();
      for (size_t k = 0; k < R.size(); ++k) {
        const Vec g = Gc[k].col(j);
        const Mat Rj = symmetrize(R[k] - g * g.transpose() / (1.0 + q(j)));
        v = std::min(v, detail::scalarize(obj.kind, spd_inverse(Rj) / s2));
      }
      if (v > best) {
        best = v;
        best_j = j;
      }
    }
    w(best_j) += 1.0;
    out.trace.push_back(best);
  }
  std::vector<int> counts(N);
  for (int i = 0; i < N; ++i) counts[i] = static_cast<int>(std::lround(w(i)));
  out.counts = counts;
  out.budget = budget;
  out.eta = w / w.sum();
  out.value = out.trace.back();
  return out;
}

/* Exponentiated-gradient ascent eta <- eta * exp(s_t g / ||g||_inf), normalised,
   s_t = step0 / sqrt(t).  Returns the best iterate. */
inline Allocation mirror_descent_design(const DesignObjective &obj, const Mat &support, int iters, double step0,
                                        const Vec &init = Vec()) {
  const Eigen::Index n = support.rows();
  if (n == 0) throw Error("mirror_descent_design: empty support");
  if (iters < 0 || !(step0 > 0)) throw Error("mirror_descent_design: need iters >= 0 and step0 > 0");
  Vec eta = init.size() ? init : Vec(Vec::Constant(n, 1.0 / n));
  check_simplex(eta);
  detail::Evaluator ev(obj, support);
  Vec grad;
  double val = ev.value_grad(obj.scale * eta, grad);
  if (!std::isfinite(val) || !grad.allFinite())
    throw Error("mirror_descent_design: objective not differentiable at the initial allocation");
  Allocation out;
  out.X = support;
  out.eta = eta;
  out.value = val;
  out.trace.push_back(val);
  double step = step0;
  int rejected = 0;
  for (int t = 1; t <= iters; ++t) {
    const double gmax = grad.cwiseAbs().maxCoeff();
    if (gmax == 0.0) {
      out.trace.push_back(val);
      continue;
    }
    const double s = step / std::sqrt(static_cast<double>(t));
    Vec cand = eta.array() * ((s / gmax) * grad.array()).exp();
    cand /= cand.sum();
    Vec cgrad;
    const double cval = ev.value_grad(obj.scale * cand, cgrad);
    if (!std::isfinite(cval) || !cgrad.allFinite()) {
      step *= 0.5;
      if (++rejected >= 20) throw Error("mirror_descent_design: 20 consecutive rejected steps");
      --t;
      continue;
    }
    rejected = 0;
    eta = cand;
    val = cval;
    grad = cgrad;
    out.trace.push_back(val);
    if (val > out.value) {
      out.value = val;
      out.eta = eta;
    }
  }
  return out;
}

/* Exhaustive search over the simplex lattice {k / resolution}. */
inline Allocation grid_search_design(const DesignObjective &obj, const Mat &support, int resolution) {
  const int n = static_cast<int>(support.rows());
  if (n < 1 || n > 4) throw Error("grid_search_design: support must have 1..4 points");
  if (resolution < 1) throw Error("grid_search_design: resolution must be positive");
  detail::Evaluator ev(obj, support);
  Allocation out;
  out.X = support;
  std::vector<int> k(n, 0);
  Vec w(n);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n - 1) {
      k[i] = left;
      for (int j = 0; j < n; ++j) w(j) = static_cast<double>(k[j]) / resolution;
      const double v = ev.value(obj.scale * w);
      if (v > out.value || out.eta.size() == 0) {
        out.value = v;
        out.eta = w;
      }
      return;
    }
    for (int c = left; c >= 0; --c) {
      k[i] = c;
      rec(i + 1, left - c);
    }
  };
  rec(0, resolution);
  return out;
}

/* counts_i = ceil(eta_i T) for eta_i > 0.  Products within 1e-9 of an integer
   are treated as that integer. */
inline Allocation round_allocation(const Allocation &alloc, int T) {
  if (T <= 0) throw Error("round_allocation: T must be positive");
  check_simplex(alloc.eta);
  Allocation out = alloc;
  std::vector<int> counts(alloc.eta.size(), 0);
  for (Eigen::Index i = 0; i < alloc.eta.size(); ++i) {
    if (alloc.eta(i) <= 0.0) continue;
    const double x = alloc.eta(i) * T;
    const double r = std::round(x);
    counts[i] = static_cast<int>(std::abs(x - r) <= 1e-9 * std::max(1.0, x) ? r : std::ceil(x));
    counts[i] = std::max(counts[i], 1);
  }
  out.counts = counts;
  out.budget = T;
  return out;
}

/* Removes the overshoot of ceiling rounding: decrements the count with the
   largest excess over eta_i T (lowest index on ties) until the total is T. */
inline std::vector<int> trim_to_budget(const std::vector<int> &counts, const Vec &eta, int T) {
  std::vector<int> c = counts;
  long total = 0;
  for (int v : c) total += v;
  while (total > T) {
    int arg = -1;
    double ex = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < c.size(); ++i) {
      if (c[i] == 0) continue;
      const double e = c[i] - eta(static_cast<Eigen::Index>(i)) * T;
      if (e > ex) {
        ex = e;
        arg = static_cast<int>(i);
      }
    }
    --c[arg];
    --total;
  }
  return c;
}

/** A design at step size h: feature rows, functional and prior. */
struct FamilyDesign {
  Mat X;
  LinearFunctional C;
  PriorOperator V0;
};

struct BiasVarianceRow {
  double h = 0, nu = 0, lambda_min = 0, variance_term = 0, bias_term = 0, total = 0;
  bool flagged = false;  // K singular or ill-conditioned at this h
};

struct BiasVarianceResult {
  double h_star = std::numeric_limits<double>::quiet_NaN();
  double h_cross = std::numeric_limits<double>::quiet_NaN();
  bool boundary = false;  // error curve monotone over the grid
  std::vector<BiasVarianceRow> rows;
};

/* Minimises lambda_min(W)^{-1/2} ((sigma/sqrt(T)) sqrt(xi) + nu/sqrt(lam)) over the
   h grid; W is the uniform-weight W-dagger of the design at h. */
inline BiasVarianceResult balance_bias_variance(const std::function<FamilyDesign(double)> &family,
                                                const std::vector<double> &h_grid, double sigma, double lam,
                                                double delta, int T) {
  if (h_grid.empty()) throw Error("balance_bias_variance: empty h grid");
  if (T < 1) throw Error("balance_bias_variance: T must be positive");
  BiasVarianceResult res;
  double best = std::numeric_limits<double>::infinity();
  int best_i = -1;
  for (double h : h_grid) {
    BiasVarianceRow r;
    r.h = h;
    try {
      std::vector<std::string> warnings;
      auto saved = warning_sink();
      warning_sink() = [&](const std::string &m) { warnings.push_back(m); };
      FamilyDesign d = family(h);
      const Eigen::Index n = d.X.rows();
      const InfoMatrix W =
          weighted_info_matrix(d.X, Vec::Constant(n, 1.0 / n), d.C, d.V0, EstimatorKind::interp, lam, sigma, 1.0);
      r.nu = relative_bias(d.C, d.X, d.V0);
      warning_sink() = saved;
      r.flagged = !warnings.empty();
      r.lambda_min = lambda_min(W.matrix);
      r.variance_term = sigma / std::sqrt(static_cast<double>(T)) * std::sqrt(xi(delta, d.C.p));
      r.bias_term = r.nu / std::sqrt(lam);
      r.total = (r.variance_term + r.bias_term) / std::sqrt(r.lambda_min);
    } catch (const Error &) {
      r.flagged = true;
      r.total = std::numeric_limits<double>::infinity();
    }
    if (r.total < best) {
      best = r.total;
      best_i = static_cast<int>(res.rows.size());
    }
    res.rows.push_back(r);
  }
  if (best_i < 0) throw Error("balance_bias_variance: no evaluable grid point");
  res.h_star = res.rows[best_i].h;
  if (best_i == 0 || best_i == static_cast<int>(res.rows.size()) - 1) {
    res.boundary = true;
    warn("balance_bias_variance: error curve is monotone over the grid, h_star is a boundary point");
  }
  for (size_t i = 1; i < res.rows.size(); ++i) {
    const auto &a = res.rows[i - 1], &b = res.rows[i];
    if (a.flagged || b.flagged) continue;
    const double da = a.variance_term - a.bias_term, db = b.variance_term - b.bias_term;
    if (da == 0.0) {
      res.h_cross = a.h;
      break;
    }
    if ((da > 0) != (db > 0)) {
      res.h_cross = a.h + (b.h - a.h) * da / (da - db);
      break;
    }
  }
  return res;
}

/* Smallest T with sqrt(1/(lambda_min T)) sigma sqrt(xi) + nu / sqrt(lam lambda_min) <= eps. */
inline long query_complexity(double eps, int p, double lambda_min_W, double sigma, double nu, double lam,
                             double delta) {
  if (!(eps > 0)) throw Error("query_complexity: eps must be positive");
  if (!(lambda_min_W > 0) || !(lam > 0)) throw Error("query_complexity: lambda_min and lam must be positive");
  const double floor = nu / std::sqrt(lam * lambda_min_W);
  if (floor >= eps) {
    std::ostringstream os;
    os << "query_complexity: accuracy " << eps << " is unattainable, bias floor is " << floor;
    throw Error(os.str());
  }
  const double c = sigma * std::sqrt(xi(delta, p) / lambda_min_W);
  auto ok = [&](long T) { return c / std::sqrt(static_cast<double>(T)) + floor <= eps; };
  const double g = c / (eps - floor);
  long T = std::max(1L, static_cast<long>(std::ceil(g * g)));
  while (T > 1 && ok(T - 1)) --T;
  while (!ok(T)) ++T;
  return T;
}

struct GeometryRow {
  double h = 0, inv_lambda_min = 0, bound = 0;
  bool holds = false;
};

struct GeometryCheck {
  double c = 0;
  bool all_hold = true;
  std::vector<GeometryRow> rows;
};

/* lambda_min(W)^{-1} for the equal-weight design {x +- h e_i}, with
   W^{-1} = C (X^T D X)^+ C^T, against d h + c h^2 where c is fitted on the two
   smallest h. */
inline GeometryCheck gradient_design_geometry_check(const FeatureMap &map, const Vec &x,
                                                    const std::vector<double> &h_grid) {
  if (h_grid.size() < 2) throw Error("gradient_design_geometry_check: need at least two step sizes");
  const int d = map.input_dim;
  const LinearFunctional C = gradient_functional(map, x);
  GeometryCheck out;
  for (double h : h_grid) {
    std::vector<Vec> pts;
    for (int i = 0; i < d; ++i) {
      Vec e = Vec::Zero(d);
      e(i) = h;
      pts.push_back(x + e);
      pts.push_back(x - e);
    }
    const Mat X = evaluate_design_matrix(map, pts) / std::sqrt(static_cast<double>(pts.size()));
    Eigen::BDCSVD<Mat> svd(X, Eigen::ComputeThinV);
    const Vec &s = svd.singularValues();
    int r = 0;
    while (r < s.size() && s(r) > kPinvCutoff * s(0)) ++r;
    const Mat CV = C.C * svd.matrixV().leftCols(r) * s.head(r).cwiseInverse().asDiagonal();
    GeometryRow row;
    row.h = h;
    row.inv_lambda_min = lambda_max(symmetrize(CV * CV.transpose()));
    out.rows.push_back(row);
  }
  std::vector<size_t> order(out.rows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return out.rows[a].h < out.rows[b].h; });
  for (int k = 0; k < 2; ++k) {
    const auto &r = out.rows[order[k]];
    out.c = std::max(out.c, (r.inv_lambda_min - d * r.h) / (r.h * r.h));
  }
  for (auto &r : out.rows) {
    r.bound = d * r.h + out.c * r.h * r.h;
    r.holds = r.inv_lambda_min <= r.bound * (1 + 1e-12);
    out.all_hold = out.all_hold && r.holds;
  }
  return out;
}

}  // namespace rkhs_oed
