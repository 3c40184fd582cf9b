#pragma once

#include "rkhs_oed/design.hpp"
#include "rkhs_oed/scenarios/config.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_odeiv2.h>

#include <cstdio>
#include <filesystem>
#include <map>
#include <random>

namespace rkhs_oed::scenarios {

/* splitmix64 finaliser; per-replica streams are seeded with mix(seed, index). */
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Vec gaussian_vector(Rng &rng, Eigen::Index n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

/* Zero-mean noise with standard deviation sigma; "uniform" is bounded on
   [-sqrt(3) sigma, sqrt(3) sigma]. */
inline Vec noise_vector(Rng &rng, Eigen::Index n, double sigma, const std::string &kind = "gaussian") {
  if (kind == "gaussian") return sigma * gaussian_vector(rng, n);
  if (kind == "uniform") {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = std::sqrt(3.0) * sigma * u(rng);
    return v;
  }
  throw Error("unknown noise kind " + kind);
}

struct CsvTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw Error("csv " + name + ": row width differs from header");
    rows.push_back(std::move(row));
  }
  std::string str() const {
    std::string s;
    for (size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
    s += "\n";
    for (const auto &r : rows) {
      for (size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
      s += "\n";
    }
    return s;
  }
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(long v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "1" : "0"; }

struct ScenarioOutput {
  std::vector<CsvTable> tables;
  json summary = json::object();
  std::vector<std::pair<std::string, json>> json_files;

  const CsvTable &table(const std::string &name) const {
    for (const auto &t : tables)
      if (t.name == name) return t;
    throw Error("no table " + name);
  }
};

/* Column contracts of the primary table of each scenario. */
inline const std::vector<std::string> &primary_columns(const std::string &scenario) {
  static const std::map<std::string, std::vector<std::string>> c{
      {"gradient", {"h", "nu", "variance_term", "total_error", "T"}},
      {"contamination", {"budget", "design_kind", "mse"}},
      {"pharma", {"n_samples", "design_kind", "gamma_mse"}},
      {"lyapunov", {"step", "strategy", "set_kind", "sup_dV_bound", "certified"}},
      {"ellipse", {"set_kind", "design_kind", "interval_lo", "interval_hi"}},
      {"coverage", {"replica", "t", "norm_kind", "deviation", "radius", "covered"}}};
  auto it = c.find(scenario);
  if (it == c.end()) throw Error("unknown scenario " + scenario);
  return it->second;
}

inline void validate_csv(const CsvTable &t, const std::vector<std::string> &columns) {
  if (t.columns != columns) throw Error("csv " + t.name + ": header does not match the column contract");
  for (const auto &r : t.rows) {
    if (r.size() != columns.size()) throw Error("csv " + t.name + ": ragged row");
    for (const auto &cell : r)
      if (cell.empty() || cell.find(',') != std::string::npos) throw Error("csv " + t.name + ": bad cell");
  }
}

inline void write_text(const std::filesystem::path &p, const std::string &s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
}

/* ---- features ---- */

inline Vec domain_lower(const FeatureSpec &f) {
  Vec v(f.domain.size());
  for (size_t i = 0; i < f.domain.size(); ++i) v(i) = f.domain[i][0];
  return v;
}
inline Vec domain_upper(const FeatureSpec &f) {
  Vec v(f.domain.size());
  for (size_t i = 0; i < f.domain.size(); ++i) v(i) = f.domain[i][1];
  return v;
}

/* Regular grid with n points per axis over the feature domain. */
inline std::vector<Vec> grid_points(const FeatureSpec &f, int n) {
  const int d = static_cast<int>(f.domain.size());
  std::vector<Vec> pts;
  std::vector<int> idx(d, 0);
  while (true) {
    Vec x(d);
    for (int k = 0; k < d; ++k)
      x(k) = n == 1 ? 0.5 * (f.domain[k][0] + f.domain[k][1])
                    : f.domain[k][0] + (f.domain[k][1] - f.domain[k][0]) * idx[k] / (n - 1);
    pts.push_back(x);
    int k = 0;
    while (k < d && ++idx[k] == n) idx[k++] = 0;
    if (k == d) break;
  }
  return pts;
}

inline FeatureMap make_feature_map(const FeatureSpec &f) {
  if (f.kind == "qff_se") return qff_squared_exponential(f.lengthscale, f.m, domain_lower(f), domain_upper(f));
  if (f.kind == "linear") return linear_features(static_cast<int>(f.domain.size()));
  if (f.kind == "nystrom") {
    if (f.landmarks < 1) throw Error("nystrom features need landmarks >= 1");
    return nystrom_features(se_kernel(f.lengthscale), grid_points(f, f.landmarks));
  }
  throw Error("feature kind " + f.kind + " is not a generic feature map");
}

inline Mat rows_to_matrix(const std::vector<std::vector<double>> &rows) {
  if (rows.empty()) throw Error("empty matrix");
  Mat M(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw Error("ragged matrix");
    for (size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  }
  return M;
}

inline std::vector<Vec> to_points(const std::vector<std::vector<double>> &pts) {
  std::vector<Vec> out;
  for (const auto &p : pts) out.push_back(Eigen::Map<const Vec>(p.data(), p.size()));
  return out;
}

inline LinearFunctional make_functional(const FunctionalSpec &s, const FeatureMap &map) {
  if (s.kind == "evaluation") return evaluation_functional(map, to_points(s.points));
  if (s.kind == "gradient") {
    if (s.points.size() != 1) throw Error("gradient functional needs exactly one point");
    return gradient_functional(map, to_points(s.points)[0]);
  }
  if (s.kind == "matrix") return LinearFunctional::make(rows_to_matrix(s.rows), "matrix");
  if (s.kind == "selector") return contamination_selector(s.indices, map.dim);
  throw Error("functional kind " + s.kind + " cannot be built from a feature map");
}

/* ---- ODE and optimisation ---- */

/* Fixed-step RK4 from (t0, y0), reporting the state at each of the increasing
   times; every interval is split into ceil(len / h) equal steps. */
inline std::vector<Vec> rk4_trajectory(const std::function<void(double, const double *, double *)> &rhs, double t0,
                                       const Vec &y0, const std::vector<double> &times, double h) {
  if (!(h > 0)) throw Error("rk4_trajectory: step must be positive");
  const size_t dim = static_cast<size_t>(y0.size());
  auto f = [](double t, const double y[], double dydt[], void *params) -> int {
    (*static_cast<const std::function<void(double, const double *, double *)> *>(params))(t, y, dydt);
    return GSL_SUCCESS;
  };
  gsl_odeiv2_system sys{f, nullptr, dim, const_cast<void *>(static_cast<const void *>(&rhs))};
  gsl_odeiv2_step *step = gsl_odeiv2_step_alloc(gsl_odeiv2_step_rk4, dim);
  Vec y = y0, err(y0.size());
  double t = t0;
  std::vector<Vec> out;
  out.reserve(times.size());
  for (double target : times) {
    if (target < t - 1e-12) {
      gsl_odeiv2_step_free(step);
      throw Error("rk4_trajectory: times must be increasing and >= t0");
    }
    const long n = static_cast<long>(std::ceil((target - t) / h - 1e-9));
    if (n > 0) {
      const double hh = (target - t) / n;
      for (long k = 0; k < n; ++k) {
        gsl_odeiv2_step_apply(step, t, hh, y.data(), err.data(), nullptr, nullptr, &sys);
        t += hh;
      }
    }
    t = target;
    out.push_back(y);
  }
  gsl_odeiv2_step_free(step);
  return out;
}

struct NelderMeadResult {
  Vec x;
  double value = 0;
  int iterations = 0;
};

/* Nelder-Mead over a box: the objective is evaluated at the clamped point plus
   a quadratic penalty on the distance to the box, and the result is clamped. */
inline NelderMeadResult nelder_mead_box(const std::function<double(const Vec &)> &f, const Vec &x0, const Vec &lo,
                                        const Vec &hi, int max_iter, double tol) {
  const size_t n = static_cast<size_t>(x0.size());
  struct Ctx {
    const std::function<double(const Vec &)> *f;
    Vec lo, hi;
  } ctx{&f, lo, hi};
  auto clamp = [](const Vec &x, const Vec &l, const Vec &h) { return Vec(x.cwiseMax(l).cwiseMin(h)); };
  auto fn = [](const gsl_vector *v, void *p) {
    auto *c = static_cast<Ctx *>(p);
    Vec x(v->size);
    for (size_t i = 0; i < v->size; ++i) x(i) = gsl_vector_get(v, i);
    const Vec xc = x.cwiseMax(c->lo).cwiseMin(c->hi);
    return (*c->f)(xc) + (x - xc).squaredNorm();
  };
  gsl_multimin_function func{fn, n, &ctx};
  gsl_vector *x = gsl_vector_alloc(n), *ss = gsl_vector_alloc(n);
  for (size_t i = 0; i < n; ++i) {
    gsl_vector_set(x, i, x0(i));
    gsl_vector_set(ss, i, 0.1 * (hi(i) - lo(i)));
  }
  gsl_multimin_fminimizer *s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &func, x, ss);
  int it = 0;
  for (; it < max_iter; ++it) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), tol) == GSL_SUCCESS) break;
  }
  NelderMeadResult r;
  r.x.resize(n);
  for (size_t i = 0; i < n; ++i) r.x(i) = gsl_vector_get(s->x, i);
  r.x = clamp(r.x, lo, hi);
  r.value = f(r.x);
  r.iterations = it;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(x);
  gsl_vector_free(ss);
  return r;
}

}  // namespace rkhs_oed::scenarios
