#pragma once

#include "rkhs_oed/scenarios/common.hpp"

namespace rkhs_oed::scenarios {

/* Two-compartment model c_s' = -a c_s, c_b' = b c_s - d c_b with c_s(0) = dose, c_b(0) = 0. */
struct OdeSystem {
  Vec gamma;  // (a, b, d)
  double dose = 1.0;
  double t_span = 2.0;

  void rhs(double, const double *y, double *dy) const {
    dy[0] = -gamma(0) * y[0];
    dy[1] = gamma(1) * y[0] - gamma(2) * y[1];
  }
  Vec initial() const { return Vec2(dose, 0.0); }

  /* c_b at the given increasing times, RK4 with the given number of steps over t_span. */
  Vec blood(const std::vector<double> &times, int steps) const {
    const auto traj = rk4_trajectory([this](double t, const double *y, double *dy) { rhs(t, y, dy); }, 0.0, initial(),
                                     times, t_span / steps);
    Vec out(times.size());
    for (size_t i = 0; i < times.size(); ++i) out(i) = traj[i](1);
    return out;
  }

private:
  static Vec Vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
  }
};

/* Discretised operator T(gamma) on the stacked coefficients (theta_s, theta_b):
   rows (D + a E) theta_s = 0 and -b E theta_s + (D + d E) theta_b = 0. */
inline Mat pharma_operator(const Mat &E, const Mat &D, const Vec &g) {
  const Eigen::Index n = E.rows(), m = E.cols();
  Mat T = Mat::Zero(2 * n, 2 * m);
  T.topLeftCorner(n, m) = D + g(0) * E;
  T.bottomLeftCorner(n, m) = -g(1) * E;
  T.bottomRightCorner(n, m) = D + g(2) * E;
  return T;
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

inline ScenarioOutput run_pharma_scenario(const ScenarioConfig &cfg) {
  const auto &b = cfg.pharma;
  if (b.gamma_true.size() != 3 || b.gamma_box.size() != 3) throw Error("pharma: gamma must have 3 components");
  if (b.grid_per_axis < 1 || b.candidates < 3 || b.replicas < 1) throw Error("pharma: bad grid/candidate/replica count");
  if (cfg.features.kind != "qff_se" || cfg.features.domain.size() != 1)
    throw Error("pharma: features must be 1-d qff_se");
  const double H = b.horizon;
  FeatureSpec fs = cfg.features;
  fs.domain = {{0.0, H}};
  const FeatureMap map = make_feature_map(fs);
  const int m = map.dim;

  const auto tg = linspace(0.0, H, b.grid_points);
  Mat E(tg.size(), m), D(tg.size(), m);
  for (size_t i = 0; i < tg.size(); ++i) {
    E.row(i) = map.derivative_1d(tg[i], 0).transpose();
    D.row(i) = map.derivative_1d(tg[i], 1).transpose();
  }
  Mat Eb = Mat::Zero(2 * E.rows(), 2 * m);
  Eb.topLeftCorner(E.rows(), m) = E;
  Eb.bottomRightCorner(E.rows(), m) = E;

  std::vector<Vec> grid;
  const auto ax = [&](int k) {
    return linspace(b.gamma_box[k][0], b.gamma_box[k][1], b.grid_per_axis);
  };
  for (double a : ax(0))
    for (double bb : ax(1))
      for (double d : ax(2)) {
        Vec g(3);
        g << a, bb, d;
        grid.push_back(g);
      }
  std::vector<LinearFunctional> Cs;
  for (const auto &g : grid) {
    const NullspaceFunctional nf = ode_nullspace_functional(pharma_operator(E, D, g), Vec(), Eb, 1e-8);
    if (nf.functional.p != 2) {
      std::ostringstream os;
      os << "pharma: discretised operator has a " << nf.functional.p << "-dimensional null space at gamma = ("
         << g.transpose() << "), expected 2";
      throw Error(os.str());
    }
    Cs.push_back(nf.functional);
  }

  Vec u = Vec::Zero(2 * m), v = Vec::Zero(2 * m);
  u.head(m) = map.eval(Vec::Zero(1));
  v.tail(m) = map.eval(Vec::Zero(1));
  if (b.prior_weights.size() != 2) throw Error("pharma: prior_weights needs two entries");
  const PriorOperator V0(Mat(Mat::Identity(2 * m, 2 * m) + b.prior_weights[0] * u * u.transpose() +
                             b.prior_weights[1] * v * v.transpose()));

  // the design objective needs sigma > 0 even when the data are noiseless
  const double design_sigma = cfg.sigma > 0 ? cfg.sigma : 0.01;
  DesignObjective obj(Scalarization::A, EstimatorKind::ridge, Cs[0], V0, cfg.lam, design_sigma);
  obj.functionals = Cs;
  obj.validate();

  auto rows_at = [&](const std::vector<double> &ts) {
    Mat X = Mat::Zero(ts.size(), 2 * m);
    for (size_t i = 0; i < ts.size(); ++i) X.row(i).tail(m) = map.eval(Vec::Constant(1, ts[i])).transpose();
    return X;
  };
  const auto cand_t = linspace(H / b.candidates, H, b.candidates);
  const Mat cand = rows_at(cand_t);

  Vec lo(3), hi(3), center(3), truth(3);
  for (int k = 0; k < 3; ++k) {
    lo(k) = b.gamma_box[k][0];
    hi(k) = b.gamma_box[k][1];
    center(k) = 0.5 * (lo(k) + hi(k));
    truth(k) = b.gamma_true[k];
  }
  const OdeSystem truth_sys{truth, b.dose, H};
  auto fit = [&](const std::vector<double> &ts, const Vec &y) {
    auto sse = [&](const Vec &g) { return (y - OdeSystem{g, b.dose, H}.blood(ts, b.rk4_steps)).squaredNorm(); };
    return nelder_mead_box(sse, center, lo, hi, b.nm_max_iter, b.nm_tol).x;
  };

  ScenarioOutput out;
  CsvTable t{"pharma", primary_columns("pharma"), {}};
  json design = json::object();
  double noiseless = 0.0;
  for (int n : b.sample_counts) {
    if (n < 3) throw Error("pharma: sample counts must be >= 3 (greedy seeds)");
    const Allocation g = greedy_design(obj, cand, n);
    std::vector<double> t_opt;
    json opt_pts = json::array();
    for (int i = 0; i < b.candidates; ++i) {
      for (int k = 0; k < (*g.counts)[i]; ++k) t_opt.push_back(cand_t[i]);
      if ((*g.counts)[i] > 0) opt_pts.push_back({{"t", cand_t[i]}, {"count", (*g.counts)[i]}});
    }
    const auto t_eq = linspace(H / n, H, n);
    DesignObjective eq_obj = obj;
    eq_obj.scale = n;
    const double eq_value = evaluate_objective(eq_obj, make_allocation(rows_at(t_eq), Vec::Constant(n, 1.0 / n)));
    design[std::to_string(n)] = {{"optimized", {{"points", opt_pts}, {"objective", g.value}}},
                                 {"equal", {{"points", t_eq}, {"objective", eq_value}}}};

    for (const auto &[kind, ts] : {std::pair<std::string, std::vector<double>>{"optimized", t_opt}, {"equal", t_eq}}) {
      const Vec clean = truth_sys.blood(ts, b.rk4_steps);
      noiseless = std::max(noiseless, (fit(ts, clean) - truth).cwiseAbs().maxCoeff());
      double se = 0.0;
      for (int r = 0; r < b.replicas; ++r) {
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(n) * 100003ULL + r));
        const Vec y = clean + noise_vector(rng, clean.size(), cfg.sigma);
        se += (fit(ts, y) - truth).squaredNorm();
      }
      t.add({fmt(n), kind, fmt(se / b.replicas)});
    }
  }
  out.tables.push_back(std::move(t));
  out.json_files.push_back({"pharma_design.json", design});
  out.summary["noiseless_max_abs_error"] = noiseless;
  out.summary["gamma_grid_size"] = grid.size();
  return out;
}

}  // namespace rkhs_oed::scenarios
