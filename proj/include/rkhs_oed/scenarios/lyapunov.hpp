#pragma once

#include "rkhs_oed/scenarios/common.hpp"

namespace rkhs_oed::scenarios {

/* x' = x + g(x) + u with g = A Phi(x) unknown.  The controller cancels the known
   linear drift only: u = -x - K (x - x_ref) + x_ref', so with z = x - x_ref and
   V = z^T Sigma z, dV/dt = 2 z^T Sigma g(x) - 2 K z^T Sigma z.
   theta stacks the rows of A: theta = (A_0., A_1.). */
struct ControlSystem {
  FeatureMap map;
  Mat A;  // 2 x m ground truth
  double gain = 200.0;
  Mat Sigma = Mat::Identity(2, 2);
  double tube_width = 0.01;
  double dt = 1e-4;

  static Vec x_ref(double t) {
    Vec v(2);
    v << std::sin(t), std::cos(t);
    return v;
  }
  Vec g(const Vec &x) const { return A * map.eval(x); }
  Vec drift(const Vec &x) const { return x + g(x); }

  /* (x(dt) - x)/dt under the uncontrolled drift, minus the known linear part. */
  Vec derivative_oracle(const Vec &x) const {
    auto rhs = [this](double, const double *y, double *dy) {
      const Vec f = drift(Eigen::Map<const Vec>(y, 2));
      dy[0] = f(0);
      dy[1] = f(1);
    };
    const Vec x1 = rk4_trajectory(rhs, 0.0, x, {dt}, dt)[0];
    return (x1 - x) / dt - x;
  }
};

/* g(x) = sigmoid(2 x_1) (1, -1) + 0.5 (sin(pi x_2), cos(pi x_1)). */
inline Vec lyapunov_true_g(const Vec &x) {
  const double s = 1.0 / (1.0 + std::exp(-2.0 * x(0)));
  Vec v(2);
  v << s + 0.5 * std::sin(M_PI * x(1)), -s + 0.5 * std::cos(M_PI * x(0));
  return v;
}

/* Ridge fit of lyapunov_true_g on a 60 x 60 grid of the feature domain. */
inline ControlSystem make_control_system(const ScenarioConfig &cfg) {
  const auto &b = cfg.lyapunov;
  if (cfg.features.domain.size() != 2) throw Error("lyapunov: features must live on a 2-d box");
  ControlSystem cs;
  cs.map = make_feature_map(cfg.features);
  cs.gain = b.gain;
  cs.tube_width = b.tube_width;
  cs.dt = b.dt;
  const auto pts = grid_points(cfg.features, 60);
  const Mat F = evaluate_design_matrix(cs.map, pts);
  Mat G(pts.size(), 2);
  for (size_t i = 0; i < pts.size(); ++i) G.row(i) = lyapunov_true_g(pts[i]).transpose();
  Mat M = F.transpose() * F;
  M.diagonal().array() += b.fit_reg;
  cs.A = spd_solve(M, F.transpose() * G).transpose();
  return cs;
}

struct TubePoint {
  Vec x, z;
  double dVdt_ref = 0;  // -2 K z^T Sigma z
};

inline std::vector<TubePoint> tube_points(const ControlSystem &cs, int n, const std::vector<double> &offsets) {
  std::vector<TubePoint> tp;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * M_PI * i / n;
    const Vec r = ControlSystem::x_ref(t);  // unit circle, r is the outward normal
    for (double o : offsets) {
      if (o == 0.0) throw Error("lyapunov: radial offset 0 lies on the reference");
      TubePoint p;
      p.z = o * cs.tube_width * r;
      p.x = r + p.z;
      p.dVdt_ref = -2.0 * cs.gain * p.z.dot(cs.Sigma * p.z);
      tp.push_back(p);
    }
  }
  return tp;
}

/* max over the tube of dV/dt = 2 z^T Sigma A Phi(x) - 2 K z^T Sigma z. */
inline double tube_sup_dV(const ControlSystem &cs, const std::vector<TubePoint> &tube, const Mat &A) {
  double s = -std::numeric_limits<double>::infinity();
  for (const auto &p : tube)
    s = std::max(s, 2.0 * (cs.Sigma * p.z).dot(A * cs.map.eval(p.x)) + p.dVdt_ref);
  return s;
}

namespace detail {

struct LyapunovRun {
  std::vector<double> ours, base;  // sup bound per step
  int cert_ours = -1, cert_base = -1;
};

/* Uncertainty-driven or random sampling.  Both confidence sets are centred at
   the ridge estimate; the bound is C_x theta_hat + beta |C_x|_{M^{-1}} - 2K|z|^2
   with C_x = (2 (Sigma z)_0 Phi(x), 2 (Sigma z)_1 Phi(x)). */
inline LyapunovRun lyapunov_run(const ScenarioConfig &cfg, const ControlSystem &cs, const std::vector<TubePoint> &tube,
                                const Mat &Phi_tube, const Mat &CO, const Mat &a_tube, const std::string &strategy,
                                const std::vector<Vec> &init, Rng &rng) {
  const auto &b = cfg.lyapunov;
  const int m = cs.map.dim, r = static_cast<int>(CO.rows()), nt = static_cast<int>(tube.size());
  const double s2 = cfg.sigma * cfg.sigma, lam = cfg.lam;
  const double lo = cfg.features.domain[0][0], hi = cfg.features.domain[0][1];
  const bool ref = strategy == "random-ref" || strategy == "unc-ref";
  const bool unc = strategy == "unc" || strategy == "unc-ref";
  if (!ref && !unc && strategy != "random") throw Error("lyapunov: unknown strategy " + strategy);
  double omin = 0, omax = 0;
  for (double o : b.radial_offsets) {
    omin = std::min(omin, o);
    omax = std::max(omax, o);
  }
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto draw = [&]() {
    Vec x(2);
    if (ref) {
      const double t = 2 * M_PI * U(rng), rad = 1.0 + cs.tube_width * (omin + (omax - omin) * U(rng));
      x = rad * ControlSystem::x_ref(t);
    } else {
      x << lo + (hi - lo) * U(rng), lo + (hi - lo) * U(rng);
    }
    return x;
  };
  std::vector<Vec> pool;
  Mat Phi_pool;
  Vec var_pool;
  if (unc) {
    for (int i = 0; i < b.pool_size; ++i) pool.push_back(draw());
    Phi_pool = evaluate_design_matrix(cs.map, pool);
    var_pool = Phi_pool.rowwise().squaredNorm() / lam;
  }

  Mat Vinv = Mat::Identity(m, m) / lam;  // (Phi^T Phi / s2 + lam I)^{-1}, shared by both outputs
  Mat bvec = Mat::Zero(m, 2);
  Vec var_tube = Phi_tube.rowwise().squaredNorm() / lam;  // Phi^T Vinv Phi
  Mat Oinv = Mat::Identity(r, r) / lam;
  Vec q_tube = a_tube.rowwise().squaredNorm() / lam;  // a Omega^{-1} a^T
  double logdetV = 0, logdetO = 0;                    // relative to the prior
  Vec sz_tube(nt);
  for (int k = 0; k < nt; ++k) sz_tube(k) = 4.0 * (cs.Sigma * tube[k].z).squaredNorm();

  auto add = [&](const Vec &x) {
    const Vec phi = cs.map.eval(x);
    const Vec y = cs.derivative_oracle(x) + noise_vector(rng, 2, cfg.sigma);
    const Vec u = Vinv * phi;
    const double c = s2 + phi.dot(u);
    logdetV += 2.0 * std::log(c / s2);  // two identical blocks
    Vinv -= u * u.transpose() / c;
    var_tube -= (Phi_tube * u).cwiseAbs2() / c;
    if (unc) var_pool -= (Phi_pool * u).cwiseAbs2() / c;
    bvec += phi * y.transpose() / s2;
    for (int i = 0; i < 2; ++i) {
      // projected row z = C_O x_row, x_row = e_i (x) phi
      const Vec z = CO.middleCols(i * m, m) * phi;
      const Vec w = Oinv * z;
      const double cz = s2 + z.dot(w);
      logdetO += std::log(cz / s2);
      Oinv -= w * w.transpose() / cz;
      q_tube -= (a_tube * w).cwiseAbs2() / cz;
    }
  };
  auto bounds = [&](double &ours, double &base) {
    const Mat Ahat = (Vinv * bvec).transpose();  // 2 x m
    const Mat G = Phi_tube * Ahat.transpose();   // nt x 2
    const double l1d = std::log(1.0 / cfg.delta);
    const double beta_o = std::sqrt(2.0 * (l1d + 0.5 * logdetO)) + 1.0;
    const double beta_b = std::sqrt(2.0 * (l1d + 0.5 * logdetV)) + 1.0;
    ours = base = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < nt; ++k) {
      const double mean = 2.0 * (cs.Sigma * tube[k].z).dot(G.row(k).transpose()) + tube[k].dVdt_ref;
      const double o = mean + beta_o * std::sqrt(std::max(0.0, q_tube(k)));
      const double bb = mean + beta_b * std::sqrt(std::max(0.0, sz_tube(k) * var_tube(k)));
      ours = std::max(ours, o);
      base = std::max(base, bb);
    }
  };

  LyapunovRun run;
  for (const auto &x : init) add(x);
  int step = static_cast<int>(init.size());
  while (true) {
    double o, bb;
    bounds(o, bb);
    run.ours.push_back(o);
    run.base.push_back(bb);
    if (run.cert_ours < 0 && o < 0) run.cert_ours = step;
    if (run.cert_base < 0 && bb < 0) run.cert_base = step;
    if ((run.cert_ours >= 0 && run.cert_base >= 0) || step >= cfg.budget) break;
    if (unc) {
      Eigen::Index j;
      var_pool.maxCoeff(&j);
      add(pool[j]);
    } else {
      add(draw());
    }
    ++step;
  }
  return run;
}

}  // namespace detail

inline ScenarioOutput run_lyapunov_scenario(const ScenarioConfig &cfg) {
  const auto &b = cfg.lyapunov;
  if (b.replicas < 1 || b.initial_points < 1 || cfg.budget < b.initial_points)
    throw Error("lyapunov: need replicas >= 1 and initial_points <= budget");
  if (!(cfg.sigma > 0)) throw Error("lyapunov: sigma must be positive");
  const ControlSystem cs = make_control_system(cfg);
  const int m = cs.map.dim;
  const auto tube = tube_points(cs, b.tube_points, b.radial_offsets);
  const int nt = static_cast<int>(tube.size());
  Mat Phi_tube(nt, m), Ctube(nt, 2 * m);
  for (int k = 0; k < nt; ++k) {
    Phi_tube.row(k) = cs.map.eval(tube[k].x).transpose();
    const Vec sz = cs.Sigma * tube[k].z;
    Ctube.row(k) << 2.0 * sz(0) * Phi_tube.row(k), 2.0 * sz(1) * Phi_tube.row(k);
  }
  // orthonormal row basis C_O of the stacked tube functionals, S = (C_O C_O^T)^{-1} = I
  Eigen::BDCSVD<Mat> svd(Ctube, Eigen::ComputeThinV);
  const Vec &s = svd.singularValues();
  int r = 0;
  while (r < s.size() && s(r) > b.rank_tol * s(0)) ++r;
  const Mat CO = svd.matrixV().leftCols(r).transpose();
  const Mat a_tube = Ctube * CO.transpose();

  ScenarioOutput out;
  out.summary["feature_dim"] = m;
  out.summary["functional_rank"] = r;
  out.summary["tube_points"] = nt;
  out.summary["truth_sup_dV"] = tube_sup_dV(cs, tube, cs.A);
  out.summary["truth_theta_sq_norm"] = cs.A.squaredNorm();

  std::vector<std::vector<Vec>> inits(b.replicas);
  for (int rep = 0; rep < b.replicas; ++rep) {
    Rng rng(mix_seed(cfg.seed, rep));
    std::uniform_real_distribution<double> U(cfg.features.domain[0][0], cfg.features.domain[0][1]);
    for (int i = 0; i < b.initial_points; ++i) {
      Vec x(2);
      x << U(rng), U(rng);
      inits[rep].push_back(x);
    }
  }

  CsvTable t{"lyapunov", primary_columns("lyapunov"), {}};
  CsvTable runs{"lyapunov_runs", {"replica", "strategy", "set_kind", "cert_step", "certified"}, {}};
  json mean_steps = json::object();
  const int nsteps = cfg.budget - b.initial_points + 1;
  for (size_t si = 0; si < b.strategies.size(); ++si) {
    const std::string &strat = b.strategies[si];
    std::vector<detail::LyapunovRun> rs;
    for (int rep = 0; rep < b.replicas; ++rep) {
      Rng rng(mix_seed(cfg.seed ^ 0x1a9u, static_cast<std::uint64_t>(rep) * 64 + si));
      rs.push_back(detail::lyapunov_run(cfg, cs, tube, Phi_tube, CO, a_tube, strat, inits[rep], rng));
    }
    for (const std::string kind : {"ours", "baseline"}) {
      double mean_cert = 0;
      for (int rep = 0; rep < b.replicas; ++rep) {
        const int c = kind == "ours" ? rs[rep].cert_ours : rs[rep].cert_base;
        runs.add({fmt(rep), strat, kind, fmt(c < 0 ? cfg.budget + 1 : c), fmt(c >= 0)});
        mean_cert += (c < 0 ? cfg.budget + 1 : c);
      }
      mean_steps[strat][kind] = mean_cert / b.replicas;
      for (int k = 0; k < nsteps; ++k) {
        double sum = 0;
        int certified = 0;
        for (const auto &run : rs) {
          const auto &v = kind == "ours" ? run.ours : run.base;
          const double val = v[std::min<size_t>(k, v.size() - 1)];
          sum += val;
          certified += val < 0 || (k >= static_cast<int>(v.size()) && v.back() < 0);
        }
        t.add({fmt(b.initial_points + k), strat, kind, fmt(sum / b.replicas),
               fmt(static_cast<double>(certified) / b.replicas)});
      }
    }
  }
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(runs));
  out.summary["mean_cert_step"] = mean_steps;
  out.summary["uncertified_step_value"] = cfg.budget + 1;
  return out;
}

}  // namespace rkhs_oed::scenarios
