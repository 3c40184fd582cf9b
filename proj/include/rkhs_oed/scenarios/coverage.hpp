#pragma once

#include "rkhs_oed/scenarios/common.hpp"

namespace rkhs_oed::scenarios {

/* Monte Carlo coverage of the fixed (interp, ridge) and anytime adaptive sets.
   theta is drawn once and scaled onto the prior ball boundary |theta|_{V0} = 1/sqrt(lam).
   Fixed sets: cfg.budget repetitions of an equispaced base design.
   Adaptive: cfg.budget steps of the greedy-uncertainty rule, which queries the
   candidate maximising z^T Omega_t^{-1} z. */
inline ScenarioOutput run_coverage_study(const ScenarioConfig &cfg) {
  const auto &b = cfg.coverage;
  if (b.replicas < 1) throw Error("coverage: replicas must be positive");
  if (!(cfg.sigma > 0)) throw Error("coverage: sigma must be positive");
  const FeatureMap map = make_feature_map(cfg.features);
  const LinearFunctional C = make_functional(cfg.functional, map);
  const int m = map.dim, p = C.p;
  const PriorOperator V0 = PriorOperator::identity(m);
  const double lo = cfg.features.domain[0][0], hi = cfg.features.domain[0][1];
  Rng theta_rng(mix_seed(cfg.seed, 0xc0ffee));
  const Vec theta = gaussian_vector(theta_rng, m).normalized() / std::sqrt(cfg.lam);
  const Vec target = C.C * theta;
  const double s2 = cfg.sigma * cfg.sigma;

  ScenarioOutput out;
  CsvTable t{"coverage", primary_columns("coverage"), {}};
  int covered = 0;

  if (b.set_kind == "fixed_interp" || b.set_kind == "fixed_ridge") {
    if (b.design_points < 1) throw Error("coverage: design_points must be positive");
    std::vector<Vec> pts;
    for (int i = 0; i < b.design_points; ++i)
      pts.push_back(Vec::Constant(1, b.design_points == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (b.design_points - 1)));
    const Mat Xb = evaluate_design_matrix(map, pts);
    const int T = cfg.budget, n = static_cast<int>(Xb.rows());
    const Vec mean_y = Xb * theta;
    const bool interp = b.set_kind == "fixed_interp";
    Mat L;  // estimate = L * (sum over repetitions of y)
    InfoMatrix W;
    double radius;
    if (interp) {
      L = InterpFactor(Xb, C.C, V0).L() / T;
      W = info_matrix_interp(Xb, C, V0);
      const double nu = relative_bias(C, Xb, V0);
      radius = fixed_interp_ellipsoid(Vec::Zero(p), W, nu, cfg.lam, cfg.sigma, T, cfg.delta).radius;
      out.summary["nu"] = nu;
    } else {
      Mat M = T * Xb.transpose() * Xb / s2;
      M.diagonal().array() += cfg.lam;
      L = C.C * spd_solve(M, Xb.transpose()) / s2;
      W = info_matrix_ridge(Xb, C, V0, cfg.lam, cfg.sigma, Vec::Constant(n, T));
      radius = fixed_ridge_ellipsoid(Vec::Zero(p), W, cfg.delta).radius;
    }
    const std::string norm = interp ? "W_dagger" : "W_lambda";
    for (int r = 0; r < b.replicas; ++r) {
      Rng rng(mix_seed(cfg.seed, r));
      Vec ysum = Vec::Zero(n);
      for (int k = 0; k < T; ++k) ysum += mean_y + noise_vector(rng, n, cfg.sigma, b.noise);
      const Vec d = L * ysum - target;
      const double dev = std::sqrt(std::max(0.0, d.dot(W.matrix * d)));
      const bool ok = dev <= radius;
      covered += ok;
      t.add({fmt(r), fmt(T), norm, fmt(dev), fmt(radius), fmt(ok)});
    }
  } else if (b.set_kind == "adaptive") {
    if (b.candidates < 1) throw Error("coverage: candidates must be positive");
    std::vector<Vec> pts;
    for (int i = 0; i < b.candidates; ++i)
      pts.push_back(Vec::Constant(1, b.candidates == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (b.candidates - 1)));
    const Mat Xc = evaluate_design_matrix(map, pts);
    const ProjectedData pd = project_data(Xc, C, V0);
    const int T = cfg.budget;
    // the rule only looks at Omega_t, so the query sequence is shared by all replicas
    std::vector<int> seq;
    std::vector<Mat> Lt, Omt;
    std::vector<double> beta;
    Mat Om = cfg.lam * pd.S, Vinv = Mat::Identity(m, m) / cfg.lam;
    for (int step = 0; step < T; ++step) {
      Eigen::LLT<Mat> llt(Om);
      const Mat OinvZ = llt.solve(pd.Z.transpose());
      Eigen::Index best = 0;
      (pd.Z.transpose().array() * OinvZ.array()).colwise().sum().maxCoeff(&best);
      seq.push_back(static_cast<int>(best));
      const Vec z = pd.Z.row(best).transpose();
      Om += z * z.transpose() / s2;
      const Vec x = Xc.row(best).transpose();
      const Vec u = Vinv * x;
      Vinv -= u * u.transpose() / (s2 + x.dot(u));
      Lt.push_back(C.C * Vinv / s2);
      Omt.push_back(Om);
      beta.push_back(adaptive_radius(Om, pd.S, cfg.lam, cfg.delta));
    }
    for (int r = 0; r < b.replicas; ++r) {
      Rng rng(mix_seed(cfg.seed, r));
      Vec bsum = Vec::Zero(m);
      bool ok = true;
      double worst = -1, wdev = 0, wrad = 0;
      int wt = 0;
      for (int step = 0; step < T; ++step) {
        const Vec x = Xc.row(seq[step]).transpose();
        bsum += x * (x.dot(theta) + noise_vector(rng, 1, cfg.sigma, b.noise)(0));
        const Vec d = Lt[step] * bsum - target;
        const double dev = std::sqrt(std::max(0.0, d.dot(Omt[step] * d)));
        ok = ok && dev <= beta[step];
        if (dev / beta[step] > worst) {
          worst = dev / beta[step];
          wdev = dev;
          wrad = beta[step];
          wt = step + 1;
        }
      }
      covered += ok;
      t.add({fmt(r), fmt(wt), "Omega", fmt(wdev), fmt(wrad), fmt(ok)});
    }
  } else {
    throw Error("coverage: unknown set kind " + b.set_kind);
  }
  out.tables.push_back(std::move(t));
  const double cov = static_cast<double>(covered) / b.replicas;
  CsvTable agg{"coverage_summary", {"set_kind", "delta", "replicas", "coverage"}, {}};
  agg.add({b.set_kind, fmt(cfg.delta), fmt(b.replicas), fmt(cov)});
  out.tables.push_back(std::move(agg));
  out.summary["coverage"] = cov;
  return out;
}

}  // namespace rkhs_oed::scenarios
