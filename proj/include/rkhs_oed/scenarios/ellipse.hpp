#pragma once

#include "rkhs_oed/scenarios/common.hpp"

namespace rkhs_oed::scenarios {

/* Intervals for C theta from one data set.  "fixed" draws the query
   directions up front; "adaptive" points each query at (1, theta_hat_2)
   normalised, so later queries depend on earlier responses. */
inline ScenarioOutput run_ellipse_demo(const ScenarioConfig &cfg) {
  if (cfg.features.kind != "linear" || cfg.features.domain.size() != 2)
    throw Error("ellipse demo needs a 2-d linear feature map");
  if (!(cfg.sigma > 0)) throw Error("ellipse demo: sigma must be positive");
  const FeatureMap map = make_feature_map(cfg.features);
  const LinearFunctional C = make_functional(cfg.functional, map);
  if (C.p != 1) throw Error("ellipse demo needs a scalar functional");
  const PriorOperator V0 = PriorOperator::identity(2);
  const Vec theta = Eigen::Map<const Vec>(cfg.ellipse.theta.data(), cfg.ellipse.theta.size());
  if (theta.size() != 2) throw Error("ellipse demo: theta must have two entries");
  const double theta_bound = 1.0 / std::sqrt(cfg.lam);
  const int n = cfg.budget;
  const Vec u = Vec::Ones(1);

  ScenarioOutput out;
  CsvTable t{"ellipse", primary_columns("ellipse"), {}};
  auto emit = [&](const std::string &set, const std::string &design, const ConfidenceEllipsoid &e) {
    const auto iv = interval(e, u);
    t.add({set, design, fmt(iv.first), fmt(iv.second)});
  };

  for (const std::string design : {"fixed", "adaptive"}) {
    Rng rng(mix_seed(cfg.seed, design == "fixed" ? 0 : 1));
    std::uniform_real_distribution<double> U(0.0, 2.0 * M_PI);
    Mat X(n, 2);
    Vec y(n);
    for (int i = 0; i < n; ++i) {
      Vec x(2);
      if (design == "fixed" || i == 0) {
        const double a = U(rng);
        x << std::cos(a), std::sin(a);
      } else {
        const Dataset ds(X.topRows(i), y.head(i), cfg.sigma, V0, cfg.lam);
        const Vec th = ridge(ds, LinearFunctional::make(Mat::Identity(2, 2)));
        x << 1.0, th(1);
        x.normalize();
      }
      X.row(i) = x.transpose();
      y(i) = x.dot(theta) + cfg.sigma * gaussian_vector(rng, 1)(0);
    }
    const Dataset ds(X, y, cfg.sigma, V0, cfg.lam);
    const Vec est = ridge(ds, C);
    const ProjectedData pd = project_data(X, C, V0);
    const InfoMatrix Om = info_matrix_adaptive(pd, cfg.lam, cfg.sigma);
    if (design == "fixed") {
      emit("fixed_ridge", design, fixed_ridge_ellipsoid(est, info_matrix_ridge(X, C, V0, cfg.lam, cfg.sigma), cfg.delta));
      emit("projected_full_fixed", design, projected_full_fixed(X, y, C, V0, cfg.lam, cfg.sigma, cfg.delta));
    }
    emit("adaptive", design, adaptive_ellipsoid(est, Om, pd.S, cfg.lam, cfg.delta));
    emit("projected_full_adaptive", design,
         projected_full_adaptive(X, y, C, V0, cfg.lam, cfg.sigma, cfg.delta, theta_bound));
    emit("projected_biased", design,
         projected_biased_adaptive(pd, y, theta_bound, cfg.lam, cfg.sigma, cfg.delta).ellipsoid);
  }
  out.tables.push_back(std::move(t));
  out.summary["C_theta"] = (C.C * theta)(0);
  return out;
}

}  // namespace rkhs_oed::scenarios
