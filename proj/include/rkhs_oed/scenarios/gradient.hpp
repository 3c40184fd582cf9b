#pragma once

#include "rkhs_oed/scenarios/common.hpp"

namespace rkhs_oed::scenarios {

/* Offset stencil {x, x+h e1, x+2h e1, x-h e1, x-h e2} around the gradient point. */
inline std::vector<Vec> gradient_stencil(const Vec &x, double h) {
  const Eigen::Index d = x.size();
  Vec e1 = Vec::Zero(d);
  e1(0) = 1.0;
  Vec e2 = Vec::Zero(d);
  e2(d > 1 ? 1 : 0) = 1.0;
  std::vector<Vec> pts{x, x + h * e1, x + 2 * h * e1, x - h * e1};
  if (d > 1) pts.push_back(x - h * e2);
  return pts;
}

inline std::vector<double> geomspace(double lo, double hi, int n) {
  if (!(lo > 0 && hi > lo) || n < 2) throw Error("geomspace: need 0 < lo < hi and n >= 2");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return v;
}

inline ScenarioOutput run_gradient_scenario(const ScenarioConfig &cfg) {
  if (cfg.functional.kind != "gradient") throw Error("gradient scenario needs a gradient functional");
  const FeatureMap map = make_feature_map(cfg.features);
  const Vec x = to_points(cfg.functional.points).at(0);
  const LinearFunctional C = gradient_functional(map, x);
  const PriorOperator V0 = PriorOperator::identity(map.dim);
  auto family = [&](double h) { return FamilyDesign{evaluate_design_matrix(map, gradient_stencil(x, h)), C, V0}; };
  const auto hs = geomspace(cfg.gradient.h_min, cfg.gradient.h_max, cfg.gradient.h_count);

  ScenarioOutput out;
  CsvTable t{"gradient", primary_columns("gradient"), {}};
  CsvTable flags{"gradient_flags", {"h", "T", "flagged", "bias_term"}, {}};
  json per_T = json::array();
  for (int T : cfg.gradient.T) {
    const BiasVarianceResult res = balance_bias_variance(family, hs, cfg.sigma, cfg.lam, cfg.delta, T);
    json flagged = json::array();
    for (const auto &r : res.rows) {
      t.add({fmt(r.h), fmt(r.nu), fmt(r.variance_term), fmt(r.total), fmt(T)});
      flags.add({fmt(r.h), fmt(T), fmt(r.flagged), fmt(r.bias_term)});
      if (r.flagged) flagged.push_back(r.h);
    }
    per_T.push_back({{"T", T}, {"h_star", res.h_star}, {"h_cross", res.h_cross}, {"boundary", res.boundary},
                     {"flagged_h", flagged}});
  }
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(flags));
  out.summary["minimizers"] = per_T;
  return out;
}

}  // namespace rkhs_oed::scenarios
