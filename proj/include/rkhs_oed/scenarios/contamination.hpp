#pragma once

#include "rkhs_oed/scenarios/common.hpp"

namespace rkhs_oed::scenarios {

/* Phi(x) = (x, c cos(w_l x)/l^2, c sin(w_l x)/l^2) over w in {pi l, pi e l}, l = 1..L.
   The first coordinate is the linear trend alpha, the rest the contamination. */
inline FeatureMap contamination_features(int L, double scale) {
  if (L < 1) throw Error("contamination_features: need at least one frequency");
  std::vector<double> w, a;
  for (int l = 1; l <= L; ++l) {
    w.push_back(M_PI * l);
    w.push_back(M_PI * std::exp(1.0) * l);
    a.push_back(scale / (static_cast<double>(l) * l));
    a.push_back(scale / (static_cast<double>(l) * l));
  }
  FeatureMap f;
  f.dim = 1 + 2 * static_cast<int>(w.size());
  f.input_dim = 1;
  f.kind = "contamination";
  f.eval = [w, a](const Vec &x) -> Vec {
    const size_t k = w.size();
    Vec out(1 + 2 * k);
    out(0) = x(0);
    for (size_t i = 0; i < k; ++i) {
      out(1 + i) = a[i] * std::cos(w[i] * x(0));
      out(1 + k + i) = a[i] * std::sin(w[i] * x(0));
    }
    return out;
  };
  return f;
}

namespace detail {

inline Vec ridge_fit(const Mat &X, const Vec &y, double lam, double sigma) {
  const double s2 = sigma * sigma;
  Mat V = X.transpose() * X / s2;
  V.diagonal().array() += lam;
  return spd_solve(V, X.transpose() * y / s2);
}

/* Greedy support, then mirror-descent weights at scale T, then ceil + trim. */
inline std::vector<int> pipeline_counts(DesignObjective obj, const Mat &cand, int T, int md_iters, double step0) {
  const int N = static_cast<int>(cand.rows());
  const Allocation g = greedy_design(obj, cand, T, {0, N - 1});
  std::vector<int> support;
  for (int i = 0; i < N; ++i)
    if ((*g.counts)[i] > 0) support.push_back(i);
  Mat XS(support.size(), cand.cols());
  for (size_t k = 0; k < support.size(); ++k) XS.row(k) = cand.row(support[k]);
  obj.scale = T;
  Vec init(support.size());
  for (size_t k = 0; k < support.size(); ++k) init(k) = (*g.counts)[support[k]];
  init /= init.sum();
  Allocation md = mirror_descent_design(obj, XS, md_iters, step0, init);
  if (!(md.value >= g.value)) md.eta = init;  // keep the greedy weights if MD did not improve
  const Allocation r = round_allocation(md, T);
  const std::vector<int> c = trim_to_budget(*r.counts, md.eta, T);
  std::vector<int> counts(N, 0);
  for (size_t k = 0; k < support.size(); ++k) counts[support[k]] = c[k];
  return counts;
}

}  // namespace detail

inline ScenarioOutput run_contamination_scenario(const ScenarioConfig &cfg) {
  const auto &b = cfg.contamination;
  if (b.candidates < 2 || b.replicas < 1) throw Error("contamination: need >= 2 candidates and >= 1 replica");
  const FeatureMap map = contamination_features(b.frequencies, b.contamination);
  const int m = map.dim;
  const double lo = cfg.features.domain.at(0)[0], hi = cfg.features.domain.at(0)[1];
  std::vector<Vec> pts;
  for (int i = 0; i < b.candidates; ++i) pts.push_back(Vec::Constant(1, lo + (hi - lo) * i / (b.candidates - 1)));
  const Mat cand = evaluate_design_matrix(map, pts);
  const PriorOperator V0 = PriorOperator::identity(m);
  const DesignObjective aware(Scalarization::E, EstimatorKind::ridge, contamination_selector({0}, m), V0, cfg.lam,
                              cfg.sigma);
  const DesignObjective full(Scalarization::E, EstimatorKind::ridge, LinearFunctional::make(Mat::Identity(m, m)), V0,
                             cfg.lam, cfg.sigma);

  // theta ~ N(0, I / lam), shared across designs and budgets
  std::vector<Vec> thetas;
  for (int r = 0; r < b.replicas; ++r) {
    Rng rng(mix_seed(cfg.seed, r));
    thetas.push_back(gaussian_vector(rng, m) / std::sqrt(cfg.lam));
  }

  ScenarioOutput out;
  CsvTable t{"contamination", primary_columns("contamination"), {}};
  json designs = json::object();
  for (int T : b.budgets) {
    if (T < 2) throw Error("contamination: budgets must be >= 2");
    std::map<std::string, std::vector<int>> fixed{
        {"aware", detail::pipeline_counts(aware, cand, T, b.md_iters, b.step0)},
        {"full", detail::pipeline_counts(full, cand, T, b.md_iters, b.step0)}};
    json dj = json::object();
    for (const auto &[name, counts] : fixed) {
      json pj = json::array();
      for (int i = 0; i < b.candidates; ++i)
        if (counts[i] > 0) pj.push_back({{"x", pts[i](0)}, {"count", counts[i]}});
      dj[name] = pj;
    }
    designs[std::to_string(T)] = dj;
    for (const std::string kind : {"aware", "full", "random"}) {
      double se = 0.0;
      for (int r = 0; r < b.replicas; ++r) {
        Rng noise_rng(mix_seed(cfg.seed ^ 0x5eedULL, static_cast<std::uint64_t>(r) * 1000003ULL + T));
        Rng design_rng(mix_seed(cfg.seed ^ 0xd35167ULL, static_cast<std::uint64_t>(r) * 1000003ULL + T));
        std::vector<int> idx;
        if (kind == "random") {
          std::uniform_int_distribution<int> u(0, b.candidates - 1);
          for (int k = 0; k < T; ++k) idx.push_back(u(design_rng));
        } else {
          const auto &c = fixed.at(kind);
          for (int i = 0; i < b.candidates; ++i)
            for (int k = 0; k < c[i]; ++k) idx.push_back(i);
        }
        Mat X(idx.size(), m);
        for (size_t k = 0; k < idx.size(); ++k) X.row(k) = cand.row(idx[k]);
        const Vec y = X * thetas[r] + noise_vector(noise_rng, X.rows(), cfg.sigma);
        const Vec est = detail::ridge_fit(X, y, cfg.lam, cfg.sigma);
        se += std::pow(est(0) - thetas[r](0), 2);
      }
      t.add({fmt(T), kind, fmt(se / b.replicas)});
    }
  }
  out.tables.push_back(std::move(t));
  out.json_files.push_back({"contamination_designs.json", designs});
  return out;
}

}  // namespace rkhs_oed::scenarios
