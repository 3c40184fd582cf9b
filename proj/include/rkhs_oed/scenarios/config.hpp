#pragma once

#include "rkhs_oed/linalg.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace rkhs_oed::scenarios {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct FeatureSpec {
  std::string kind = "qff_se";  // qff_se | nystrom | linear | fourier
  double lengthscale = 0.1;
  int m = 256;
  int landmarks = 0;  // nystrom: landmarks per axis on a regular grid
  std::vector<std::array<double, 2>> domain{{-1.0, 1.0}};
  bool operator==(const FeatureSpec &) const = default;
};

struct FunctionalSpec {
  std::string kind = "evaluation";  // evaluation | gradient | matrix | selector | ode_nullspace | lyapunov
  std::vector<std::vector<double>> points;
  std::vector<std::vector<double>> rows;
  std::vector<int> indices;
  bool operator==(const FunctionalSpec &) const = default;
};

struct GradientBlock {
  double h_min = 1e-3;
  double h_max = 0.3;
  int h_count = 80;
  std::vector<int> T{100, 1000, 10000};
  bool operator==(const GradientBlock &) const = default;
};

struct ContaminationBlock {
  int frequencies = 16;
  std::vector<int> budgets{10, 20, 50, 100, 200};
  int replicas = 200;
  int candidates = 200;
  double contamination = 1.0;  // 0 switches the contaminating part off
  int md_iters = 300;
  double step0 = 1.0;
  bool operator==(const ContaminationBlock &) const = default;
};

struct PharmaBlock {
  std::vector<double> gamma_true{5.0, 10.0, 10.0};
  std::vector<std::array<double, 2>> gamma_box{{4.0, 6.0}, {9.0, 11.0}, {9.0, 11.0}};
  int grid_per_axis = 3;
  double horizon = 2.0;
  int candidates = 100;
  std::vector<int> sample_counts{5, 10, 20};
  int replicas = 100;
  int grid_points = 400;
  std::vector<double> prior_weights{1.0, 1.0};
  double dose = 1.0;
  int rk4_steps = 2000;
  int nm_max_iter = 4000;
  double nm_tol = 1e-10;
  bool operator==(const PharmaBlock &) const = default;
};

struct LyapunovBlock {
  double gain = 200.0;
  double tube_width = 0.01;
  int tube_points = 200;
  std::vector<double> radial_offsets{-1.0, 0.75, 1.0};  // multiples of tube_width
  std::vector<std::string> strategies{"random", "random-ref", "unc", "unc-ref"};
  int replicas = 10;
  int initial_points = 10;
  int pool_size = 500;
  double dt = 1e-4;
  double fit_reg = 1e-6;
  double rank_tol = 1e-8;
  bool operator==(const LyapunovBlock &) const = default;
};

struct EllipseBlock {
  std::vector<double> theta{0.0, 0.0};
  bool operator==(const EllipseBlock &) const = default;
};

struct CoverageBlock {
  std::string set_kind = "fixed_interp";  // fixed_interp | fixed_ridge | adaptive
  int replicas = 2000;
  int design_points = 16;
  int candidates = 101;
  std::string noise = "gaussian";  // gaussian | uniform
  bool operator==(const CoverageBlock &) const = default;
};

struct ScenarioConfig {
  int schema = kSchemaVersion;
  std::string scenario = "gradient";
  std::uint64_t seed = 0;
  FeatureSpec features;
  FunctionalSpec functional;
  double sigma = 0.01;
  double lam = 1.0;
  double delta = 0.1;
  int budget = 100;
  std::string output_dir = "out";
  GradientBlock gradient;
  ContaminationBlock contamination;
  PharmaBlock pharma;
  LyapunovBlock lyapunov;
  EllipseBlock ellipse;
  CoverageBlock coverage;
  bool operator==(const ScenarioConfig &) const = default;
};

inline const std::vector<std::string> &scenario_names() {
  static const std::vector<std::string> names{"gradient", "contamination", "pharma", "lyapunov", "ellipse", "coverage"};
  return names;
}

namespace detail {

/* Reads keys from an object and rejects the ones never asked for. */
class Reader {
public:
  Reader(const json &j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw Error("config: " + where_ + " must be an object");
  }
  template <class T>
  void get(const char *key, T &out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception &e) {
      throw Error("config: bad value for " + where_ + "." + key + ": " + e.what());
    }
  }
  const json *child(const char *key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw Error("config: unknown field " + where_ + "." + it.key());
  }

private:
  const json &j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline json to_json(const FeatureSpec &f) {
  return {{"kind", f.kind}, {"lengthscale", f.lengthscale}, {"m", f.m}, {"landmarks", f.landmarks}, {"domain", f.domain}};
}
inline void from_json_checked(const json &j, FeatureSpec &f) {
  detail::Reader r(j, "features");
  r.get("kind", f.kind);
  r.get("lengthscale", f.lengthscale);
  r.get("m", f.m);
  r.get("landmarks", f.landmarks);
  r.get("domain", f.domain);
  r.finish();
}

inline json to_json(const FunctionalSpec &f) {
  return {{"kind", f.kind}, {"points", f.points}, {"rows", f.rows}, {"indices", f.indices}};
}
inline void from_json_checked(const json &j, FunctionalSpec &f) {
  detail::Reader r(j, "functional");
  r.get("kind", f.kind);
  r.get("points", f.points);
  r.get("rows", f.rows);
  r.get("indices", f.indices);
  r.finish();
}

inline json to_json(const GradientBlock &b) {
  return {{"h_min", b.h_min}, {"h_max", b.h_max}, {"h_count", b.h_count}, {"T", b.T}};
}
inline void from_json_checked(const json &j, GradientBlock &b) {
  detail::Reader r(j, "gradient");
  r.get("h_min", b.h_min);
  r.get("h_max", b.h_max);
  r.get("h_count", b.h_count);
  r.get("T", b.T);
  r.finish();
}

inline json to_json(const ContaminationBlock &b) {
  return {{"frequencies", b.frequencies}, {"budgets", b.budgets},           {"replicas", b.replicas},
          {"candidates", b.candidates},   {"contamination", b.contamination}, {"md_iters", b.md_iters},
          {"step0", b.step0}};
}
inline void from_json_checked(const json &j, ContaminationBlock &b) {
  detail::Reader r(j, "contamination");
  r.get("frequencies", b.frequencies);
  r.get("budgets", b.budgets);
  r.get("replicas", b.replicas);
  r.get("candidates", b.candidates);
  r.get("contamination", b.contamination);
  r.get("md_iters", b.md_iters);
  r.get("step0", b.step0);
  r.finish();
}

inline json to_json(const PharmaBlock &b) {
  return {{"gamma_true", b.gamma_true},   {"gamma_box", b.gamma_box},         {"grid_per_axis", b.grid_per_axis},
          {"horizon", b.horizon},         {"candidates", b.candidates},       {"sample_counts", b.sample_counts},
          {"replicas", b.replicas},       {"grid_points", b.grid_points},     {"prior_weights", b.prior_weights},
          {"dose", b.dose},               {"rk4_steps", b.rk4_steps},         {"nm_max_iter", b.nm_max_iter},
          {"nm_tol", b.nm_tol}};
}
inline void from_json_checked(const json &j, PharmaBlock &b) {
  detail::Reader r(j, "pharma");
  r.get("gamma_true", b.gamma_true);
  r.get("gamma_box", b.gamma_box);
  r.get("grid_per_axis", b.grid_per_axis);
  r.get("horizon", b.horizon);
  r.get("candidates", b.candidates);
  r.get("sample_counts", b.sample_counts);
  r.get("replicas", b.replicas);
  r.get("grid_points", b.grid_points);
  r.get("prior_weights", b.prior_weights);
  r.get("dose", b.dose);
  r.get("rk4_steps", b.rk4_steps);
  r.get("nm_max_iter", b.nm_max_iter);
  r.get("nm_tol", b.nm_tol);
  r.finish();
}

inline json to_json(const LyapunovBlock &b) {
  return {{"gain", b.gain},
          {"tube_width", b.tube_width},
          {"tube_points", b.tube_points},
          {"radial_offsets", b.radial_offsets},
          {"strategies", b.strategies},
          {"replicas", b.replicas},
          {"initial_points", b.initial_points},
          {"pool_size", b.pool_size},
          {"dt", b.dt},
          {"fit_reg", b.fit_reg},
          {"rank_tol", b.rank_tol}};
}
inline void from_json_checked(const json &j, LyapunovBlock &b) {
  detail::Reader r(j, "lyapunov");
  r.get("gain", b.gain);
  r.get("tube_width", b.tube_width);
  r.get("tube_points", b.tube_points);
  r.get("radial_offsets", b.radial_offsets);
  r.get("strategies", b.strategies);
  r.get("replicas", b.replicas);
  r.get("initial_points", b.initial_points);
  r.get("pool_size", b.pool_size);
  r.get("dt", b.dt);
  r.get("fit_reg", b.fit_reg);
  r.get("rank_tol", b.rank_tol);
  r.finish();
}

inline json to_json(const EllipseBlock &b) { return {{"theta", b.theta}}; }
inline void from_json_checked(const json &j, EllipseBlock &b) {
  detail::Reader r(j, "ellipse");
  r.get("theta", b.theta);
  r.finish();
}

inline json to_json(const CoverageBlock &b) {
  return {{"set_kind", b.set_kind},     {"replicas", b.replicas},     {"design_points", b.design_points},
          {"candidates", b.candidates}, {"noise", b.noise}};
}
inline void from_json_checked(const json &j, CoverageBlock &b) {
  detail::Reader r(j, "coverage");
  r.get("set_kind", b.set_kind);
  r.get("replicas", b.replicas);
  r.get("design_points", b.design_points);
  r.get("candidates", b.candidates);
  r.get("noise", b.noise);
  r.finish();
}

/* Only the block of the selected scenario is serialised. */
inline json to_json(const ScenarioConfig &c) {
  json j{{"schema", c.schema},   {"scenario", c.scenario}, {"seed", c.seed},
         {"features", to_json(c.features)}, {"functional", to_json(c.functional)},
         {"sigma", c.sigma},     {"lam", c.lam},           {"delta", c.delta},
         {"budget", c.budget},   {"output_dir", c.output_dir}};
  if (c.scenario == "gradient") j["gradient"] = to_json(c.gradient);
  if (c.scenario == "contamination") j["contamination"] = to_json(c.contamination);
  if (c.scenario == "pharma") j["pharma"] = to_json(c.pharma);
  if (c.scenario == "lyapunov") j["lyapunov"] = to_json(c.lyapunov);
  if (c.scenario == "ellipse") j["ellipse"] = to_json(c.ellipse);
  if (c.scenario == "coverage") j["coverage"] = to_json(c.coverage);
  return j;
}

inline void validate(const ScenarioConfig &c) {
  const auto &names = scenario_names();
  if (std::find(names.begin(), names.end(), c.scenario) == names.end())
    throw Error("config: unknown scenario " + c.scenario);
  if (!(c.sigma >= 0)) throw Error("config: sigma must be nonnegative");
  if (!(c.lam > 0)) throw Error("config: lam must be positive");
  if (!(c.delta > 0 && c.delta < 1)) throw Error("config: delta must lie in (0,1)");
  if (c.budget < 1) throw Error("config: budget must be positive");
  if (c.features.domain.empty()) throw Error("config: features.domain must not be empty");
  for (const auto &d : c.features.domain)
    if (!(d[0] < d[1])) throw Error("config: features.domain intervals must have lo < hi");
}

inline ScenarioConfig config_from_json(const json &j) {
  ScenarioConfig c;
  detail::Reader r(j, "config");
  r.get("schema", c.schema);
  if (c.schema != kSchemaVersion)
    throw Error("config: unsupported schema " + std::to_string(c.schema) + ", expected " +
                std::to_string(kSchemaVersion));
  r.get("scenario", c.scenario);
  r.get("seed", c.seed);
  if (const json *f = r.child("features")) from_json_checked(*f, c.features);
  if (const json *f = r.child("functional")) from_json_checked(*f, c.functional);
  r.get("sigma", c.sigma);
  r.get("lam", c.lam);
  r.get("delta", c.delta);
  r.get("budget", c.budget);
  r.get("output_dir", c.output_dir);
  for (const auto &name : scenario_names()) {
    const json *b = r.child(name.c_str());
    if (!b) continue;
    if (name != c.scenario) throw Error("config: block " + name + " given for scenario " + c.scenario);
    if (name == "gradient") from_json_checked(*b, c.gradient);
    if (name == "contamination") from_json_checked(*b, c.contamination);
    if (name == "pharma") from_json_checked(*b, c.pharma);
    if (name == "lyapunov") from_json_checked(*b, c.lyapunov);
    if (name == "ellipse") from_json_checked(*b, c.ellipse);
    if (name == "coverage") from_json_checked(*b, c.coverage);
  }
  r.finish();
  validate(c);
  return c;
}

inline ScenarioConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw Error("config: " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

/* Default settings of each scenario. */
inline ScenarioConfig default_config(const std::string &scenario) {
  ScenarioConfig c;
  c.scenario = scenario;
  if (scenario == "gradient") {
    c.features = {"qff_se", 0.1, 256, 0, {{-1.0, 1.0}, {-1.0, 1.0}}};
    c.functional = {"gradient", {{0.0, 0.0}}, {}, {}};
    c.sigma = 0.01;
  } else if (scenario == "contamination") {
    c.features = {"fourier", 1.0, 65, 0, {{-1.0, 1.0}}};
    c.functional = {"selector", {}, {}, {0}};
    c.sigma = 0.5;
  } else if (scenario == "pharma") {
    c.features = {"qff_se", 0.05, 512, 0, {{0.0, 2.0}}};
    c.functional = {"ode_nullspace", {}, {}, {}};
    c.lam = 0.5;
  } else if (scenario == "lyapunov") {
    c.features = {"nystrom", 0.25, 400, 20, {{-1.5, 1.5}, {-1.5, 1.5}}};
    c.functional = {"lyapunov", {}, {}, {}};
    c.sigma = 0.05;
    c.budget = 500;
  } else if (scenario == "ellipse") {
    c.features = {"linear", 1.0, 2, 0, {{-1.0, 1.0}, {-1.0, 1.0}}};
    c.functional = {"matrix", {}, {{1.0, 0.0}}, {}};
    c.sigma = 0.5;
    c.budget = 20;
  } else if (scenario == "coverage") {
    c.features = {"qff_se", 0.2, 32, 0, {{-1.0, 1.0}}};
    c.functional = {"evaluation", {{-0.3}, {0.4}}, {}, {}};
    c.sigma = 0.1;
    c.budget = 4;  // repetitions of the base design; steps for the adaptive set
  } else {
    throw Error("unknown scenario " + scenario);
  }
  c.output_dir = "out/" + scenario;
  return c;
}

}  // namespace rkhs_oed::scenarios
