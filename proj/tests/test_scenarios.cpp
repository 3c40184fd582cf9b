#include <gtest/gtest.h>

#include "rkhs_oed/scenarios.hpp"

using namespace rkhs_oed;
using namespace rkhs_oed::scenarios;

namespace {

std::filesystem::path scratch(const std::string &name) {
  const auto p = std::filesystem::temp_directory_path() / ("rkhs_oed_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ScenarioConfig small_coverage(const std::string &kind, int replicas, int budget) {
  ScenarioConfig c = default_config("coverage");
  c.coverage.set_kind = kind;
  c.coverage.replicas = replicas;
  c.budget = budget;
  return c;
}

}  // namespace

TEST(Config, RoundTripsEveryScenario) {
  for (const auto &s : scenario_names()) {
    ScenarioConfig c = default_config(s);
    c.seed = 12345678901234ULL;
    const json j = to_json(c);
    EXPECT_EQ(config_from_json(j), c) << s;
    EXPECT_EQ(config_from_json(json::parse(j.dump())), c) << s;
  }
}

TEST(Config, RejectsUnknownKeys) {
  json j = to_json(default_config("gradient"));
  j["sigmaa"] = 0.1;
  EXPECT_THROW(config_from_json(j), Error);
  j = to_json(default_config("gradient"));
  j["gradient"]["h_mni"] = 0.1;
  EXPECT_THROW(config_from_json(j), Error);
  j = to_json(default_config("gradient"));
  j["features"]["lenghtscale"] = 0.1;
  EXPECT_THROW(config_from_json(j), Error);
}

TEST(Config, RejectsForeignBlockAndBadValues) {
  json j = to_json(default_config("gradient"));
  j["pharma"] = json::object();
  EXPECT_THROW(config_from_json(j), Error);
  j = to_json(default_config("gradient"));
  j["schema"] = 2;
  EXPECT_THROW(config_from_json(j), Error);
  j = to_json(default_config("gradient"));
  j["delta"] = 1.5;
  EXPECT_THROW(config_from_json(j), Error);
  j = to_json(default_config("gradient"));
  j["sigma"] = "large";
  EXPECT_THROW(config_from_json(j), Error);
  EXPECT_THROW(default_config("nope"), Error);
}

TEST(Config, MissingKeysKeepDefaults) {
  const ScenarioConfig c = config_from_json(json{{"schema", 1}, {"scenario", "ellipse"}});
  EXPECT_EQ(c.sigma, ScenarioConfig{}.sigma);
  EXPECT_EQ(c.ellipse, EllipseBlock{});
}

TEST(Config, LoadFromFile) {
  const auto dir = scratch("cfg");
  std::filesystem::create_directories(dir);
  write_text(dir / "c.json", to_json(default_config("pharma")).dump(2));
  EXPECT_EQ(load_config((dir / "c.json").string()), default_config("pharma"));
  write_text(dir / "bad.json", "{\"schema\": 1,");
  EXPECT_THROW(load_config((dir / "bad.json").string()), Error);
  EXPECT_THROW(load_config((dir / "missing.json").string()), Error);
}

TEST(Csv, HeaderContract) {
  CsvTable t{"coverage", primary_columns("coverage"), {}};
  EXPECT_NO_THROW(validate_csv(t, primary_columns("coverage")));
  EXPECT_THROW(validate_csv(t, primary_columns("pharma")), Error);
  EXPECT_THROW(t.add({"1", "2"}), Error);
  EXPECT_EQ(fmt(0.1), "0.1");
  EXPECT_EQ(fmt(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(fmt(true), "1");
}

TEST(Reproducibility, SameSeedSameBytes) {
  for (const auto &cfg : {default_config("ellipse"), small_coverage("adaptive", 20, 15)}) {
    const auto a = scratch("rep_a"), b = scratch("rep_b");
    run_and_write(cfg, a, "test");
    run_and_write(cfg, b, "test");
    const ScenarioOutput res = run_scenario(cfg);
    for (const auto &t : res.tables)
      EXPECT_EQ(slurp(a / (t.name + ".csv")), slurp(b / (t.name + ".csv"))) << cfg.scenario << " " << t.name;
    ScenarioConfig other = cfg;
    other.seed = 7;
    EXPECT_NE(run_scenario(other).tables[0].str(), run_scenario(cfg).tables[0].str());
  }
}

TEST(Reproducibility, MetaRecordsConfigAndHash) {
  const auto dir = scratch("meta");
  const ScenarioConfig cfg = default_config("ellipse");
  run_and_write(cfg, dir, "abc123");
  const json meta = json::parse(slurp(dir / "meta.json"));
  EXPECT_EQ(meta["git_hash"], "abc123");
  EXPECT_EQ(config_from_json(meta["config"]), cfg);
  EXPECT_GE(meta["runtime_seconds"].get<double>(), 0.0);
  EXPECT_TRUE(std::filesystem::exists(dir / "ellipse.csv"));
}

TEST(Seeds, MixSeedSeparatesStreams) {
  EXPECT_NE(mix_seed(0, 0), mix_seed(0, 1));
  EXPECT_NE(mix_seed(0, 1), mix_seed(1, 0));
  EXPECT_EQ(mix_seed(3, 4), mix_seed(3, 4));
}

TEST(Noise, UniformHasRequestedVariance) {
  Rng rng(1);
  const Vec u = noise_vector(rng, 200000, 0.5, "uniform");
  EXPECT_LE(u.cwiseAbs().maxCoeff(), std::sqrt(3.0) * 0.5);
  EXPECT_NEAR(u.squaredNorm() / u.size(), 0.25, 0.005);
  EXPECT_THROW(noise_vector(rng, 3, 1.0, "cauchy"), Error);
}

TEST(Rk4, ExponentialDecayAndStepHalving) {
  auto rhs = [](double, const double *y, double *dy) { dy[0] = -3.0 * y[0]; };
  const std::vector<double> ts{0.1, 0.5, 1.0};
  const auto a = rk4_trajectory(rhs, 0.0, Vec::Ones(1), ts, 1e-3);
  const auto b = rk4_trajectory(rhs, 0.0, Vec::Ones(1), ts, 5e-4);
  for (size_t i = 0; i < ts.size(); ++i) {
    const double exact = std::exp(-3.0 * ts[i]);
    EXPECT_LT(std::abs(a[i](0) - exact) / exact, 1e-6);
    EXPECT_LT(std::abs(a[i](0) - b[i](0)) / std::abs(b[i](0)), 1e-6);
  }
  EXPECT_THROW(rk4_trajectory(rhs, 0.0, Vec::Ones(1), {0.5, 0.2}, 1e-3), Error);
}

TEST(Pharma, BloodConcentrationMatchesClosedForm) {
  Vec g(3);
  g << 5.0, 10.0, 9.0;
  const OdeSystem sys{g, 1.0, 2.0};
  const std::vector<double> ts{0.05, 0.3, 1.0, 2.0};
  const Vec c = sys.blood(ts, 2000);
  for (size_t i = 0; i < ts.size(); ++i) {
    const double exact = g(1) / (g(2) - g(0)) * (std::exp(-g(0) * ts[i]) - std::exp(-g(2) * ts[i]));
    EXPECT_NEAR(c(i), exact, 1e-9);
  }
}

TEST(NelderMead, FindsInteriorAndBoundaryMinima) {
  Vec lo(2), hi(2), x0(2), target(2);
  lo << 0, 0;
  hi << 1, 1;
  x0 << 0.5, 0.5;
  target << 0.3, 0.8;
  auto f = [&](const Vec &x) { return (x - target).squaredNorm(); };
  const auto r = nelder_mead_box(f, x0, lo, hi, 2000, 1e-12);
  EXPECT_LT((r.x - target).norm(), 1e-5);
  target << 0.3, 1.7;
  const auto s = nelder_mead_box(f, x0, lo, hi, 2000, 1e-12);
  EXPECT_NEAR(s.x(0), 0.3, 1e-5);
  EXPECT_DOUBLE_EQ(s.x(1), 1.0);
}

TEST(Pharma, NoiselessRecoveryAwayFromStartPoint) {
  ScenarioConfig c = default_config("pharma");
  c.sigma = 0.0;
  c.pharma.gamma_true = {4.6, 10.4, 9.3};
  c.pharma.sample_counts = {5};
  c.pharma.replicas = 1;
  c.pharma.grid_per_axis = 2;
  c.pharma.candidates = 40;
  const ScenarioOutput out = run_scenario(c);
  EXPECT_LT(out.summary["noiseless_max_abs_error"].get<double>(), 1e-3);
  EXPECT_EQ(out.summary["gamma_grid_size"].get<int>(), 8);
  for (const auto &row : out.table("pharma").rows) EXPECT_LT(std::stod(row[2]), 1e-6);
}

TEST(Gradient, MinimiserShrinksWithBudgetAndBalancesTerms) {
  ScenarioConfig c = default_config("gradient");
  c.gradient.h_count = 40;
  const ScenarioOutput out = run_scenario(c);
  double prev = 1e9;
  for (const auto &m : out.summary["minimizers"]) {
    const double hs = m["h_star"].get<double>(), hc = m["h_cross"].get<double>();
    EXPECT_LT(hs, prev);
    EXPECT_FALSE(m["boundary"].get<bool>());
    EXPECT_LT(std::abs(hc - hs) / hs, 0.5);
    prev = hs;
  }
  // nu shrinks as h refines; past h ~ 0.2 the stencil spans several lengthscales and nu is erratic
  const auto &rows = out.table("gradient").rows;
  for (size_t i = 1; i < rows.size(); ++i)
    if (rows[i][4] == rows[i - 1][4] && std::stod(rows[i][0]) <= 0.1) {
      EXPECT_GT(std::stod(rows[i][1]), std::stod(rows[i - 1][1]));
    }
}

TEST(Gradient, StencilShape) {
  const auto pts = gradient_stencil(Vec::Zero(2), 0.1);
  ASSERT_EQ(pts.size(), 5u);
  EXPECT_DOUBLE_EQ(pts[2](0), 0.2);
  EXPECT_DOUBLE_EQ(pts[4](1), -0.1);
}

TEST(Ellipse, IntervalsNestAndContainTruth) {
  for (std::uint64_t seed : {0ULL, 1ULL, 2ULL}) {
    ScenarioConfig c = default_config("ellipse");
    c.seed = seed;
    const ScenarioOutput out = run_scenario(c);
    std::map<std::pair<std::string, std::string>, std::pair<double, double>> iv;
    for (const auto &r : out.table("ellipse").rows) iv[{r[0], r[1]}] = {std::stod(r[2]), std::stod(r[3])};
    EXPECT_EQ(iv.size(), 8u);
    auto inside = [&](const std::string &a, const std::string &b, const std::string &d) {
      EXPECT_LE(iv.at({b, d}).first, iv.at({a, d}).first) << a << " " << d;
      EXPECT_GE(iv.at({b, d}).second, iv.at({a, d}).second) << a << " " << d;
    };
    inside("fixed_ridge", "projected_full_fixed", "fixed");
    inside("adaptive", "projected_full_adaptive", "fixed");
    inside("adaptive", "projected_full_adaptive", "adaptive");
    for (const auto &[k, v] : iv) {
      EXPECT_LE(v.first, 0.0) << k.first;
      EXPECT_GE(v.second, 0.0) << k.first;
    }
  }
}

TEST(Coverage, AboveNominalAtHalfConfidence) {
  for (const auto &[kind, budget] :
       {std::pair<std::string, int>{"fixed_interp", 4}, {"fixed_ridge", 4}, {"adaptive", 40}}) {
    ScenarioConfig c = small_coverage(kind, 300, budget);
    c.delta = 0.5;
    const ScenarioOutput out = run_scenario(c);
    EXPECT_GE(out.summary["coverage"].get<double>(), 0.48) << kind;
    EXPECT_EQ(out.table("coverage").rows.size(), 300u);
  }
}

TEST(Coverage, UniformNoiseAndUnknownKind) {
  ScenarioConfig c = small_coverage("fixed_ridge", 100, 4);
  c.coverage.noise = "uniform";
  EXPECT_GE(run_scenario(c).summary["coverage"].get<double>(), 0.8);
  c.coverage.set_kind = "bogus";
  EXPECT_THROW(run_scenario(c), Error);
}

TEST(Lyapunov, DerivativeOracleIsFirstOrder) {
  const ControlSystem cs = make_control_system(default_config("lyapunov"));
  Vec x(2);
  x << 0.4, -0.7;
  ControlSystem coarse = cs, fine = cs;
  coarse.dt = 1e-2;
  fine.dt = 1e-3;
  const double e1 = (coarse.derivative_oracle(x) - cs.g(x)).norm();
  const double e2 = (fine.derivative_oracle(x) - cs.g(x)).norm();
  EXPECT_GT(e1 / e2, 5.0);
  EXPECT_LT(e1 / e2, 20.0);
}

TEST(Lyapunov, TrueDynamicsCertifyOnTube) {
  const ScenarioConfig c = default_config("lyapunov");
  const ControlSystem cs = make_control_system(c);
  // the fit reproduces the generating dynamics
  for (double a : {-1.0, 0.0, 0.7}) {
    Vec x(2);
    x << a, 0.3;
    EXPECT_LT((cs.g(x) - lyapunov_true_g(x)).norm(), 1e-2);
  }
  std::vector<double> offs;
  for (double o : c.lyapunov.radial_offsets) offs.push_back(o);
  const auto tube = tube_points(cs, 50, offs);
  EXPECT_EQ(tube.size(), 150u);
  EXPECT_LT(tube_sup_dV(cs, tube, cs.A), 0.0);
  EXPECT_THROW(tube_points(cs, 10, {0.0}), Error);
}

TEST(Contamination, SmallRunHasAllDesigns) {
  ScenarioConfig c = default_config("contamination");
  c.contamination.budgets = {10};
  c.contamination.replicas = 5;
  c.contamination.candidates = 50;
  c.contamination.md_iters = 30;
  const ScenarioOutput out = run_scenario(c);
  const auto &rows = out.table("contamination").rows;
  ASSERT_EQ(rows.size(), 3u);
  for (const auto &r : rows) EXPECT_TRUE(std::isfinite(std::stod(r[2])));
  ASSERT_EQ(out.json_files.size(), 1u);
  EXPECT_EQ(out.json_files[0].first, "contamination_designs.json");
}
