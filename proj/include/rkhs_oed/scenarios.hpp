#pragma once

#include "rkhs_oed/scenarios/contamination.hpp"
#include "rkhs_oed/scenarios/coverage.hpp"
#include "rkhs_oed/scenarios/ellipse.hpp"
#include "rkhs_oed/scenarios/gradient.hpp"
#include "rkhs_oed/scenarios/lyapunov.hpp"
#include "rkhs_oed/scenarios/pharma.hpp"

#include <chrono>

namespace rkhs_oed::scenarios {

inline ScenarioOutput run_scenario(const ScenarioConfig &cfg) {
  validate(cfg);
  gsl_set_error_handler_off();
  ScenarioOutput out;
  if (cfg.scenario == "gradient") out = run_gradient_scenario(cfg);
  else if (cfg.scenario == "contamination") out = run_contamination_scenario(cfg);
  else if (cfg.scenario == "pharma") out = run_pharma_scenario(cfg);
  else if (cfg.scenario == "lyapunov") out = run_lyapunov_scenario(cfg);
  else if (cfg.scenario == "ellipse") out = run_ellipse_demo(cfg);
  else if (cfg.scenario == "coverage") out = run_coverage_study(cfg);
  else throw Error("unknown scenario " + cfg.scenario);
  validate_csv(out.tables.at(0), primary_columns(cfg.scenario));
  return out;
}

/* Runs the scenario and writes <table>.csv, extra JSON files and meta.json into dir. */
inline ScenarioOutput run_and_write(const ScenarioConfig &cfg, const std::filesystem::path &dir,
                                    const std::string &git_hash) {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioOutput out = run_scenario(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::filesystem::create_directories(dir);
  for (const auto &t : out.tables) write_text(dir / (t.name + ".csv"), t.str());
  for (const auto &[name, j] : out.json_files) write_text(dir / name, j.dump(2) + "\n");
  json meta{{"config", to_json(cfg)},
            {"git_hash", git_hash},
            {"runtime_seconds", secs},
            {"tables", json::array()},
            {"summary", out.summary}};
  for (const auto &t : out.tables) meta["tables"].push_back(t.name + ".csv");
  write_text(dir / "meta.json", meta.dump(2) + "\n");
  return out;
}

}  // namespace rkhs_oed::scenarios
