#include "rkhs_oed/scenarios.hpp"

#include <CLI11.hpp>

#include <iostream>

#ifndef RKHS_OED_GIT_HASH
#define RKHS_OED_GIT_HASH "unknown"
#endif

using namespace rkhs_oed;
using namespace rkhs_oed::scenarios;

namespace {

json read_json(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw Error(path + " is not valid JSON: " + e.what());
  }
}

// {objective, estimator, candidates, functional, lam, sigma, solver, iters, budget, step0, resolution}
json run_design(const json &in) {
  std::string objective = "E", estimator = "ridge", solver = "greedy";
  std::vector<std::vector<double>> candidates, functional;
  double lam = 1.0, sigma = 1.0, step0 = 1.0;
  int iters = 500, budget = 10, resolution = 200;
  scenarios::detail::Reader r(in, "design");
  r.get("objective", objective);
  r.get("estimator", estimator);
  r.get("candidates", candidates);
  r.get("functional", functional);
  r.get("lam", lam);
  r.get("sigma", sigma);
  r.get("solver", solver);
  r.get("iters", iters);
  r.get("budget", budget);
  r.get("step0", step0);
  r.get("resolution", resolution);
  r.finish();
  if (candidates.empty()) throw Error("design: candidates are required");
  if (functional.empty()) throw Error("design: functional is required");
  const Mat X = rows_to_matrix(candidates);
  const LinearFunctional C = LinearFunctional::make(rows_to_matrix(functional));
  DesignObjective obj(scalarization_from_string(objective), estimator_kind_from_string(estimator), C,
                      PriorOperator::identity(static_cast<int>(X.cols())), lam, sigma);
  Allocation a;
  if (solver == "greedy") {
    a = greedy_design(obj, X, budget);
  } else {
    obj.scale = budget;
    if (solver == "mirror_descent") a = mirror_descent_design(obj, X, iters, step0, Vec());
    else if (solver == "grid") a = grid_search_design(obj, X, resolution);
    else throw Error("design: unknown solver " + solver);
    const Allocation rounded = round_allocation(a, budget);
    a.counts = trim_to_budget(*rounded.counts, a.eta, budget);
  }
  json out{{"eta", std::vector<double>(a.eta.data(), a.eta.data() + a.eta.size())},
           {"counts", *a.counts},
           {"objective_value", a.value},
           {"trace", a.trace}};
  return out;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Bias-aware experimental design for linear functionals in an RKHS"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  for (const auto &name : scenario_names()) {
    auto *sub = app.add_subcommand(name, "run the " + name + " scenario");
    sub->add_option("--config", config_path, "scenario JSON config (defaults are used when omitted)");
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "override the config seed");
  }
  std::string design_in, design_out;
  auto *design = app.add_subcommand("design", "optimise an allocation from a JSON problem");
  design->add_option("--input", design_in, "problem JSON")->required()->check(CLI::ExistingFile);
  design->add_option("--output", design_out, "result JSON (stdout when omitted)");
  std::string default_for;
  auto *defaults = app.add_subcommand("default-config", "print the default config of a scenario");
  defaults->add_option("scenario", default_for, "scenario name")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (design->parsed()) {
      const json res = run_design(read_json(design_in));
      if (design_out.empty()) std::cout << res.dump(2) << "\n";
      else write_text(design_out, res.dump(2) + "\n");
      return 0;
    }
    if (defaults->parsed()) {
      std::cout << to_json(default_config(default_for)).dump(2) << "\n";
      return 0;
    }
    for (auto *sub : app.get_subcommands()) {
      ScenarioConfig cfg = config_path.empty() ? default_config(sub->get_name()) : load_config(config_path);
      if (cfg.scenario != sub->get_name())
        throw Error("config is for scenario " + cfg.scenario + ", not " + sub->get_name());
      if (sub->get_option("--seed")->count()) cfg.seed = seed;
      cfg.output_dir = out_dir;
      const ScenarioOutput res = run_and_write(cfg, out_dir, RKHS_OED_GIT_HASH);
      std::cout << res.summary.dump() << "\n";
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
