#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "tdcosim/common/errors.hpp"
#include "tdcosim/cosim/config.hpp"
#include "tdcosim/cosim/coordinator.hpp"
#include "tdcosim/metrics/compare.hpp"
#include "tdcosim/metrics/emit.hpp"
#include "tdcosim/scenario/experiment.hpp"

namespace {

using namespace tdcosim;

int cmd_run(const std::string& case_arg, const std::string& mode, const std::string& model,
            std::string out_dir, long long seed_flag) {
  const bool from_catalog = scenario::experiment_exists(case_arg);
  if (!from_catalog && !std::filesystem::exists(case_arg)) {
    std::fprintf(stderr, "error: '%s' is neither a catalog experiment nor a scenario file\n",
                 case_arg.c_str());
    return 1;
  }

  cosim::ScenarioConfig cfg;
  if (from_catalog) {
    const std::uint64_t seed = seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag) : 42u;
    if (out_dir.empty()) {
      out_dir = "runs/" + case_arg + "-" + (mode.empty() ? "tc" : mode) + "-" +
                (model.empty() ? "cosim" : model);
    }
    const std::string scen =
        scenario::build_experiment(case_arg, seed, (std::filesystem::path(out_dir) / "inputs").string());
    std::printf("inputs: %s\n", scen.c_str());
    cfg = cosim::load_scenario(scen);
  } else {
    cfg = cosim::load_scenario(case_arg);
    if (seed_flag >= 0) cfg.seed = static_cast<std::uint64_t>(seed_flag);
    if (out_dir.empty()) out_dir = "runs/" + cfg.name;
  }
  if (mode == "tc") cfg.coupling = cosim::Coupling::tc;
  else if (mode == "lc") cfg.coupling = cosim::Coupling::lc;
  if (model == "cosim") cfg.model = cosim::Model::cosim;
  else if (model == "aggregated") cfg.model = cosim::Model::aggregated;

  std::printf("running %s (%s, %s), horizon %g s\n", cfg.name.c_str(),
              cosim::coupling_name(cfg.coupling).c_str(), cosim::model_name(cfg.model).c_str(),
              cfg.schedule.horizon_s);
  const auto result = cosim::run_simulation(cfg, [](double t, double horizon) {
    std::printf("  t = %6.0f / %.0f s\n", t, horizon);
    std::fflush(stdout);
  });
  metrics::emit_outputs(out_dir, result.bundle, cfg.schedule.tc_tolerance_pu, result.error);
  std::printf("outputs: %s\n", out_dir.c_str());
  if (!result.bundle.warnings.empty()) {
    std::printf("%zu warning(s); first at t=%.0f s: %s\n", result.bundle.warnings.size(),
                result.bundle.warnings.front().t_s,
                result.bundle.warnings.front().message.c_str());
  }
  if (result.error) {
    std::fprintf(stderr, "run aborted: %s\n", result.error->c_str());
    return 1;
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  try {
    const auto cfg = cosim::load_scenario(path);
    std::size_t units = cfg.roster.size();
    std::printf("%s: OK\n", path.c_str());
    std::printf("  scenario %s: %zu buses, %zu feeders, %zu profiles, %zu storage units\n",
                cfg.name.c_str(), cfg.system.buses.size(), cfg.feeders.size(),
                cfg.profiles.size(), units);
    std::printf("  horizon %g s, steps %g ms / %g s / %g s (machine / feeder / control)\n",
                cfg.schedule.horizon_s, cfg.schedule.dt_transmission_s * 1000.0,
                cfg.schedule.dt_distribution_s, cfg.schedule.dt_agc_s);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: INVALID\n  %s\n", path.c_str(), e.what());
    return 1;
  }
}

int cmd_catalog() {
  for (const auto& e : scenario::experiment_catalog()) {
    std::printf("%-18s %s\n", e.name.c_str(), e.summary.c_str());
  }
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b) {
  const auto rep = metrics::compare_runs(a, b);
  std::fputs(rep.text.c_str(), stdout);
  return rep.regression ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid transmission-distribution co-simulation with storage on regulation"};
  app.require_subcommand(1);

  std::string case_arg = "bess-high-tc";
  std::string mode, model, out_dir;
  long long seed_flag = -1;
  auto* run = app.add_subcommand("run", "simulate a catalog experiment or a scenario file");
  run->add_option("case", case_arg, "catalog name or scenario file")->capture_default_str();
  run->add_option("--mode", mode, "coupling override")->check(CLI::IsMember({"tc", "lc"}));
  run->add_option("--model", model, "feeder model override")
      ->check(CLI::IsMember({"cosim", "aggregated"}));
  run->add_option("--out", out_dir, "output directory (default runs/<name>...)");
  run->add_option("--seed", seed_flag, "noise seed override")->check(CLI::NonNegativeNumber);

  std::string cmp_a, cmp_b;
  auto* cmp = app.add_subcommand("compare", "diff two run directories, baseline first");
  cmp->add_option("baseline", cmp_a)->required();
  cmp->add_option("candidate", cmp_b)->required();

  std::string val_path;
  auto* val = app.add_subcommand("validate", "load and cross-check a scenario file");
  val->add_option("config", val_path)->required();

  app.add_subcommand("catalog", "list the built-in experiments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("run")) return cmd_run(case_arg, mode, model, out_dir, seed_flag);
    if (app.got_subcommand("compare")) return cmd_compare(cmp_a, cmp_b);
    if (app.got_subcommand("validate")) return cmd_validate(val_path);
    return cmd_catalog();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
