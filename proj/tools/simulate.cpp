// SPDX-License-Identifier: Apache-2.0
//
// simulate --scenario <name> --config <file> --out <dir> [--seed N] [--threads N] [--no-amr]
//          [--no-stab] [--<key> <value> ...]

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "egmd/config.hpp"
#include "egmd/simulation.hpp"

int main(int argc, char **argv)
{
  CLI::App app{"Enriched Galerkin miscible displacement simulator"};
  std::string scenario, config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool no_amr = false, no_stab = false, quiet = false;
  app.add_option("--scenario", scenario, "single_vortex, perm_block, random_perm_2d, "
                                         "hele_shaw_rect, hele_shaw_radial or manufactured");
  app.add_option("--config", config_path, "key = value file");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--threads", threads, "OpenMP threads (1 is the deterministic default)");
  app.add_flag("--no-amr", no_amr, "disable adaptive refinement");
  app.add_flag("--no-stab", no_stab, "disable entropy viscosity");
  app.add_flag("--quiet", quiet, "no progress output");

  // Every config key doubles as a flag; applied in command-line order after the file.
  std::vector<std::pair<std::string, std::string>> overrides;
  auto *group = app.add_option_group("Config overrides");
  for (const auto &key : egmd::config_keys())
  {
    if (key == "scenario" || key == "seed" || key == "threads")
    {
      continue;
    }
    group->add_option_function<std::string>(
        "--" + key, [&overrides, key](const std::string &v) { overrides.emplace_back(key, v); });
  }

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  egmd::ScenarioConfig cfg;
  try
  {
    std::optional<egmd::Scenario> chosen;
    if (!scenario.empty())
    {
      chosen = egmd::scenario_from_string(scenario);
    }
    cfg = config_path.empty() ? egmd::preset(chosen.value_or(egmd::Scenario::PermBlock))
                              : egmd::load_config(config_path, chosen);
    for (const auto &[k, v] : overrides)
    {
      egmd::apply_setting(cfg, k, v);
    }
    if (seed)
    {
      cfg.seed = *seed;
    }
    if (threads)
    {
      cfg.threads = *threads;
    }
    cfg.amr = cfg.amr && !no_amr;
    cfg.stabilize = cfg.stabilize && !no_stab;
    cfg.validate();
  }
  catch (const egmd::ConfigError &e)
  {
    std::cerr << e.what() << '\n';
    return 2;
  }

  try
  {
    return egmd::run(cfg, out_dir,
                     [quiet](const std::string &m)
                     {
                       if (!quiet)
                       {
                         std::cerr << m << '\n';
                       }
                     });
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
