// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_CONFIG_HPP
#define EGMD_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "egmd/amr.hpp"
#include "egmd/flow.hpp"
#include "egmd/geometry.hpp"
#include "egmd/physics.hpp"
#include "egmd/stabilization.hpp"
#include "egmd/transport.hpp"

namespace egmd
{

enum class Scenario
{
  SingleVortex,
  PermBlock,
  RandomPerm2d,
  HeleShawRect,
  HeleShawRadial,
  Manufactured,
};

std::string to_string(Scenario s);
// Throws ConfigError for unknown names.
Scenario scenario_from_string(std::string_view name);

class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig
{
  Scenario scenario = Scenario::PermBlock;
  Domain domain{0.0, 0.0, 1.0, 1.0};
  int nx = 20, ny = 20;
  double dt = 0.01;
  double t_end = 1.0;

  FlowParams flow;
  TransportParams transport;
  EntropyConfig entropy;
  bool stabilize = true;
  MarkingPolicy marking;
  bool amr = true;
  int adapt_stride = 1;

  ViscosityModel viscosity{1.0, 1.0};
  DispersionParams dispersion;

  std::optional<double> p_in;  // derived from initial_velocity for hele_shaw_rect when unset
  double p_out = 0.0;
  double initial_velocity = 0.05;
  double c_in = 1.0;
  double c_init = 0.0;
  double perturbation = 0.0;  // amplitude of the seeded initial noise
  double perturbation_width = 0.05;
  std::uint64_t seed = 1;

  int random_centers = 40;
  double source_rate = 0.01;  // injected volume rate at the domain center, m^2/s
  double vortex_period = 2.0;

  GmresOptions flow_solver{1e-12, 100, 2000};
  GmresOptions transport_solver{1e-12, 100, 2000};
  int threads = 1;
  int output_stride = 10;

  // Throws ConfigError.
  void validate() const;
  double inflow_pressure() const;
};

ScenarioConfig preset(Scenario s);

// One key = value assignment. Throws ConfigError for unknown keys or malformed values.
void apply_setting(ScenarioConfig &cfg, std::string_view key, std::string_view value);

// Flat "key = value" lines, '#' starts a comment. The scenario key, if present, selects the
// preset the remaining keys modify, wherever it appears.
ScenarioConfig parse_config(std::string_view text,
                            std::optional<Scenario> scenario = std::nullopt);
ScenarioConfig load_config(const std::string &path,
                           std::optional<Scenario> scenario = std::nullopt);

// Every recognised key, for help output.
std::vector<std::string> config_keys();

}  // namespace egmd

#endif  // EGMD_CONFIG_HPP
