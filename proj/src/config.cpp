// SPDX-License-Identifier: Apache-2.0

#include "egmd/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <utility>

namespace egmd
{

namespace
{

constexpr std::array<std::pair<Scenario, std::string_view>, 6> kNames = {{
    {Scenario::SingleVortex, "single_vortex"},
    {Scenario::PermBlock, "perm_block"},
    {Scenario::RandomPerm2d, "random_perm_2d"},
    {Scenario::HeleShawRect, "hele_shaw_rect"},
    {Scenario::HeleShawRadial, "hele_shaw_radial"},
    {Scenario::Manufactured, "manufactured"},
}};

std::string_view trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
  {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char *what)
{
  throw ConfigError("config: " + std::string(key) + " = '" + std::string(value) + "': " + what);
}

double to_double(std::string_view key, std::string_view v)
{
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
  {
    bad_value(key, v, "expected a number");
  }
  return out;
}

long long to_integer(std::string_view key, std::string_view v)
{
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
  {
    bad_value(key, v, "expected an integer");
  }
  return out;
}

int to_int(std::string_view key, std::string_view v)
{
  const long long x = to_integer(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
  {
    bad_value(key, v, "out of range");
  }
  return static_cast<int>(x);
}

bool to_bool(std::string_view key, std::string_view v)
{
  if (v == "true" || v == "1" || v == "yes" || v == "on")
  {
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off")
  {
    return false;
  }
  bad_value(key, v, "expected true or false");
}

using Setter = std::function<void(ScenarioConfig &, std::string_view, std::string_view)>;

template <class F>
Setter real(F field)
{
  return [field](ScenarioConfig &c, std::string_view k, std::string_view v)
  { field(c) = to_double(k, v); };
}

template <class F>
Setter integer(F field)
{
  return [field](ScenarioConfig &c, std::string_view k, std::string_view v)
  { field(c) = to_int(k, v); };
}

template <class F>
Setter boolean(F field)
{
  return [field](ScenarioConfig &c, std::string_view k, std::string_view v)
  { field(c) = to_bool(k, v); };
}

const std::map<std::string, Setter, std::less<>> &setters()
{
  static const std::map<std::string, Setter, std::less<>> table = {
      {"nx", integer([](ScenarioConfig &c) -> int & { return c.nx; })},
      {"ny", integer([](ScenarioConfig &c) -> int & { return c.ny; })},
      {"x0", real([](ScenarioConfig &c) -> double & { return c.domain.x0; })},
      {"y0", real([](ScenarioConfig &c) -> double & { return c.domain.y0; })},
      {"x1", real([](ScenarioConfig &c) -> double & { return c.domain.x1; })},
      {"y1", real([](ScenarioConfig &c) -> double & { return c.domain.y1; })},
      {"dt", real([](ScenarioConfig &c) -> double & { return c.dt; })},
      {"t_end", real([](ScenarioConfig &c) -> double & { return c.t_end; })},
      {"porosity",
       [](ScenarioConfig &c, std::string_view k, std::string_view v)
       { c.flow.porosity = c.transport.porosity = to_double(k, v); }},
      {"rho0",
       [](ScenarioConfig &c, std::string_view k, std::string_view v)
       { c.flow.rho0 = c.transport.rho0 = to_double(k, v); }},
      {"bdf_order",
       [](ScenarioConfig &c, std::string_view k, std::string_view v)
       { c.flow.bdf_order = c.transport.bdf_order = to_int(k, v); }},
      {"compressibility", real([](ScenarioConfig &c) -> double & { return c.flow.compressibility; })},
      {"theta", real([](ScenarioConfig &c) -> double & { return c.flow.theta; })},
      {"flow_penalty", real([](ScenarioConfig &c) -> double & { return c.flow.penalty; })},
      {"transport_penalty", real([](ScenarioConfig &c) -> double & { return c.transport.penalty; })},
      {"stab_penalty", real([](ScenarioConfig &c) -> double & { return c.transport.stab_penalty; })},
      {"entropy",
       [](ScenarioConfig &c, std::string_view k, std::string_view v)
       {
         if (v == "power")
         {
           c.entropy.kind = EntropyKind::Power;
         }
         else if (v == "log")
         {
           c.entropy.kind = EntropyKind::Log;
         }
         else if (v == "kruzkov")
         {
           c.entropy.kind = EntropyKind::Kruzkov;
         }
         else
         {
           bad_value(k, v, "expected power, log or kruzkov");
         }
       }},
      {"entropy_b", real([](ScenarioConfig &c) -> double & { return c.entropy.b; })},
      {"entropy_epsilon", real([](ScenarioConfig &c) -> double & { return c.entropy.epsilon; })},
      {"entropy_r", real([](ScenarioConfig &c) -> double & { return c.entropy.r; })},
      {"lambda_lin", real([](ScenarioConfig &c) -> double & { return c.entropy.lambda_lin; })},
      {"lambda_ent", real([](ScenarioConfig &c) -> double & { return c.entropy.lambda_ent; })},
      {"extrapolation",
       [](ScenarioConfig &c, std::string_view k, std::string_view v)
       {
         if (v == "extrapolated")
         {
           c.entropy.mode = Extrapolation::Extrapolated;
         }
         else if (v == "lagged")
         {
           c.entropy.mode = Extrapolation::TimeLagged;
         }
         else
         {
           bad_value(k, v, "expected extrapolated or lagged");
         }
       }},
      {"stabilize", boolean([](ScenarioConfig &c) -> bool & { return c.stabilize; })},
      {"amr", boolean([](ScenarioConfig &c) -> bool & { return c.amr; })},
      {"adapt_stride", integer([](ScenarioConfig &c) -> int & { return c.adapt_stride; })},
      {"refine_fraction", real([](ScenarioConfig &c) -> double & { return c.marking.refine_fraction; })},
      {"coarsen_fraction",
       real([](ScenarioConfig &c) -> double & { return c.marking.coarsen_fraction; })},
      {"r_min", integer([](ScenarioConfig &c) -> int & { return c.marking.bounds.r_min; })},
      {"r_max", integer([](ScenarioConfig &c) -> int & { return c.marking.bounds.r_max; })},
      {"cell_max",
       [](ScenarioConfig &c, std::string_view k, std::string_view v)
       {
         const long long n = to_integer(k, v);
         if (n <= 0)
         {
           bad_value(k, v, "must be positive");
         }
         c.marking.bounds.cell_max = static_cast<std::size_t>(n);
       }},
      {"mu_s", real([](ScenarioConfig &c) -> double & { return c.viscosity.mu_s; })},
      {"mu_0", real([](ScenarioConfig &c) -> double & { return c.viscosity.mu_0; })},
      {"viscosity_ratio",
       [](ScenarioConfig &c, std::string_view k, std::string_view v)
       { c.viscosity.mu_0 = to_double(k, v) * c.viscosity.mu_s; }},
      {"d_m", real([](ScenarioConfig &c) -> double & { return c.dispersion.d_m; })},
      {"alpha_l", real([](ScenarioConfig &c) -> double & { return c.dispersion.alpha_l; })},
      {"alpha_t", real([](ScenarioConfig &c) -> double & { return c.dispersion.alpha_t; })},
      {"p_in",
       [](ScenarioConfig &c, std::string_view k, std::string_view v) { c.p_in = to_double(k, v); }},
      {"p_out", real([](ScenarioConfig &c) -> double & { return c.p_out; })},
      {"initial_velocity", real([](ScenarioConfig &c) -> double & { return c.initial_velocity; })},
      {"c_in", real([](ScenarioConfig &c) -> double & { return c.c_in; })},
      {"c_init", real([](ScenarioConfig &c) -> double & { return c.c_init; })},
      {"perturbation", real([](ScenarioConfig &c) -> double & { return c.perturbation; })},
      {"perturbation_width",
       real([](ScenarioConfig &c) -> double & { return c.perturbation_width; })},
      {"seed",
       [](ScenarioConfig &c, std::string_view k, std::string_view v)
       {
         const long long s = to_integer(k, v);
         if (s < 0)
         {
           bad_value(k, v, "must be non-negative");
         }
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"random_centers", integer([](ScenarioConfig &c) -> int & { return c.random_centers; })},
      {"source_rate", real([](ScenarioConfig &c) -> double & { return c.source_rate; })},
      {"vortex_period", real([](ScenarioConfig &c) -> double & { return c.vortex_period; })},
      {"flow_tol", real([](ScenarioConfig &c) -> double & { return c.flow_solver.tol; })},
      {"flow_backward_error",
       boolean([](ScenarioConfig &c) -> bool & { return c.flow_solver.backward_error; })},
      {"transport_tol", real([](ScenarioConfig &c) -> double & { return c.transport_solver.tol; })},
      {"gmres_restart",
       [](ScenarioConfig &c, std::string_view k, std::string_view v)
       { c.flow_solver.restart = c.transport_solver.restart = to_int(k, v); }},
      {"gmres_max_iter",
       [](ScenarioConfig &c, std::string_view k, std::string_view v)
       { c.flow_solver.max_iter = c.transport_solver.max_iter = to_int(k, v); }},
      {"threads", integer([](ScenarioConfig &c) -> int & { return c.threads; })},
      {"output_stride", integer([](ScenarioConfig &c) -> int & { return c.output_stride; })},
  };
  return table;
}

}  // namespace

std::string to_string(Scenario s)
{
  for (const auto &[k, name] : kNames)
  {
    if (k == s)
    {
      return std::string(name);
    }
  }
  return "unknown";
}

Scenario scenario_from_string(std::string_view name)
{
  for (const auto &[k, n] : kNames)
  {
    if (n == name)
    {
      return k;
    }
  }
  throw ConfigError("config: unknown scenario '" + std::string(name) + "'");
}

void ScenarioConfig::validate() const
{
  auto fail = [](const std::string &m) { throw ConfigError("config: " + m); };
  if (!(dt > 0.0) || !(t_end > 0.0))
  {
    fail("dt and t_end must be positive");
  }
  if (nx < 1 || ny < 1)
  {
    fail("nx and ny must be at least 1");
  }
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0))
  {
    fail("the domain must have positive extent");
  }
  if (output_stride < 1 || adapt_stride < 1 || threads < 1)
  {
    fail("output_stride, adapt_stride and threads must be at least 1");
  }
  if (flow.bdf_order != transport.bdf_order)
  {
    fail("flow and transport must share the BDF order");
  }
  if (random_centers < 0)
  {
    fail("random_centers must be non-negative");
  }
  if (perturbation < 0.0 || !(perturbation_width > 0.0))
  {
    fail("perturbation must be non-negative with a positive width");
  }
  for (const auto *s : {&flow_solver, &transport_solver})
  {
    if (!(s->tol > 0.0) || s->restart < 1 || s->max_iter < 1)
    {
      fail("GMRES tolerance, restart and iteration limit must be positive");
    }
  }
  if (scenario == Scenario::HeleShawRect && !p_in &&
      (!(initial_velocity > 0.0)))
  {
    fail("hele_shaw_rect needs p_in or a positive initial_velocity");
  }
  try
  {
    flow.validate();
    transport.validate();
    entropy.validate();
    marking.validate();
    viscosity.validate();
    dispersion.validate();
  }
  catch (const std::invalid_argument &e)
  {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

double ScenarioConfig::inflow_pressure() const
{
  if (p_in)
  {
    return *p_in;
  }
  if (scenario == Scenario::HeleShawRect)
  {
    // K = 1: (K / mu_0) (p_in - p_out) / L = initial velocity.
    return p_out + initial_velocity * domain.width() * viscosity.mu_0;
  }
  return 1.0;
}

ScenarioConfig preset(Scenario s)
{
  ScenarioConfig c;
  c.scenario = s;
  switch (s)
  {
    case Scenario::SingleVortex:
      c.nx = c.ny = 16;
      c.dt = 0.005;
      c.t_end = 2.0;
      c.entropy.kind = EntropyKind::Power;
      c.entropy.b = 2.0;
      c.amr = false;
      break;
    case Scenario::PermBlock:
      c.flow.compressibility = 1e-8;
      c.t_end = 2.0;
      c.marking.bounds = {0, 2, 400};
      break;
    case Scenario::RandomPerm2d:
      c.flow.compressibility = 1e-8;
      c.t_end = 4.0;
      c.marking.bounds = {0, 2, 400};
      c.dispersion = {1.8e-7, 1.8e-5, 1.8e-6};
      break;
    case Scenario::HeleShawRect:
      c.domain = {0.0, 0.0, 1.0, 0.25};
      c.nx = 64;
      c.ny = 16;
      c.t_end = 5.0;
      c.flow.rho0 = c.transport.rho0 = 1000.0;
      c.viscosity = {0.001, 0.1};
      c.dispersion = {1.8e-8, 1.8e-8, 1.8e-9};
      c.entropy.lambda_lin = c.entropy.lambda_ent = 1.0;
      c.perturbation = 1e-3;
      c.amr = false;
      c.marking.bounds = {2, 4, 1024};
      break;
    case Scenario::HeleShawRadial:
      c.nx = c.ny = 32;
      c.dt = 0.005;
      c.t_end = 9.4;
      // Closed cell: the injected volume is taken up by compression. A stiffer fluid drives the
      // uniform pressure mode beyond what double precision resolves next to the gradients.
      c.flow.compressibility = 1e-4;
      c.flow_solver.backward_error = true;
      c.source_rate = 0.01;
      c.viscosity = {0.001, 1.0};
      c.dispersion = {1.8e-8, 1.8e-5, 1.8e-6};
      c.entropy.lambda_lin = c.entropy.lambda_ent = 1.0;
      c.marking.bounds = {4, 6, 3000};
      break;
    case Scenario::Manufactured:
      c.nx = c.ny = 8;
      c.dt = 1.0;
      c.t_end = 1.0;
      c.amr = false;
      break;
  }
  return c;
}

void apply_setting(ScenarioConfig &cfg, std::string_view key, std::string_view value)
{
  key = trim(key);
  value = trim(value);
  if (key == "scenario")
  {
    if (scenario_from_string(value) != cfg.scenario)
    {
      throw ConfigError("config: the scenario can only be chosen before other settings");
    }
    return;
  }
  const auto &table = setters();
  const auto it = table.find(key);
  if (it == table.end())
  {
    throw ConfigError("config: unknown key '" + std::string(key) + "'");
  }
  if (value.empty())
  {
    bad_value(key, value, "missing value");
  }
  it->second(cfg, key, value);
}

ScenarioConfig parse_config(std::string_view text, std::optional<Scenario> scenario)
{
  std::vector<std::pair<std::string_view, std::string_view>> pairs;
  std::optional<Scenario> in_file;
  int line_no = 0;
  while (!text.empty())
  {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
    {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty())
    {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
    {
      throw ConfigError("config: line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "scenario")
    {
      in_file = scenario_from_string(value);
      continue;
    }
    pairs.emplace_back(key, value);
  }
  const Scenario chosen = scenario.value_or(in_file.value_or(Scenario::PermBlock));
  if (scenario && in_file && *in_file != *scenario)
  {
    throw ConfigError("config: file selects scenario " + to_string(*in_file) + " but " +
                      to_string(*scenario) + " was requested");
  }
  ScenarioConfig cfg = preset(chosen);
  for (const auto &[k, v] : pairs)
  {
    apply_setting(cfg, k, v);
  }
  return cfg;
}

ScenarioConfig load_config(const std::string &path, std::optional<Scenario> scenario)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ConfigError("config: cannot read " + path);
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), scenario);
}

std::vector<std::string> config_keys()
{
  std::vector<std::string> keys{"scenario"};
  for (const auto &[k, _] : setters())
  {
    keys.push_back(k);
  }
  return keys;
}

}  // namespace egmd
