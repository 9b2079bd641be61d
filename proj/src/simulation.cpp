// SPDX-License-Identifier: Apache-2.0

#include "egmd/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <random>

#include "egmd/parallel.hpp"
#include "egmd/physics.hpp"

namespace egmd
{

namespace
{

bool analytic_velocity(Scenario s) { return s == Scenario::SingleVortex; }

std::string sci(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string vtk_name(const std::string &dir, int step)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06d.vtk", step);
  return (std::filesystem::path(dir) / buf).string();
}

}  // namespace

Simulation::Simulation(ScenarioConfig config) : cfg_(std::move(config))
{
  cfg_.validate();
  mesh_ = QuadMesh::uniform(cfg_.domain, cfg_.nx, cfg_.ny);
  dofs_ = DofMap(mesh_);
  if (cfg_.scenario == Scenario::RandomPerm2d)
  {
    centers_ = random_centers(cfg_.domain, cfg_.random_centers, cfg_.seed);
  }

  switch (cfg_.scenario)
  {
    case Scenario::HeleShawRadial:
      for (Side s : kAllSides)
      {
        flow_bc_.set(s, BoundaryData::neumann(0.0));
      }
      break;
    default:
      flow_bc_.set(Side::West, BoundaryData::dirichlet(cfg_.inflow_pressure()))
          .set(Side::East, BoundaryData::dirichlet(cfg_.p_out))
          .set(Side::South, BoundaryData::neumann(0.0))
          .set(Side::North, BoundaryData::neumann(0.0));
      transport_bc_.set_inflow(Side::West, cfg_.c_in);
      break;
  }
  sources_.c_q = 1.0;

  c_ = interpolate([this](const Point2 &x) { return initial_concentration(x); }, mesh_, dofs_);
  if (cfg_.perturbation > 0.0)
  {
    // Seeded noise on the vertices next to the inflow edge.
    std::mt19937_64 rng(cfg_.seed);
    for (int i = 0; i < dofs_.n_cg(); ++i)
    {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      const double ramp =
          std::max(0.0, 1.0 - (dofs_.vertex(i).x - cfg_.domain.x0) / cfg_.perturbation_width);
      c_[static_cast<std::size_t>(i)] += cfg_.perturbation * u * ramp;
    }
    dofs_.distribute(c_);
  }
  dofs_.normalize(mesh_, c_);
  p_.assign(static_cast<std::size_t>(dofs_.total()), 0.0);
  mu_stab_.assign(mesh_.num_active(), 0.0);
  indicator_.assign(mesh_.num_active(), 0.0);
  refresh_cell_data();
  record(0, 0, 0.0, 0.0);
}

double Simulation::initial_concentration(const Point2 &x) const
{
  if (cfg_.scenario == Scenario::SingleVortex)
  {
    return std::hypot(x.x - 0.5, x.y - 0.75) - 0.15;
  }
  return cfg_.c_init;
}

int Simulation::num_steps() const
{
  return std::max(1, static_cast<int>(std::llround(cfg_.t_end / cfg_.dt)));
}

bool Simulation::done() const { return step_ >= num_steps(); }

void Simulation::refresh_cell_data()
{
  const auto n = mesh_.num_active();
  perm_.resize(n);
  for (std::size_t t = 0; t < n; ++t)
  {
    const Point2 x = mesh_.cell(mesh_.active_cells()[t]).bbox.center();
    switch (cfg_.scenario)
    {
      case Scenario::PermBlock:
        perm_[t] = block_permeability(x);
        break;
      case Scenario::RandomPerm2d:
        perm_[t] = random_permeability(centers_, x);
        break;
      default:
        perm_[t] = 1.0;
    }
  }
  sources_.q.clear();
  if (cfg_.scenario == Scenario::HeleShawRadial)
  {
    sources_.q.assign(n, 0.0);
    const int id = mesh_.locate(cfg_.domain.center());
    const int a = mesh_.active_index(id);
    sources_.q[static_cast<std::size_t>(a)] =
        cfg_.flow.rho0 * cfg_.source_rate / mesh_.cell(id).bbox.area();
  }
}

void Simulation::record(int gmres_flow, int gmres_transport, double conservation, double max_flux)
{
  StepDiagnostics d;
  d.step = step_;
  d.time = time_;
  d.cells = mesh_.num_active();
  d.dofs = dofs_.total();
  d.mass = integrate(mesh_, dofs_, c_);
  const auto range = value_range(mesh_, dofs_, c_);
  d.cmin = range.min;
  d.cmax = range.max;
  const auto f = finger_diagnostics(mesh_, dofs_, c_);
  d.xtip = f.x_tip;
  d.mixing_length = f.mixing_length;
  d.tip_variance = f.tip_variance;
  d.tip_velocity = history_.empty() ? 0.0 : (d.xtip - history_.back().xtip) / cfg_.dt;
  d.gmres_flow = gmres_flow;
  d.gmres_transport = gmres_transport;
  d.conservation = conservation;
  d.max_flux = max_flux;
  history_.push_back(d);
}

void Simulation::step()
{
  const double dt = cfg_.dt;
  const double t_new = time_ + dt;
  const bool has_history = !c_prev_.empty();
  const int order = has_history ? cfg_.flow.bdf_order : 1;
  const auto n = mesh_.num_active();

  // Mobility from the extrapolated concentration.
  Field c_star = c_;
  if (has_history)
  {
    for (std::size_t i = 0; i < c_star.size(); ++i)
    {
      c_star[i] = 2.0 * c_[i] - c_prev_[i];
    }
  }
  std::vector<Mat2> kappa(n);
  for (std::size_t t = 0; t < n; ++t)
  {
    const double mu = mix_viscosity(cfg_.viscosity, cell_mean(mesh_, dofs_, c_star, static_cast<int>(t)));
    kappa[t] = Mat2::identity(perm_[t] / mu);
  }

  PressureInputs pin;
  pin.mesh = &mesh_;
  pin.dofs = &dofs_;
  pin.params = cfg_.flow;
  pin.bc = &flow_bc_;
  pin.kappa = kappa;
  pin.p_n = p_;
  if (order == 2)
  {
    pin.p_nm1 = p_prev_;
  }
  pin.source = sources_.q;
  pin.dt = dt;
  pin.time = t_new;
  pin.bdf_order = order;

  Field p_new = p_;
  FaceFlux flux;
  std::vector<double> residual;
  int gmres_flow = 0;
  if (analytic_velocity(cfg_.scenario))
  {
    const double period = cfg_.vortex_period;
    flux = flux_from_velocity(mesh_, [&](const Point2 &x)
                              { return single_vortex_velocity(x.x, x.y, t_new, period); });
  }
  else
  {
    auto solved = solve_pressure(pin, cfg_.flow_solver);
    if (!solved.gmres.converged)
    {
      throw SolverError("pressure GMRES did not converge at step " + std::to_string(step_ + 1) +
                        " (relative residual " + sci(solved.gmres.residual) + ")");
    }
    gmres_flow = solved.gmres.iterations;
    p_new = std::move(solved.p);
    flux = reconstruct_flux(pin, p_new);
    residual = local_conservation_residual(pin, p_new, flux);
  }

  StabilizationInputs sin;
  sin.mesh = &mesh_;
  sin.dofs = &dofs_;
  sin.config = cfg_.entropy;
  sin.flux = &flux;
  sin.c_n = c_;
  if (has_history)
  {
    sin.c_nm1 = c_prev_;
  }
  sin.sources = &sources_;
  sin.dt = dt;
  sin.bdf_order = order;
  sin.porosity = cfg_.transport.porosity;
  sin.rho0 = cfg_.transport.rho0;
  ViscosityField visc = compute_stabilization(sin);

  std::vector<Mat2> disp;
  if (!cfg_.dispersion.pure_advection())
  {
    disp.resize(n);
    for (std::size_t t = 0; t < n; ++t)
    {
      disp[t] = dispersion_tensor(cfg_.dispersion, flux.cell_mean_velocity[t]);
    }
  }

  TransportInputs tin;
  tin.mesh = &mesh_;
  tin.dofs = &dofs_;
  tin.params = cfg_.transport;
  tin.bc = &transport_bc_;
  tin.flux = &flux;
  tin.dispersion = disp;
  if (cfg_.stabilize)
  {
    tin.mu_stab = visc.mu_stab;
  }
  tin.c_n = c_;
  if (order == 2)
  {
    tin.c_nm1 = c_prev_;
  }
  tin.sources = &sources_;
  tin.dt = dt;
  tin.bdf_order = order;
  auto transported = solve_transport(tin, cfg_.transport_solver);
  if (!transported.gmres.converged)
  {
    throw SolverError("transport GMRES did not converge at step " + std::to_string(step_ + 1) +
                      " (relative residual " + sci(transported.gmres.residual) + ")");
  }

  if (observer_)
  {
    const StepState s{step_ + 1, t_new, &mesh_, &dofs_, &transported.c, &p_new, &flux, &visc,
                      &residual};
    observer_(s);
  }

  c_prev_ = std::move(c_);
  c_ = std::move(transported.c);
  p_prev_ = std::move(p_);
  p_ = std::move(p_new);
  mu_stab_ = cfg_.stabilize ? visc.mu_stab : std::vector<double>(n, 0.0);
  indicator_ = visc.indicator;
  ++step_;
  time_ = step_ * dt;

  // Diagnostics describe the solve, so they are taken before the mesh changes.
  const double conservation = residual.empty() ? 0.0 : max_abs(residual);
  record(gmres_flow, transported.gmres.iterations, conservation, flux.max_abs_un());

  if (cfg_.amr && step_ % cfg_.adapt_stride == 0)
  {
    const Marks marks = mark(mesh_, visc.indicator, cfg_.marking);
    const std::vector<Field> fields = {c_, c_prev_, p_, p_prev_};
    const std::vector<std::vector<double>> cells = {mu_stab_, indicator_};
    auto adapted = adapt_and_transfer(mesh_, dofs_, fields, marks, cfg_.marking.bounds, cells);
    if (adapted.changed())
    {
      mesh_ = std::move(adapted.mesh);
      dofs_ = std::move(adapted.dofs);
      c_ = std::move(adapted.fields[0]);
      c_prev_ = std::move(adapted.fields[1]);
      p_ = std::move(adapted.fields[2]);
      p_prev_ = std::move(adapted.fields[3]);
      mu_stab_ = std::move(adapted.cell_values[0]);
      indicator_ = std::move(adapted.cell_values[1]);
      refresh_cell_data();
    }
  }
}

int run(const ScenarioConfig &config, const std::string &out_dir,
        const std::function<void(const std::string &)> &log)
{
  auto say = [&](const std::string &m)
  {
    if (log)
    {
      log(m);
    }
  };
  std::optional<Simulation> sim;
  try
  {
    sim.emplace(config);
  }
  catch (const ConfigError &e)
  {
    say(e.what());
    return 2;
  }
  parallel::set_threads(config.threads);
  std::filesystem::create_directories(out_dir);

  auto write_state = [&]
  {
    VtkFields f;
    f.concentration = sim->concentration();
    f.pressure = sim->pressure();
    f.mu_stab = sim->mu_stab();
    f.indicator = sim->indicator();
    f.permeability = sim->permeability();
    write_vtk(vtk_name(out_dir, sim->step_index()), sim->mesh(), sim->dofs(), f);
  };
  const std::string csv = (std::filesystem::path(out_dir) / "diagnostics.csv").string();

  write_state();
  while (!sim->done())
  {
    try
    {
      sim->step();
    }
    catch (const SolverError &e)
    {
      say(std::string("solver failure: ") + e.what());
      write_csv(csv, sim->history());
      write_state();
      return 3;
    }
    const int s = sim->step_index();
    if (s % config.output_stride == 0 || sim->done())
    {
      write_state();
      const auto &d = sim->history().back();
      say("step " + std::to_string(s) + " t=" + std::to_string(d.time) +
          " cells=" + std::to_string(d.cells) + " cmin=" + std::to_string(d.cmin) +
          " cmax=" + std::to_string(d.cmax));
    }
  }
  write_csv(csv, sim->history());
  return 0;
}

}  // namespace egmd
