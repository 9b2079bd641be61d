// SPDX-License-Identifier: Apache-2.0
//
// acceptance [criterion ...]
//
// Runs the end-to-end acceptance checks (all of them when no numbers are given) and prints one
// PASS/FAIL line per criterion. Exit status is 1 when any selected criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "egmd/amr.hpp"
#include "egmd/config.hpp"
#include "egmd/flow.hpp"
#include "egmd/output.hpp"
#include "egmd/simulation.hpp"

using namespace egmd;

namespace
{

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, auto... args)
{
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const Domain unit{0.0, 0.0, 1.0, 1.0};

// ---------------------------------------------------------------------------------------------

Outcome dof_counts()
{
  const int ns[] = {4, 8, 16, 32, 64};
  const int expect[] = {41, 145, 545, 2113, 8321};
  bool ok = true;
  std::string got;
  for (int i = 0; i < 5; ++i)
  {
    const int total = dof_count(QuadMesh::uniform(unit, ns[i], ns[i])).total;
    ok = ok && total == expect[i];
    got += (i ? " " : "") + std::to_string(total);
  }
  return {ok, "totals " + got};
}

Outcome dof_ratio()
{
  const auto c = dof_count(QuadMesh::uniform(unit, 64, 64));
  const double ratio = static_cast<double>(c.total) / (4.0 * 64 * 64);
  return {ratio <= 0.52 && ratio > 0.5, fmt("EG/DG at n=64 = %.5f", ratio)};
}

// ---------------------------------------------------------------------------------------------

double vortex_error(int n)
{
  auto cfg = preset(Scenario::SingleVortex);
  cfg.nx = cfg.ny = n;
  cfg.dt = 0.08 / n;
  cfg.t_end = 2.0;
  cfg.vortex_period = 2.0;
  cfg.entropy.kind = EntropyKind::Power;
  cfg.entropy.b = 2.0;
  cfg.entropy.lambda_lin = cfg.entropy.lambda_ent = 0.5;
  cfg.amr = false;
  Simulation sim(cfg);
  while (!sim.done())
  {
    sim.step();
  }
  return l2_distance(sim.mesh(), sim.dofs(), sim.concentration(),
                     [&](const Point2 &x) { return sim.initial_concentration(x); });
}

Outcome vortex_convergence()
{
  const double e4 = vortex_error(4), e8 = vortex_error(8), e16 = vortex_error(16);
  const double order = std::log2(e8 / e16);
  return {e8 < e4 && e16 < e8 && order >= 0.9,
          fmt("L2 errors %.4e %.4e %.4e, order(8->16) %.3f", e4, e8, e16, order)};
}

// ---------------------------------------------------------------------------------------------

Outcome manufactured()
{
  auto mesh = QuadMesh::uniform(unit, 4, 4);
  std::mt19937 rng(7);
  for (int round = 0; round < 2; ++round)
  {
    std::vector<int> pick;
    for (int id : mesh.active_cells())
    {
      if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.3)
      {
        pick.push_back(id);
      }
    }
    mesh.refine(pick);
  }
  const DofMap dofs(mesh);
  FlowBC bc;
  bc.set(Side::West, BoundaryData::dirichlet(1.0))
      .set(Side::East, BoundaryData::dirichlet(0.0))
      .set(Side::South, BoundaryData::neumann(0.0))
      .set(Side::North, BoundaryData::neumann(0.0));
  KappaField kappa(mesh.num_active(), Mat2::identity(1.0));
  Field p0(static_cast<std::size_t>(dofs.total()), 0.0);
  std::vector<double> q(mesh.num_active(), 0.0);
  PressureInputs in;
  in.mesh = &mesh;
  in.dofs = &dofs;
  in.bc = &bc;
  in.kappa = kappa;
  in.p_n = p0;
  in.source = q;
  in.dt = 1.0;
  in.bdf_order = 1;
  in.params.compressibility = 0.0;
  GmresOptions opt;
  opt.tol = 1e-13;
  const auto sol = solve_pressure(in, opt);

  double nodal = 0.0, constants = 0.0;
  for (int v = 0; v < dofs.n_cg(); ++v)
  {
    nodal = std::max(nodal, std::abs(sol.p[static_cast<std::size_t>(v)] - (1.0 - dofs.vertex(v).x)));
  }
  for (int a = 0; a < dofs.n_const(); ++a)
  {
    constants = std::max(constants, std::abs(sol.p[static_cast<std::size_t>(dofs.const_dof(a))]));
  }
  const auto flux = reconstruct_flux(in, sol.p);
  const double cons = max_abs(local_conservation_residual(in, sol.p, flux));
  return {sol.gmres.converged && dofs.num_constraints() > 0 && nodal <= 1e-9 &&
              constants <= 1e-9 && cons <= 1e-9,
          fmt("%zu cells, %d hanging, nodal %.2e, constants %.2e, conservation %.2e",
              mesh.num_active(), dofs.num_constraints(), nodal, constants, cons)};
}

// ---------------------------------------------------------------------------------------------

Outcome block_conservation()
{
  auto cfg = preset(Scenario::PermBlock);
  cfg.t_end = 50 * cfg.dt;
  Simulation sim(cfg);
  double worst = 0.0;
  int steps = 0;
  bool ok = true;
  sim.on_solved(
      [&](const StepState &s)
      {
        double fmax = 0.0;
        for (double t : s.flux->total)
        {
          fmax = std::max(fmax, std::abs(t));
        }
        const double ratio = max_abs(*s.conservation) / (cfg.flow.rho0 * fmax);
        worst = std::max(worst, ratio);
        ok = ok && ratio <= 1e-8;
        ++steps;
      });
  while (!sim.done())
  {
    sim.step();
  }
  return {ok && steps == 50,
          fmt("%d steps, max residual / max face flux %.2e", steps, worst)};
}

Outcome compatibility()
{
  auto cfg = preset(Scenario::PermBlock);
  cfg.flow.theta = 0.0;
  cfg.c_init = 0.5;
  cfg.c_in = 0.5;
  cfg.t_end = 20 * cfg.dt;
  Simulation sim(cfg);
  double dev = 0.0;
  sim.on_solved(
      [&](const StepState &s)
      {
        const auto r = value_range(*s.mesh, *s.dofs, *s.concentration);
        dev = std::max({dev, std::abs(r.max - 0.5), std::abs(r.min - 0.5)});
      });
  while (!sim.done())
  {
    sim.step();
  }
  return {dev <= 1e-8, fmt("max |C - 0.5| over 20 steps %.2e", dev)};
}

// ---------------------------------------------------------------------------------------------

// Gap between two boxes in the max norm (0 when they touch or overlap).
double box_gap(const BBox &a, const BBox &b)
{
  const double gx = std::max({0.0, a.x0 - b.x1, b.x0 - a.x1});
  const double gy = std::max({0.0, a.y0 - b.y1, b.y0 - a.y1});
  return std::max(gx, gy);
}

struct BlockRun
{
  double overshoot = 0.0;
  std::size_t linear_cells = 0, linear_near_front = 0;
};

// 100 steps of the block preset; h_min = 0.05 through the preset's level cap.
BlockRun block_run(bool stabilize)
{
  auto cfg = preset(Scenario::PermBlock);
  cfg.stabilize = stabilize;
  cfg.t_end = 100 * cfg.dt;
  Simulation sim(cfg);
  BlockRun out;
  sim.on_solved(
      [&](const StepState &s)
      {
        const auto r = value_range(*s.mesh, *s.dofs, *s.concentration);
        out.overshoot = std::max(out.overshoot, std::max(0.0, r.max - 1.0) + std::max(0.0, -r.min));
        if (!stabilize)
        {
          return;
        }
        const QuadMesh &m = *s.mesh;
        const std::size_t n = m.num_active();
        std::vector<BBox> boxes(n);
        std::vector<std::size_t> front;
        for (std::size_t a = 0; a < n; ++a)
        {
          boxes[a] = m.cell(m.active_cells()[a]).bbox;
          double lo = std::numeric_limits<double>::infinity(), hi = -lo;
          for (const Point2 ref : {Point2{0, 0}, Point2{1, 0}, Point2{0, 1}, Point2{1, 1}})
          {
            const double v = eval(m, *s.dofs, *s.concentration, static_cast<int>(a), ref);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
          if (lo <= 0.5 && hi >= 0.5)
          {
            front.push_back(a);
          }
        }
        const auto lin = s.viscosity->linear_selected();
        for (std::size_t a = 0; a < n; ++a)
        {
          if (!lin[a])
          {
            continue;
          }
          ++out.linear_cells;
          const double h = boxes[a].x1 - boxes[a].x0;
          for (std::size_t f : front)
          {
            if (box_gap(boxes[a], boxes[f]) <= 2.0 * h * (1.0 + 1e-9))
            {
              ++out.linear_near_front;
              break;
            }
          }
        }
      });
  while (!sim.done())
  {
    sim.step();
  }
  return out;
}

const BlockRun &stabilized_block()
{
  static const BlockRun r = block_run(true);
  return r;
}

Outcome stabilization_efficacy()
{
  const double with = stabilized_block().overshoot;
  const double without = block_run(false).overshoot;
  const bool ratio_ok = without >= 5.0 * with;
  const bool bound_ok = with <= 0.02;
  return {ratio_ok && bound_ok,
          fmt("overshoot unstabilized %.4f, stabilized %.4f (ratio %.2f >= 5: %s, "
              "stabilized <= 0.02: %s)",
              without, with, with > 0 ? without / with : INFINITY, ratio_ok ? "yes" : "no",
              bound_ok ? "yes" : "no")};
}

Outcome viscosity_map()
{
  const auto &r = stabilized_block();
  const double frac =
      r.linear_cells ? static_cast<double>(r.linear_near_front) / r.linear_cells : 0.0;
  return {r.linear_cells > 0 && frac >= 0.9,
          fmt("%zu of %zu linear-viscosity cell-steps within 2 cells of C=0.5 (%.1f%%)",
              r.linear_near_front, r.linear_cells, 100.0 * frac)};
}

// ---------------------------------------------------------------------------------------------

Outcome amr_invariants()
{
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  QuadMesh m = QuadMesh::uniform(unit, 4, 4);
  DofMap dofs(m);
  Field c(static_cast<std::size_t>(dofs.total()));
  for (double &v : c)
  {
    v = u(rng);
  }
  dofs.distribute(c);
  MarkingPolicy p;
  p.refine_fraction = 0.25;
  p.coarsen_fraction = 0.25;
  p.bounds = {1, 6, 300};
  double mass = integrate(m, dofs, c);
  double drift = 0.0, area_err = 0.0;
  int jump = 0, changed = 0;
  std::size_t most = 0;
  bool ok = true;
  for (int round = 0; round < 1000; ++round)
  {
    std::vector<double> er(m.num_active());
    for (double &e : er)
    {
      e = u(rng);
    }
    const auto mk = mark(m, er, p);
    auto r = adapt_and_transfer(m, dofs, std::vector<Field>{c}, mk, p.bounds);
    changed += r.changed() ? 1 : 0;
    m = std::move(r.mesh);
    dofs = std::move(r.dofs);
    c = std::move(r.fields[0]);
    double area = 0.0;
    for (int id : m.active_cells())
    {
      area += m.cell(id).bbox.area();
    }
    const double now = integrate(m, dofs, c);
    drift = std::max(drift, std::abs(now - mass) / std::abs(mass));
    area_err = std::max(area_err, std::abs(area - 1.0));
    jump = std::max(jump, m.max_face_level_jump());
    most = std::max(most, m.num_active());
    ok = ok && m.max_face_level_jump() <= 1 && m.num_active() <= p.bounds.cell_max &&
         std::abs(now - mass) <= 1e-12 * std::abs(mass) && std::abs(area - 1.0) <= 1e-13;
    mass = now;
  }
  return {ok && changed > 500,
          fmt("%d rounds changed the mesh, max level jump %d, max cells %zu/%zu, area error "
              "%.1e, max relative mass drift %.1e",
              changed, jump, most, p.bounds.cell_max, area_err, drift)};
}

// ---------------------------------------------------------------------------------------------

struct FingerRun
{
  double max_variance = 0.0;
  double onset = -1.0;
  double tip_velocity = 0.0;
};

FingerRun hele_shaw(double ratio)
{
  auto cfg = preset(Scenario::HeleShawRect);
  cfg.viscosity.mu_0 = ratio * cfg.viscosity.mu_s;
  cfg.t_end = 8.0;
  cfg.dt = 0.01;
  Simulation sim(cfg);
  FingerRun out;
  double tip1 = NAN, tip5 = NAN;
  sim.on_solved(
      [&](const StepState &s)
      {
        const auto f = finger_diagnostics(*s.mesh, *s.dofs, *s.concentration);
        out.max_variance = std::max(out.max_variance, f.tip_variance);
        if (out.onset < 0.0 && f.tip_variance > 1e-3)
        {
          out.onset = s.time;
        }
        if (s.step == std::lround(1.0 / cfg.dt))
        {
          tip1 = f.x_tip;
        }
        if (s.step == std::lround(5.0 / cfg.dt))
        {
          tip5 = f.x_tip;
        }
      });
  while (!sim.done())
  {
    sim.step();
  }
  out.tip_velocity = (tip5 - tip1) / 4.0;
  return out;
}

Outcome fingering_trend()
{
  const auto m1 = hele_shaw(1.0), m25 = hele_shaw(25.0), m100 = hele_shaw(100.0);
  const bool stable = m1.max_variance <= 1e-4;
  const bool onset = m25.onset > 0.0 && m100.onset > 0.0 && m100.onset < m25.onset;
  const bool speed = m100.tip_velocity >= m25.tip_velocity;
  return {stable && onset && speed,
          fmt("M=1 max variance %.2e; onset M=25 %.2f s, M=100 %.2f s; tip velocity M=25 "
              "%.4f, M=100 %.4f m/s",
              m1.max_variance, m25.onset, m100.onset, m25.tip_velocity, m100.tip_velocity)};
}

// ---------------------------------------------------------------------------------------------

Outcome bdf2_exact()
{
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial)
  {
    const double a = u(rng), b = u(rng), c = u(rng), t = u(rng);
    const double dt = std::ldexp(1.0, -(trial % 8)) * (1.0 + 0.5 * std::abs(u(rng)));
    const auto q = [&](double s) { return a + b * s + c * s * s; };
    const double exact = b + 2.0 * c * (t + dt);
    const double got = bdf_apply(2, dt, q(t + dt), q(t), q(t - dt));
    worst = std::max(worst, std::abs(got - exact) / std::max(1.0, std::abs(exact)));
  }
  return {worst <= 1e-13, fmt("max error over 200 quadratics %.2e", worst)};
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"End-to-end acceptance checks"};
  std::vector<int> only;
  app.add_option("criteria", only, "criterion numbers to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  const std::map<int, std::pair<const char *, std::function<Outcome()>>> criteria = {
      {1, {"dof counts", dof_counts}},
      {2, {"EG/DG dof ratio", dof_ratio}},
      {3, {"single-vortex convergence", vortex_convergence}},
      {4, {"manufactured Darcy on a hanging-node mesh", manufactured}},
      {5, {"local conservation on the permeability block", block_conservation}},
      {6, {"compatibility", compatibility}},
      {7, {"stabilization efficacy", stabilization_efficacy}},
      {8, {"viscosity selection map", viscosity_map}},
      {9, {"AMR invariants", amr_invariants}},
      {10, {"fingering trend", fingering_trend}},
      {11, {"BDF2 exactness", bdf2_exact}},
  };

  int failed = 0;
  for (const auto &[id, entry] : criteria)
  {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
    {
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try
    {
      o = entry.second();
    }
    catch (const std::exception &e)
    {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::printf("criterion %2d %s: %s  [%s] (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", entry.first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
