// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "egmd/transport.hpp"

using namespace egmd;

namespace
{

const Domain unit{0.0, 0.0, 1.0, 1.0};

struct Column
{
  QuadMesh mesh;
  DofMap dofs;
  FaceFlux flux;
  TransportBC bc;
  Field c0;

  Column(int n, double u)
    : mesh(QuadMesh::uniform(unit, n, 1)),
      dofs(mesh),
      flux(flux_from_velocity(mesh, [u](const Point2 &) { return Vec2{u, 0.0}; })),
      c0(static_cast<std::size_t>(dofs.total()), 0.0)
  {
    bc.set_inflow(Side::West, 1.0);
  }

  TransportInputs inputs(std::span<const double> cn, double dt) const
  {
    TransportInputs in;
    in.mesh = &mesh;
    in.dofs = &dofs;
    in.bc = &bc;
    in.flux = &flux;
    in.c_n = cn;
    in.dt = dt;
    in.bdf_order = 1;
    return in;
  }
};

// Min / max of an EG function over cell quadrature points and corners.
std::pair<double, double> range(const QuadMesh &m, const DofMap &d, std::span<const double> c)
{
  double lo = 1e300, hi = -1e300;
  for (int a = 0; a < d.n_const(); ++a)
  {
    for (double x : {0.0, 0.1127, 0.5, 0.8873, 1.0})
    {
      for (double y : {0.0, 0.5, 1.0})
      {
        const double v = eval(m, d, c, a, {x, y});
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  return {lo, hi};
}

GmresOptions tight()
{
  GmresOptions o;
  o.tol = 1e-13;
  return o;
}

}  // namespace

TEST_CASE("upwind value")
{
  CHECK(upwind_value(1.0, 0.0, -0.5) == 1.0);
  CHECK(upwind_value(1.0, 0.0, 0.5) == 0.0);
  CHECK(upwind_value(1.0, 0.0, 0.0) == 0.0);
}

TEST_CASE("source split")
{
  CHECK(source_split(5.0).plus == 5.0);
  CHECK(source_split(5.0).minus == 0.0);
  CHECK(source_split(-3.0).plus == 0.0);
  CHECK(source_split(-3.0).minus == -3.0);
  CHECK(source_split(0.0).plus == 0.0);
  CHECK(source_split(0.0).minus == 0.0);
}

TEST_CASE("no transport keeps a constant state")
{
  auto m = QuadMesh::uniform(unit, 4, 4);
  m.refine(std::vector<int>{m.locate({0.3, 0.3})});
  const DofMap d(m);
  const auto flux = flux_from_velocity(m, [](const Point2 &) { return Vec2{}; });
  TransportBC bc;
  const auto c0 = interpolate([](const Point2 &) { return 0.42; }, m, d);
  TransportInputs in;
  in.mesh = &m;
  in.dofs = &d;
  in.bc = &bc;
  in.flux = &flux;
  in.c_n = c0;
  in.c_nm1 = c0;
  in.bdf_order = 2;
  in.dt = 0.05;
  const auto s = solve_transport(in, tight());
  CHECK(s.gmres.converged);
  const auto [lo, hi] = range(m, d, s.c);
  CHECK(lo == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(hi == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("compatibility: constant concentration is preserved by the conservative flux")
{
  auto m = QuadMesh::uniform(unit, 8, 8);
  m.refine(std::vector<int>{m.locate({0.4, 0.3}), m.locate({0.6, 0.7})});
  m.refine(std::vector<int>{m.locate({0.38, 0.26})});
  const DofMap d(m);
  FlowBC fbc;
  fbc.set(Side::West, BoundaryData::dirichlet(1.0))
      .set(Side::East, BoundaryData::dirichlet(0.0))
      .set(Side::South, BoundaryData::neumann(0.0))
      .set(Side::North, BoundaryData::neumann(0.0));
  KappaField kappa(m.num_active());
  std::vector<double> q(m.num_active(), 0.0);
  for (std::size_t a = 0; a < kappa.size(); ++a)
  {
    const auto c = m.cell(m.active_cells()[a]).bbox.center();
    kappa[a] = (c.x > 0.375 && c.x < 0.625 && c.y > 0.25 && c.y < 0.75) ? Mat2::identity(1e-3)
                                                                       : Mat2::identity(1.0);
  }
  q[5] = 4.0;
  q[20] = -2.0;
  Field p0(static_cast<std::size_t>(d.total()), 0.0);
  PressureInputs pin;
  pin.mesh = &m;
  pin.dofs = &d;
  pin.bc = &fbc;
  pin.kappa = kappa;
  pin.p_n = p0;
  pin.source = q;
  pin.dt = 0.01;
  const auto p = solve_pressure(pin, tight());
  const auto flux = reconstruct_flux(pin, p.p);

  const double cstar = 0.5;
  TransportBC bc;
  bc.set_inflow(Side::West, cstar);
  SourceField src{q, cstar};
  const auto c0 = interpolate([&](const Point2 &) { return cstar; }, m, d);
  std::vector<Mat2> disp(m.num_active(), Mat2::diag(1e-3, 5e-4));
  std::vector<double> mu(m.num_active(), 0.0);
  for (std::size_t a = 0; a < mu.size(); ++a)
  {
    mu[a] = 0.01 * static_cast<double>(a % 3);
  }
  TransportInputs in;
  in.mesh = &m;
  in.dofs = &d;
  in.bc = &bc;
  in.flux = &flux;
  in.dispersion = disp;
  in.mu_stab = mu;
  in.c_n = c0;
  in.sources = &src;
  in.dt = 0.01;
  const auto s = solve_transport(in, tight());
  CHECK(s.gmres.converged);
  const auto [lo, hi] = range(m, d, s.c);
  CHECK(std::abs(lo - cstar) < 1e-10);
  CHECK(std::abs(hi - cstar) < 1e-10);
}

TEST_CASE("closed domain conserves mass")
{
  auto m = QuadMesh::uniform(unit, 8, 8);
  m.refine(std::vector<int>{m.locate({0.5, 0.5})});
  const DofMap d(m);
  const double pi = std::numbers::pi;
  const auto flux = flux_from_velocity(
      m,
      [pi](const Point2 &x)
      {
        return Vec2{-2 * std::sin(pi * x.y) * std::pow(std::sin(pi * x.x), 2) * std::cos(pi * x.y),
                    2 * std::sin(pi * x.x) * std::pow(std::sin(pi * x.y), 2) * std::cos(pi * x.x)};
      });
  TransportBC bc;
  auto c = interpolate([](const Point2 &x) { return x.x < 0.5 ? 1.0 : 0.0; }, m, d);
  const double m0 = integrate(m, d, c);
  for (int step = 0; step < 5; ++step)
  {
    TransportInputs in;
    in.mesh = &m;
    in.dofs = &d;
    in.bc = &bc;
    in.flux = &flux;
    in.c_n = c;
    in.dt = 0.02;
    const auto s = solve_transport(in, tight());
    c = s.c;
    CHECK(std::abs(integrate(m, d, c) - m0) <= 1e-10 * m0);
  }
}

TEST_CASE("column advection: cell averages follow the upwind-plus-penalty flux balance")
{
  const int n = 20;
  const double u = 1.0, dt = 0.5 / n;
  Column col(n, u);
  std::vector<double> c = col.c0;
  for (int step = 0; step < 10; ++step)
  {
    const auto in = col.inputs(c, dt);
    const auto s = solve_transport(in, tight());
    // Per-cell balance: h (mean^{n+1} - mean^n) / dt = -(F_e - F_w), F = u C_upwind.
    for (int a = 0; a < n; ++a)
    {
      const int id = col.mesh.active_cells()[static_cast<std::size_t>(a)];
      const auto &box = col.mesh.cell(id).bbox;
      double net = 0.0;
      for (int fi : col.mesh.cell_faces(a))
      {
        const auto &f = col.mesh.faces()[static_cast<std::size_t>(fi)];
        const double sgn = f.owner == id ? 1.0 : -1.0;
        const auto fp = face_points(col.mesh, f);
        for (std::size_t q = 0; q < 3; ++q)
        {
          const double un = col.flux.un[static_cast<std::size_t>(fi)][q];
          double cu;
          if (f.neighbor < 0)
          {
            cu = un < 0.0 ? (f.owner_side == Side::West ? 1.0 : 0.0)
                          : eval(col.mesh, col.dofs, s.c, a, fp.ref_owner[q]);
          }
          else
          {
            const int ao = col.mesh.active_index(f.owner), an = col.mesh.active_index(f.neighbor);
            const double cp = eval(col.mesh, col.dofs, s.c, ao, fp.ref_owner[q]);
            const double cm = eval(col.mesh, col.dofs, s.c, an, fp.ref_neighbor[q]);
            cu = un >= 0.0 ? cp : cm;
            // Interior penalty acts as an extra numerical flux.
            net += sgn * TransportParams{}.penalty / f.length * (cp - cm) * fp.jxw[q];
          }
          net += sgn * un * cu * fp.jxw[q];
        }
      }
      const double dm = (cell_mean(col.mesh, col.dofs, s.c, a) -
                         cell_mean(col.mesh, col.dofs, c, a)) *
                        box.area() / dt;
      CHECK(std::abs(dm + net) < 1e-10);
    }
    c = s.c;
  }
  // Unstabilized Q1 enrichment overshoots slightly; the bound is a regression value.
  const auto [lo, hi] = range(col.mesh, col.dofs, c);
  CHECK(lo > -1e-8);
  CHECK(hi < 1.01);

  // With first-order linear viscosity the front stays within [0, 1].
  std::vector<double> mu(static_cast<std::size_t>(n), 0.5 * u * col.mesh.cell(col.mesh.active_cells()[0]).bbox.diameter());
  c = col.c0;
  for (int step = 0; step < 10; ++step)
  {
    auto in = col.inputs(c, dt);
    in.mu_stab = mu;
    c = solve_transport(in, tight()).c;
  }
  std::vector<double> means;
  for (int a = 0; a < n; ++a)
  {
    means.push_back(cell_mean(col.mesh, col.dofs, c, a));
  }
  CHECK(std::is_sorted(means.rbegin(), means.rend()));
  CHECK(means.front() <= 1.0 + 1e-10);
  CHECK(means.back() >= -1e-10);
}

TEST_CASE("input validation")
{
  Column col(4, 1.0);
  auto in = col.inputs(col.c0, 0.1);
  std::vector<double> bad(3, 0.0);
  in.mu_stab = bad;
  CHECK_THROWS_AS(assemble_transport(in), std::invalid_argument);
  in = col.inputs(col.c0, 0.1);
  const auto other = QuadMesh::uniform(unit, 4, 1);
  const auto wrong = flux_from_velocity(other, [](const Point2 &) { return Vec2{}; });
  in.flux = &wrong;
  CHECK_THROWS_AS(assemble_transport(in), std::invalid_argument);
}
