// SPDX-License-Identifier: Apache-2.0

#include "egmd/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "egmd/parallel.hpp"
#include "egmd/quadrature.hpp"

namespace egmd
{

namespace
{

double value_at(std::span<const double> c, const std::array<int, 5> &d, const LocalBasis &b)
{
  double v = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
  {
    v += b.value[i] * c[static_cast<std::size_t>(d[i])];
  }
  return v;
}

Vec2 grad_at(std::span<const double> c, const std::array<int, 5> &d, const LocalBasis &b)
{
  Vec2 g;
  for (std::size_t i = 0; i < 4; ++i)
  {
    g += c[static_cast<std::size_t>(d[i])] * b.grad[i];
  }
  return g;
}

const BBox &active_box(const QuadMesh &mesh, int a)
{
  return mesh.cell(mesh.active_cells()[static_cast<std::size_t>(a)]).bbox;
}

template <class Fn>
auto run_map(Exec exec, std::size_t n, Fn &&fn)
{
  switch (exec)
  {
    case Exec::Serial:
      return parallel::map_serial(n, fn);
    case Exec::OpenMP:
      return parallel::map_omp(n, fn);
    case Exec::Auto:
      break;
  }
  return parallel::map(n, fn);
}

}  // namespace

BdfCoefficients bdf_coefficients(int m)
{
  switch (m)
  {
    case 1:
      return {1.0, -1.0, 0.0};
    case 2:
      return {1.5, -2.0, 0.5};
    default:
      throw std::invalid_argument("BDF order must be 1 or 2, got " + std::to_string(m));
  }
}

double bdf_apply(int m, double dt, double u_np1, double u_n, double u_nm1)
{
  if (!(dt > 0.0))
  {
    throw std::invalid_argument("bdf_apply: dt must be positive");
  }
  const auto c = bdf_coefficients(m);
  return (c.a0 * u_np1 + c.a1 * u_n + c.a2 * u_nm1) / dt;
}

FaceWeights weights(double kappa_plus, double kappa_minus)
{
  if (!(kappa_plus > 0.0) || !(kappa_minus > 0.0))
  {
    throw std::invalid_argument("weights: directional permeability must be positive");
  }
  const double s = kappa_plus + kappa_minus;
  return {kappa_minus / s, 2.0 * kappa_plus * kappa_minus / s};
}

FaceWeights weights(const Mat2 &kappa_plus, const Mat2 &kappa_minus, const Vec2 &normal)
{
  return weights(directional(kappa_plus, normal), directional(kappa_minus, normal));
}

void FlowParams::validate() const
{
  if (!(porosity > 0.0 && porosity <= 1.0))
  {
    throw std::invalid_argument("flow: porosity must lie in (0, 1]");
  }
  if (!(rho0 > 0.0))
  {
    throw std::invalid_argument("flow: rho0 must be positive");
  }
  if (compressibility < 0.0)
  {
    throw std::invalid_argument("flow: compressibility must be non-negative");
  }
  if (!(penalty > 0.0))
  {
    throw std::invalid_argument("flow: penalty must be positive");
  }
  if (theta != -1.0 && theta != 0.0 && theta != 1.0)
  {
    throw std::invalid_argument("flow: theta must be -1, 0 or 1");
  }
  bdf_coefficients(bdf_order);
}

BoundaryData BoundaryData::dirichlet(double v)
{
  return {BCKind::Dirichlet, [v](const Point2 &, double) { return v; }};
}

BoundaryData BoundaryData::neumann(double v)
{
  return {BCKind::Neumann, [v](const Point2 &, double) { return v; }};
}

FlowBC &FlowBC::set(Side s, BoundaryData d)
{
  side[static_cast<std::size_t>(s)] = std::move(d);
  return *this;
}

const BoundaryData &FlowBC::on(Side s) const
{
  const auto &d = side[static_cast<std::size_t>(s)];
  if (!d || !d->value)
  {
    throw std::invalid_argument("flow: boundary face without an assigned condition");
  }
  return *d;
}

void PressureInputs::validate() const
{
  if (!mesh || !dofs || !bc)
  {
    throw std::invalid_argument("pressure: mesh, dof map and boundary conditions are required");
  }
  params.validate();
  const auto n_cells = mesh->num_active();
  const auto n_dofs = static_cast<std::size_t>(dofs->total());
  if (dofs->mesh_generation() != mesh->generation())
  {
    throw std::invalid_argument("pressure: dof map does not belong to the mesh");
  }
  if (kappa.size() != n_cells)
  {
    throw std::invalid_argument("pressure: permeability field size mismatch");
  }
  if (p_n.size() != n_dofs || (bdf_order == 2 && p_nm1.size() != n_dofs))
  {
    throw std::invalid_argument("pressure: history vectors do not match the dof map");
  }
  if (!source.empty() && source.size() != n_cells)
  {
    throw std::invalid_argument("pressure: source field size mismatch");
  }
  if (!(dt > 0.0))
  {
    throw std::invalid_argument("pressure: dt must be positive");
  }
  bdf_coefficients(bdf_order);
  for (const auto &f : mesh->faces())
  {
    if (f.kind == QuadMesh::FaceKind::Boundary)
    {
      bc->on(f.owner_side);
    }
  }
}

std::vector<LocalContribution> pressure_contributions(const PressureInputs &in, Exec exec)
{
  in.validate();
  const QuadMesh &mesh = *in.mesh;
  const DofMap &dofs = *in.dofs;
  const FlowParams &P = in.params;
  const auto bdf = bdf_coefficients(in.bdf_order);
  const double rho0 = P.rho0;
  const double mass = rho0 * P.porosity * P.compressibility / in.dt;
  const auto &quad = CellQuadrature::get();
  const std::size_t n_cells = mesh.num_active();

  auto cell_local = [&](std::size_t ai)
  {
    const int a = static_cast<int>(ai);
    LocalContribution c = cell_contribution(dofs, a);
    const BBox &box = active_box(mesh, a);
    const Mat2 &k = in.kappa[ai];
    const double q = in.source.empty() ? 0.0 : in.source[ai];
    const auto d = dofs.cell_dofs(a);
    for (int p = 0; p < CellQuadrature::n; ++p)
    {
      const auto b = local_basis(box, quad.points[static_cast<std::size_t>(p)]);
      const double jxw = quad.weights[static_cast<std::size_t>(p)] * box.area();
      double hist = 0.0;
      if (mass != 0.0)
      {
        hist = bdf.a1 * value_at(in.p_n, d, b);
        if (bdf.a2 != 0.0)
        {
          hist += bdf.a2 * value_at(in.p_nm1, d, b);
        }
      }
      for (int i = 0; i < 5; ++i)
      {
        const auto iu = static_cast<std::size_t>(i);
        c.rhs[iu] += (q - mass * hist) * b.value[iu] * jxw;
        for (int j = 0; j < 5; ++j)
        {
          const auto ju = static_cast<std::size_t>(j);
          c.a(i, j) += (mass * bdf.a0 * b.value[ju] * b.value[iu] +
                        rho0 * dot(k * b.grad[ju], b.grad[iu])) *
                       jxw;
        }
      }
    }
    return c;
  };

  const auto &faces = mesh.faces();
  auto face_local = [&](std::size_t fi)
  {
    const auto &f = faces[fi];
    LocalContribution c = face_contribution(mesh, dofs, f);
    const auto fp = face_points(mesh, f);
    const int ao = mesh.active_index(f.owner);
    const BBox &ob = active_box(mesh, ao);
    const Mat2 &ko = in.kappa[static_cast<std::size_t>(ao)];
    const Vec2 &n = f.normal;
    const double pen = P.penalty / f.length;

    if (f.neighbor >= 0)
    {
      const int an = mesh.active_index(f.neighbor);
      const BBox &nb = active_box(mesh, an);
      const Mat2 &kn = in.kappa[static_cast<std::size_t>(an)];
      const auto w = weights(ko, kn, n);
      for (std::size_t q = 0; q < 3; ++q)
      {
        const auto bo = local_basis(ob, fp.ref_owner[q]);
        const auto bn = local_basis(nb, fp.ref_neighbor[q]);
        std::array<double, 10> jump{}, flux{};
        for (std::size_t i = 0; i < 5; ++i)
        {
          jump[i] = bo.value[i];
          jump[5 + i] = -bn.value[i];
          flux[i] = w.beta * dot(ko * bo.grad[i], n);
          flux[5 + i] = (1.0 - w.beta) * dot(kn * bn.grad[i], n);
        }
        const double s = rho0 * fp.jxw[q];
        for (int i = 0; i < 10; ++i)
        {
          for (int j = 0; j < 10; ++j)
          {
            const auto iu = static_cast<std::size_t>(i), ju = static_cast<std::size_t>(j);
            c.a(i, j) += s * (-flux[ju] * jump[iu] + P.theta * jump[ju] * flux[iu] +
                              pen * w.kappa_e * jump[ju] * jump[iu]);
          }
        }
      }
      return c;
    }

    const auto &bd = in.bc->on(f.owner_side);
    for (std::size_t q = 0; q < 3; ++q)
    {
      const auto bo = local_basis(ob, fp.ref_owner[q]);
      const double g = bd.value(fp.x[q], in.time);
      if (bd.kind == BCKind::Neumann)
      {
        for (std::size_t i = 0; i < 5; ++i)
        {
          c.rhs[i] -= g * bo.value[i] * fp.jxw[q];
        }
        continue;
      }
      const double kb = directional(ko, n);
      const double s = rho0 * fp.jxw[q];
      std::array<double, 5> flux{};
      for (std::size_t i = 0; i < 5; ++i)
      {
        flux[i] = dot(ko * bo.grad[i], n);
      }
      for (int i = 0; i < 5; ++i)
      {
        const auto iu = static_cast<std::size_t>(i);
        c.rhs[iu] += s * (P.theta * g * flux[iu] + pen * kb * g * bo.value[iu]);
        for (int j = 0; j < 5; ++j)
        {
          const auto ju = static_cast<std::size_t>(j);
          c.a(i, j) += s * (-flux[ju] * bo.value[iu] + P.theta * bo.value[ju] * flux[iu] +
                            pen * kb * bo.value[ju] * bo.value[iu]);
        }
      }
    }
    return c;
  };

  auto locals = run_map(exec, n_cells, cell_local);
  auto face_locals = run_map(exec, faces.size(), face_local);
  locals.insert(locals.end(), face_locals.begin(), face_locals.end());
  return locals;
}

LinearSystem assemble_pressure(const PressureInputs &in, Exec exec)
{
  const auto locals = pressure_contributions(in, exec);
  return assembler_for(*in.mesh, *in.dofs)->assemble(locals);
}

PressureSolve solve_pressure(const PressureInputs &in, const GmresOptions &options)
{
  const auto system = assemble_pressure(in);
  PressureSolve out;
  out.p.assign(in.p_n.begin(), in.p_n.end());
  out.gmres = solve_system(system, *assembler_for(*in.mesh, *in.dofs), *in.mesh, *in.dofs, out.p,
                           options);
  return out;
}

double FaceFlux::max_abs_un() const
{
  double m = 0.0;
  for (const auto &f : un)
  {
    for (double v : f)
    {
      m = std::max(m, std::abs(v));
    }
  }
  return m;
}

FaceFlux reconstruct_flux(const PressureInputs &in, std::span<const double> p)
{
  in.validate();
  const QuadMesh &mesh = *in.mesh;
  const DofMap &dofs = *in.dofs;
  if (p.size() != static_cast<std::size_t>(dofs.total()))
  {
    throw std::invalid_argument("reconstruct_flux: pressure does not match the dof map");
  }
  const double rho0 = in.params.rho0;
  const auto &quad = CellQuadrature::get();

  FaceFlux out;
  out.mesh_generation = mesh.generation();
  const std::size_t n_cells = mesh.num_active();
  out.cell_velocity.resize(n_cells);
  out.cell_mean_velocity.resize(n_cells);
  for (std::size_t a = 0; a < n_cells; ++a)
  {
    const BBox &box = active_box(mesh, static_cast<int>(a));
    const auto d = dofs.cell_dofs(static_cast<int>(a));
    Vec2 mean;
    for (std::size_t q = 0; q < 9; ++q)
    {
      const auto b = local_basis(box, quad.points[q]);
      out.cell_velocity[a][q] = -(in.kappa[a] * grad_at(p, d, b));
      mean += quad.weights[q] * out.cell_velocity[a][q];
    }
    out.cell_mean_velocity[a] = mean;
  }

  const auto &faces = mesh.faces();
  out.un.resize(faces.size());
  out.avg_un.resize(faces.size());
  out.total.assign(faces.size(), 0.0);
  for (std::size_t fi = 0; fi < faces.size(); ++fi)
  {
    const auto &f = faces[fi];
    const auto fp = face_points(mesh, f);
    const int ao = mesh.active_index(f.owner);
    const BBox &ob = active_box(mesh, ao);
    const Mat2 &ko = in.kappa[static_cast<std::size_t>(ao)];
    const auto dov = dofs.cell_dofs(ao);
    const Vec2 &n = f.normal;
    const double pen = in.params.penalty / f.length;
    for (std::size_t q = 0; q < 3; ++q)
    {
      const auto bo = local_basis(ob, fp.ref_owner[q]);
      const Vec2 go = ko * grad_at(p, dov, bo);
      double un = 0.0;
      if (f.neighbor >= 0)
      {
        const int an = mesh.active_index(f.neighbor);
        const Mat2 &kn = in.kappa[static_cast<std::size_t>(an)];
        const auto dn = dofs.cell_dofs(an);
        const auto bn = local_basis(active_box(mesh, an), fp.ref_neighbor[q]);
        const Vec2 gn = kn * grad_at(p, dn, bn);
        const auto w = weights(ko, kn, n);
        un = -dot(weighted_average(go, gn, w.beta), n) +
             pen * w.kappa_e * (value_at(p, dov, bo) - value_at(p, dn, bn));
        out.avg_un[fi][q] = -0.5 * dot(go + gn, n);
      }
      else
      {
        const auto &bd = in.bc->on(f.owner_side);
        const double g = bd.value(fp.x[q], in.time);
        if (bd.kind == BCKind::Neumann)
        {
          un = g / rho0;
        }
        else
        {
          un = -dot(go, n) + pen * directional(ko, n) * (value_at(p, dov, bo) - g);
        }
        out.avg_un[fi][q] = un;
      }
      out.un[fi][q] = un;
      out.total[fi] += un * fp.jxw[q];
    }
  }
  return out;
}

FaceFlux flux_from_velocity(const QuadMesh &mesh,
                            const std::function<Vec2(const Point2 &)> &velocity)
{
  const auto &quad = CellQuadrature::get();
  FaceFlux out;
  out.mesh_generation = mesh.generation();
  const std::size_t n_cells = mesh.num_active();
  out.cell_velocity.resize(n_cells);
  out.cell_mean_velocity.resize(n_cells);
  for (std::size_t a = 0; a < n_cells; ++a)
  {
    const BBox &box = active_box(mesh, static_cast<int>(a));
    Vec2 mean;
    for (std::size_t q = 0; q < 9; ++q)
    {
      out.cell_velocity[a][q] = velocity(box.to_physical(quad.points[q]));
      mean += quad.weights[q] * out.cell_velocity[a][q];
    }
    out.cell_mean_velocity[a] = mean;
  }
  const auto &faces = mesh.faces();
  out.un.resize(faces.size());
  out.avg_un.resize(faces.size());
  out.total.assign(faces.size(), 0.0);
  for (std::size_t fi = 0; fi < faces.size(); ++fi)
  {
    const auto fp = face_points(mesh, faces[fi]);
    for (std::size_t q = 0; q < 3; ++q)
    {
      const double un = dot(velocity(fp.x[q]), faces[fi].normal);
      out.un[fi][q] = un;
      out.avg_un[fi][q] = un;
      out.total[fi] += un * fp.jxw[q];
    }
  }
  return out;
}

std::vector<double> local_conservation_residual(const PressureInputs &in,
                                                std::span<const double> p_np1,
                                                const FaceFlux &flux)
{
  in.validate();
  const QuadMesh &mesh = *in.mesh;
  const DofMap &dofs = *in.dofs;
  if (flux.mesh_generation != mesh.generation())
  {
    throw std::invalid_argument("local_conservation_residual: flux from another mesh");
  }
  const auto &P = in.params;
  const double mass = P.rho0 * P.porosity * P.compressibility;
  std::vector<double> r(mesh.num_active(), 0.0);
  for (std::size_t a = 0; a < r.size(); ++a)
  {
    const int ai = static_cast<int>(a);
    const double area = active_box(mesh, ai).area();
    double storage = 0.0;
    if (mass != 0.0)
    {
      const double m1 = cell_mean(mesh, dofs, p_np1, ai);
      const double m0 = cell_mean(mesh, dofs, in.p_n, ai);
      const double mm = in.bdf_order == 2 ? cell_mean(mesh, dofs, in.p_nm1, ai) : 0.0;
      storage = mass * area * bdf_apply(in.bdf_order, in.dt, m1, m0, mm);
    }
    double out = 0.0;
    const int id = mesh.active_cells()[a];
    for (int fi : mesh.cell_faces(ai))
    {
      const auto &f = mesh.faces()[static_cast<std::size_t>(fi)];
      out += (f.owner == id ? 1.0 : -1.0) * flux.total[static_cast<std::size_t>(fi)];
    }
    const double q = in.source.empty() ? 0.0 : in.source[a];
    r[a] = storage + P.rho0 * out - q * area;
  }
  return r;
}

double max_abs(std::span<const double> v)
{
  double m = 0.0;
  for (double x : v)
  {
    m = std::max(m, std::abs(x));
  }
  return m;
}

}  // namespace egmd
