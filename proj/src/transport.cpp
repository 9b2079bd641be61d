// SPDX-License-Identifier: Apache-2.0

#include "egmd/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "egmd/parallel.hpp"
#include "egmd/quadrature.hpp"

namespace egmd
{

namespace
{

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

double upwind_value(double c_plus, double c_minus, double un_plus)
{
  return un_plus < 0.0 ? c_plus : c_minus;
}

SourceSplit source_split(double q) { return {std::max(0.0, q), std::min(0.0, q)}; }

void TransportParams::validate() const
{
  if (!(porosity > 0.0 && porosity <= 1.0))
  {
    throw std::invalid_argument("transport: porosity must lie in (0, 1]");
  }
  if (!(rho0 > 0.0))
  {
    throw std::invalid_argument("transport: rho0 must be positive");
  }
  if (!(penalty > 0.0))
  {
    throw std::invalid_argument("transport: penalty must be positive");
  }
  if (stab_penalty < 0.0)
  {
    throw std::invalid_argument("transport: stabilization penalty must be non-negative");
  }
  bdf_coefficients(bdf_order);
}

TransportBC &TransportBC::set_inflow(Side s, double c_in)
{
  inflow[static_cast<std::size_t>(s)] = c_in;
  return *this;
}

void TransportInputs::validate() const
{
  if (!mesh || !dofs || !bc || !flux)
  {
    throw std::invalid_argument("transport: mesh, dof map, boundary data and flux are required");
  }
  params.validate();
  const auto n_cells = mesh->num_active();
  const auto n_dofs = static_cast<std::size_t>(dofs->total());
  if (dofs->mesh_generation() != mesh->generation())
  {
    throw std::invalid_argument("transport: dof map does not belong to the mesh");
  }
  if (flux->mesh_generation != mesh->generation() || flux->un.size() != mesh->faces().size() ||
      flux->cell_velocity.size() != n_cells)
  {
    throw std::invalid_argument("transport: missing flux for the current mesh");
  }
  if ((!dispersion.empty() && dispersion.size() != n_cells) ||
      (!mu_stab.empty() && mu_stab.size() != n_cells))
  {
    throw std::invalid_argument("transport: per-cell coefficient size mismatch");
  }
  if (sources && !sources->q.empty() && sources->q.size() != n_cells)
  {
    throw std::invalid_argument("transport: source field size mismatch");
  }
  if (c_n.size() != n_dofs || (bdf_order == 2 && c_nm1.size() != n_dofs))
  {
    throw std::invalid_argument("transport: history vectors do not match the dof map");
  }
  if (!(dt > 0.0))
  {
    throw std::invalid_argument("transport: dt must be positive");
  }
  bdf_coefficients(bdf_order);
}

std::vector<LocalContribution> transport_contributions(const TransportInputs &in, Exec exec)
{
  in.validate();
  const QuadMesh &mesh = *in.mesh;
  const DofMap &dofs = *in.dofs;
  const TransportParams &P = in.params;
  const FaceFlux &flux = *in.flux;
  const auto bdf = bdf_coefficients(in.bdf_order);
  const double rho0 = P.rho0;
  const double prho = P.porosity * rho0;
  const auto &quad = CellQuadrature::get();
  const std::size_t n_cells = mesh.num_active();
  const bool has_sources = in.sources && !in.sources->q.empty();

  auto disp = [&](std::size_t a) { return in.dispersion.empty() ? Mat2{} : in.dispersion[a]; };
  auto mu = [&](std::size_t a) { return in.mu_stab.empty() ? 0.0 : in.mu_stab[a]; };

  auto cell_local = [&](std::size_t ai)
  {
    const int a = static_cast<int>(ai);
    LocalContribution c = cell_contribution(dofs, a);
    const BBox &box = active_box(mesh, a);
    const auto d = dofs.cell_dofs(a);
    // Diffusion and dissipation share the gradient form; dissipation is scaled like D.
    const Mat2 K = prho * (disp(ai) + Mat2::identity(mu(ai)));
    const auto src = has_sources ? source_split(in.sources->q[ai]) : SourceSplit{};
    const double inject = has_sources ? in.sources->c_q * src.plus : 0.0;
    for (std::size_t p = 0; p < 9; ++p)
    {
      const auto b = local_basis(box, quad.points[p]);
      const double jxw = quad.weights[p] * box.area();
      const Vec2 &u = flux.cell_velocity[ai][p];
      double hist = 0.0;
      for (std::size_t i = 0; i < 5; ++i)
      {
        const auto di = static_cast<std::size_t>(d[i]);
        hist += b.value[i] * (bdf.a1 * in.c_n[di] + (bdf.a2 != 0.0 ? bdf.a2 * in.c_nm1[di] : 0.0));
      }
      for (int i = 0; i < 5; ++i)
      {
        const auto iu = static_cast<std::size_t>(i);
        c.rhs[iu] += (inject - prho * hist / in.dt) * b.value[iu] * jxw;
        const double u_grad_v = dot(u, b.grad[iu]);
        for (int j = 0; j < 5; ++j)
        {
          const auto ju = static_cast<std::size_t>(j);
          c.a(i, j) += (prho * bdf.a0 / in.dt * b.value[ju] * b.value[iu] +
                        dot(K * b.grad[ju], b.grad[iu]) - rho0 * b.value[ju] * u_grad_v -
                        src.minus * b.value[ju] * b.value[iu]) *
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
    const auto aou = static_cast<std::size_t>(ao);
    const BBox &ob = active_box(mesh, ao);
    const Vec2 &n = f.normal;

    if (f.neighbor >= 0)
    {
      const int an = mesh.active_index(f.neighbor);
      const auto anu = static_cast<std::size_t>(an);
      const BBox &nb = active_box(mesh, an);
      const Mat2 Ko = prho * (disp(aou) + Mat2::identity(mu(aou)));
      const Mat2 Kn = prho * (disp(anu) + Mat2::identity(mu(anu)));
      const double pen = rho0 * P.penalty / f.length +
                         prho * P.stab_penalty / f.length * 0.5 * (mu(aou) + mu(anu));
      for (std::size_t q = 0; q < 3; ++q)
      {
        const auto bo = local_basis(ob, fp.ref_owner[q]);
        const auto bn = local_basis(nb, fp.ref_neighbor[q]);
        const double un = flux.un[fi][q];
        std::array<double, 10> jump{}, avg{}, up{};
        for (std::size_t i = 0; i < 5; ++i)
        {
          jump[i] = bo.value[i];
          jump[5 + i] = -bn.value[i];
          avg[i] = 0.5 * dot(Ko * bo.grad[i], n);
          avg[5 + i] = 0.5 * dot(Kn * bn.grad[i], n);
          // The owner is upwind when the flow leaves it.
          up[i] = upwind_value(0.0, bo.value[i], un);
          up[5 + i] = upwind_value(bn.value[i], 0.0, un);
        }
        for (int i = 0; i < 10; ++i)
        {
          for (int j = 0; j < 10; ++j)
          {
            const auto iu = static_cast<std::size_t>(i), ju = static_cast<std::size_t>(j);
            c.a(i, j) += fp.jxw[q] * (-avg[ju] * jump[iu] + rho0 * un * up[ju] * jump[iu] +
                                      pen * jump[ju] * jump[iu]);
          }
        }
      }
      return c;
    }

    const auto &c_in = in.bc->inflow[static_cast<std::size_t>(f.owner_side)];
    for (std::size_t q = 0; q < 3; ++q)
    {
      const auto bo = local_basis(ob, fp.ref_owner[q]);
      const double un = flux.un[fi][q];
      const double s = rho0 * un * fp.jxw[q];
      if (un < 0.0 && c_in)
      {
        for (std::size_t i = 0; i < 5; ++i)
        {
          c.rhs[i] -= *c_in * s * bo.value[i];
        }
        continue;
      }
      for (int i = 0; i < 5; ++i)
      {
        for (int j = 0; j < 5; ++j)
        {
          c.a(i, j) += s * bo.value[static_cast<std::size_t>(j)] * bo.value[static_cast<std::size_t>(i)];
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

LinearSystem assemble_transport(const TransportInputs &in, Exec exec)
{
  const auto locals = transport_contributions(in, exec);
  return assembler_for(*in.mesh, *in.dofs)->assemble(locals);
}

TransportSolve solve_transport(const TransportInputs &in, const GmresOptions &options)
{
  const auto system = assemble_transport(in);
  TransportSolve out;
  out.c.assign(in.c_n.begin(), in.c_n.end());
  out.gmres = solve_system(system, *assembler_for(*in.mesh, *in.dofs), *in.mesh, *in.dofs,
                           out.c, options);
  return out;
}

}  // namespace egmd
