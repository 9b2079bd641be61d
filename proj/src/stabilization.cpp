// SPDX-License-Identifier: Apache-2.0

#include "egmd/stabilization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "egmd/parallel.hpp"
#include "egmd/quadrature.hpp"

namespace egmd
{

namespace
{

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

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

void EntropyConfig::validate() const
{
  if (kind == EntropyKind::Power)
  {
    const double half = b / 2.0;
    if (!(b > 0.0) || half != std::floor(half))
    {
      throw std::invalid_argument("entropy: power exponent b must be a positive even integer");
    }
  }
  if (kind == EntropyKind::Log && !(epsilon > 0.0))
  {
    throw std::invalid_argument("entropy: log epsilon must be positive");
  }
  if (lambda_lin < 0.0 || lambda_ent < 0.0)
  {
    throw std::invalid_argument("entropy: lambda coefficients must be non-negative");
  }
}

EntropyValue entropy_eval(const EntropyConfig &config, double c)
{
  switch (config.kind)
  {
    case EntropyKind::Power:
    {
      const double a = std::abs(c);
      return {std::pow(a, config.b) / config.b, sign(c) * std::pow(a, config.b - 1.0)};
    }
    case EntropyKind::Log:
    {
      const double g = c * (1.0 - c);
      const double d = std::abs(g) + config.epsilon;
      return {-std::log(d), -sign(g) * (1.0 - 2.0 * c) / d};
    }
    case EntropyKind::Kruzkov:
      return {std::abs(c - config.r), sign(c - config.r)};
  }
  return {};
}

void StabilizationInputs::validate() const
{
  if (!mesh || !dofs || !flux)
  {
    throw std::invalid_argument("stabilization: mesh, dof map and flux are required");
  }
  config.validate();
  const auto n = static_cast<std::size_t>(dofs->total());
  if (c_n.size() != n || (!c_nm1.empty() && c_nm1.size() != n))
  {
    throw std::invalid_argument("stabilization: state vectors do not match the dof map");
  }
  if (flux->mesh_generation != mesh->generation())
  {
    throw std::invalid_argument("stabilization: flux from another mesh");
  }
  if (sources && !sources->q.empty() && sources->q.size() != mesh->num_active())
  {
    throw std::invalid_argument("stabilization: source field size mismatch");
  }
  if (!(dt > 0.0))
  {
    throw std::invalid_argument("stabilization: dt must be positive");
  }
  bdf_coefficients(bdf_order);
}

bool StabilizationInputs::lagged() const
{
  return config.mode == Extrapolation::TimeLagged || c_nm1.empty();
}

Field extrapolated_state(const StabilizationInputs &in)
{
  Field s(in.c_n.begin(), in.c_n.end());
  if (!in.lagged())
  {
    for (std::size_t i = 0; i < s.size(); ++i)
    {
      s[i] = 2.0 * in.c_n[i] - in.c_nm1[i];
    }
  }
  return s;
}

std::vector<double> cell_residual(const StabilizationInputs &in, Exec exec)
{
  in.validate();
  const QuadMesh &mesh = *in.mesh;
  const DofMap &dofs = *in.dofs;
  const Field cs = extrapolated_state(in);
  const auto &quad = CellQuadrature::get();
  const bool lagged = in.lagged();
  const bool has_history = !in.c_nm1.empty();
  const auto bdf = bdf_coefficients(lagged ? 1 : in.bdf_order);
  const bool has_sources = in.sources && !in.sources->q.empty();

  auto cell = [&](std::size_t ai)
  {
    const int a = static_cast<int>(ai);
    const auto src = has_sources ? source_split(in.sources->q[ai]) : SourceSplit{};
    double r_max = 0.0;
    for (std::size_t p = 0; p < 9; ++p)
    {
      const auto &ref = quad.points[p];
      const double c = eval(mesh, dofs, cs, a, ref);
      const auto E = entropy_eval(in.config, c);
      double dEdt = 0.0;
      if (lagged)
      {
        // BDF1 over (C^n, C^{n-1}); C* = C^n.
        if (has_history)
        {
          dEdt = (E.e - entropy_eval(in.config, eval(mesh, dofs, in.c_nm1, a, ref)).e) / in.dt;
        }
      }
      else
      {
        const double en = entropy_eval(in.config, eval(mesh, dofs, in.c_n, a, ref)).e;
        const double enm1 = entropy_eval(in.config, eval(mesh, dofs, in.c_nm1, a, ref)).e;
        dEdt = (bdf.a0 * E.e + bdf.a1 * en + bdf.a2 * enm1) / in.dt;
      }
      const Vec2 grad = eval_grad(mesh, dofs, cs, a, ref);
      const Vec2 &u = in.flux->cell_velocity[ai][p];
      const double qt = has_sources ? in.sources->c_q * src.plus + c * src.minus : 0.0;
      const double r = in.porosity * dEdt + E.de * dot(u, grad) - E.de * qt / in.rho0;
      r_max = std::max(r_max, std::abs(r));
    }
    return r_max;
  };
  return run_map(exec, mesh.num_active(), cell);
}

double face_residual_value(double avg_un, double e_jump, double h_e)
{
  return std::abs(avg_un) * std::abs(e_jump) / h_e;
}

std::vector<double> face_residual(const StabilizationInputs &in, Exec exec)
{
  in.validate();
  const QuadMesh &mesh = *in.mesh;
  const DofMap &dofs = *in.dofs;
  const Field cs = extrapolated_state(in);
  const auto &faces = mesh.faces();

  auto face = [&](std::size_t fi)
  {
    const auto &f = faces[fi];
    if (f.neighbor < 0)
    {
      return 0.0;
    }
    const auto fp = face_points(mesh, f);
    const int ao = mesh.active_index(f.owner), an = mesh.active_index(f.neighbor);
    double j = 0.0;
    for (std::size_t q = 0; q < 3; ++q)
    {
      const double ep = entropy_eval(in.config, eval(mesh, dofs, cs, ao, fp.ref_owner[q])).e;
      const double em = entropy_eval(in.config, eval(mesh, dofs, cs, an, fp.ref_neighbor[q])).e;
      j = std::max(j, face_residual_value(in.flux->avg_un[fi][q], ep - em, f.length));
    }
    return j;
  };
  return run_map(exec, faces.size(), face);
}

EntropyNormalization entropy_normalization(const StabilizationInputs &in)
{
  const QuadMesh &mesh = *in.mesh;
  const DofMap &dofs = *in.dofs;
  const Field cs = extrapolated_state(in);
  const auto &quad = CellQuadrature::get();
  const std::size_t n = mesh.num_active();
  std::vector<std::array<double, 9>> e(n);
  double integral = 0.0, area = 0.0;
  for (std::size_t a = 0; a < n; ++a)
  {
    const double A = active_box(mesh, static_cast<int>(a)).area();
    for (std::size_t p = 0; p < 9; ++p)
    {
      e[a][p] = entropy_eval(in.config, eval(mesh, dofs, cs, static_cast<int>(a), quad.points[p])).e;
      integral += quad.weights[p] * A * e[a][p];
    }
    area += A;
  }
  const double mean = integral / area;
  EntropyNormalization out;
  for (const auto &cell : e)
  {
    for (double v : cell)
    {
      out.deviation = std::max(out.deviation, std::abs(v - mean));
      out.magnitude = std::max(out.magnitude, std::abs(v));
    }
  }
  return out;
}

std::vector<bool> ViscosityField::linear_selected() const
{
  std::vector<bool> s(mu_stab.size(), false);
  for (std::size_t a = 0; a < s.size(); ++a)
  {
    s[a] = mu_lin[a] > 0.0 && mu_lin[a] <= mu_ent[a];
  }
  return s;
}

ViscosityField viscosity(const EntropyConfig &config, const QuadMesh &mesh, const FaceFlux &flux,
                         std::span<const double> cell_res, std::span<const double> face_res,
                         const EntropyNormalization &entropy_norm)
{
  const std::size_t n = mesh.num_active();
  if (cell_res.size() != n || face_res.size() != mesh.faces().size() ||
      flux.cell_velocity.size() != n)
  {
    throw std::invalid_argument("viscosity: residual sizes do not match the mesh");
  }
  ViscosityField v;
  v.normalization = entropy_norm.deviation;
  v.indicator.assign(cell_res.begin(), cell_res.end());
  const auto &faces = mesh.faces();
  for (std::size_t fi = 0; fi < faces.size(); ++fi)
  {
    const auto &f = faces[fi];
    if (f.neighbor < 0)
    {
      continue;
    }
    auto &o = v.indicator[static_cast<std::size_t>(mesh.active_index(f.owner))];
    auto &m = v.indicator[static_cast<std::size_t>(mesh.active_index(f.neighbor))];
    o = std::max(o, face_res[fi]);
    m = std::max(m, face_res[fi]);
  }

  // A (numerically) constant entropy has R = 0; skip the 0/0.
  const bool degenerate =
      entropy_norm.deviation < 1e-14 * std::max(entropy_norm.magnitude, 1.0);
  v.mu_lin.resize(n);
  v.mu_ent.resize(n);
  v.mu_stab.resize(n);
  for (std::size_t a = 0; a < n; ++a)
  {
    const double h = active_box(mesh, static_cast<int>(a)).diameter();
    double umax = 0.0;
    for (const auto &u : flux.cell_velocity[a])
    {
      umax = std::max(umax, norm(u));
    }
    v.mu_lin[a] = config.lambda_lin * h * umax;
    v.mu_ent[a] =
        degenerate ? 0.0 : config.lambda_ent * h * h * v.indicator[a] / entropy_norm.deviation;
    v.mu_stab[a] = std::min(v.mu_lin[a], v.mu_ent[a]);
  }
  return v;
}

ViscosityField compute_stabilization(const StabilizationInputs &in, Exec exec)
{
  const auto r = cell_residual(in, exec);
  const auto j = face_residual(in, exec);
  return viscosity(in.config, *in.mesh, *in.flux, r, j, entropy_normalization(in));
}

}  // namespace egmd
