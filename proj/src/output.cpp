// SPDX-License-Identifier: Apache-2.0

#include "egmd/output.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "egmd/quadrature.hpp"

namespace egmd
{

namespace
{

struct LineCrossings
{
  double tip, lead, trail;
};

// Position where the samples cross `level` between k and k + 1.
double crossing(const std::vector<double> &x, const std::vector<double> &v, std::size_t k,
                double level)
{
  const double dv = v[k + 1] - v[k];
  if (dv == 0.0)
  {
    return x[k];
  }
  const double s = std::clamp((level - v[k]) / dv, 0.0, 1.0);
  return x[k] + s * (x[k + 1] - x[k]);
}

// Last position from the right with v >= level, or x.front() if never reached.
double last_above(const std::vector<double> &x, const std::vector<double> &v, double level)
{
  for (std::size_t k = v.size(); k-- > 0;)
  {
    if (v[k] >= level)
    {
      return k + 1 == v.size() ? x[k] : crossing(x, v, k, level);
    }
  }
  return x.front();
}

// First drop below level from the left.
double first_below(const std::vector<double> &x, const std::vector<double> &v, double level)
{
  for (std::size_t k = 0; k < v.size(); ++k)
  {
    if (v[k] < level)
    {
      return k == 0 ? x[0] : crossing(x, v, k - 1, level);
    }
  }
  return x.back();
}

std::string fmt(double v)
{
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.12g", v);
  return buf.data();
}

}  // namespace

FingerDiagnostics finger_diagnostics(const QuadMesh &mesh, const DofMap &dofs,
                                     std::span<const double> c)
{
  const Domain &d = mesh.domain();
  const int level = mesh.max_active_level();
  const int rows = mesh.root_ny() << level;
  const int cols = mesh.root_nx() << level;
  const std::size_t n = static_cast<std::size_t>(4 * cols + 1);

  std::vector<double> xs(n);
  for (std::size_t k = 0; k < n; ++k)
  {
    xs[k] = d.x0 + d.width() * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  xs.back() = d.x1;

  std::vector<LineCrossings> lines(static_cast<std::size_t>(rows));
  std::vector<double> vals(n);
  for (int j = 0; j < rows; ++j)
  {
    const double y = d.y0 + d.height() * (j + 0.5) / rows;
    for (std::size_t k = 0; k < n; ++k)
    {
      vals[k] = eval_at(mesh, dofs, c, {xs[k], y});
    }
    lines[static_cast<std::size_t>(j)] = {last_above(xs, vals, 0.5), last_above(xs, vals, 0.1),
                                          first_below(xs, vals, 0.9)};
  }

  FingerDiagnostics out;
  out.x_tip = out.x_lead = -std::numeric_limits<double>::infinity();
  out.x_trail = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto &l : lines)
  {
    out.x_tip = std::max(out.x_tip, l.tip);
    out.x_lead = std::max(out.x_lead, l.lead);
    out.x_trail = std::min(out.x_trail, l.trail);
    sum += l.tip;
  }
  out.mixing_length = std::max(0.0, out.x_lead - out.x_trail);
  const double mean = sum / rows;
  double var = 0.0;
  for (const auto &l : lines)
  {
    var += (l.tip - mean) * (l.tip - mean);
  }
  out.tip_variance = var / rows;
  return out;
}

ValueRange value_range(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> c)
{
  ValueRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  const auto &q = CellQuadrature::get();
  static constexpr std::array<Point2, 4> corners = {
      Point2{0.0, 0.0}, Point2{1.0, 0.0}, Point2{0.0, 1.0}, Point2{1.0, 1.0}};
  for (int t = 0; t < static_cast<int>(mesh.num_active()); ++t)
  {
    auto visit = [&](const Point2 &ref)
    {
      const double v = eval(mesh, dofs, c, t, ref);
      r.min = std::min(r.min, v);
      r.max = std::max(r.max, v);
    };
    for (const auto &p : q.points)
    {
      visit(p);
    }
    for (const auto &p : corners)
    {
      visit(p);
    }
  }
  return r;
}

double l2_distance(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> c,
                   const std::function<double(const Point2 &)> &f)
{
  const auto &q = CellQuadrature::get();
  double s = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.num_active()); ++t)
  {
    const BBox &box = mesh.cell(mesh.active_cells()[static_cast<std::size_t>(t)]).bbox;
    for (int i = 0; i < CellQuadrature::n; ++i)
    {
      const auto &ref = q.points[static_cast<std::size_t>(i)];
      const double e = eval(mesh, dofs, c, t, ref) - f(box.to_physical(ref));
      s += q.weights[static_cast<std::size_t>(i)] * box.area() * e * e;
    }
  }
  return std::sqrt(s);
}

void write_vtk(const std::string &path, const QuadMesh &mesh, const DofMap &dofs,
               const VtkFields &fields)
{
  const auto cells = mesh.num_active();
  const auto expect_cells = [&](std::span<const double> v, const char *what)
  {
    if (!v.empty() && v.size() != cells)
    {
      throw std::invalid_argument(std::string("write_vtk: ") + what + " size mismatch");
    }
  };
  if (fields.concentration.size() != static_cast<std::size_t>(dofs.total()) ||
      (!fields.pressure.empty() && fields.pressure.size() != fields.concentration.size()))
  {
    throw std::invalid_argument("write_vtk: field does not match the dof map");
  }
  expect_cells(fields.mu_stab, "mu_stab");
  expect_cells(fields.indicator, "indicator");
  expect_cells(fields.permeability, "permeability");

  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("write_vtk: cannot open " + path);
  }
  const int np = dofs.n_cg();
  out << "# vtk DataFile Version 3.0\negmd\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << np << " double\n";
  for (int i = 0; i < np; ++i)
  {
    out << fmt(dofs.vertex(i).x) << ' ' << fmt(dofs.vertex(i).y) << " 0\n";
  }
  out << "CELLS " << cells << ' ' << 5 * cells << '\n';
  for (std::size_t t = 0; t < cells; ++t)
  {
    const auto &v = dofs.cell_cg(static_cast<int>(t));
    // SW, SE, NW, NE -> counter-clockwise
    out << "4 " << v[0] << ' ' << v[1] << ' ' << v[3] << ' ' << v[2] << '\n';
  }
  out << "CELL_TYPES " << cells << '\n';
  for (std::size_t t = 0; t < cells; ++t)
  {
    out << "9\n";
  }

  out << "CELL_DATA " << cells << '\n';
  auto cell_scalar = [&](const char *name, auto value)
  {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t t = 0; t < cells; ++t)
    {
      out << fmt(value(t)) << '\n';
    }
  };
  cell_scalar("C_constant", [&](std::size_t t)
              { return fields.concentration[static_cast<std::size_t>(dofs.const_dof(static_cast<int>(t)))]; });
  if (fields.cell_means)
  {
    cell_scalar("C_mean", [&](std::size_t t)
                { return cell_mean(mesh, dofs, fields.concentration, static_cast<int>(t)); });
  }
  const auto optional = [&](const char *name, std::span<const double> v)
  {
    cell_scalar(name, [&](std::size_t t) { return v.empty() ? 0.0 : v[t]; });
  };
  optional("mu_stab", fields.mu_stab);
  optional("ER", fields.indicator);
  cell_scalar("level", [&](std::size_t t)
              { return static_cast<double>(mesh.cell(mesh.active_cells()[t]).level); });
  optional("K", fields.permeability);

  out << "POINT_DATA " << np << '\n';
  auto point_scalar = [&](const char *name, std::span<const double> v)
  {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < np; ++i)
    {
      out << fmt(v.empty() ? 0.0 : v[static_cast<std::size_t>(i)]) << '\n';
    }
  };
  point_scalar("P_cg", fields.pressure);
  point_scalar("C_cg", fields.concentration);
  if (!out)
  {
    throw std::runtime_error("write_vtk: write failed for " + path);
  }
}

void write_csv(const std::string &path, std::span<const StepDiagnostics> rows)
{
  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("write_csv: cannot open " + path);
  }
  out << kCsvHeader << '\n';
  for (const auto &r : rows)
  {
    out << r.step << ',' << fmt(r.time) << ',' << r.cells << ',' << r.dofs << ',' << fmt(r.mass)
        << ',' << fmt(r.cmin) << ',' << fmt(r.cmax) << ',' << fmt(r.xtip) << ','
        << fmt(r.tip_velocity) << ',' << fmt(r.mixing_length) << ',' << r.gmres_flow << ','
        << r.gmres_transport << '\n';
  }
  if (!out)
  {
    throw std::runtime_error("write_csv: write failed for " + path);
  }
}

}  // namespace egmd
