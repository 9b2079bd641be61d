// SPDX-License-Identifier: Apache-2.0

#include "egmd/egspace.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace egmd
{

namespace
{

void require_q1(int k)
{
  if (k != 1)
  {
    throw std::invalid_argument("EG space: polynomial degree " + std::to_string(k) +
                                " is not supported (only k = 1)");
  }
}

std::array<Point2, 4> corners(const BBox &b)
{
  return {Point2{b.x0, b.y0}, Point2{b.x1, b.y0}, Point2{b.x0, b.y1}, Point2{b.x1, b.y1}};
}

void check_reference(const Point2 &ref)
{
  constexpr double tol = 1e-12;
  if (ref.x < -tol || ref.x > 1.0 + tol || ref.y < -tol || ref.y > 1.0 + tol)
  {
    throw std::out_of_range("EG evaluation: reference point outside the unit cell");
  }
}

}  // namespace

DofCounts dof_count(const QuadMesh &mesh, int k)
{
  require_q1(k);
  const DofMap dofs(mesh, k);
  return {dofs.n_cg(), dofs.n_const(), dofs.total()};
}

LocalBasis local_basis(const BBox &cell, const Point2 &ref)
{
  const double xi = ref.x, eta = ref.y;
  const double hx = cell.width(), hy = cell.height();
  LocalBasis b;
  b.value = {(1 - xi) * (1 - eta), xi * (1 - eta), (1 - xi) * eta, xi * eta, 1.0};
  b.grad = {Vec2{-(1 - eta) / hx, -(1 - xi) / hy}, Vec2{(1 - eta) / hx, -xi / hy},
            Vec2{-eta / hx, (1 - xi) / hy}, Vec2{eta / hx, xi / hy}, Vec2{0.0, 0.0}};
  return b;
}

DofMap::DofMap(const QuadMesh &mesh, int k)
{
  require_q1(k);
  generation_ = mesh.generation();
  const auto &active = mesh.active_cells();
  cell_cg_.resize(active.size());
  for (std::size_t a = 0; a < active.size(); ++a)
  {
    const auto pts = corners(mesh.cell(active[a]).bbox);
    for (std::size_t v = 0; v < 4; ++v)
    {
      const auto key = mesh.vertex_key(pts[v]);
      auto [it, inserted] = vertex_index_.try_emplace(key, static_cast<int>(vertices_.size()));
      if (inserted)
      {
        vertices_.push_back(pts[v]);
      }
      cell_cg_[a][v] = it->second;
    }
  }
  n_cg_ = static_cast<int>(vertices_.size());
  n_const_ = static_cast<int>(active.size());
  constraints_.assign(vertices_.size(), {});

  // A hanging face is the fine half of a coarse edge; the fine endpoint that is not a
  // coarse corner is the edge midpoint and follows the edge's linear trace.
  for (const auto &f : mesh.faces())
  {
    if (f.kind != QuadMesh::FaceKind::Hanging)
    {
      continue;
    }
    const BBox &cb = mesh.cell(f.neighbor).bbox;
    Point2 A, B;
    switch (opposite(f.owner_side))
    {
      case Side::West:
        A = {cb.x0, cb.y0};
        B = {cb.x0, cb.y1};
        break;
      case Side::East:
        A = {cb.x1, cb.y0};
        B = {cb.x1, cb.y1};
        break;
      case Side::South:
        A = {cb.x0, cb.y0};
        B = {cb.x1, cb.y0};
        break;
      case Side::North:
        A = {cb.x0, cb.y1};
        B = {cb.x1, cb.y1};
        break;
    }
    const int slave = vertex_dof(mesh, 0.5 * (A + B));
    const int ma = vertex_dof(mesh, A), mb = vertex_dof(mesh, B);
    if (slave < 0 || ma < 0 || mb < 0)
    {
      throw std::logic_error("DofMap: inconsistent hanging vertex topology");
    }
    constraints_[static_cast<std::size_t>(slave)] = {{ma, 0.5}, {mb, 0.5}};
  }

  // Masters can themselves hang on an even coarser edge; resolve chains to fixpoint.
  bool again = true;
  while (again)
  {
    again = false;
    for (auto &c : constraints_)
    {
      if (c.empty())
      {
        continue;
      }
      std::vector<Entry> resolved;
      for (const auto &[m, w] : c)
      {
        const auto &mc = constraints_[static_cast<std::size_t>(m)];
        if (mc.empty())
        {
          resolved.emplace_back(m, w);
        }
        else
        {
          again = true;
          for (const auto &[mm, ww] : mc)
          {
            resolved.emplace_back(mm, w * ww);
          }
        }
      }
      std::sort(resolved.begin(), resolved.end());
      std::vector<Entry> merged;
      for (const auto &e : resolved)
      {
        if (!merged.empty() && merged.back().first == e.first)
        {
          merged.back().second += e.second;
        }
        else
        {
          merged.push_back(e);
        }
      }
      c = std::move(merged);
    }
  }
}

int DofMap::vertex_dof(const QuadMesh &mesh, const Point2 &p) const
{
  auto it = vertex_index_.find(mesh.vertex_key(p));
  return it == vertex_index_.end() ? -1 : it->second;
}

int DofMap::num_constraints() const
{
  return static_cast<int>(
      std::count_if(constraints_.begin(), constraints_.end(), [](const auto &c)
                    { return !c.empty(); }));
}

void DofMap::distribute(std::span<double> coeffs) const
{
  for (int d = 0; d < n_cg_; ++d)
  {
    const auto &c = constraints_[static_cast<std::size_t>(d)];
    if (c.empty())
    {
      continue;
    }
    double v = 0.0;
    for (const auto &[m, w] : c)
    {
      v += w * coeffs[static_cast<std::size_t>(m)];
    }
    coeffs[static_cast<std::size_t>(d)] = v;
  }
}

std::vector<DofMap::Entry> DofMap::expand(int dof) const
{
  if (is_constrained(dof))
  {
    return masters(dof);
  }
  return {{dof, 1.0}};
}

void DofMap::normalize(const QuadMesh &mesh, std::span<double> coeffs) const
{
  const auto &active = mesh.active_cells();
  double num = 0.0, area = 0.0;
  for (int a = 0; a < n_const_; ++a)
  {
    const double w = mesh.cell(active[static_cast<std::size_t>(a)]).bbox.area();
    num += w * coeffs[static_cast<std::size_t>(const_dof(a))];
    area += w;
  }
  const double m = area > 0.0 ? num / area : 0.0;
  for (int d = 0; d < n_cg_; ++d)
  {
    coeffs[static_cast<std::size_t>(d)] += m;
  }
  for (int a = 0; a < n_const_; ++a)
  {
    coeffs[static_cast<std::size_t>(const_dof(a))] -= m;
  }
}

double eval_cg(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> coeffs,
               int active_idx, const Point2 &ref)
{
  check_reference(ref);
  const auto b = local_basis(mesh.cell(mesh.active_cells()[static_cast<std::size_t>(active_idx)]).bbox,
                             ref);
  const auto &cg = dofs.cell_cg(active_idx);
  double v = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
  {
    v += b.value[i] * coeffs[static_cast<std::size_t>(cg[i])];
  }
  return v;
}

double eval(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> coeffs,
            int active_idx, const Point2 &ref)
{
  return eval_cg(mesh, dofs, coeffs, active_idx, ref) +
         coeffs[static_cast<std::size_t>(dofs.const_dof(active_idx))];
}

Vec2 eval_grad(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> coeffs,
               int active_idx, const Point2 &ref)
{
  check_reference(ref);
  const auto b = local_basis(mesh.cell(mesh.active_cells()[static_cast<std::size_t>(active_idx)]).bbox,
                             ref);
  const auto &cg = dofs.cell_cg(active_idx);
  Vec2 g;
  for (std::size_t i = 0; i < 4; ++i)
  {
    g += coeffs[static_cast<std::size_t>(cg[i])] * b.grad[i];
  }
  return g;
}

double eval_at(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> coeffs,
               const Point2 &x)
{
  const int id = mesh.locate(x);
  if (id < 0)
  {
    throw std::out_of_range("eval_at: point outside the domain");
  }
  const int a = mesh.active_index(id);
  Point2 ref = mesh.cell(id).bbox.to_reference(x);
  ref.x = std::clamp(ref.x, 0.0, 1.0);
  ref.y = std::clamp(ref.y, 0.0, 1.0);
  return eval(mesh, dofs, coeffs, a, ref);
}

Field interpolate(const std::function<double(const Point2 &)> &f, const QuadMesh &mesh,
                  const DofMap &dofs)
{
  Field c(static_cast<std::size_t>(dofs.total()), 0.0);
  for (int d = 0; d < dofs.n_cg(); ++d)
  {
    c[static_cast<std::size_t>(d)] = f(dofs.vertex(d));
  }
  dofs.distribute(c);
  const auto &q = CellQuadrature::get();
  for (int a = 0; a < dofs.n_const(); ++a)
  {
    const BBox &b = mesh.cell(mesh.active_cells()[static_cast<std::size_t>(a)]).bbox;
    double mean = 0.0;
    for (int k = 0; k < CellQuadrature::n; ++k)
    {
      const auto &r = q.points[static_cast<std::size_t>(k)];
      mean += q.weights[static_cast<std::size_t>(k)] *
              (f(b.to_physical(r)) - eval_cg(mesh, dofs, c, a, r));
    }
    c[static_cast<std::size_t>(dofs.const_dof(a))] = mean;
  }
  return c;
}

double cell_mean(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> coeffs,
                 int active_idx)
{
  // The bilinear part integrates exactly to the average of its vertex values.
  const auto &cg = dofs.cell_cg(active_idx);
  double m = 0.0;
  for (int d : cg)
  {
    m += 0.25 * coeffs[static_cast<std::size_t>(d)];
  }
  (void)mesh;
  return m + coeffs[static_cast<std::size_t>(dofs.const_dof(active_idx))];
}

double integrate(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> coeffs)
{
  double s = 0.0;
  const auto &active = mesh.active_cells();
  for (std::size_t a = 0; a < active.size(); ++a)
  {
    s += mesh.cell(active[a]).bbox.area() * cell_mean(mesh, dofs, coeffs, static_cast<int>(a));
  }
  return s;
}

FacePoints face_points(const QuadMesh &mesh, const QuadMesh::Face &face)
{
  FacePoints fp;
  const auto &p = Gauss3::points();
  const auto w = Gauss3::weights();
  const BBox &ob = mesh.cell(face.owner).bbox;
  for (std::size_t q = 0; q < 3; ++q)
  {
    fp.x[q] = face.a + p[q] * (face.b - face.a);
    fp.jxw[q] = w[q] * face.length;
    fp.ref_owner[q] = ob.to_reference(fp.x[q]);
    if (face.neighbor >= 0)
    {
      fp.ref_neighbor[q] = mesh.cell(face.neighbor).bbox.to_reference(fp.x[q]);
    }
  }
  return fp;
}

FaceJumpAverage face_jump_avg(const QuadMesh &mesh, const DofMap &dofs,
                              std::span<const double> coeffs, const QuadMesh::Face &face,
                              double t, double delta)
{
  const Point2 x = face.a + t * (face.b - face.a);
  const int ao = mesh.active_index(face.owner);
  const double plus = eval(mesh, dofs, coeffs, ao, mesh.cell(face.owner).bbox.to_reference(x));
  if (face.neighbor < 0)
  {
    return {plus * face.normal, plus};
  }
  const int an = mesh.active_index(face.neighbor);
  const double minus =
      eval(mesh, dofs, coeffs, an, mesh.cell(face.neighbor).bbox.to_reference(x));
  return {jump(plus, minus, face.normal), weighted_average(plus, minus, delta)};
}

}  // namespace egmd
