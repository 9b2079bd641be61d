// SPDX-License-Identifier: Apache-2.0

#include "egmd/amr.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "egmd/quadrature.hpp"

namespace egmd
{

namespace
{

// How the old mesh covers a cell of the new one.
struct Cover
{
  int inside = -1;          // old active cell containing the whole target, or
  std::vector<int> pieces;  // the old active cells tiling it
};

Cover cover(const QuadMesh &from, const QuadMesh::Cell &target)
{
  Cover out;
  int id = from.locate(target.bbox.center());
  if (id < 0)
  {
    throw std::invalid_argument("transfer: meshes do not share a domain");
  }
  if (from.cell(id).level <= target.level)
  {
    out.inside = id;
    return out;
  }
  while (from.cell(id).level > target.level)
  {
    id = from.cell(id).parent;
  }
  std::vector<int> stack{id};
  while (!stack.empty())
  {
    const int c = stack.back();
    stack.pop_back();
    const auto &cell = from.cell(c);
    if (cell.active)
    {
      out.pieces.push_back(c);
      continue;
    }
    for (int k : cell.children)
    {
      stack.push_back(k);
    }
  }
  return out;
}

}  // namespace

void MarkingPolicy::validate() const
{
  if (refine_fraction < 0.0 || refine_fraction > 1.0 || coarsen_fraction < 0.0 ||
      coarsen_fraction > 1.0 || refine_fraction + coarsen_fraction > 1.0)
  {
    throw std::invalid_argument("marking: fractions must lie in [0, 1] and sum to at most 1");
  }
  if (bounds.r_min < 0 || bounds.r_max < bounds.r_min)
  {
    throw std::invalid_argument("marking: need 0 <= r_min <= r_max");
  }
  if (bounds.cell_max == 0)
  {
    throw std::invalid_argument("marking: cell_max must be positive");
  }
}

std::size_t fraction_count(double fraction, std::size_t n)
{
  return std::min(n, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9)));
}

Marks mark(const QuadMesh &mesh, std::span<const double> indicator, const MarkingPolicy &policy)
{
  policy.validate();
  const auto &active = mesh.active_cells();
  const std::size_t n = active.size();
  if (indicator.size() != n)
  {
    throw std::invalid_argument("mark: indicator size does not match the active cells");
  }
  for (double v : indicator)
  {
    if (!std::isfinite(v))
    {
      throw std::invalid_argument("mark: indicator is not finite");
    }
  }

  Marks m;
  m.mesh_generation = mesh.generation();
  const int level_cap = std::min(policy.bounds.r_max, mesh.max_level());

  // Both lists rank only the cells the action could apply to, so cells pinned at a level
  // bound do not use up the fraction. Active ids ascend with the active index, so a stable
  // sort breaks ties by id.
  std::vector<std::size_t> up, down;
  for (std::size_t a = 0; a < n; ++a)
  {
    const auto &c = mesh.cell(active[a]);
    if (c.level < level_cap)
    {
      up.push_back(a);
    }
    if (c.level > policy.bounds.r_min && mesh.can_coarsen(c.parent))
    {
      down.push_back(a);
    }
  }
  std::stable_sort(up.begin(), up.end(),
                   [&](std::size_t a, std::size_t b) { return indicator[a] > indicator[b]; });
  std::stable_sort(down.begin(), down.end(),
                   [&](std::size_t a, std::size_t b) { return indicator[a] < indicator[b]; });
  up.resize(std::min(up.size(), fraction_count(policy.refine_fraction, n)));
  down.resize(std::min(down.size(), fraction_count(policy.coarsen_fraction, n)));

  std::set<int> coarsen;
  for (std::size_t a : down)
  {
    coarsen.insert(active[a]);
  }
  std::set<int> credited;
  std::map<int, int> per_parent;
  for (int id : coarsen)
  {
    ++per_parent[mesh.cell(id).parent];
  }
  for (const auto &[p, count] : per_parent)
  {
    if (count == 4)
    {
      credited.insert(p);
    }
  }

  std::size_t projected = n - 3 * credited.size();
  std::set<int> split;
  for (std::size_t a : up)
  {
    const auto &c = mesh.cell(active[a]);
    if (split.count(c.id))
    {
      // Already split by an earlier closure; free.
      m.refine.push_back(c.id);
      continue;
    }
    std::vector<int> fresh;
    std::set<int> lost;
    for (int s : mesh.refinement_closure(c.id))
    {
      if (!split.count(s))
      {
        fresh.push_back(s);
        const int p = mesh.cell(s).parent;
        if (p >= 0 && credited.count(p))
        {
          lost.insert(p);
        }
      }
    }
    const std::size_t cost = 3 * (fresh.size() + lost.size());
    if (projected + cost > policy.bounds.cell_max)
    {
      break;
    }
    projected += cost;
    split.insert(fresh.begin(), fresh.end());
    for (int p : lost)
    {
      credited.erase(p);
      for (int kid : mesh.cell(p).children)
      {
        coarsen.erase(kid);
      }
    }
    m.refine.push_back(c.id);
  }
  m.coarsen.assign(coarsen.begin(), coarsen.end());
  m.projected_cells = projected;
  return m;
}

Field transfer_field(const QuadMesh &from, const DofMap &from_dofs, std::span<const double> c,
                     const QuadMesh &to, const DofMap &to_dofs)
{
  Field out(static_cast<std::size_t>(to_dofs.total()), 0.0);
  for (int d = 0; d < to_dofs.n_cg(); ++d)
  {
    const Point2 &x = to_dofs.vertex(d);
    const int id = from.locate(x);
    Point2 ref = from.cell(id).bbox.to_reference(x);
    ref.x = std::clamp(ref.x, 0.0, 1.0);
    ref.y = std::clamp(ref.y, 0.0, 1.0);
    out[static_cast<std::size_t>(d)] = eval_cg(from, from_dofs, c, from.active_index(id), ref);
  }
  to_dofs.distribute(out);

  const auto &quad = CellQuadrature::get();
  const auto &active = to.active_cells();
  for (std::size_t a = 0; a < active.size(); ++a)
  {
    const auto &cell = to.cell(active[a]);
    const Cover cv = cover(from, cell);
    double mean = 0.0;
    if (cv.inside >= 0)
    {
      const auto &ob = from.cell(cv.inside).bbox;
      const int oa = from.active_index(cv.inside);
      for (std::size_t p = 0; p < 9; ++p)
      {
        const Point2 x = cell.bbox.to_physical(quad.points[p]);
        mean += quad.weights[p] * eval(from, from_dofs, c, oa, ob.to_reference(x));
      }
    }
    else
    {
      for (int id : cv.pieces)
      {
        mean += from.cell(id).bbox.area() * cell_mean(from, from_dofs, c, from.active_index(id));
      }
      mean /= cell.bbox.area();
    }
    const auto ia = static_cast<int>(a);
    out[static_cast<std::size_t>(to_dofs.const_dof(ia))] = mean - cell_mean(to, to_dofs, out, ia);
  }
  to_dofs.normalize(to, out);
  return out;
}

std::vector<double> transfer_cell_values(const QuadMesh &from, std::span<const double> v,
                                         const QuadMesh &to)
{
  if (v.size() != from.num_active())
  {
    throw std::invalid_argument("transfer: per-cell vector size mismatch");
  }
  const auto &active = to.active_cells();
  std::vector<double> out(active.size());
  for (std::size_t a = 0; a < active.size(); ++a)
  {
    const auto &cell = to.cell(active[a]);
    const Cover cv = cover(from, cell);
    if (cv.inside >= 0)
    {
      out[a] = v[static_cast<std::size_t>(from.active_index(cv.inside))];
      continue;
    }
    double s = 0.0;
    for (int id : cv.pieces)
    {
      s += from.cell(id).bbox.area() * v[static_cast<std::size_t>(from.active_index(id))];
    }
    out[a] = s / cell.bbox.area();
  }
  return out;
}

AdaptResult adapt_and_transfer(const QuadMesh &mesh, const DofMap &dofs,
                               std::span<const Field> fields, const Marks &marks,
                               const AdaptBounds &bounds,
                               std::span<const std::vector<double>> cell_values)
{
  if (marks.mesh_generation != mesh.generation())
  {
    throw StaleMarksError("adapt: marks were computed on a different mesh generation");
  }
  if (dofs.mesh_generation() != mesh.generation())
  {
    throw std::invalid_argument("adapt: dof map does not belong to the mesh");
  }
  for (const auto &f : fields)
  {
    if (f.size() != static_cast<std::size_t>(dofs.total()))
    {
      throw std::invalid_argument("adapt: field size does not match the dof map");
    }
  }

  AdaptResult r{mesh, DofMap{}, {}, {}, 0, 0};
  QuadMesh &m = r.mesh;
  const std::size_t before = m.num_active();
  if (!marks.coarsen.empty())
  {
    m.coarsen(marks.coarsen);
    r.coarsened = (before - m.num_active()) / 3;
  }

  const int level_cap = std::min(bounds.r_max, m.max_level());
  std::set<int> split;
  for (int id : marks.refine)
  {
    if (!m.is_active(id) || split.count(id) || m.cell(id).level >= level_cap)
    {
      continue;
    }
    std::vector<int> fresh;
    for (int s : m.refinement_closure(id))
    {
      if (!split.count(s))
      {
        fresh.push_back(s);
      }
    }
    if (m.num_active() + 3 * (split.size() + fresh.size()) > bounds.cell_max)
    {
      break;
    }
    split.insert(fresh.begin(), fresh.end());
  }
  if (!split.empty())
  {
    const std::vector<int> ids(split.begin(), split.end());
    m.refine(ids);
    r.refined = split.size();
  }

  if (!r.changed())
  {
    r.mesh = mesh;
    r.dofs = dofs;
    r.fields.assign(fields.begin(), fields.end());
    r.cell_values.assign(cell_values.begin(), cell_values.end());
    return r;
  }
  r.dofs = DofMap(m);
  for (const auto &f : fields)
  {
    r.fields.push_back(transfer_field(mesh, dofs, f, m, r.dofs));
  }
  for (const auto &v : cell_values)
  {
    r.cell_values.push_back(transfer_cell_values(mesh, v, m));
  }
  return r;
}

}  // namespace egmd
