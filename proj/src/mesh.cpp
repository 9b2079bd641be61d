// SPDX-License-Identifier: Apache-2.0

#include "egmd/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace egmd
{

namespace
{

std::pair<int, int> side_offset(Side s)
{
  switch (s)
  {
    case Side::West:
      return {-1, 0};
    case Side::East:
      return {1, 0};
    case Side::South:
      return {0, -1};
    case Side::North:
      return {0, 1};
  }
  return {0, 0};
}

// Generations are unique across all mesh instances, so they can key caches.
std::uint64_t next_generation()
{
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

}  // namespace

std::uint64_t QuadMesh::key(int level, int ix, int iy)
{
  return (static_cast<std::uint64_t>(level) << 58) |
         (static_cast<std::uint64_t>(ix) << 29) | static_cast<std::uint64_t>(iy);
}

QuadMesh QuadMesh::uniform(const Domain &domain, int nx, int ny)
{
  if (nx < 1 || ny < 1)
  {
    throw std::invalid_argument("QuadMesh::uniform: cell counts must be positive, got " +
                                std::to_string(nx) + "x" + std::to_string(ny));
  }
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0))
  {
    throw std::invalid_argument("QuadMesh::uniform: degenerate domain");
  }
  QuadMesh mesh;
  mesh.domain_ = domain;
  const int shift = std::min(std::countr_zero(static_cast<unsigned>(nx)),
                             std::countr_zero(static_cast<unsigned>(ny)));
  mesh.nx0_ = nx >> shift;
  mesh.ny0_ = ny >> shift;
  const int root_bits = std::bit_width(static_cast<unsigned>(std::max(mesh.nx0_, mesh.ny0_)));
  mesh.max_level_ = std::min(kMaxLevel, 29 - root_bits);
  if (shift > mesh.max_level_)
  {
    throw std::out_of_range("QuadMesh::uniform: grid exceeds the addressable level");
  }
  mesh.initial_level_ = shift;
  for (int j = 0; j < mesh.ny0_; ++j)
  {
    for (int i = 0; i < mesh.nx0_; ++i)
    {
      mesh.add_cell(0, i, j, -1);
    }
  }
  for (int l = 0; l < shift; ++l)
  {
    const std::size_t n = mesh.cells_.size();
    for (std::size_t id = 0; id < n; ++id)
    {
      if (mesh.cells_[id].active)
      {
        mesh.split(static_cast<int>(id));
      }
    }
  }
  mesh.finalize();
  return mesh;
}

BBox QuadMesh::box_of(int level, int ix, int iy) const
{
  const double nx = static_cast<double>(static_cast<std::int64_t>(nx0_) << level);
  const double ny = static_cast<double>(static_cast<std::int64_t>(ny0_) << level);
  const double w = domain_.width(), h = domain_.height();
  return {domain_.x0 + w * ix / nx, domain_.y0 + h * iy / ny, domain_.x0 + w * (ix + 1) / nx,
          domain_.y0 + h * (iy + 1) / ny};
}

int QuadMesh::add_cell(int level, int ix, int iy, int parent)
{
  Cell c;
  c.id = static_cast<int>(cells_.size());
  c.level = level;
  c.ix = ix;
  c.iy = iy;
  c.bbox = box_of(level, ix, iy);
  c.active = true;
  c.alive = true;
  c.parent = parent;
  cells_.push_back(c);
  index_[key(level, ix, iy)] = c.id;
  return c.id;
}

void QuadMesh::split(int id)
{
  Cell &c = cells_[static_cast<std::size_t>(id)];
  if (c.level + 1 > max_level_)
  {
    throw std::out_of_range("QuadMesh::refine: cell " + std::to_string(id) +
                            " would exceed the level cap " + std::to_string(max_level_));
  }
  const int level = c.level + 1, ix = 2 * c.ix, iy = 2 * c.iy;
  c.active = false;
  std::array<int, 4> kids{};
  kids[0] = add_cell(level, ix, iy, id);
  kids[1] = add_cell(level, ix + 1, iy, id);
  kids[2] = add_cell(level, ix, iy + 1, id);
  kids[3] = add_cell(level, ix + 1, iy + 1, id);
  // add_cell may reallocate; do not reuse the reference.
  cells_[static_cast<std::size_t>(id)].children = kids;
}

int QuadMesh::find(int level, int ix, int iy) const
{
  if (level < 0 || ix < 0 || iy < 0)
  {
    return -1;
  }
  auto it = index_.find(key(level, ix, iy));
  return it == index_.end() ? -1 : it->second;
}

bool QuadMesh::is_active(int id) const
{
  return id >= 0 && static_cast<std::size_t>(id) < cells_.size() &&
         cells_[static_cast<std::size_t>(id)].active;
}

int QuadMesh::active_index(int id) const
{
  if (id < 0 || static_cast<std::size_t>(id) >= active_pos_.size())
  {
    return -1;
  }
  return active_pos_[static_cast<std::size_t>(id)];
}

bool QuadMesh::on_boundary(const Cell &c, Side s) const
{
  switch (s)
  {
    case Side::West:
      return c.ix == 0;
    case Side::East:
      return c.ix == (nx0_ << c.level) - 1;
    case Side::South:
      return c.iy == 0;
    case Side::North:
      return c.iy == (ny0_ << c.level) - 1;
  }
  return false;
}

int QuadMesh::coarser_neighbor(int id, Side s) const
{
  const Cell &c = cells_[static_cast<std::size_t>(id)];
  if (on_boundary(c, s))
  {
    return -1;
  }
  const auto [dx, dy] = side_offset(s);
  const int nx = c.ix + dx, ny = c.iy + dy;
  if (find(c.level, nx, ny) >= 0)
  {
    return -1;
  }
  for (int k = c.level - 1; k >= 0; --k)
  {
    const int shift = c.level - k;
    const int n = find(k, nx >> shift, ny >> shift);
    if (n >= 0)
    {
      return n;
    }
  }
  return -1;
}

void QuadMesh::refine_with_closure(int id)
{
  if (!cells_[static_cast<std::size_t>(id)].active)
  {
    return;
  }
  for (Side s : kAllSides)
  {
    const int n = coarser_neighbor(id, s);
    if (n >= 0)
    {
      refine_with_closure(n);
    }
  }
  split(id);
}

void QuadMesh::refine(std::span<const int> ids)
{
  for (int id : ids)
  {
    if (!is_active(id))
    {
      throw std::invalid_argument("QuadMesh::refine: cell " + std::to_string(id) +
                                  " is not active");
    }
  }
  if (ids.empty())
  {
    return;
  }
  for (int id : ids)
  {
    refine_with_closure(id);
  }
  finalize();
}

std::vector<int> QuadMesh::refinement_closure(int id) const
{
  std::set<int> out;
  std::vector<int> stack;
  if (is_active(id))
  {
    stack.push_back(id);
  }
  while (!stack.empty())
  {
    const int c = stack.back();
    stack.pop_back();
    if (!out.insert(c).second)
    {
      continue;
    }
    for (Side s : kAllSides)
    {
      const int n = coarser_neighbor(c, s);
      if (n >= 0)
      {
        stack.push_back(n);
      }
    }
  }
  return {out.begin(), out.end()};
}

bool QuadMesh::can_coarsen(int parent_id) const
{
  if (parent_id < 0 || static_cast<std::size_t>(parent_id) >= cells_.size())
  {
    return false;
  }
  const Cell &parent = cells_[static_cast<std::size_t>(parent_id)];
  if (parent.active || !parent.alive)
  {
    return false;
  }
  for (int k : parent.children)
  {
    if (k < 0 || !cells_[static_cast<std::size_t>(k)].active)
    {
      return false;
    }
  }
  for (Side s : kAllSides)
  {
    if (on_boundary(parent, s))
    {
      continue;
    }
    const auto [dx, dy] = side_offset(s);
    const int n = find(parent.level, parent.ix + dx, parent.iy + dy);
    if (n < 0 || cells_[static_cast<std::size_t>(n)].active)
    {
      continue;
    }
    // The neighbor is refined: its two children touching the shared edge must be leaves.
    const auto &nk = cells_[static_cast<std::size_t>(n)].children;
    std::array<int, 2> touching{};
    switch (s)
    {
      case Side::West:
        touching = {nk[1], nk[3]};
        break;
      case Side::East:
        touching = {nk[0], nk[2]};
        break;
      case Side::South:
        touching = {nk[2], nk[3]};
        break;
      case Side::North:
        touching = {nk[0], nk[1]};
        break;
    }
    for (int t : touching)
    {
      if (!cells_[static_cast<std::size_t>(t)].active)
      {
        return false;
      }
    }
  }
  return true;
}

void QuadMesh::coarsen(std::span<const int> ids)
{
  std::set<int> marked;
  std::set<int> parents;
  for (int id : ids)
  {
    if (is_active(id) && cells_[static_cast<std::size_t>(id)].parent >= 0)
    {
      marked.insert(id);
      parents.insert(cells_[static_cast<std::size_t>(id)].parent);
    }
  }
  bool changed = false;
  for (int p : parents)
  {
    const Cell &parent = cells_[static_cast<std::size_t>(p)];
    const auto kids = parent.children;
    const bool all_marked = std::all_of(kids.begin(), kids.end(), [&](int k)
                                        { return k >= 0 && is_active(k) && marked.count(k); });
    if (!all_marked)
    {
      continue;
    }
    if (!can_coarsen(p))
    {
      continue;
    }
    for (int k : kids)
    {
      Cell &kid = cells_[static_cast<std::size_t>(k)];
      kid.active = false;
      kid.alive = false;
      index_.erase(key(kid.level, kid.ix, kid.iy));
    }
    Cell &pc = cells_[static_cast<std::size_t>(p)];
    pc.children = {-1, -1, -1, -1};
    pc.active = true;
    changed = true;
  }
  if (changed)
  {
    finalize();
  }
}

int QuadMesh::locate(const Point2 &p) const
{
  const double tol = 1e-12 * std::max(domain_.width(), domain_.height());
  if (!domain_.contains(p, tol))
  {
    return -1;
  }
  const int i = std::clamp(
      static_cast<int>(std::floor((p.x - domain_.x0) / domain_.width() * nx0_)), 0, nx0_ - 1);
  const int j = std::clamp(
      static_cast<int>(std::floor((p.y - domain_.y0) / domain_.height() * ny0_)), 0, ny0_ - 1);
  int id = find(0, i, j);
  while (id >= 0 && !cells_[static_cast<std::size_t>(id)].active)
  {
    const Cell &c = cells_[static_cast<std::size_t>(id)];
    const Point2 m = c.bbox.center();
    const int k = (p.x > m.x ? 1 : 0) + (p.y > m.y ? 2 : 0);
    id = c.children[static_cast<std::size_t>(k)];
  }
  return id;
}

int QuadMesh::max_active_level() const
{
  int l = 0;
  for (int id : active_)
  {
    l = std::max(l, cells_[static_cast<std::size_t>(id)].level);
  }
  return l;
}

int QuadMesh::min_active_level() const
{
  int l = max_level_;
  for (int id : active_)
  {
    l = std::min(l, cells_[static_cast<std::size_t>(id)].level);
  }
  return l;
}

int QuadMesh::max_face_level_jump() const
{
  int jump = 0;
  for (const Face &f : faces_)
  {
    if (f.neighbor >= 0)
    {
      jump = std::max(jump, std::abs(cells_[static_cast<std::size_t>(f.owner)].level -
                                     cells_[static_cast<std::size_t>(f.neighbor)].level));
    }
  }
  return jump;
}

std::int64_t QuadMesh::vertex_key(const Point2 &p) const
{
  const double nx = static_cast<double>(static_cast<std::int64_t>(nx0_) << max_level_);
  const double ny = static_cast<double>(static_cast<std::int64_t>(ny0_) << max_level_);
  const auto X = std::llround((p.x - domain_.x0) / domain_.width() * nx);
  const auto Y = std::llround((p.y - domain_.y0) / domain_.height() * ny);
  return (static_cast<std::int64_t>(X) << 32) | static_cast<std::int64_t>(Y);
}

void QuadMesh::finalize()
{
  active_.clear();
  active_pos_.assign(cells_.size(), -1);
  for (const Cell &c : cells_)
  {
    if (c.active)
    {
      active_pos_[static_cast<std::size_t>(c.id)] = static_cast<int>(active_.size());
      active_.push_back(c.id);
    }
  }

  faces_.clear();
  cell_faces_.assign(active_.size(), {});
  for (int id : active_)
  {
    const Cell &c = cells_[static_cast<std::size_t>(id)];
    for (Side s : kAllSides)
    {
      Face f;
      f.owner = id;
      f.owner_side = s;
      f.normal = outward_normal(s);
      const BBox &b = c.bbox;
      switch (s)
      {
        case Side::West:
          f.a = {b.x0, b.y0};
          f.b = {b.x0, b.y1};
          break;
        case Side::East:
          f.a = {b.x1, b.y0};
          f.b = {b.x1, b.y1};
          break;
        case Side::South:
          f.a = {b.x0, b.y0};
          f.b = {b.x1, b.y0};
          break;
        case Side::North:
          f.a = {b.x0, b.y1};
          f.b = {b.x1, b.y1};
          break;
      }
      f.length = norm(f.b - f.a);
      if (on_boundary(c, s))
      {
        f.kind = FaceKind::Boundary;
      }
      else
      {
        const auto [dx, dy] = side_offset(s);
        const int n = find(c.level, c.ix + dx, c.iy + dy);
        if (n >= 0)
        {
          if (!cells_[static_cast<std::size_t>(n)].active ||
              (s != Side::East && s != Side::North))
          {
            continue;
          }
          f.kind = FaceKind::Conforming;
          f.neighbor = n;
        }
        else
        {
          f.kind = FaceKind::Hanging;
          f.neighbor = coarser_neighbor(id, s);
        }
      }
      const int fi = static_cast<int>(faces_.size());
      faces_.push_back(f);
      cell_faces_[static_cast<std::size_t>(active_pos_[static_cast<std::size_t>(id)])]
          .push_back(fi);
      if (f.neighbor >= 0)
      {
        cell_faces_[static_cast<std::size_t>(active_pos_[static_cast<std::size_t>(f.neighbor)])]
            .push_back(fi);
      }
    }
  }
  generation_ = next_generation();
}

}  // namespace egmd
