// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_MESH_HPP
#define EGMD_MESH_HPP

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "egmd/geometry.hpp"

namespace egmd
{

//
// Quadtree of axis-aligned rectangles over a rectangular domain. The tree is rooted in a
// coarse nx0 x ny0 grid of level-0 cells. Every cell keeps integer coordinates (ix, iy) in
// the (nx0 2^level) x (ny0 2^level) lattice of its level, which makes neighbor lookups a
// hash probe. Cell ids are stable: refinement appends fresh ids, coarsening retires the
// children and reactivates the parent.
//
// After every public mutation the active cells satisfy face 2:1 balance, i.e. every face
// carries at most one hanging node.
//
class QuadMesh
{
public:
  static constexpr int kMaxLevel = 20;

  struct Cell
  {
    int id = -1;
    int level = 0;
    int ix = 0, iy = 0;
    BBox bbox;
    bool active = false;
    bool alive = false;  // false once retired by coarsening
    int parent = -1;
    std::array<int, 4> children = {-1, -1, -1, -1};  // SW, SE, NW, NE
  };

  enum class FaceKind
  {
    Conforming,
    Hanging,  // fine sub-face of a coarser neighbor's face; owner is the fine cell
    Boundary
  };

  struct Face
  {
    int owner = -1;
    int neighbor = -1;  // -1 on the boundary
    Side owner_side = Side::West;  // which side of the owner this face lies on
    Vec2 normal;                   // unit, owner -> neighbor (outward on the boundary)
    double length = 0.0;
    FaceKind kind = FaceKind::Conforming;
    Point2 a, b;  // endpoints, ordered along increasing x or y
  };

  QuadMesh() = default;

  // nx x ny equal cells. The largest power of two dividing both counts becomes the initial
  // refinement level, so e.g. 16x16 is one root cell refined four times.
  static QuadMesh uniform(const Domain &domain, int nx, int ny);

  // Refines the given active cells, plus whatever neighbors are needed for balance.
  void refine(std::span<const int> ids);
  // Merges sibling quartets whose four members are all marked, active and whose merge keeps
  // the mesh balanced. Other marks are silently dropped.
  void coarsen(std::span<const int> ids);

  // True when the four children of `parent_id` are active leaves and merging them keeps the
  // mesh balanced.
  bool can_coarsen(int parent_id) const;

  // Cells that refining `id` would split, including the balance closure. Does not mutate.
  std::vector<int> refinement_closure(int id) const;

  const Domain &domain() const { return domain_; }
  int root_nx() const { return nx0_; }
  int root_ny() const { return ny0_; }
  int initial_level() const { return initial_level_; }
  // Deepest level the lattice can address for this root grid (at most kMaxLevel).
  int max_level() const { return max_level_; }
  // Changes on every mutation and is never shared by two different topologies.
  std::uint64_t generation() const { return generation_; }

  const Cell &cell(int id) const { return cells_.at(static_cast<std::size_t>(id)); }
  std::size_t num_cells_total() const { return cells_.size(); }
  bool is_active(int id) const;

  // Active cell ids in ascending order.
  const std::vector<int> &active_cells() const { return active_; }
  std::size_t num_active() const { return active_.size(); }
  // Position of an active cell in active_cells(), or -1.
  int active_index(int id) const;

  const std::vector<Face> &faces() const { return faces_; }
  // Faces touching an active cell (by active index), as indices into faces().
  const std::vector<int> &cell_faces(int active_idx) const
  {
    return cell_faces_[static_cast<std::size_t>(active_idx)];
  }

  // Active cell containing p (ties resolved toward the lower-left cell). -1 if outside.
  int locate(const Point2 &p) const;

  // Cell at (level, ix, iy) if it exists in the tree, else -1.
  int find(int level, int ix, int iy) const;

  int max_active_level() const;
  int min_active_level() const;

  // Exhaustive scan: largest level difference across any interior face.
  int max_face_level_jump() const;

  // Integer lattice coordinate of a point at kMaxLevel; used as vertex identity.
  std::int64_t vertex_key(const Point2 &p) const;

private:
  Domain domain_;
  int nx0_ = 0, ny0_ = 0;
  int initial_level_ = 0;
  int max_level_ = kMaxLevel;
  std::uint64_t generation_ = 0;

  std::vector<Cell> cells_;
  std::unordered_map<std::uint64_t, int> index_;  // (level, ix, iy) -> id
  std::vector<int> active_;
  std::vector<int> active_pos_;  // id -> active index or -1
  std::vector<Face> faces_;
  std::vector<std::vector<int>> cell_faces_;

  static std::uint64_t key(int level, int ix, int iy);
  BBox box_of(int level, int ix, int iy) const;
  int add_cell(int level, int ix, int iy, int parent);
  void split(int id);
  // Active leaf covering the same-level neighbor slot of `id` on side s when that slot does
  // not exist in the tree (i.e. the neighbor is coarser). -1 on the boundary or if the slot
  // exists.
  int coarser_neighbor(int id, Side s) const;
  bool on_boundary(const Cell &c, Side s) const;
  void refine_with_closure(int id);
  void finalize();
};

}  // namespace egmd

#endif  // EGMD_MESH_HPP
