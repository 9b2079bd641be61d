// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_EGSPACE_HPP
#define EGMD_EGSPACE_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "egmd/geometry.hpp"
#include "egmd/mesh.hpp"
#include "egmd/quadrature.hpp"

namespace egmd
{

// Coefficient vector of an EG function: the continuous Q1 block first, then one constant
// per active cell.
using Field = std::vector<double>;

struct DofCounts
{
  int n_cg = 0;
  int n_const = 0;
  int total = 0;
};

// Only k = 1 is implemented; the argument exists so the call sites already carry it.
DofCounts dof_count(const QuadMesh &mesh, int k = 1);

// Local EG basis on one cell: four bilinear nodal functions (SW, SE, NW, NE) and the cell
// indicator. Gradients are physical.
struct LocalBasis
{
  std::array<double, 5> value{};
  std::array<Vec2, 5> grad{};
};

LocalBasis local_basis(const BBox &cell, const Point2 &ref);

class DofMap
{
public:
  using Entry = std::pair<int, double>;

  DofMap() = default;
  explicit DofMap(const QuadMesh &mesh, int k = 1);

  int n_cg() const { return n_cg_; }
  int n_const() const { return n_const_; }
  int total() const { return n_cg_ + n_const_; }
  std::uint64_t mesh_generation() const { return generation_; }

  // CG dofs of an active cell (by active index) in SW, SE, NW, NE order.
  const std::array<int, 4> &cell_cg(int active_idx) const
  {
    return cell_cg_[static_cast<std::size_t>(active_idx)];
  }
  int const_dof(int active_idx) const { return n_cg_ + active_idx; }
  std::array<int, 5> cell_dofs(int active_idx) const
  {
    const auto &c = cell_cg(active_idx);
    return {c[0], c[1], c[2], c[3], const_dof(active_idx)};
  }

  const Point2 &vertex(int cg_dof) const { return vertices_[static_cast<std::size_t>(cg_dof)]; }
  // CG dof sitting at p, or -1.
  int vertex_dof(const QuadMesh &mesh, const Point2 &p) const;

  bool is_constrained(int dof) const
  {
    return dof < n_cg_ && !constraints_[static_cast<std::size_t>(dof)].empty();
  }
  // Fully resolved masters (none of them constrained) of a hanging CG dof.
  const std::vector<Entry> &masters(int dof) const
  {
    return constraints_[static_cast<std::size_t>(dof)];
  }
  int num_constraints() const;

  // Overwrites every constrained entry with the combination of its masters. Idempotent.
  void distribute(std::span<double> coeffs) const;

  // Expansion of a dof into unconstrained dofs: itself with weight 1, or its masters.
  std::vector<Entry> expand(int dof) const;

  // The global constant is representable both in the continuous block and as equal cell
  // constants. Moves it into the continuous block so the cell constants have zero
  // area-weighted mean; the represented function is unchanged.
  void normalize(const QuadMesh &mesh, std::span<double> coeffs) const;

private:
  int n_cg_ = 0;
  int n_const_ = 0;
  std::uint64_t generation_ = 0;
  std::vector<std::array<int, 4>> cell_cg_;
  std::vector<Point2> vertices_;
  std::vector<std::vector<Entry>> constraints_;  // indexed by CG dof
  std::unordered_map<std::int64_t, int> vertex_index_;
};

// Value / gradient of an EG function inside an active cell at a reference point in [0,1]^2.
// Constraints must already be distributed into coeffs.
double eval(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> coeffs,
            int active_idx, const Point2 &ref);
Vec2 eval_grad(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> coeffs,
               int active_idx, const Point2 &ref);
// Continuous part only.
double eval_cg(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> coeffs,
               int active_idx, const Point2 &ref);
// Point evaluation anywhere in the domain; -1 cell lookups throw.
double eval_at(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> coeffs,
               const Point2 &x);

// EG interpolant: vertex values for the continuous part (hanging vertices constrained), then
// per-cell constants restoring the cell mean of f.
Field interpolate(const std::function<double(const Point2 &)> &f, const QuadMesh &mesh,
                  const DofMap &dofs);

// Cell mean and integral of an EG function.
double cell_mean(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> coeffs,
                 int active_idx);
double integrate(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> coeffs);

// Quadrature on one face: three Gauss points, with their reference coordinates in the owner
// and (for interior faces) neighbor cells.
struct FacePoints
{
  std::array<Point2, 3> x;
  std::array<double, 3> jxw;
  std::array<Point2, 3> ref_owner;
  std::array<Point2, 3> ref_neighbor;
};

FacePoints face_points(const QuadMesh &mesh, const QuadMesh::Face &face);

// [z] = z+ n+ + z- n-, with n- = -n+. On the boundary pass minus = 0 and get z n.
inline Vec2 jump(double plus, double minus, const Vec2 &n_plus) { return (plus - minus) * n_plus; }

// {z}_delta = delta z+ + (1 - delta) z-.
inline double weighted_average(double plus, double minus, double delta)
{
  return delta * plus + (1.0 - delta) * minus;
}
inline Vec2 weighted_average(const Vec2 &plus, const Vec2 &minus, double delta)
{
  return delta * plus + (1.0 - delta) * minus;
}

struct FaceJumpAverage
{
  Vec2 jump;
  double average = 0.0;
};

// Jump of an EG function and weighted average of its traces at parameter t in [0,1] along
// the face. Boundary faces return value * n and the value.
FaceJumpAverage face_jump_avg(const QuadMesh &mesh, const DofMap &dofs,
                              std::span<const double> coeffs, const QuadMesh::Face &face,
                              double t, double delta);

}  // namespace egmd

#endif  // EGMD_EGSPACE_HPP
