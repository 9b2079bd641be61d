// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_AMR_HPP
#define EGMD_AMR_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "egmd/egspace.hpp"
#include "egmd/mesh.hpp"

namespace egmd
{

// Levels are absolute quadtree levels (QuadMesh::Cell::level).
struct AdaptBounds
{
  int r_min = 0;
  int r_max = QuadMesh::kMaxLevel;
  std::size_t cell_max = static_cast<std::size_t>(-1);
};

struct MarkingPolicy
{
  double refine_fraction = 0.2;
  double coarsen_fraction = 0.1;
  AdaptBounds bounds;

  void validate() const;
};

struct Marks
{
  std::uint64_t mesh_generation = 0;
  std::vector<int> refine;   // cell ids, highest indicator first
  std::vector<int> coarsen;  // cell ids, ascending
  // Active count the marks project to (refinement closures and credited quartets included).
  std::size_t projected_cells = 0;
};

// Number of cells a fraction of n selects.
std::size_t fraction_count(double fraction, std::size_t n);

// Count-percentile marking on the per-active-cell indicator. Ties are broken by cell id.
// Refinement candidates are taken greedily in indicator order; the first one whose closure
// would push the projected count past cell_max ends the list.
Marks mark(const QuadMesh &mesh, std::span<const double> indicator, const MarkingPolicy &policy);

class StaleMarksError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

struct AdaptResult
{
  QuadMesh mesh;
  DofMap dofs;
  std::vector<Field> fields;
  std::vector<std::vector<double>> cell_values;
  std::size_t refined = 0;    // cells split, closure included
  std::size_t coarsened = 0;  // quartets merged
  bool changed() const { return refined + coarsened > 0; }
};

// Coarsens, then refines in mark order while the active count stays within cell_max, and
// transfers every EG field (continuous part interpolated, cell constants restoring each new
// cell's mean) and every per-cell vector (copied to children, area-averaged into parents).
AdaptResult adapt_and_transfer(const QuadMesh &mesh, const DofMap &dofs,
                               std::span<const Field> fields, const Marks &marks,
                               const AdaptBounds &bounds,
                               std::span<const std::vector<double>> cell_values = {});

// The transfers on their own, between any two meshes of the same tree.
Field transfer_field(const QuadMesh &from, const DofMap &from_dofs, std::span<const double> c,
                     const QuadMesh &to, const DofMap &to_dofs);
std::vector<double> transfer_cell_values(const QuadMesh &from, std::span<const double> v,
                                         const QuadMesh &to);

}  // namespace egmd

#endif  // EGMD_AMR_HPP
