// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_ASSEMBLY_HPP
#define EGMD_ASSEMBLY_HPP

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "egmd/egspace.hpp"
#include "egmd/linalg.hpp"
#include "egmd/mesh.hpp"

namespace egmd
{

enum class Exec
{
  Serial,
  OpenMP,
  Auto  // OpenMP when parallel::threads() > 1
};

// Dense element contribution on at most 10 dofs: a cell (5) or an interior face (owner 5,
// then neighbor 5).
struct LocalContribution
{
  static constexpr int kMax = 10;
  int n = 0;
  std::array<int, kMax> dofs{};
  std::array<double, kMax * kMax> mat{};
  std::array<double, kMax> rhs{};

  double &a(int i, int j) { return mat[static_cast<std::size_t>(i * kMax + j)]; }
  double a(int i, int j) const { return mat[static_cast<std::size_t>(i * kMax + j)]; }
};

LocalContribution cell_contribution(const DofMap &dofs, int active_idx);
// Owner dofs first; boundary faces only carry the owner.
LocalContribution face_contribution(const QuadMesh &mesh, const DofMap &dofs,
                                    const QuadMesh::Face &face);

struct LinearSystem
{
  SparseMatrix matrix;
  std::vector<double> rhs;
};

//
// Sparsity pattern and constraint-aware scatter for one (mesh, dof map) pair. Hanging dofs
// are condensed: their couplings are redistributed to the masters and their own rows become
// scaled unit rows with zero right-hand side, so the solution must be passed through
// DofMap::distribute afterwards.
//
class SystemAssembler
{
public:
  SystemAssembler(const QuadMesh &mesh, const DofMap &dofs);

  std::uint64_t mesh_generation() const { return generation_; }
  int size() const { return pattern_.rows(); }
  BlockPartition partition() const { return partition_; }

  LinearSystem zero_system() const;
  void scatter(LinearSystem &system, const LocalContribution &local) const;
  void finish(LinearSystem &system) const;

  // zero_system + scatter of every contribution in the given order + finish.
  LinearSystem assemble(std::span<const LocalContribution> locals) const;

private:
  std::uint64_t generation_ = 0;
  SparseMatrix pattern_;
  BlockPartition partition_;
  std::vector<std::vector<DofMap::Entry>> expansion_;
  std::vector<int> constrained_;
};

// Shared assembler for a mesh generation; rebuilt when the mesh changes.
std::shared_ptr<const SystemAssembler> assembler_for(const QuadMesh &mesh, const DofMap &dofs);

// Solves with the block-diagonal ILU(0) preconditioner over the (CG, constant) split, then
// distributes the hanging constraints into x and normalizes the representation. EG systems
// are singular along the (CG = 1, constants = -1) direction; the system is consistent, so
// GMRES still converges.
GmresResult solve_system(const LinearSystem &system, const SystemAssembler &assembler,
                         const QuadMesh &mesh, const DofMap &dofs, std::span<double> x,
                         const GmresOptions &options);

}  // namespace egmd

#endif  // EGMD_ASSEMBLY_HPP
