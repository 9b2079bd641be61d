// SPDX-License-Identifier: Apache-2.0

#include "egmd/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <stdexcept>

namespace egmd
{

LocalContribution cell_contribution(const DofMap &dofs, int active_idx)
{
  LocalContribution c;
  c.n = 5;
  const auto d = dofs.cell_dofs(active_idx);
  std::copy(d.begin(), d.end(), c.dofs.begin());
  return c;
}

LocalContribution face_contribution(const QuadMesh &mesh, const DofMap &dofs,
                                    const QuadMesh::Face &face)
{
  LocalContribution c;
  const auto o = dofs.cell_dofs(mesh.active_index(face.owner));
  std::copy(o.begin(), o.end(), c.dofs.begin());
  c.n = 5;
  if (face.neighbor >= 0)
  {
    const auto n = dofs.cell_dofs(mesh.active_index(face.neighbor));
    std::copy(n.begin(), n.end(), c.dofs.begin() + 5);
    c.n = 10;
  }
  return c;
}

SystemAssembler::SystemAssembler(const QuadMesh &mesh, const DofMap &dofs)
  : generation_(mesh.generation())
{
  if (dofs.mesh_generation() != mesh.generation())
  {
    throw std::invalid_argument("SystemAssembler: dof map built for a different mesh");
  }
  const int n = dofs.total();
  partition_ = {{0, dofs.n_cg()}, {dofs.n_cg(), n}};
  expansion_.resize(static_cast<std::size_t>(n));
  for (int d = 0; d < n; ++d)
  {
    expansion_[static_cast<std::size_t>(d)] = dofs.expand(d);
    if (dofs.is_constrained(d))
    {
      constrained_.push_back(d);
    }
  }

  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n));
  auto couple = [&](std::span<const int> local)
  {
    std::vector<int> expanded;
    for (int d : local)
    {
      for (const auto &[m, w] : expansion_[static_cast<std::size_t>(d)])
      {
        expanded.push_back(m);
      }
    }
    std::sort(expanded.begin(), expanded.end());
    expanded.erase(std::unique(expanded.begin(), expanded.end()), expanded.end());
    for (int r : expanded)
    {
      auto &row = rows[static_cast<std::size_t>(r)];
      row.insert(row.end(), expanded.begin(), expanded.end());
    }
  };
  for (int a = 0; a < dofs.n_const(); ++a)
  {
    const auto d = dofs.cell_dofs(a);
    couple(d);
  }
  for (const auto &f : mesh.faces())
  {
    if (f.neighbor >= 0)
    {
      const auto c = face_contribution(mesh, dofs, f);
      couple(std::span<const int>(c.dofs.data(), static_cast<std::size_t>(c.n)));
    }
  }
  for (int d = 0; d < n; ++d)
  {
    rows[static_cast<std::size_t>(d)].push_back(d);
  }
  pattern_ = SparseMatrix::from_pattern(n, n, std::move(rows));
}

LinearSystem SystemAssembler::zero_system() const
{
  LinearSystem s{pattern_, std::vector<double>(static_cast<std::size_t>(pattern_.rows()), 0.0)};
  return s;
}

void SystemAssembler::scatter(LinearSystem &system, const LocalContribution &local) const
{
  for (int i = 0; i < local.n; ++i)
  {
    const auto &ei = expansion_[static_cast<std::size_t>(local.dofs[static_cast<std::size_t>(i)])];
    for (const auto &[I, wi] : ei)
    {
      system.rhs[static_cast<std::size_t>(I)] += wi * local.rhs[static_cast<std::size_t>(i)];
      for (int j = 0; j < local.n; ++j)
      {
        const double v = local.a(i, j);
        if (v == 0.0)
        {
          continue;
        }
        for (const auto &[J, wj] :
             expansion_[static_cast<std::size_t>(local.dofs[static_cast<std::size_t>(j)])])
        {
          system.matrix.add(I, J, wi * wj * v);
        }
      }
    }
  }
}

void SystemAssembler::finish(LinearSystem &system) const
{
  if (constrained_.empty())
  {
    return;
  }
  // Unit rows scaled like the rest of the diagonal keep the preconditioned spectrum tight.
  double scale = 0.0;
  int count = 0;
  for (int r = 0; r < system.matrix.rows(); ++r)
  {
    if (expansion_[static_cast<std::size_t>(r)].size() == 1 &&
        expansion_[static_cast<std::size_t>(r)][0].first == r)
    {
      scale += std::abs(system.matrix.at(r, r));
      ++count;
    }
  }
  scale = count > 0 && scale > 0.0 ? scale / count : 1.0;
  for (int r : constrained_)
  {
    system.matrix.make_unit_row(r, scale);
    system.rhs[static_cast<std::size_t>(r)] = 0.0;
  }
}

LinearSystem SystemAssembler::assemble(std::span<const LocalContribution> locals) const
{
  LinearSystem s = zero_system();
  for (const auto &l : locals)
  {
    scatter(s, l);
  }
  finish(s);
  return s;
}

std::shared_ptr<const SystemAssembler> assembler_for(const QuadMesh &mesh, const DofMap &dofs)
{
  static std::mutex mutex;
  static std::deque<std::shared_ptr<const SystemAssembler>> cache;
  constexpr std::size_t capacity = 4;

  std::lock_guard<std::mutex> lock(mutex);
  for (const auto &a : cache)
  {
    if (a->mesh_generation() == mesh.generation() && a->size() == dofs.total())
    {
      return a;
    }
  }
  auto fresh = std::make_shared<const SystemAssembler>(mesh, dofs);
  cache.push_front(fresh);
  if (cache.size() > capacity)
  {
    cache.pop_back();
  }
  return fresh;
}

GmresResult solve_system(const LinearSystem &system, const SystemAssembler &assembler,
                         const QuadMesh &mesh, const DofMap &dofs, std::span<double> x,
                         const GmresOptions &options)
{
  const BlockDiagonalPreconditioner precond(system.matrix, assembler.partition());
  auto result = gmres(system.matrix, system.rhs, x, options, &precond);
  dofs.distribute(x);
  dofs.normalize(mesh, x);
  return result;
}

}  // namespace egmd
