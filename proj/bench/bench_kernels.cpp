// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels against their OpenMP variants. Mesh size is the benchmark argument;
// the OpenMP runs use all threads OpenMP reports.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

#include "egmd/flow.hpp"
#include "egmd/parallel.hpp"
#include "egmd/physics.hpp"

using namespace egmd;

namespace
{

struct Problem
{
  QuadMesh mesh;
  DofMap dofs;
  FlowBC bc;
  KappaField kappa;
  Field p0;
  std::vector<double> q;
  PressureInputs in;

  explicit Problem(int n) : mesh(QuadMesh::uniform({0.0, 0.0, 1.0, 1.0}, n, n)), dofs(mesh)
  {
    bc.set(Side::West, BoundaryData::dirichlet(1.0))
        .set(Side::East, BoundaryData::dirichlet(0.0))
        .set(Side::South, BoundaryData::neumann(0.0))
        .set(Side::North, BoundaryData::neumann(0.0));
    kappa.resize(mesh.num_active());
    for (std::size_t a = 0; a < kappa.size(); ++a)
    {
      kappa[a] = Mat2::identity(block_permeability(mesh.cell(mesh.active_cells()[a]).bbox.center()));
    }
    p0.assign(static_cast<std::size_t>(dofs.total()), 0.0);
    q.assign(mesh.num_active(), 0.0);
    in.mesh = &mesh;
    in.dofs = &dofs;
    in.bc = &bc;
    in.kappa = kappa;
    in.p_n = p0;
    in.source = q;
    in.dt = 0.01;
    in.bdf_order = 1;
    in.params.compressibility = 1e-8;
  }
};

int omp_threads()
{
#ifdef _OPENMP
  return std::max(2, omp_get_max_threads());
#else
  return 1;
#endif
}

template <bool Parallel>
void spmv(benchmark::State &state)
{
  const Problem p(static_cast<int>(state.range(0)));
  const auto sys = assemble_pressure(p.in, Exec::Serial);
  std::vector<double> x(sys.rhs.size(), 1.0), y(sys.rhs.size());
  parallel::set_threads(Parallel ? omp_threads() : 1);
  for (auto _ : state)
  {
    if constexpr (Parallel)
    {
      kernels::spmv_omp(sys.matrix, x, y);
    }
    else
    {
      kernels::spmv_serial(sys.matrix, x, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
  parallel::set_threads(1);
  state.counters["nnz"] = static_cast<double>(sys.matrix.nnz());
}

template <Exec E>
void pressure_assembly(benchmark::State &state)
{
  const Problem p(static_cast<int>(state.range(0)));
  parallel::set_threads(E == Exec::OpenMP ? omp_threads() : 1);
  for (auto _ : state)
  {
    auto sys = assemble_pressure(p.in, E);
    benchmark::DoNotOptimize(sys.rhs.data());
  }
  parallel::set_threads(1);
  state.counters["dofs"] = p.dofs.total();
}

}  // namespace

BENCHMARK(spmv<false>)->Name("spmv/serial")->Arg(64)->Arg(256);
BENCHMARK(spmv<true>)->Name("spmv/openmp")->Arg(64)->Arg(256);
BENCHMARK(pressure_assembly<Exec::Serial>)->Name("pressure_assembly/serial")->Arg(32)->Arg(128);
BENCHMARK(pressure_assembly<Exec::OpenMP>)->Name("pressure_assembly/openmp")->Arg(32)->Arg(128);

BENCHMARK_MAIN();
