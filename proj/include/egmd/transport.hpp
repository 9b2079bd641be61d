// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_TRANSPORT_HPP
#define EGMD_TRANSPORT_HPP

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "egmd/assembly.hpp"
#include "egmd/egspace.hpp"
#include "egmd/flow.hpp"
#include "egmd/geometry.hpp"
#include "egmd/mesh.hpp"

namespace egmd
{

// C+ when U.n+ < 0, else C-.
double upwind_value(double c_plus, double c_minus, double un_plus);

struct SourceSplit
{
  double plus = 0.0;
  double minus = 0.0;
};

SourceSplit source_split(double q);

struct TransportParams
{
  double porosity = 1.0;
  double rho0 = 1.0;
  double penalty = 2.0;       // alpha_c
  double stab_penalty = 1.0;  // alpha_s
  int bdf_order = 2;

  void validate() const;
};

// Inflow concentration per domain side. Inflow and outflow are decided per face point from
// the sign of U.n; an inflow point on a side without a value takes the interior trace.
struct TransportBC
{
  std::array<std::optional<double>, 4> inflow;

  TransportBC &set_inflow(Side s, double c_in);
};

// Volumetric mass source per active cell and the concentration it injects.
struct SourceField
{
  std::vector<double> q;
  double c_q = 1.0;
};

struct TransportInputs
{
  const QuadMesh *mesh = nullptr;
  const DofMap *dofs = nullptr;
  TransportParams params;
  const TransportBC *bc = nullptr;
  const FaceFlux *flux = nullptr;
  std::span<const Mat2> dispersion;  // per active cell; empty means pure advection
  std::span<const double> mu_stab;   // per active cell; empty means unstabilized
  std::span<const double> c_n;
  std::span<const double> c_nm1;  // may be empty when bdf_order == 1
  const SourceField *sources = nullptr;
  double dt = 1.0;
  int bdf_order = 1;

  void validate() const;
};

std::vector<LocalContribution> transport_contributions(const TransportInputs &in,
                                                       Exec exec = Exec::Auto);
LinearSystem assemble_transport(const TransportInputs &in, Exec exec = Exec::Auto);

struct TransportSolve
{
  Field c;
  GmresResult gmres;
};

TransportSolve solve_transport(const TransportInputs &in, const GmresOptions &options);

}  // namespace egmd

#endif  // EGMD_TRANSPORT_HPP
