// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_FLOW_HPP
#define EGMD_FLOW_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "egmd/assembly.hpp"
#include "egmd/egspace.hpp"
#include "egmd/geometry.hpp"
#include "egmd/linalg.hpp"
#include "egmd/mesh.hpp"

namespace egmd
{

// BDF(u) = (a0 u^{n+1} + a1 u^n + a2 u^{n-1}) / dt
struct BdfCoefficients
{
  double a0 = 1.0, a1 = -1.0, a2 = 0.0;
};

BdfCoefficients bdf_coefficients(int m);
double bdf_apply(int m, double dt, double u_np1, double u_n, double u_nm1);

struct FaceWeights
{
  double beta = 0.5;     // weight of the owner (+) side in {.}_beta
  double kappa_e = 0.0;  // harmonic mean of the directional permeabilities
};

FaceWeights weights(double kappa_plus, double kappa_minus);
FaceWeights weights(const Mat2 &kappa_plus, const Mat2 &kappa_minus, const Vec2 &normal);

struct FlowParams
{
  double porosity = 1.0;
  double rho0 = 1.0;
  double compressibility = 0.0;  // c_F
  double theta = 0.0;            // -1 SIPG, 0 IIPG, 1 NIPG
  double penalty = 8.0;          // alpha(k)
  int bdf_order = 2;

  void validate() const;
};

enum class BCKind
{
  Dirichlet,
  Neumann
};

// Dirichlet value is a pressure; Neumann value is the outward mass flux rho0 u.n.
struct BoundaryData
{
  BCKind kind = BCKind::Neumann;
  std::function<double(const Point2 &, double)> value;

  static BoundaryData dirichlet(double v);
  static BoundaryData neumann(double v);
};

struct FlowBC
{
  std::array<std::optional<BoundaryData>, 4> side;

  FlowBC &set(Side s, BoundaryData d);
  // Throws std::invalid_argument when the side has no condition.
  const BoundaryData &on(Side s) const;
};

// Per active cell permeability-over-viscosity tensor.
using KappaField = std::vector<Mat2>;

struct PressureInputs
{
  const QuadMesh *mesh = nullptr;
  const DofMap *dofs = nullptr;
  FlowParams params;
  const FlowBC *bc = nullptr;
  std::span<const Mat2> kappa;
  std::span<const double> p_n;
  std::span<const double> p_nm1;   // may be empty when bdf_order == 1
  std::span<const double> source;  // per active cell q; empty means zero
  double dt = 1.0;
  double time = 0.0;  // t^{n+1}, passed to boundary data
  int bdf_order = 1;  // effective order for this step

  void validate() const;
};

std::vector<LocalContribution> pressure_contributions(const PressureInputs &in,
                                                      Exec exec = Exec::Auto);
LinearSystem assemble_pressure(const PressureInputs &in, Exec exec = Exec::Auto);

struct PressureSolve
{
  Field p;
  GmresResult gmres;
};

// Initial guess: p_n when it lives on the same dof map, else zero.
PressureSolve solve_pressure(const PressureInputs &in, const GmresOptions &options);

//
// Reconstructed conservative velocity. Normal fluxes live at the three Gauss points of each
// face, oriented by the face normal (owner to neighbor).
//
struct FaceFlux
{
  std::uint64_t mesh_generation = 0;
  std::vector<std::array<double, 3>> un;
  std::vector<double> total;  // integral of U.n over the face
  // Plain average of the two cell velocities dotted with n (boundary: the trace).
  std::vector<std::array<double, 3>> avg_un;
  std::vector<std::array<Vec2, 9>> cell_velocity;  // at the cell quadrature points
  std::vector<Vec2> cell_mean_velocity;

  double max_abs_un() const;
};

FaceFlux reconstruct_flux(const PressureInputs &in, std::span<const double> p_np1);

// Flux of a prescribed velocity field (used by the analytic-velocity scenarios).
FaceFlux flux_from_velocity(const QuadMesh &mesh,
                            const std::function<Vec2(const Point2 &)> &velocity);

// Per-cell mass balance of the reconstructed flux:
// r_T = rho0 phi c_F int_T BDF(P) + rho0 sum_e U.n |e| - int_T q.
std::vector<double> local_conservation_residual(const PressureInputs &in,
                                                std::span<const double> p_np1,
                                                const FaceFlux &flux);
double max_abs(std::span<const double> v);

}  // namespace egmd

#endif  // EGMD_FLOW_HPP
