// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_STABILIZATION_HPP
#define EGMD_STABILIZATION_HPP

#include <span>
#include <vector>

#include "egmd/assembly.hpp"
#include "egmd/egspace.hpp"
#include "egmd/flow.hpp"
#include "egmd/mesh.hpp"
#include "egmd/transport.hpp"

namespace egmd
{

enum class EntropyKind
{
  Power,    // |c|^b / b
  Log,      // -log(|c (1 - c)| + eps)
  Kruzkov,  // |c - r|
};

enum class Extrapolation
{
  TimeLagged,    // C* = C^n
  Extrapolated,  // C* = 2 C^n - C^{n-1}
};

struct EntropyConfig
{
  EntropyKind kind = EntropyKind::Log;
  double b = 2.0;
  double epsilon = 1e-4;
  double r = 0.0;
  double lambda_lin = 0.5;
  double lambda_ent = 0.5;
  Extrapolation mode = Extrapolation::Extrapolated;

  void validate() const;
};

struct EntropyValue
{
  double e = 0.0;
  double de = 0.0;
};

EntropyValue entropy_eval(const EntropyConfig &config, double c);

struct StabilizationInputs
{
  const QuadMesh *mesh = nullptr;
  const DofMap *dofs = nullptr;
  EntropyConfig config;
  const FaceFlux *flux = nullptr;  // U^{n+1}
  std::span<const double> c_n;
  std::span<const double> c_nm1;  // empty on the first step: falls back to time-lagged
  const SourceField *sources = nullptr;
  double dt = 1.0;
  int bdf_order = 2;
  double porosity = 1.0;
  double rho0 = 1.0;

  void validate() const;
  bool lagged() const;
};

// (C^n)* per the extrapolation mode.
Field extrapolated_state(const StabilizationInputs &in);

// Per cell: max over quadrature points of |R_Ent|,
// R = phi BDF(E(C*)) + U.E'(C*) grad C* - E'(C*) q~ / rho0, q~ = c_q q+ + C* q-.
std::vector<double> cell_residual(const StabilizationInputs &in, Exec exec = Exec::Auto);

// J = |{U}.n| |[E(C*)]| / h_e at one face point.
double face_residual_value(double avg_un, double e_jump, double h_e);
// Per face: max over its points (0 on boundary faces).
std::vector<double> face_residual(const StabilizationInputs &in, Exec exec = Exec::Auto);

// || E(C*) - mean(E(C*)) ||_inf over cell quadrature points, and ||E(C*)||_inf.
struct EntropyNormalization
{
  double deviation = 0.0;
  double magnitude = 0.0;
};

EntropyNormalization entropy_normalization(const StabilizationInputs &in);

struct ViscosityField
{
  std::vector<double> mu_lin;
  std::vector<double> mu_ent;
  std::vector<double> mu_stab;
  std::vector<double> indicator;  // ER_Ent per cell
  double normalization = 0.0;

  // Cells where the linear viscosity is the active branch (and nonzero).
  std::vector<bool> linear_selected() const;
};

// Combines the cell and face residuals into ER and evaluates mu_Stab = min(mu_Lin, mu_Ent).
// h is the cell diameter.
ViscosityField viscosity(const EntropyConfig &config, const QuadMesh &mesh, const FaceFlux &flux,
                         std::span<const double> cell_res, std::span<const double> face_res,
                         const EntropyNormalization &norm);

ViscosityField compute_stabilization(const StabilizationInputs &in, Exec exec = Exec::Auto);

}  // namespace egmd

#endif  // EGMD_STABILIZATION_HPP
