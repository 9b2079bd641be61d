// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_OUTPUT_HPP
#define EGMD_OUTPUT_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "egmd/egspace.hpp"
#include "egmd/mesh.hpp"

namespace egmd
{

// Thresholds and sampling of the finger measurements. Flow runs along +x.
struct FingerDiagnostics
{
  double x_tip = 0.0;   // furthest x with C >= 0.5
  double x_lead = 0.0;  // furthest x with C >= 0.1
  double x_trail = 0.0;  // C >= 0.9 everywhere left of it
  double mixing_length = 0.0;
  // Population variance over the sampling lines of the per-line tip position, m^2.
  double tip_variance = 0.0;
};

// Samples C along horizontal lines (one per finest-cell row) and locates threshold crossings by
// linear interpolation between samples. Thresholds never reached give the inflow edge.
FingerDiagnostics finger_diagnostics(const QuadMesh &mesh, const DofMap &dofs,
                                     std::span<const double> c);

struct ValueRange
{
  double min = 0.0;
  double max = 0.0;
};

// Extremes of an EG function over the cell quadrature points and cell corners.
ValueRange value_range(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> c);

// || c - f ||_{L2} with the 3x3 Gauss rule per cell.
double l2_distance(const QuadMesh &mesh, const DofMap &dofs, std::span<const double> c,
                   const std::function<double(const Point2 &)> &f);

struct VtkFields
{
  std::span<const double> concentration;  // EG coefficients
  std::span<const double> pressure;       // EG coefficients, may be empty
  std::span<const double> mu_stab;        // per active cell, may be empty
  std::span<const double> indicator;      // per active cell, may be empty
  std::span<const double> permeability;   // per active cell, may be empty
  bool cell_means = false;                // also write the cell mean of C
};

// Legacy ASCII unstructured grid. Points are the continuous-block vertices, hanging ones
// included. Throws std::runtime_error on I/O failure.
void write_vtk(const std::string &path, const QuadMesh &mesh, const DofMap &dofs,
               const VtkFields &fields);

struct StepDiagnostics
{
  int step = 0;
  double time = 0.0;
  std::size_t cells = 0;
  int dofs = 0;
  double mass = 0.0;
  double cmin = 0.0, cmax = 0.0;
  double xtip = 0.0;
  double tip_velocity = 0.0;
  double mixing_length = 0.0;
  int gmres_flow = 0;
  int gmres_transport = 0;
  // Not written to the CSV.
  double tip_variance = 0.0;
  double conservation = 0.0;  // max per-cell residual of the reconstructed flux
  double max_flux = 0.0;      // max |U.n| over face points
};

inline constexpr const char *kCsvHeader =
    "step,time,cells,dofs,mass,cmin,cmax,xtip,tip_velocity,mixing_length,gmres_flow,"
    "gmres_transport";

// Throws std::runtime_error on I/O failure.
void write_csv(const std::string &path, std::span<const StepDiagnostics> rows);

}  // namespace egmd

#endif  // EGMD_OUTPUT_HPP
