// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_PHYSICS_HPP
#define EGMD_PHYSICS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "egmd/geometry.hpp"

namespace egmd
{

struct DispersionParams
{
  double d_m = 0.0;      // molecular diffusivity, m^2/s
  double alpha_l = 0.0;  // longitudinal dispersivity, m
  double alpha_t = 0.0;  // transverse dispersivity, m

  // All positive, or all zero for pure advection.
  void validate() const;
  bool pure_advection() const { return d_m == 0.0 && alpha_l == 0.0 && alpha_t == 0.0; }
};

// D(u) = d_m I + |u| (alpha_l E(u) + alpha_t (I - E(u))), E = u u^T / |u|^2.
Mat2 dispersion_tensor(const DispersionParams &p, const Vec2 &u);

struct ViscosityModel
{
  double mu_s = 1e-3;  // injected solvent, Pa s
  double mu_0 = 1e-3;  // resident fluid, Pa s

  void validate() const;
  double ratio() const { return mu_0 / mu_s; }
};

// Quarter-power mixing rule, (c mu_s^-1/4 + (1 - c) mu_0^-1/4)^-4. c is clamped to [0, 1].
double mix_viscosity(const ViscosityModel &m, double c);

// rho0 (1 + c_F p)
double density(double rho0, double compressibility, double p);

// Sum of Gaussian bumps of width 0.05 around the centers, clamped to [0.01, 4].
double random_permeability(std::span<const Point2> centers, const Point2 &x);
// Uniformly distributed centers in the domain, reproducible from the seed.
std::vector<Point2> random_centers(const Domain &domain, int count, std::uint64_t seed);

// 1e-3 inside (3/8, 5/8) x (1/4, 3/4) of the unit square, 1 elsewhere.
double block_permeability(const Point2 &x);

// Time-reversing vortex on the unit square; zero at t = T_p / 2.
Vec2 single_vortex_velocity(double x, double y, double t, double period);

// L U / d_m; throws for d_m <= 0.
double peclet(double length, double velocity, double d_m);

}  // namespace egmd

#endif  // EGMD_PHYSICS_HPP
