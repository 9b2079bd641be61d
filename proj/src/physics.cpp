// SPDX-License-Identifier: Apache-2.0

#include "egmd/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace egmd
{

void DispersionParams::validate() const
{
  const bool all_positive = d_m > 0.0 && alpha_l > 0.0 && alpha_t > 0.0;
  if (!all_positive && !pure_advection())
  {
    throw std::invalid_argument(
        "dispersion: d_m, alpha_l, alpha_t must all be positive or all zero");
  }
}

Mat2 dispersion_tensor(const DispersionParams &p, const Vec2 &u)
{
  const double speed = norm(u);
  Mat2 d = Mat2::identity(p.d_m);
  if (speed == 0.0)
  {
    return d;
  }
  const double ex = u.x / speed, ey = u.y / speed;
  const Mat2 e{ex * ex, ex * ey, ey * ex, ey * ey};
  const Mat2 rest{1.0 - e.xx, -e.xy, -e.yx, 1.0 - e.yy};
  return d + speed * (p.alpha_l * e + p.alpha_t * rest);
}

void ViscosityModel::validate() const
{
  if (!(mu_s > 0.0) || !(mu_0 > 0.0))
  {
    throw std::invalid_argument("viscosity: mu_s and mu_0 must be positive");
  }
}

double mix_viscosity(const ViscosityModel &m, double c)
{
  c = std::clamp(c, 0.0, 1.0);
  if (c == 0.0)
  {
    return m.mu_0;
  }
  if (c == 1.0)
  {
    return m.mu_s;
  }
  const double s = c * std::pow(m.mu_s, -0.25) + (1.0 - c) * std::pow(m.mu_0, -0.25);
  return std::pow(s, -4.0);
}

double density(double rho0, double compressibility, double p)
{
  return rho0 * (1.0 + compressibility * p);
}

double random_permeability(std::span<const Point2> centers, const Point2 &x)
{
  double s = 0.0;
  for (const auto &c : centers)
  {
    const double r = norm(x - c) / 0.05;
    s += std::exp(-r * r);
  }
  return std::clamp(s, 0.01, 4.0);
}

std::vector<Point2> random_centers(const Domain &domain, int count, std::uint64_t seed)
{
  if (count < 0)
  {
    throw std::invalid_argument("random_centers: negative count");
  }
  std::mt19937_64 rng(seed);
  // Drawn by hand from the raw engine output: distribution objects are not portable.
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Point2> out(static_cast<std::size_t>(count));
  for (auto &p : out)
  {
    p.x = domain.x0 + domain.width() * unit();
    p.y = domain.y0 + domain.height() * unit();
  }
  return out;
}

double block_permeability(const Point2 &x)
{
  return (x.x > 0.375 && x.x < 0.625 && x.y > 0.25 && x.y < 0.75) ? 1e-3 : 1.0;
}

Vec2 single_vortex_velocity(double x, double y, double t, double period)
{
  using std::numbers::pi;
  const double s = std::cos(pi * t / period);
  const double sx = std::sin(pi * x), sy = std::sin(pi * y);
  return {-2.0 * sy * sx * sx * std::cos(pi * y) * s, 2.0 * sx * sy * sy * std::cos(pi * x) * s};
}

double peclet(double length, double velocity, double d_m)
{
  if (!(d_m > 0.0))
  {
    throw std::invalid_argument("peclet: molecular diffusivity must be positive");
  }
  return length * velocity / d_m;
}

}  // namespace egmd
