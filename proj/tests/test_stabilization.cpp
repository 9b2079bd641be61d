// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "egmd/parallel.hpp"
#include "egmd/stabilization.hpp"

using namespace egmd;

namespace
{

const Domain unit{0.0, 0.0, 1.0, 1.0};

struct Setup
{
  QuadMesh mesh;
  DofMap dofs;
  FaceFlux flux;
  Field c;

  Setup(int n, Vec2 u, const std::function<double(const Point2 &)> &f)
    : mesh(QuadMesh::uniform(unit, n, n)),
      dofs(mesh),
      flux(flux_from_velocity(mesh, [u](const Point2 &) { return u; })),
      c(interpolate(f, mesh, dofs))
  {
  }

  StabilizationInputs inputs(const EntropyConfig &cfg) const
  {
    StabilizationInputs in;
    in.mesh = &mesh;
    in.dofs = &dofs;
    in.config = cfg;
    in.flux = &flux;
    in.c_n = c;
    in.c_nm1 = c;
    in.dt = 0.1;
    return in;
  }
};

EntropyConfig power2()
{
  EntropyConfig c;
  c.kind = EntropyKind::Power;
  c.b = 2.0;
  return c;
}

double max_of(const std::vector<double> &v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace

TEST_CASE("entropy functions")
{
  auto p = power2();
  auto e = entropy_eval(p, 3.0);
  CHECK(e.e == doctest::Approx(4.5));
  CHECK(e.de == doctest::Approx(3.0));
  e = entropy_eval(p, -2.0);
  CHECK(e.e == doctest::Approx(2.0));
  CHECK(e.de == doctest::Approx(-2.0));

  EntropyConfig lg;
  lg.kind = EntropyKind::Log;
  lg.epsilon = 1e-4;
  CHECK(entropy_eval(lg, 0.5).e == doctest::Approx(-std::log(0.2501)).epsilon(1e-14));
  CHECK(entropy_eval(lg, 0.5).e == doctest::Approx(1.38589).epsilon(1e-5));
  CHECK(entropy_eval(lg, 0.5).de == 0.0);

  EntropyConfig kz;
  kz.kind = EntropyKind::Kruzkov;
  kz.r = 0.3;
  CHECK(entropy_eval(kz, 1.0).e == doctest::Approx(0.7));
  CHECK(entropy_eval(kz, 0.0).de == -1.0);

  SUBCASE("derivative matches finite differences")
  {
    for (const auto &cfg : {p, lg})
    {
      for (double c : {-0.7, 0.2, 0.45, 0.8, 1.3})
      {
        const double h = 1e-6;
        const double fd = (entropy_eval(cfg, c + h).e - entropy_eval(cfg, c - h).e) / (2 * h);
        CHECK(entropy_eval(cfg, c).de == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }

  SUBCASE("midpoint convexity")
  {
    // Log is convex on [0, 1]; the others everywhere.
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> any(-3.0, 3.0), unitd(0.0, 1.0);
    for (int i = 0; i < 500; ++i)
    {
      for (const auto &cfg : {p, kz})
      {
        const double a = any(rng), b = any(rng);
        CHECK(entropy_eval(cfg, 0.5 * (a + b)).e <=
              0.5 * (entropy_eval(cfg, a).e + entropy_eval(cfg, b).e) + 1e-12);
      }
      const double a = unitd(rng), b = unitd(rng);
      CHECK(entropy_eval(lg, 0.5 * (a + b)).e <=
            0.5 * (entropy_eval(lg, a).e + entropy_eval(lg, b).e) + 1e-12);
    }
  }
}

TEST_CASE("entropy config validation")
{
  auto p = power2();
  p.b = 3.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.b = 4.0;
  CHECK_NOTHROW(p.validate());
  EntropyConfig lg;
  lg.epsilon = 0.0;
  CHECK_THROWS_AS(lg.validate(), std::invalid_argument);
  lg.epsilon = 1e-4;
  lg.lambda_ent = -1.0;
  CHECK_THROWS_AS(lg.validate(), std::invalid_argument);
}

TEST_CASE("constant state has no residual and no viscosity")
{
  Setup s(8, {1.0, 0.5}, [](const Point2 &) { return 0.3; });
  for (auto kind : {EntropyKind::Power, EntropyKind::Log})
  {
    auto cfg = power2();
    cfg.kind = kind;
    const auto in = s.inputs(cfg);
    CHECK(max_of(cell_residual(in)) < 1e-12);
    CHECK(max_of(face_residual(in)) < 1e-12);
    const auto v = compute_stabilization(in);
    CHECK(max_of(v.mu_stab) == 0.0);
    CHECK(max_of(v.mu_ent) == 0.0);
  }
}

TEST_CASE("entropy-exact steady state")
{
  // C = x, U = (1, 0), q = 1 injecting c_q = 1: E'(C)(U.grad C - q~) = x (1 - 1) = 0.
  Setup s(8, {1.0, 0.0}, [](const Point2 &x) { return x.x; });
  SourceField src;
  src.q.assign(s.mesh.num_active(), 1.0);
  src.c_q = 1.0;
  for (auto mode : {Extrapolation::Extrapolated, Extrapolation::TimeLagged})
  {
    auto cfg = power2();
    cfg.mode = mode;
    auto in = s.inputs(cfg);
    in.sources = &src;
    CHECK(max_of(cell_residual(in)) < 1e-12);
  }
  // Without the source the residual is E'(C) = x.
  const auto r = cell_residual(s.inputs(power2()));
  CHECK(max_of(r) == doctest::Approx(CellQuadrature::get().points[2].x * 0.125 + 0.875));
}

TEST_CASE("step profile concentrates the residual")
{
  Setup s(16, {1.0, 0.0}, [](const Point2 &x) { return 0.5 * (1.0 + std::tanh((0.5 - x.x) / 0.02)); });
  const auto r = cell_residual(s.inputs(power2()));
  double near = 0.0, far = 0.0;
  for (std::size_t a = 0; a < s.mesh.num_active(); ++a)
  {
    const auto &box = s.mesh.cell(s.mesh.active_cells()[a]).bbox;
    const double d = std::abs(box.center().x - 0.5);
    if (d < 0.07)
    {
      near = std::max(near, r[a]);
    }
    else if (d > 0.25)
    {
      far = std::max(far, r[a]);
    }
  }
  CHECK(near > 1.0);
  CHECK(near >= 10.0 * far);
}

TEST_CASE("face residual")
{
  CHECK(face_residual_value(2.0, 1.0, 0.5) == doctest::Approx(4.0));
  CHECK(face_residual_value(-2.0, -1.0, 0.5) == doctest::Approx(4.0));
  CHECK(face_residual_value(0.0, 3.0, 0.5) == 0.0);

  SUBCASE("continuous field has no jumps")
  {
    Setup s(8, {1.0, 1.0}, [](const Point2 &x) { return x.x * x.y; });
    Field cg = s.c;
    std::fill(cg.begin() + s.dofs.n_cg(), cg.end(), 0.0);
    auto in = s.inputs(power2());
    in.c_n = cg;
    in.c_nm1 = cg;
    CHECK(max_of(face_residual(in)) < 1e-13);
  }

  SUBCASE("zero velocity")
  {
    Setup s(8, {0.0, 0.0}, [](const Point2 &x) { return x.x > 0.5 ? 1.0 : 0.0; });
    CHECK(max_of(face_residual(s.inputs(power2()))) == 0.0);
  }

  SUBCASE("boundary faces carry nothing")
  {
    Setup s(4, {1.0, 0.0}, [](const Point2 &x) { return x.x > 0.5 ? 1.0 : 0.0; });
    const auto j = face_residual(s.inputs(power2()));
    for (std::size_t f = 0; f < j.size(); ++f)
    {
      if (s.mesh.faces()[f].neighbor < 0)
      {
        CHECK(j[f] == 0.0);
      }
    }
  }
}

TEST_CASE("viscosity selection")
{
  Setup s(8, {1.0, 0.0}, [](const Point2 &x) { return x.x; });
  const auto cfg = power2();
  const std::size_t n = s.mesh.num_active();
  const std::vector<double> no_faces(s.mesh.faces().size(), 0.0);
  const EntropyNormalization norm{0.5, 0.5};
  const double h = std::sqrt(2.0) / 8.0;

  SUBCASE("zero velocity gives zero viscosity")
  {
    const auto still = flux_from_velocity(s.mesh, [](const Point2 &) { return Vec2{}; });
    const auto v = viscosity(cfg, s.mesh, still, std::vector<double>(n, 1e6), no_faces, norm);
    CHECK(max_of(v.mu_stab) == 0.0);
  }

  SUBCASE("shock selects the linear viscosity")
  {
    const auto v = viscosity(cfg, s.mesh, s.flux, std::vector<double>(n, 1e9), no_faces, norm);
    for (std::size_t a = 0; a < n; ++a)
    {
      CHECK(v.mu_stab[a] == v.mu_lin[a]);
      CHECK(v.mu_lin[a] == doctest::Approx(cfg.lambda_lin * h));
    }
    for (bool b : v.linear_selected())
    {
      CHECK(b);
    }
  }

  SUBCASE("smooth region is left alone")
  {
    const auto v = viscosity(cfg, s.mesh, s.flux, std::vector<double>(n, 0.0), no_faces, norm);
    CHECK(max_of(v.mu_stab) == 0.0);
  }

  SUBCASE("homogeneous in the indicator")
  {
    std::vector<double> r(n), r2(n);
    for (std::size_t a = 0; a < n; ++a)
    {
      r[a] = 0.01 * static_cast<double>(a + 1);
      r2[a] = 2.0 * r[a];
    }
    const auto v1 = viscosity(cfg, s.mesh, s.flux, r, no_faces, norm);
    const auto v2 = viscosity(cfg, s.mesh, s.flux, r2, no_faces, norm);
    for (std::size_t a = 0; a < n; ++a)
    {
      CHECK(v2.mu_ent[a] == 2.0 * v1.mu_ent[a]);
    }
  }

  SUBCASE("faces feed both neighbors")
  {
    std::vector<double> j(s.mesh.faces().size(), 0.0);
    std::size_t pick = 0;
    while (s.mesh.faces()[pick].neighbor < 0)
    {
      ++pick;
    }
    j[pick] = 3.0;
    const auto v = viscosity(cfg, s.mesh, s.flux, std::vector<double>(n, 1.0), j, norm);
    const auto &f = s.mesh.faces()[pick];
    CHECK(v.indicator[static_cast<std::size_t>(s.mesh.active_index(f.owner))] == 3.0);
    CHECK(v.indicator[static_cast<std::size_t>(s.mesh.active_index(f.neighbor))] == 3.0);
    CHECK(std::count(v.indicator.begin(), v.indicator.end(), 3.0) == 2);
  }
}

TEST_CASE("viscosity bounded by the linear viscosity")
{
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  QuadMesh mesh = QuadMesh::uniform(unit, 4, 4);
  for (int round = 0; round < 3; ++round)
  {
    std::vector<int> marks;
    for (int id : mesh.active_cells())
    {
      if (u(rng) < 0.3)
      {
        marks.push_back(id);
      }
    }
    mesh.refine(marks);
  }
  const DofMap dofs(mesh);
  const auto flux = flux_from_velocity(
      mesh, [](const Point2 &x) { return Vec2{-std::sin(std::numbers::pi * x.y), x.x - 0.5}; });
  Field c(static_cast<std::size_t>(dofs.total())), c1(c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
  {
    c[i] = u(rng);
    c1[i] = u(rng);
  }
  dofs.distribute(c);
  dofs.distribute(c1);
  for (auto kind : {EntropyKind::Power, EntropyKind::Log})
  {
    StabilizationInputs in;
    in.mesh = &mesh;
    in.dofs = &dofs;
    in.config.kind = kind;
    in.flux = &flux;
    in.c_n = c;
    in.c_nm1 = c1;
    in.dt = 0.01;
    const auto v = compute_stabilization(in);
    for (std::size_t a = 0; a < mesh.num_active(); ++a)
    {
      CHECK(v.mu_stab[a] >= 0.0);
      CHECK(v.mu_stab[a] <= v.mu_lin[a]);
      CHECK(v.indicator[a] >= 0.0);
    }
  }
}

TEST_CASE("entropy viscosity decays like h^2 on smooth data")
{
  auto f = [](const Point2 &x)
  { return 0.5 + 0.25 * std::sin(std::numbers::pi * x.x) * std::cos(std::numbers::pi * x.y); };
  std::vector<double> mu;
  for (int n : {8, 16, 32, 64})
  {
    Setup s(n, {1.0, 0.5}, f);
    mu.push_back(max_of(compute_stabilization(s.inputs(power2())).mu_ent));
  }
  for (std::size_t i = 1; i < mu.size(); ++i)
  {
    const double slope = std::log2(mu[i - 1] / mu[i]);
    CHECK(slope >= 1.8);
  }
}

TEST_CASE("first step falls back to the time-lagged state")
{
  Setup s(4, {1.0, 0.0}, [](const Point2 &x) { return x.x * x.x; });
  auto in = s.inputs(power2());
  in.c_nm1 = {};
  CHECK(in.lagged());
  const auto r = cell_residual(in);
  CHECK(max_of(r) > 0.0);
  Field twice = s.c;
  for (double &v : twice)
  {
    v *= 2.0;
  }
  in.c_nm1 = twice;
  CHECK_FALSE(in.lagged());
  const auto cs = extrapolated_state(in);
  for (std::size_t i = 0; i < cs.size(); ++i)
  {
    CHECK(cs[i] == doctest::Approx(0.0));
  }
}

TEST_CASE("serial and OpenMP residuals agree")
{
  Setup s(16, {0.7, -0.3}, [](const Point2 &x) { return x.x > x.y ? 1.0 : 0.0; });
  EntropyConfig cfg;
  const auto in = s.inputs(cfg);
  const int saved = parallel::threads();
  parallel::set_threads(3);
  const auto a = compute_stabilization(in, Exec::Serial);
  const auto b = compute_stabilization(in, Exec::OpenMP);
  parallel::set_threads(saved);
  CHECK(a.mu_stab == b.mu_stab);
  CHECK(a.indicator == b.indicator);
}

TEST_CASE("stabilization input validation")
{
  Setup s(4, {1.0, 0.0}, [](const Point2 &) { return 0.0; });
  auto in = s.inputs(power2());
  in.dt = 0.0;
  CHECK_THROWS_AS(cell_residual(in), std::invalid_argument);
  in = s.inputs(power2());
  Field short_c(3, 0.0);
  in.c_n = short_c;
  CHECK_THROWS_AS(face_residual(in), std::invalid_argument);
  in = s.inputs(power2());
  in.flux = nullptr;
  CHECK_THROWS_AS(cell_residual(in), std::invalid_argument);
}
