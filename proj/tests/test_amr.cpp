// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "egmd/amr.hpp"

using namespace egmd;

namespace
{

const Domain unit{0.0, 0.0, 1.0, 1.0};

MarkingPolicy open_policy()
{
  MarkingPolicy p;
  p.bounds.r_min = 0;
  p.bounds.r_max = 10;
  return p;
}

double total_area(const QuadMesh &m)
{
  double a = 0.0;
  for (int id : m.active_cells())
  {
    a += m.cell(id).bbox.area();
  }
  return a;
}

Field random_field(const DofMap &dofs, std::mt19937 &rng)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Field c(static_cast<std::size_t>(dofs.total()));
  for (double &v : c)
  {
    v = u(rng);
  }
  dofs.distribute(c);
  return c;
}

}  // namespace

TEST_CASE("fraction counts")
{
  CHECK(fraction_count(0.2, 10) == 2);
  CHECK(fraction_count(0.1, 10) == 1);
  CHECK(fraction_count(0.1, 9) == 0);
  CHECK(fraction_count(1.0, 7) == 7);
  CHECK(fraction_count(0.0, 7) == 0);
}

TEST_CASE("percentile marking on ten cells")
{
  QuadMesh m = QuadMesh::uniform(unit, 2, 2);
  m.refine(std::vector<int>{m.active_cells()[3]});
  m.refine(std::vector<int>{m.active_cells()[0]});
  REQUIRE(m.num_active() == 10);
  // The two level-1 cells come first; the rest are children of the refined cells.
  std::vector<double> er(10);
  for (std::size_t i = 0; i < 10; ++i)
  {
    er[i] = static_cast<double>(10 - i);
  }
  const auto mk = mark(m, er, open_policy());
  const auto &act = m.active_cells();
  CHECK(mk.refine == std::vector<int>{act[0], act[1]});
  CHECK(mk.coarsen == std::vector<int>{act[9]});

  SUBCASE("a cell that cannot merge is passed over")
  {
    std::reverse(er.begin(), er.end());
    er[1] = 0.5;
    const auto mk2 = mark(m, er, open_policy());
    CHECK(mk2.coarsen == std::vector<int>{act[2]});
  }
  CHECK(mk.mesh_generation == m.generation());
}

TEST_CASE("ties are broken by id")
{
  const QuadMesh m = QuadMesh::uniform(unit, 4, 4);
  std::vector<double> er(16, 1.0);
  std::fill(er.begin() + 8, er.end(), 0.0);
  auto p = open_policy();
  p.refine_fraction = 0.25;
  p.coarsen_fraction = 0.25;
  const auto mk = mark(m, er, p);
  const auto &act = m.active_cells();
  CHECK(mk.refine == std::vector<int>{act[0], act[1], act[2], act[3]});
  CHECK(mk.coarsen == std::vector<int>{act[8], act[9], act[10], act[11]});
}

TEST_CASE("level bounds")
{
  const QuadMesh m = QuadMesh::uniform(unit, 8, 8);  // level 3 everywhere
  std::vector<double> er(64);
  for (std::size_t i = 0; i < er.size(); ++i)
  {
    er[i] = std::sin(static_cast<double>(i));
  }
  auto p = open_policy();
  p.bounds.r_max = 3;
  CHECK(mark(m, er, p).refine.empty());
  p.bounds.r_max = 4;
  p.bounds.r_min = 3;
  const auto mk = mark(m, er, p);
  CHECK(mk.refine.size() == 12);
  CHECK(mk.coarsen.empty());
}

TEST_CASE("cell budget truncates the refinement list")
{
  // 26 cells: a 5 x 4 root grid with two cells split.
  const Domain d{0.0, 0.0, 5.0, 4.0};
  QuadMesh base = QuadMesh::uniform(d, 5, 4);
  base.refine(std::vector<int>{base.active_cells()[7]});
  base.refine(std::vector<int>{base.active_cells()[10]});
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> er(base.num_active());
  for (double &v : er)
  {
    v = u(rng);
  }
  auto p = open_policy();
  p.refine_fraction = 0.5;
  p.coarsen_fraction = 0.0;
  const auto unbounded = mark(base, er, p);
  REQUIRE(unbounded.refine.size() == fraction_count(0.5, base.num_active()));

  for (std::size_t cap : {26u, 30u, 33u, 40u, 45u, 60u, 1000u})
  {
    p.bounds.cell_max = cap;
    const auto mk = mark(base, er, p);
    // Brute force: the longest prefix of the ranking whose refinement fits.
    std::size_t best = 0;
    for (std::size_t k = 1; k <= unbounded.refine.size(); ++k)
    {
      QuadMesh trial = base;
      trial.refine(std::span<const int>(unbounded.refine.data(), k));
      if (trial.num_active() > cap)
      {
        break;
      }
      best = k;
    }
    CHECK(mk.refine.size() == best);
    CHECK(std::equal(mk.refine.begin(), mk.refine.end(), unbounded.refine.begin()));
    QuadMesh after = base;
    after.refine(mk.refine);
    CHECK(after.num_active() == mk.projected_cells);
    CHECK(after.num_active() <= cap);
  }
}

TEST_CASE("marking validation")
{
  const QuadMesh m = QuadMesh::uniform(unit, 2, 2);
  auto p = open_policy();
  CHECK_THROWS_AS(mark(m, std::vector<double>(3, 0.0), p), std::invalid_argument);
  CHECK_THROWS_AS(mark(m, std::vector<double>{0.0, 1.0, NAN, 2.0}, p), std::invalid_argument);
  p.refine_fraction = 0.8;
  p.coarsen_fraction = 0.3;
  CHECK_THROWS_AS(mark(m, std::vector<double>(4, 0.0), p), std::invalid_argument);
}

TEST_CASE("linear fields survive adaptation unchanged")
{
  QuadMesh m = QuadMesh::uniform(unit, 4, 4);
  DofMap dofs(m);
  auto f = [](const Point2 &x) { return 0.3 + 2.0 * x.x - 1.5 * x.y; };
  const Field c = interpolate(f, m, dofs);
  Marks mk;
  mk.mesh_generation = m.generation();
  mk.refine = {m.active_cells()[5], m.active_cells()[6]};
  const auto r = adapt_and_transfer(m, dofs, std::vector<Field>{c}, mk, AdaptBounds{});
  REQUIRE(r.refined >= 2);
  CHECK(r.dofs.num_constraints() > 0);
  const Field &t = r.fields[0];
  for (int a = 0; a < r.dofs.n_const(); ++a)
  {
    CHECK(std::abs(t[static_cast<std::size_t>(r.dofs.const_dof(a))]) < 1e-13);
  }
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i)
  {
    const Point2 x{u(rng), u(rng)};
    CHECK(eval_at(r.mesh, r.dofs, t, x) == doctest::Approx(f(x)).epsilon(1e-12));
  }
}

TEST_CASE("constant fields stay constant")
{
  QuadMesh m = QuadMesh::uniform(unit, 4, 4);
  const int first = m.active_cells()[0];
  m.refine(std::vector<int>{first});
  DofMap dofs(m);
  const Field c = interpolate([](const Point2 &) { return 0.7; }, m, dofs);
  Marks mk;
  mk.mesh_generation = m.generation();
  mk.refine = {m.active_cells()[9]};
  const auto &kids = m.cell(first).children;
  mk.coarsen.assign(kids.begin(), kids.end());
  const auto r = adapt_and_transfer(m, dofs, std::vector<Field>{c}, mk, AdaptBounds{});
  CHECK(r.coarsened == 1);
  for (int a = 0; a < r.dofs.n_const(); ++a)
  {
    for (const Point2 ref : {Point2{0, 0}, Point2{0.5, 0.3}, Point2{1, 1}})
    {
      CHECK(eval(r.mesh, r.dofs, r.fields[0], a, ref) == doctest::Approx(0.7).epsilon(1e-13));
    }
  }
}

TEST_CASE("refine then coarsen restores the cell means")
{
  std::mt19937 rng(5);
  QuadMesh m = QuadMesh::uniform(unit, 4, 4);
  m.refine(std::vector<int>{m.active_cells()[10]});
  DofMap dofs(m);
  const Field c = random_field(dofs, rng);
  std::vector<double> means;
  for (int a = 0; a < dofs.n_const(); ++a)
  {
    means.push_back(cell_mean(m, dofs, c, a));
  }

  const int target = m.active_cells()[2];
  Marks up;
  up.mesh_generation = m.generation();
  up.refine = {target};
  const auto fine = adapt_and_transfer(m, dofs, std::vector<Field>{c}, up, AdaptBounds{});
  REQUIRE(fine.refined == 1);
  Marks down;
  down.mesh_generation = fine.mesh.generation();
  for (int k : fine.mesh.cell(target).children)
  {
    down.coarsen.push_back(k);
  }
  const auto back =
      adapt_and_transfer(fine.mesh, fine.dofs, fine.fields, down, AdaptBounds{});
  REQUIRE(back.coarsened == 1);
  REQUIRE(back.mesh.active_cells() == m.active_cells());
  for (int a = 0; a < back.dofs.n_const(); ++a)
  {
    CHECK(cell_mean(back.mesh, back.dofs, back.fields[0], a) ==
          doctest::Approx(means[static_cast<std::size_t>(a)]).epsilon(1e-13));
  }
}

TEST_CASE("per-cell values: copied down, averaged up")
{
  // Active after the split: three level-1 cells, then the four children of the first.
  QuadMesh m = QuadMesh::uniform(unit, 2, 2);
  const int first = m.active_cells()[0];
  m.refine(std::vector<int>{first});
  const DofMap dofs(m);
  std::vector<double> v(m.num_active());
  for (std::size_t i = 0; i < v.size(); ++i)
  {
    v[i] = static_cast<double>(i);
  }
  Marks mk;
  mk.mesh_generation = m.generation();
  const auto &kids = m.cell(first).children;
  mk.coarsen.assign(kids.begin(), kids.end());
  const int split = m.active_cells()[2];
  mk.refine = {split};
  const auto r = adapt_and_transfer(m, dofs, {}, mk, AdaptBounds{},
                                    std::vector<std::vector<double>>{v});
  const auto &out = r.cell_values[0];
  const auto &act = r.mesh.active_cells();
  for (std::size_t a = 0; a < act.size(); ++a)
  {
    const auto &cell = r.mesh.cell(act[a]);
    if (act[a] == first)
    {
      CHECK(out[a] == doctest::Approx(4.5));
    }
    else if (cell.parent == split)
    {
      CHECK(out[a] == 2.0);
    }
  }
}

TEST_CASE("stale marks are rejected")
{
  QuadMesh m = QuadMesh::uniform(unit, 4, 4);
  const DofMap dofs(m);
  const auto mk = mark(m, std::vector<double>(16, 1.0), open_policy());
  m.refine(std::vector<int>{m.active_cells()[0]});
  const DofMap fresh(m);
  CHECK_THROWS_AS(adapt_and_transfer(m, fresh, {}, mk, AdaptBounds{}), StaleMarksError);
}

TEST_CASE("randomized adaptation keeps the invariants")
{
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  QuadMesh m = QuadMesh::uniform(unit, 4, 4);
  DofMap dofs(m);
  Field c = random_field(dofs, rng);
  MarkingPolicy p;
  p.bounds.r_min = 1;
  p.bounds.r_max = 5;
  p.bounds.cell_max = 160;
  double mass = integrate(m, dofs, c);
  int changed = 0;
  for (int round = 0; round < 1000; ++round)
  {
    // A wandering bump plus noise, so both refinement and whole quartets of coarsening occur.
    const Point2 bump{0.5 + 0.4 * std::cos(0.05 * round), 0.5 + 0.4 * std::sin(0.07 * round)};
    std::vector<double> er(m.num_active());
    for (std::size_t a = 0; a < er.size(); ++a)
    {
      const Point2 x = m.cell(m.active_cells()[a]).bbox.center();
      const double d2 = (x.x - bump.x) * (x.x - bump.x) + (x.y - bump.y) * (x.y - bump.y);
      er[a] = std::exp(-d2 / 0.02) + 0.05 * u(rng);
    }
    const auto mk = mark(m, er, p);
    CHECK(mk.projected_cells <= p.bounds.cell_max);
    auto r = adapt_and_transfer(m, dofs, std::vector<Field>{c}, mk, p.bounds);
    changed += r.changed() ? 1 : 0;
    m = std::move(r.mesh);
    dofs = std::move(r.dofs);
    c = std::move(r.fields[0]);
    REQUIRE(m.max_face_level_jump() <= 1);
    REQUIRE(m.num_active() <= p.bounds.cell_max);
    REQUIRE(m.max_active_level() <= p.bounds.r_max);
    REQUIRE(total_area(m) == doctest::Approx(1.0).epsilon(1e-14));
    const double now = integrate(m, dofs, c);
    REQUIRE(std::abs(now - mass) <= 1e-12 * std::abs(mass));
    mass = now;
  }
  CHECK(changed > 200);
}
