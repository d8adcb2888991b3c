#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fractalp/metricgeom.hpp"
#include "fractalp/renorm.hpp"
#include "fractalp/rng.hpp"

using namespace fractalp;

namespace {

EnergyModel sg_model(double p, double rho) {
  return EnergyModel::uniform(PcfStructure::sierpinski_gasket(), p, rho);
}

}  // namespace

TEST_CASE("boundary-pair resistance is 2/3 at p=2, stable across levels") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  for (int n : {0, 1, 2, 3})
    CHECK(resistance(model, n, 0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
  // symmetry of the boundary triple
  CHECK(resistance(model, 2, 0, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
  CHECK(resistance(model, 2, 1, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("dense table agrees with per-pair capacity solves") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  ResistanceTable rt(model, 2);
  CHECK(rt.vertex_count() == 15);
  CHECK(rt.dense());

  CounterRng rng(31, 0);
  for (int t = 0; t < 6; ++t) {
    const int x = static_cast<int>(rng.uniform_below(15));
    int y = static_cast<int>(rng.uniform_below(15));
    if (y == x) y = (y + 1) % 15;
    // oracle: R = 1 / cap({x},{y}) via the constrained minimizer
    const EnergyModel::Capacity cap = model.capacity(2, {x}, {y});
    CHECK(rt.resistance(x, y) == doctest::Approx(1.0 / cap.value).epsilon(1e-9));
    CHECK(rt.resistance(x, y) == rt.resistance(y, x));
    // at p = 2 the metric IS the resistance
    CHECK(rt.metric(x, y) == doctest::Approx(rt.resistance(x, y)).epsilon(1e-12));
  }
  CHECK(rt.resistance(7, 7) == 0.0);
}

TEST_CASE("resistance duality: |u(x)-u(y)|^p <= R(x,y) E(u), tight for the potential") {
  for (double p : {2.0, 2.5}) {
    const EnergyModel model = sg_model(p, p == 2.0 ? 5.0 / 3.0 : 2.0);
    ResistanceTable rt(model, 2, {});
    CounterRng rng(77, 1);
    std::vector<double> u(15);
    for (double& x : u) x = rng.normal();
    const double energy =
        model.energy(DiscreteFunction{2, u});
    for (int x = 0; x < 15; ++x)
      for (int y = x + 1; y < 15; ++y) {
        const double gap = std::pow(std::abs(u[static_cast<std::size_t>(x)] -
                                             u[static_cast<std::size_t>(y)]),
                                    p);
        CHECK(gap <= rt.resistance(x, y) * energy * (1 + 1e-8) + 1e-12);
      }
    // the capacity potential attains the bound
    const EnergyModel::Capacity cap = model.capacity(2, {3}, {9});
    const double r = rt.resistance(3, 9);
    CHECK(1.0 <= r * cap.value * (1 + 1e-9));
    CHECK(1.0 >= r * cap.value * (1 - 1e-9));
  }
}

TEST_CASE("p-metric satisfies the triangle inequality") {
  const EnergyModel model = sg_model(2.5, 2.0);
  ResistanceTable rt(model, 2);
  const int pts[] = {0, 1, 2, 4, 7, 10, 13};
  for (int a : pts)
    for (int b : pts)
      for (int c : pts) {
        if (a == b || b == c || a == c) continue;
        CHECK(rt.metric(a, c) <=
              rt.metric(a, b) + rt.metric(b, c) + 1e-10);
      }
}

TEST_CASE("cell-map scaling inequality holds with no slack violations") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  const ScalingReport rep = scaling_check(model, 3, 40, 5);
  CHECK(rep.pairs == 40);
  CHECK(rep.max_slack <= 1e-9);

  const EnergyModel rough = sg_model(2.5, 2.0);
  const ScalingReport rep2 = scaling_check(rough, 2, 12, 5);
  CHECK(rep2.pairs == 12);
  CHECK(rep2.max_slack <= 1e-7);
}

TEST_CASE("resistance grows like distance^0.737 on the standard example") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  const ExponentFit fit = metric_exponent_fit(model, 6, 300, 17);
  CHECK(fit.decades >= 1.5);
  CHECK(fit.pairs > 100);
  const double want = std::log(5.0 / 3.0) / std::log(2.0);
  CHECK(std::abs(fit.slope - want) < 0.05);
  CHECK(fit.residual_band > 0.0);
  CHECK(fit.residual_band < 0.5);
}

TEST_CASE("volume regularity band stays bounded at p=2") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  const SelfSimilarMeasure m = SelfSimilarMeasure::uniform(3);
  ResistanceTable rt(model, 4);
  const double d_fp = std::log(3.0) / std::log(5.0 / 3.0);
  const std::vector<double> s_grid = {0.5, 0.3, 0.18, 0.11};
  const AhlforsReport rep = ahlfors_check(model, rt, m, d_fp, 10, s_grid, 23);
  REQUIRE(rep.scales.size() == s_grid.size());
  CHECK(rep.band < 10.0);
  for (std::size_t i = 0; i < rep.scales.size(); ++i) {
    CHECK(rep.ratio_min[i] > 0.0);
    CHECK(rep.ratio_max[i] >= rep.ratio_min[i]);
  }
}

TEST_CASE("cutoff energies fall like s^{-(p-1)}") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  const std::vector<double> s_grid = {0.5, 0.25, 0.125, 0.0625};
  const CapacityProfile prof =
      capacity_profile(model, Word::parse("0", 3), s_grid, 2);
  REQUIRE(prof.energy.size() == s_grid.size());
  for (double e : prof.energy) CHECK(e > 0.0);
  CHECK(std::abs(prof.fitted_exponent - (-1.0)) < 0.35);
}

TEST_CASE("variance-energy ratios are finite and insensitive to inflation") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  const SelfSimilarMeasure m = SelfSimilarMeasure::uniform(3);
  const double d_fp = std::log(3.0) / std::log(5.0 / 3.0);
  std::vector<DiscreteFunction> us;
  us.push_back(DiscreteFunction{4, model.boundary_harmonic(4, {1, 0, 0}).u});
  us.push_back(DiscreteFunction{4, model.boundary_harmonic(4, {0.2, -1, 0.5}).u});
  const PoincareReport rep = poincare_check(model, m, d_fp, us, 6, 0.25, 3, 29);
  CHECK(!rep.balls.empty());
  CHECK(rep.sup_ratio > 0.0);
  for (const PoincareReport::Ball& b : rep.balls) {
    CHECK(b.s == doctest::Approx(0.25));
    CHECK(b.ratio >= 0.0);
  }
  // a wider inflation can only shrink the ratios
  const PoincareReport wide = poincare_check(model, m, d_fp, us, 6, 0.25, 5, 29);
  CHECK(wide.sup_ratio <= rep.sup_ratio * (1 + 1e-12));
}

TEST_CASE("cell neighborhoods expand by graph distance") {
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  const VertexTable vt2 = VertexTable::build(st, 2);
  const CellGraph g2 = cell_adjacency(st, vt2);

  const std::vector<std::uint64_t> seed = {0};  // cell "00"
  std::vector<std::uint64_t> n1 = cell_neighborhood(g2, seed, 1);
  std::sort(n1.begin(), n1.end());
  CHECK(n1 == std::vector<std::uint64_t>{0, 1, 2});

  std::vector<std::uint64_t> n2 = cell_neighborhood(g2, seed, 2);
  std::sort(n2.begin(), n2.end());
  // one more hop picks up the two cross-junction cells
  CHECK(n2 == std::vector<std::uint64_t>{0, 1, 2, 3, 6});

  std::vector<std::uint64_t> n4 = cell_neighborhood(g2, seed, 4);
  CHECK(n4.size() == 9);  // everything within four hops
}
