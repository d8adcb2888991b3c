#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fractalp/extend.hpp"
#include "fractalp/forms.hpp"
#include "fractalp/pgraph.hpp"

using namespace fractalp;

namespace {

EnergyModel sg_model(double p, double rho) {
  return EnergyModel::uniform(PcfStructure::sierpinski_gasket(), p, rho);
}

// hand-built one-step subdivision graph (0,1,2 corners; 3=mid01, 4=mid02,
// 5=mid12) with one weight per subcell
PGraph local_graph(const std::vector<double>& w) {
  PGraph g(6);
  const int cells[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b)
        g.add_edge(cells[i][a], cells[i][b], w[static_cast<std::size_t>(i)]);
  return g;
}

// oracle for one refinement step: solve the 6-vertex problem with the parent
// corners pinned and read off the child's corner slots
std::vector<double> local_step(double p, const std::vector<double>& rho,
                               const std::vector<double>& parent, int child) {
  const PGraph g = local_graph(rho);
  std::vector<char> fixed(6, 0);
  std::vector<double> bc(6, 0.0);
  for (int q = 0; q < 3; ++q) {
    fixed[static_cast<std::size_t>(q)] = 1;
    bc[static_cast<std::size_t>(q)] = parent[static_cast<std::size_t>(q)];
  }
  SolveOptions opt;
  opt.grad_tol = 1e-14;
  const SolveResult r = minimize_p_energy(g, p, fixed, bc, opt);
  const int cells[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
  return {r.u[static_cast<std::size_t>(cells[child][0])],
          r.u[static_cast<std::size_t>(cells[child][1])],
          r.u[static_cast<std::size_t>(cells[child][2])]};
}

}  // namespace

TEST_CASE("p=2 self-similar weights: fill-in matches the global solves") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  const std::vector<double> bc = {1.0, 0.0, 0.0};
  HarmonicInterpolator interp(model, DiscreteFunction{0, bc});

  const int n = 3;
  const SolveResult direct = model.boundary_harmonic(n, bc);
  const VertexTable vt = model.table(n);
  for (std::uint64_t cell = 0; cell < vt.cells(); ++cell) {
    Letter addr[8];
    const Word w = word_of_index(cell, 3, n);
    for (int i = 0; i < n; ++i) addr[i] = w[static_cast<std::size_t>(i)];
    const std::vector<double>& c = interp.corners(addr, n);
    for (int q = 0; q < 3; ++q)
      CHECK(std::abs(c[static_cast<std::size_t>(q)] - direct.u[vt.id(cell, q)]) <
            1e-9);
  }
}

TEST_CASE("each refinement step solves the local subdivision problem") {
  // non-self-similar weights and p != 2: verify the recursion against an
  // independently assembled local solve
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  const std::vector<double> rho = {1.4, 2.0, 2.6};
  const double p = 2.5;
  const EnergyModel model(st, p, BoundaryGraphForm::complete(3), rho);
  HarmonicInterpolator interp(model, DiscreteFunction{0, {1.0, -0.5, 0.25}});

  const Letter paths[][4] = {{0, 0, 0, 0}, {1, 2, 0, 1}, {2, 2, 1, 0}};
  for (const Letter* path : paths) {
    std::vector<double> parent = interp.corners(path, 0);
    for (int len = 1; len <= 4; ++len) {
      const std::vector<double>& got = interp.corners(path, len);
      const std::vector<double> want =
          local_step(p, rho, parent, static_cast<int>(path[len - 1]));
      for (int q = 0; q < 3; ++q)
        CHECK(std::abs(got[static_cast<std::size_t>(q)] -
                       want[static_cast<std::size_t>(q)]) < 1e-7);
      parent = got;
    }
  }
}

TEST_CASE("p=2 one-step refinement is the midpoint rule (2a+2b+c)/5") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  HarmonicInterpolator interp(model, DiscreteFunction{0, {1.0, 0.0, 0.0}});
  const Letter a0[] = {Letter(0)};
  const std::vector<double>& c0 = interp.corners(a0, 1);
  // cell 0 corners: q0 stays, the other two are edge midpoints of (q0,q1),(q0,q2)
  CHECK(c0[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c0[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(c0[2] == doctest::Approx(0.4).epsilon(1e-12));
  const Letter a1[] = {Letter(1)};
  const std::vector<double>& c1 = interp.corners(a1, 1);
  CHECK(c1[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(c1[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c1[2] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("base functions above level 0 are read back, not recomputed") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  const SolveResult base = model.boundary_harmonic(2, {0.3, -1.0, 0.7});
  HarmonicInterpolator interp(model, DiscreteFunction{2, base.u});
  CHECK(interp.base_level() == 2);
  const VertexTable vt = model.table(2);
  for (std::uint64_t cell = 0; cell < 9; ++cell) {
    Letter addr[2];
    const Word w = word_of_index(cell, 3, 2);
    addr[0] = w[0];
    addr[1] = w[1];
    const std::vector<double>& c = interp.corners(addr, 2);
    for (int q = 0; q < 3; ++q)
      CHECK(c[static_cast<std::size_t>(q)] ==
            doctest::Approx(base.u[vt.id(cell, q)]).epsilon(1e-14));
    // one level up as well: the level-1 corner (cell, q) sits at the level-2
    // slot (cell*3 + fixed_letter(q), q)
    const std::vector<double>& cp = interp.corners(addr, 1);
    for (int q = 0; q < 3; ++q) {
      const std::uint64_t child =
          static_cast<std::uint64_t>(addr[0]) * 3 +
          static_cast<std::uint64_t>(model.structure().fixed_letter(q));
      CHECK(cp[static_cast<std::size_t>(q)] ==
            doctest::Approx(base.u[vt.id(child, q)]).epsilon(1e-14));
    }
  }
}

TEST_CASE("point values are corner means and agree across repeated queries") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  HarmonicInterpolator interp(model, DiscreteFunction{0, {1.0, 0.0, 0.0}});
  const Letter addr[] = {0, 1, 2, 0, 1, 2, 0, 1};
  const double v1 = interp.value_at(addr, 8);
  const double v2 = interp.value_at(addr, 8);
  CHECK(v1 == v2);
  CHECK(v1 > 0.0);
  CHECK(v1 < 1.0);

  // a prefix query must equal the mean of that cell's corners
  const std::vector<double>& c = interp.corners(addr, 4);
  CHECK(interp.value_at(addr, 4) ==
        doctest::Approx((c[0] + c[1] + c[2]) / 3.0).epsilon(1e-12));
}

TEST_CASE("maximum principle holds along deep refinements") {
  const EnergyModel model = sg_model(3.0, 2.0);
  HarmonicInterpolator interp(model, DiscreteFunction{0, {1.0, -1.0, 0.5}});
  Letter addr[12];
  for (int i = 0; i < 12; ++i) addr[i] = static_cast<Letter>((i * 7 + 1) % 3);
  for (int len = 1; len <= 12; ++len) {
    const std::vector<double>& c = interp.corners(addr, len);
    for (double x : c) {
      CHECK(x <= 1.0 + 1e-9);
      CHECK(x >= -1.0 - 1e-9);
    }
  }
}

TEST_CASE("nested cells inherit their parent corner values") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  HarmonicInterpolator interp(model, DiscreteFunction{0, {0.3, 0.9, -0.4}});
  const Letter parent[] = {2, 0, 1};
  const std::vector<double>& cp = interp.corners(parent, 3);
  // the child at letter q keeps the parent's corner q at its own corner q
  for (Letter q = 0; q < 3; ++q) {
    const Letter child[] = {2, 0, 1, q};
    const std::vector<double>& cc = interp.corners(child, 4);
    CHECK(cc[q] == doctest::Approx(cp[q]).epsilon(1e-12));
  }
}
