#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "fractalp/pgraph.hpp"
#include "fractalp/rng.hpp"

using namespace fractalp;

namespace {

// ---- independent oracle: cyclic coordinate-wise golden-section descent -----
double golden_min_1d(const std::function<double(double)>& f, double lo, double hi,
                     int iters = 120) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - phi * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + phi * (b - a); fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

std::vector<double> brute_force_minimize(const PGraph& g, double p,
                                         const std::vector<char>& fixed,
                                         const std::vector<double>& boundary,
                                         int sweeps = 400) {
  std::vector<double> u(boundary);
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < g.n; ++i)
    if (fixed[static_cast<std::size_t>(i)]) {
      lo = std::min(lo, u[static_cast<std::size_t>(i)]);
      hi = std::max(hi, u[static_cast<std::size_t>(i)]);
    }
  std::vector<int> free_ids;
  for (int i = 0; i < g.n; ++i)
    if (!fixed[static_cast<std::size_t>(i)]) {
      u[static_cast<std::size_t>(i)] = 0.5 * (lo + hi);
      free_ids.push_back(i);
    }
  // descent directions: every coordinate, every pairwise sum and difference,
  // and the all-ones vector over the free block. For p < 2 the energy has
  // C^1 kink valleys along u_i == u_j where one-coordinate-at-a-time descent
  // stalls; exact line minimization along the joint directions resolves them.
  std::vector<std::vector<double>> dirs;
  const std::size_t nf = free_ids.size();
  for (std::size_t a = 0; a < nf; ++a) {
    std::vector<double> d(nf, 0.0);
    d[a] = 1.0;
    dirs.push_back(d);
  }
  for (std::size_t a = 0; a < nf; ++a)
    for (std::size_t b = a + 1; b < nf; ++b) {
      std::vector<double> d(nf, 0.0);
      d[a] = 1.0;
      d[b] = 1.0;
      dirs.push_back(d);
      d[b] = -1.0;
      dirs.push_back(d);
    }
  dirs.push_back(std::vector<double>(nf, 1.0));
  const double span = hi - lo + 2.0;
  for (int s = 0; s < sweeps; ++s) {
    for (const std::vector<double>& d : dirs) {
      auto obj = [&](double t) {
        std::vector<double> v(u);
        for (std::size_t a = 0; a < nf; ++a)
          v[static_cast<std::size_t>(free_ids[a])] += t * d[a];
        return graph_energy(g, p, v);
      };
      const double t = golden_min_1d(obj, -span, span);
      for (std::size_t a = 0; a < nf; ++a)
        u[static_cast<std::size_t>(free_ids[a])] += t * d[a];
    }
  }
  return u;
}

// unit-weight triangle-of-triangles: the level-1 gasket graph laid out by
// hand (ids: 0,1,2 corners; 3 = between 0 and 1; 4 = between 0 and 2;
// 5 = between 1 and 2), three edges per cell
PGraph level1_gasket_graph() {
  PGraph g;
  g.n = 6;
  const int cells[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
  for (const auto& c : cells) {
    g.add_edge(c[0], c[1], 1.0);
    g.add_edge(c[0], c[2], 1.0);
    g.add_edge(c[1], c[2], 1.0);
  }
  return g;
}

}  // namespace

TEST_CASE("energy and derivative form basics") {
  PGraph g = level1_gasket_graph();
  std::vector<double> u = {1, 0, 0, 0.4, 0.4, 0.2};
  for (double p : {1.5, 2.0, 2.5, 3.0}) {
    CHECK(graph_energy(g, p, std::vector<double>(6, 3.7)) == doctest::Approx(0.0));
    CHECK(graph_energy_two(g, p, u, u) == doctest::Approx(graph_energy(g, p, u)));
    CHECK(graph_energy_two(g, p, u, std::vector<double>(6, 2.0)) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("derivative form matches the finite-difference oracle") {
  PGraph g = level1_gasket_graph();
  CounterRng rng(77, 1);
  for (double p : {1.5, 2.0, 2.5, 3.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> u(6), v(6);
      for (auto& x : u) x = rng.normal();
      for (auto& x : v) x = rng.normal();
      const double h = 1e-6;
      std::vector<double> up(u), um(u);
      for (int i = 0; i < 6; ++i) {
        up[static_cast<std::size_t>(i)] += h * v[static_cast<std::size_t>(i)];
        um[static_cast<std::size_t>(i)] -= h * v[static_cast<std::size_t>(i)];
      }
      const double fd =
          (graph_energy(g, p, up) - graph_energy(g, p, um)) / (2.0 * h * p);
      const double an = graph_energy_two(g, p, u, v);
      CHECK(an == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("p=2 dirichlet solve reproduces the hand linear solve") {
  PGraph g = level1_gasket_graph();
  std::vector<char> fixed = {1, 1, 1, 0, 0, 0};
  std::vector<double> bc = {1, 0, 0, 0, 0, 0};
  const SolveResult r = minimize_p_energy(g, 2.0, fixed, bc);
  REQUIRE(r.converged);
  // hand solve of the 3x3 system: interior values (2/5, 2/5, 1/5)
  CHECK(r.u[3] == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(r.u[4] == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(r.u[5] == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(r.energy == doctest::Approx(2.0 * 3.0 / 5.0).epsilon(1e-10));
}

TEST_CASE("p=3 and p=1.5 solves match the golden-section oracle") {
  PGraph g = level1_gasket_graph();
  std::vector<char> fixed = {1, 1, 1, 0, 0, 0};
  std::vector<double> bc = {1, 0, 0, 0, 0, 0};
  for (double p : {1.5, 3.0}) {
    const SolveResult r = minimize_p_energy(g, p, fixed, bc);
    REQUIRE(r.converged);
    const std::vector<double> oracle = brute_force_minimize(g, p, fixed, bc);
    for (int i = 3; i < 6; ++i)
      CHECK(r.u[static_cast<std::size_t>(i)] ==
            doctest::Approx(oracle[static_cast<std::size_t>(i)]).epsilon(1e-6));
    CHECK(r.energy <= graph_energy(g, p, oracle) + 1e-9);
  }
}

TEST_CASE("constant boundary data extends to the constant") {
  PGraph g = level1_gasket_graph();
  std::vector<char> fixed = {1, 1, 1, 0, 0, 0};
  std::vector<double> bc = {2.5, 2.5, 2.5, 0, 0, 0};
  for (double p : {1.5, 2.0, 3.0}) {
    const SolveResult r = minimize_p_energy(g, p, fixed, bc);
    REQUIRE(r.converged);
    for (int i = 3; i < 6; ++i)
      CHECK(r.u[static_cast<std::size_t>(i)] == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(r.energy == doctest::Approx(0.0));
  }
}

TEST_CASE("solver reports gradient residual and iteration counts") {
  PGraph g = level1_gasket_graph();
  std::vector<char> fixed = {1, 1, 1, 0, 0, 0};
  std::vector<double> bc = {1, -1, 0.5, 0, 0, 0};
  SolveOptions opt;
  const SolveResult r = minimize_p_energy(g, 2.5, fixed, bc, opt);
  REQUIRE(r.converged);
  CHECK(r.grad_norm <= opt.grad_tol * (1.0 + std::abs(r.energy)) * 10);
  CHECK(r.iterations > 0);
}

TEST_CASE("maximum principle holds for minimizers") {
  PGraph g = level1_gasket_graph();
  std::vector<char> fixed = {1, 1, 1, 0, 0, 0};
  std::vector<double> bc = {1, 0, -0.3, 0, 0, 0};
  for (double p : {1.5, 2.0, 3.0}) {
    const SolveResult r = minimize_p_energy(g, p, fixed, bc);
    for (int i = 3; i < 6; ++i) {
      CHECK(r.u[static_cast<std::size_t>(i)] <= 1.0 + 1e-9);
      CHECK(r.u[static_cast<std::size_t>(i)] >= -0.3 - 1e-9);
    }
  }
}
