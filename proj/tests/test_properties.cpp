#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "fractalp/properties.hpp"

using namespace fractalp;

namespace {

EnergyModel sg_model(double p, double rho) {
  return EnergyModel::uniform(PcfStructure::sierpinski_gasket(), p, rho);
}

const GcReport::CheckResult& row(const GcReport& rep, const std::string& name) {
  for (const GcReport::CheckResult& c : rep.checks)
    if (c.check == name) return c;
  REQUIRE_MESSAGE(false, (std::string("missing check row: ") + name));
  std::abort();
}

// sum of squared differences on a 3-vertex path, deliberately declared as a
// p=3 form: 2-homogeneous, so it slips through every two-point inequality
// and only the homogeneity spot-check can flag it
FormUnderTest squares_as_p3() {
  FormUnderTest f;
  f.name = "squares-as-p3";
  f.dim = 3;
  f.p = 3.0;
  f.energy = [](const std::vector<double>& u) {
    return (u[1] - u[0]) * (u[1] - u[0]) + (u[2] - u[1]) * (u[2] - u[1]);
  };
  return f;
}

// cubed l1 seminorm on the same path: correctly 3-homogeneous but genuinely
// fails the two-point upper bound (witness u=(0,1,1), v=(0,0,1): 16 > 8)
FormUnderTest l1_cubed() {
  FormUnderTest f;
  f.name = "l1-cubed";
  f.dim = 3;
  f.p = 3.0;
  f.energy = [](const std::vector<double>& u) {
    const double s = std::abs(u[1] - u[0]) + std::abs(u[2] - u[1]);
    return s * s * s;
  };
  return f;
}

}  // namespace

TEST_CASE("graph energy models pass every structural inequality") {
  struct Case {
    double p, rho;
  };
  for (Case c : {Case{1.5, 1.4}, Case{2.0, 5.0 / 3.0}, Case{3.0, 2.2}}) {
    const EnergyModel model = sg_model(c.p, c.rho);
    const FormUnderTest form = model_form(model, 2, "sg-level2");
    const GcReport rep = gc_battery(form, 200, 13);
    CHECK(rep.homogeneity_ok);
    CHECK(rep.total_violations == 0);
    REQUIRE(!rep.checks.empty());
    bool saw_clarkson = false;
    for (const GcReport::CheckResult& r : rep.checks) {
      CHECK(r.trials > 0);
      CHECK(r.violations == 0);
      if (r.check == "clarkson_small" || r.check == "clarkson_large")
        saw_clarkson = true;
    }
    CHECK(saw_clarkson);
    // the two-variable bound rides along when the form provides one
    CHECK(row(rep, "holder_two_var").trials > 0);
  }
}

TEST_CASE("homogeneity spot-check catches a mislabeled quadratic form") {
  const GcReport rep = gc_battery(squares_as_p3(), 200, 13);
  CHECK(!rep.homogeneity_ok);
  // ...while the two-point inequalities are all satisfied (parallelogram law)
  CHECK(row(rep, "clarkson_large").violations == 0);
  CHECK(row(rep, "triangle").violations == 0);
}

TEST_CASE("cubed l1 energy fails the upper two-point bound with a witness") {
  const GcReport rep = gc_battery(l1_cubed(), 200, 13);
  CHECK(rep.homogeneity_ok);  // 3-homogeneous, correctly labeled
  const GcReport::CheckResult& cl = row(rep, "clarkson_large");
  CHECK(cl.violations > 0);
  CHECK(cl.worst_slack > 0.0);
  REQUIRE(cl.witness.size() == 6);  // u followed by v
  // replay the witness against the raw form
  const FormUnderTest form = l1_cubed();
  const std::vector<double> u(cl.witness.begin(), cl.witness.begin() + 3);
  const std::vector<double> v(cl.witness.begin() + 3, cl.witness.end());
  const std::vector<double> up = {u[0] + v[0], u[1] + v[1], u[2] + v[2]};
  const std::vector<double> um = {u[0] - v[0], u[1] - v[1], u[2] - v[2]};
  const double lhs = form.energy(up) + form.energy(um);
  const double cap = 2.0 * std::pow(std::sqrt(form.energy(u)) +
                                        std::sqrt(form.energy(v)),
                                    2.0);
  CHECK(lhs > cap * (1 + 1e-12));
  CHECK(rep.total_violations >= cl.violations);
}

TEST_CASE("two-variable difference bound: exact constant 1 in the bilinear case") {
  const EnergyModel model = sg_model(2.0, 5.0 / 3.0);
  const HolderFit fit = nonlinear_holder_fit(model, 2, 120, 21);
  CHECK(fit.trials == 120);
  CHECK(fit.exponent_small == doctest::Approx(0.5));
  CHECK(fit.max_ratio <= 1.0 + 1e-8);
  CHECK(fit.max_ratio > 0.5);
}

TEST_CASE("two-variable difference bound stays bounded away from blowup") {
  const EnergyModel model = sg_model(3.0, 2.2);
  const HolderFit c2 = nonlinear_holder_fit(model, 2, 120, 21);
  const HolderFit c3 = nonlinear_holder_fit(model, 3, 120, 21);
  CHECK(c2.exponent_small == doctest::Approx(1.0 / 3.0));
  CHECK(c2.max_ratio < 6.0);
  CHECK(c3.max_ratio < 6.0);
  // level refinement must not inflate the fitted constant materially
  CHECK(c3.max_ratio < 2.0 * c2.max_ratio + 0.5);
}
