#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fractalp/forms.hpp"

namespace fractalp {

// any p-homogeneous functional under test, with an optional derivative form
struct FormUnderTest {
  std::string name;
  int dim = 0;
  double p = 2.0;
  std::function<double(const std::vector<double>&)> energy;
  std::function<double(const std::vector<double>&, const std::vector<double>&)>
      energy_two;  // may be empty
};

FormUnderTest model_form(const EnergyModel& model, int level, std::string name);

// structural inequality battery for p-energy functionals
struct GcReport {
  struct CheckResult {
    std::string check;
    long trials = 0;
    long violations = 0;
    double worst_slack = 0.0;  // size of the worst violation (0 if none)
    std::vector<double> witness;  // first violating input, flattened
  };
  std::vector<CheckResult> checks;
  bool homogeneity_ok = true;  // E(2u) = 2^p E(u) spot check
  long total_violations = 0;
};

// Runs, on `pairs` random pairs: p-homogeneity spot check, triangle
// inequality for E^{1/p}, unit contraction, lattice sub-additivity
// E(u v max) + E(u v min) <= E(u) + E(v), Leibniz product bound, the
// Clarkson-type two-sided bounds for the matching p regime, and (when the
// two-variable form is present) the Hoelder bound for E(u; v).
GcReport gc_battery(const FormUnderTest& form, long pairs, std::uint64_t seed,
                    double slack = 1e-9);

// fitted constant for the two-variable continuity bound
//   |E(f1;g) - E(f2;g)| <= C * [max E(fi)]^{(p-2)+/p}
//                            * E(f1-f2)^{((p-1) and 1)/p} * E(g)^{1/p}
struct HolderFit {
  double max_ratio = 0.0;  // largest lhs/rhs over trials (the fitted constant)
  long trials = 0;
  double exponent_small = 0.0;  // ((p-1) and 1)/p, for the report
};
HolderFit nonlinear_holder_fit(const EnergyModel& model, int level, long trials,
                               std::uint64_t seed);

}  // namespace fractalp
