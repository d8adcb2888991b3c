#include "fractalp/properties.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fractalp/rng.hpp"

namespace fractalp {

namespace {

// one inequality row under accumulation; the first offending pair is kept
struct CheckAccum {
  GcReport::CheckResult row;

  explicit CheckAccum(std::string name) { row.check = std::move(name); }

  void note(bool violated, double excess, const std::vector<double>& u,
            const std::vector<double>& v) {
    ++row.trials;
    if (!violated) return;
    ++row.violations;
    if (excess > row.worst_slack) row.worst_slack = excess;
    if (row.witness.empty()) {
      row.witness = u;
      row.witness.insert(row.witness.end(), v.begin(), v.end());
    }
  }
};

double root_p(double e, double p) { return std::pow(std::max(e, 0.0), 1.0 / p); }

}  // namespace

FormUnderTest model_form(const EnergyModel& model, int level, std::string name) {
  FormUnderTest f;
  f.name = std::move(name);
  f.dim = model.table(level).vertex_count();
  f.p = model.p();
  const EnergyModel* m = &model;
  f.energy = [m, level](const std::vector<double>& u) {
    return m->energy(DiscreteFunction{level, u});
  };
  f.energy_two = [m, level](const std::vector<double>& u,
                            const std::vector<double>& v) {
    return m->energy_two(DiscreteFunction{level, u}, DiscreteFunction{level, v});
  };
  return f;
}

GcReport gc_battery(const FormUnderTest& form, long pairs, std::uint64_t seed,
                    double slack) {
  if (form.dim < 1) throw std::invalid_argument("gc: form has no dimension");
  if (!form.energy) throw std::invalid_argument("gc: form has no energy");
  const int d = form.dim;
  const double p = form.p;
  CounterRng rng(seed, "gc");

  auto draw = [&](std::vector<double>& u) {
    u.resize(static_cast<std::size_t>(d));
    for (double& x : u) x = rng.normal();
  };

  GcReport rep;

  // homogeneity spot check: doubling the input must scale the energy by 2^p
  {
    std::vector<double> u, u2;
    for (int t = 0; t < 8; ++t) {
      draw(u);
      u2 = u;
      for (double& x : u2) x *= 2.0;
      const double want = std::pow(2.0, p) * form.energy(u);
      const double got = form.energy(u2);
      if (std::abs(got - want) > slack * std::max(std::abs(want), 1e-300))
        rep.homogeneity_ok = false;
    }
  }

  CheckAccum triangle("triangle");
  CheckAccum unit("unit_contraction");
  CheckAccum lattice("lattice");
  CheckAccum leibniz("leibniz");
  const bool large = p >= 2.0;
  CheckAccum clarkson(large ? "clarkson_large" : "clarkson_small");
  CheckAccum holder("holder_two_var");

  std::vector<double> u, v, t1, t2;
  t1.resize(static_cast<std::size_t>(d));
  t2.resize(static_cast<std::size_t>(d));
  for (long trial = 0; trial < pairs; ++trial) {
    draw(u);
    draw(v);
    const double eu = form.energy(u);
    const double ev = form.energy(v);
    const double nu = root_p(eu, p);
    const double nv = root_p(ev, p);

    // triangle for the p-th root
    for (int i = 0; i < d; ++i) t1[i] = u[i] + v[i];
    const double esum = form.energy(t1);
    triangle.note(root_p(esum, p) > (nu + nv) * (1.0 + slack),
                  root_p(esum, p) - (nu + nv), u, v);

    // clipping to [0,1] never increases energy
    for (int i = 0; i < d; ++i) t1[i] = std::clamp(u[i], 0.0, 1.0);
    const double eclip = form.energy(t1);
    unit.note(eclip > eu * (1.0 + slack), eclip - eu, u, v);

    // lattice sub-additivity of max/min
    for (int i = 0; i < d; ++i) {
      t1[i] = std::max(u[i], v[i]);
      t2[i] = std::min(u[i], v[i]);
    }
    const double elat = form.energy(t1) + form.energy(t2);
    lattice.note(elat > (eu + ev) * (1.0 + slack), elat - (eu + ev), u, v);

    // Leibniz bound for products through the sup norms
    double su = 0.0, sv = 0.0;
    for (int i = 0; i < d; ++i) {
      su = std::max(su, std::abs(u[i]));
      sv = std::max(sv, std::abs(v[i]));
      t1[i] = u[i] * v[i];
    }
    const double nprod = root_p(form.energy(t1), p);
    const double lcap = su * nv + sv * nu;
    leibniz.note(nprod > lcap * (1.0 + slack), nprod - lcap, u, v);

    // Clarkson-type two-sided bounds on E(u+v) + E(u-v)
    for (int i = 0; i < d; ++i) {
      t1[i] = u[i] + v[i];
      t2[i] = u[i] - v[i];
    }
    const double epm = form.energy(t1) + form.energy(t2);
    if (large) {
      const double cap =
          2.0 * (std::sqrt(eu) + std::sqrt(ev)) * (std::sqrt(eu) + std::sqrt(ev));
      const double floor = 2.0 * (eu + ev);
      const bool bad = epm > cap * (1.0 + slack) || epm < floor * (1.0 - slack);
      clarkson.note(bad, std::max(epm - cap, floor - epm), u, v);
    } else {
      const double cap = 2.0 * (eu + ev);
      const double floor = std::pow(2.0, p - 1.0) * (eu + ev);
      const bool bad = epm > cap * (1.0 + slack) || epm < floor * (1.0 - slack);
      clarkson.note(bad, std::max(epm - cap, floor - epm), u, v);
    }

    // Hoelder bound for the two-variable form, when one is provided
    if (form.energy_two) {
      const double g = std::abs(form.energy_two(u, v));
      const double hcap = std::pow(std::max(eu, 0.0), (p - 1.0) / p) * nv;
      holder.note(g > hcap * (1.0 + slack), g - hcap, u, v);
    }
  }

  rep.checks.push_back(std::move(triangle.row));
  rep.checks.push_back(std::move(unit.row));
  rep.checks.push_back(std::move(lattice.row));
  rep.checks.push_back(std::move(leibniz.row));
  rep.checks.push_back(std::move(clarkson.row));
  if (form.energy_two) rep.checks.push_back(std::move(holder.row));
  for (const GcReport::CheckResult& c : rep.checks)
    rep.total_violations += c.violations;
  return rep;
}

HolderFit nonlinear_holder_fit(const EnergyModel& model, int level, long trials,
                               std::uint64_t seed) {
  const int d = model.table(level).vertex_count();
  const double p = model.p();
  CounterRng rng(seed, "holder");

  HolderFit fit;
  fit.exponent_small = std::min(p - 1.0, 1.0) / p;
  const double exp_big = std::max(p - 2.0, 0.0) / p;

  std::vector<double> f1(d), f2(d), g(d), diff(d);
  for (long t = 0; t < trials; ++t) {
    for (double& x : f1) x = rng.normal();
    for (double& x : f2) x = rng.normal();
    for (double& x : g) x = rng.normal();
    for (int i = 0; i < d; ++i) diff[i] = f1[i] - f2[i];
    const double e1 = model.energy(DiscreteFunction{level, f1});
    const double e2 = model.energy(DiscreteFunction{level, f2});
    const double ed = model.energy(DiscreteFunction{level, diff});
    const double eg = model.energy(DiscreteFunction{level, g});
    const double lhs =
        std::abs(model.energy_two(DiscreteFunction{level, f1},
                                  DiscreteFunction{level, g}) -
                 model.energy_two(DiscreteFunction{level, f2},
                                  DiscreteFunction{level, g}));
    const double rhs = std::pow(std::max(e1, e2), exp_big) *
                       std::pow(ed, fit.exponent_small) * std::pow(eg, 1.0 / p);
    ++fit.trials;
    if (rhs > 0.0) fit.max_ratio = std::max(fit.max_ratio, lhs / rhs);
  }
  return fit;
}

}  // namespace fractalp
