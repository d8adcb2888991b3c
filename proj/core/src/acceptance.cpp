#include "fractalp/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fractalp/besov.hpp"
#include "fractalp/forms.hpp"
#include "fractalp/measures.hpp"
#include "fractalp/metricgeom.hpp"
#include "fractalp/properties.hpp"
#include "fractalp/renorm.hpp"
#include "fractalp/rng.hpp"
#include "fractalp/structure.hpp"

namespace fractalp {

namespace {

namespace fs = std::filesystem;

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

EnergyModel sg2() {
  return EnergyModel::uniform(PcfStructure::sierpinski_gasket(), 2.0, 5.0 / 3.0);
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

const double kSp2 = std::log(5.0) / (2.0 * std::log(2.0));

// ---- the 13 criteria --------------------------------------------------------

CriterionResult c1_harmonic_extension() {
  CriterionResult r;
  r.name = "harmonic-extension-exactness";
  const EnergyModel model = sg2();
  const DiscreteFunction u = model.boundary_harmonic(1, {1.0, 0.0, 0.0});
  std::vector<double> interior = {u.v[3], u.v[4], u.v[5]};
  std::sort(interior.begin(), interior.end(), std::greater<>());
  const double want[3] = {0.4, 0.4, 0.2};
  double err = 0.0;
  for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(interior[i] - want[i]));
  r.pass = err < 1e-10;
  r.detail = fmt("interior (%.12f, %.12f, %.12f), max err %.3e vs (2/5,2/5,1/5)",
                 interior[0], interior[1], interior[2], err);
  return r;
}

CriterionResult c2_eigenform() {
  CriterionResult r;
  r.name = "eigenform-fixed-point";
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  const EigenformResult e2 = eigenform_solve(st, 2.0);
  const EigenformResult e15 = eigenform_solve(st, 1.5);
  const EigenformResult e3 = eigenform_solve(st, 3.0);
  const double gap2 = std::abs(e2.rho_p - 5.0 / 3.0);
  const bool ok2 = e2.converged && gap2 < 1e-6 && e2.residual < 1e-8;
  const bool okside = e15.converged && e3.converged && e15.residual < 1e-5 &&
                      e3.residual < 1e-5;
  const bool mono = e15.rho_p < e2.rho_p && e2.rho_p < e3.rho_p;
  r.pass = ok2 && okside && mono;
  r.detail = fmt(
      "rho_2 %.9f (gap %.2e, res %.2e), rho_1.5 %.6f (res %.2e), "
      "rho_3 %.6f (res %.2e), monotone %s",
      e2.rho_p, gap2, e2.residual, e15.rho_p, e15.residual, e3.rho_p, e3.residual,
      mono ? "yes" : "no");
  return r;
}

CriterionResult c3_exponents() {
  CriterionResult r;
  r.name = "exponent-sheet";
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  const EigenformResult e2 = eigenform_solve(st, 2.0);
  const ExponentSheet sheet =
      exponents(st, 2.0, e2.rho_p, SelfSimilarMeasure::uniform(3));
  const double l2 = std::log(2.0), l3 = std::log(3.0), l5 = std::log(5.0);
  const double e_df = std::abs(sheet.d_f - l3 / l2);
  const double e_sig = std::abs(sheet.sigma_p - 5.0 / 3.0);
  const double e_dw = std::abs(sheet.d_wp - l5 / l2);
  const double e_dfp = std::abs(sheet.d_fp - l3 / (l5 - l3));
  const double worst = std::max({e_df, e_sig, e_dw, e_dfp});
  r.pass = worst < 1e-6;
  r.detail = fmt("d_f %.8f, sigma %.8f, d_w %.8f, d_fp %.8f, worst gap %.2e",
                 sheet.d_f, sheet.sigma_p, sheet.d_wp, sheet.d_fp, worst);
  return r;
}

CriterionResult c4_trace_consistency() {
  CriterionResult r;
  r.name = "trace-level-consistency";
  const EnergyModel model = sg2();
  const std::vector<double> prof =
      model.harmonic_energy_profile({1.0, 0.0, 0.0}, 6);
  double lo = prof[0], hi = prof[0];
  for (double e : prof) {
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  const double rel = (hi - lo) / hi;
  r.pass = rel < 1e-8;
  r.detail = fmt("E^n over n=0..6 in [%.12f, %.12f], relative spread %.2e", lo,
                 hi, rel);
  return r;
}

CriterionResult c5_measure_additivity(std::uint64_t seed) {
  CriterionResult r;
  r.name = "energy-measure-additivity";
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  double worst = 0.0;
  long cases = 0;
  const double ps[3] = {1.5, 2.0, 3.0};
  const double rhos[3] = {1.4, 5.0 / 3.0, 2.2};
  for (int k = 0; k < 3; ++k) {
    const EnergyModel model = EnergyModel::uniform(st, ps[k], rhos[k]);
    const int vcount = model.table(4).vertex_count();
    CounterRng rng(seed, "c5", static_cast<std::uint64_t>(k));
    for (int t = 0; t < 20; ++t) {
      DiscreteFunction u;
      u.level = 4;
      u.v.resize(vcount);
      for (double& x : u.v) x = rng.normal();
      const double e = model.energy(u);
      for (int n = 0; n <= 4; ++n) {
        const CellMeasure cm = cell_energy_measure(model, u, n);
        worst = std::max(worst, std::abs(cm.total - e) / e);
        ++cases;
      }
    }
  }
  r.pass = worst < 1e-8;
  r.detail = fmt("%ld (p, u, level) cases, worst relative defect %.2e", cases,
                 worst);
  return r;
}

CriterionResult c6_gc_battery(std::uint64_t seed) {
  CriterionResult r;
  r.name = "gc-battery";
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  long violations = 0;
  bool homogeneity = true;
  bool small_seen = false, large_seen = false;
  for (double p : {1.5, 2.0, 3.0}) {
    const EnergyModel model = EnergyModel::uniform(st, p, p == 2.0 ? 5.0 / 3.0 : 2.0);
    const GcReport rep =
        gc_battery(model_form(model, 3, "sg-level3"), 1000, seed);
    violations += rep.total_violations;
    homogeneity = homogeneity && rep.homogeneity_ok;
    for (const GcReport::CheckResult& c : rep.checks) {
      if (c.check == "clarkson_small") small_seen = true;
      if (c.check == "clarkson_large") large_seen = true;
    }
  }

  // negative controls: a mislabeled quadratic and a genuinely non-contractive
  // cubed l1 seminorm, both on a 3-vertex path
  FormUnderTest squares;
  squares.name = "squares-as-p3";
  squares.dim = 3;
  squares.p = 3.0;
  squares.energy = [](const std::vector<double>& u) {
    return (u[1] - u[0]) * (u[1] - u[0]) + (u[2] - u[1]) * (u[2] - u[1]);
  };
  FormUnderTest l1c;
  l1c.name = "l1-cubed";
  l1c.dim = 3;
  l1c.p = 3.0;
  l1c.energy = [](const std::vector<double>& u) {
    const double s = std::abs(u[1] - u[0]) + std::abs(u[2] - u[1]);
    return s * s * s;
  };
  const GcReport neg1 = gc_battery(squares, 1000, seed);
  const GcReport neg2 = gc_battery(l1c, 1000, seed);
  const bool controls_flagged = !neg1.homogeneity_ok && neg2.total_violations > 0;

  r.pass = violations == 0 && homogeneity && small_seen && large_seen &&
           controls_flagged;
  r.detail = fmt(
      "model violations %ld (homogeneity %s, both regimes %s); controls: "
      "mislabeled-homogeneity %s, l1-cubed violations %ld",
      violations, homogeneity ? "ok" : "BAD",
      small_seen && large_seen ? "seen" : "MISSING",
      neg1.homogeneity_ok ? "MISSED" : "flagged", neg2.total_violations);
  return r;
}

CriterionResult c7_chain_rule() {
  CriterionResult r;
  r.name = "chain-rule-convergence";
  const EnergyModel model = sg2();
  const SelfSimilarMeasure m = SelfSimilarMeasure::uniform(3);
  const auto phi = [](double t) { return t * t; };
  const auto dphi = [](double t) { return 2.0 * t; };
  // one harmonic function, compared on level-2 cells while the derivative
  // factor is resolved on ever finer subcells
  const DiscreteFunction u = model.boundary_harmonic(8, {1.0, 0.0, 0.0});
  std::vector<double> errs;
  for (int depth = 5; depth <= 8; ++depth)
    errs.push_back(chain_rule_check(model, m, u, phi, dphi, 2, depth).max_rel_error);
  int bumps = 0;
  for (std::size_t i = 1; i < errs.size(); ++i)
    if (errs[i] > errs[i - 1]) ++bumps;
  r.pass = bumps <= 1 && errs.back() < 0.15;
  r.detail = fmt("max rel err by depth 5..8: %.4f %.4f %.4f %.4f (%d upticks)",
                 errs[0], errs[1], errs[2], errs[3], bumps);
  return r;
}

CriterionResult c8_weak_monotonicity(std::uint64_t seed) {
  CriterionResult r;
  r.name = "weak-monotonicity-band";
  const EnergyModel model = sg2();
  BesovContext ctx(model.structure(), SelfSimilarMeasure::uniform(3), 14, seed);
  const ExtendedFunction f(model, model.boundary_harmonic(1, {1.0, 0.0, 0.0}));
  std::vector<double> radii;
  for (int k = 2; k <= 9; ++k) radii.push_back(std::pow(2.0, -k));
  KernelSpec k;
  k.variant = KernelVariant::BallPower;
  k.s = kSp2;
  const WmReport rep = wm_ratio(ctx, k, 2.0, f, radii, 200000);

  // divergence control at s_p + 0.3: the same sample pairs rescale exactly by
  // r^{-p*0.3}, so the shifted slope is the measured slope minus p*0.3
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(rep.profile[i].value > 0.0)) continue;
    lx.push_back(std::log(radii[i]));
    ly.push_back(std::log(rep.profile[i].value));
  }
  const double slope_sp = lsq_slope(lx, ly);
  const double slope_shift = slope_sp - 2.0 * 0.3;
  const bool diverges = slope_shift <= -0.3 * 2.0 + 0.15;
  r.pass = rep.ratio <= 30.0 && diverges;
  r.detail = fmt("J ratio %.3f (cap 30), slope at s_p %.3f, at s_p+0.3 %.3f "
                 "(cap %.2f)",
                 rep.ratio, slope_sp, slope_shift, -0.3 * 2.0 + 0.15);
  return r;
}

CriterionResult c9_scan(std::uint64_t seed) {
  CriterionResult r;
  r.name = "critical-exponent-scan";
  const EnergyModel model = sg2();
  BesovContext ctx(model.structure(), SelfSimilarMeasure::uniform(3), 12, seed);
  std::vector<std::shared_ptr<const PointFunction>> fs;
  fs.push_back(std::make_shared<ExtendedFunction>(
      model, model.boundary_harmonic(1, {1.0, 0.0, 0.0})));
  fs.push_back(std::make_shared<ExtendedFunction>(
      model, model.boundary_harmonic(1, {0.2, -1.0, 0.5})));
  std::vector<double> radii;
  for (int k = 2; k <= 7; ++k) radii.push_back(std::pow(2.0, -k));
  const std::vector<double> s_grid = {0.9, 1.0, 1.1, kSp2, 1.2, 1.3};
  const ScanResult scan = critical_exponent_scan(ctx, MetricMode::Euclidean, 2.0,
                                                 fs, s_grid, radii, 50000);
  const double gap = std::abs(scan.s_estimate - kSp2);
  r.pass = gap < 0.1;
  r.detail = fmt("s estimate %.4f vs %.4f (gap %.4f, bracket [%.4f, %.4f])",
                 scan.s_estimate, kSp2, gap, scan.bracket_lo, scan.bracket_hi);
  return r;
}

CriterionResult c10_resistance(std::uint64_t seed) {
  CriterionResult r;
  r.name = "resistance-geometry";
  const EnergyModel model = sg2();

  const ResistanceTable rt(model, 5);
  CounterRng rng(seed, "c10");
  const std::uint64_t n = static_cast<std::uint64_t>(rt.vertex_count());
  double worst_tri = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const int a = static_cast<int>(rng.uniform_below(n));
    const int b = static_cast<int>(rng.uniform_below(n));
    const int c = static_cast<int>(rng.uniform_below(n));
    worst_tri = std::max(
        worst_tri, rt.metric(a, c) - rt.metric(a, b) - rt.metric(b, c));
  }

  const ScalingReport sc = scaling_check(model, 3, 200, seed);
  const ExponentFit fit = metric_exponent_fit(model, 6, 300, seed);
  const double slope_want = std::log(5.0 / 3.0) / std::log(2.0);
  const double slope_gap = std::abs(fit.slope - slope_want);

  r.pass = worst_tri <= 1e-9 && sc.max_slack <= 1e-9 && slope_gap < 0.15;
  r.detail = fmt(
      "triangle slack %.2e on 1e4 triples, scaling slack %.2e on %ld pairs, "
      "slope %.4f vs %.4f (fit over %.2f decades)",
      worst_tri, sc.max_slack, sc.pairs, fit.slope, slope_want, fit.decades);
  return r;
}

CriterionResult c11_comparability(std::uint64_t seed) {
  CriterionResult r;
  r.name = "kernel-comparability";
  const EnergyModel model = sg2();
  BesovContext ctx(model.structure(), SelfSimilarMeasure::uniform(3), 12, seed);
  const ExtendedFunction f(model, model.boundary_harmonic(1, {1.0, 0.0, 0.0}));
  const std::vector<double> radii = {0.4, 0.2, 0.1, 0.05};
  const ComparabilityReport rep =
      kernel_comparability(ctx, 2.0, f, kSp2, radii, 30000);
  r.pass = rep.dominated && rep.c_prime <= 20.0;
  r.detail = fmt("pathwise domination %s, fitted C' %.3f (cap 20)",
                 rep.dominated ? "exact" : "BROKEN", rep.c_prime);
  return r;
}

CriterionResult c12_poincare(std::uint64_t seed) {
  CriterionResult r;
  r.name = "poincare-stability";
  const EnergyModel model = sg2();
  const SelfSimilarMeasure m = SelfSimilarMeasure::uniform(3);
  const double d_fp = std::log(3.0) / std::log(5.0 / 3.0);
  const DiscreteFunction u5 = model.boundary_harmonic(5, {1.0, 0.0, 0.0});
  const DiscreteFunction u6 = model.boundary_harmonic(6, {1.0, 0.0, 0.0});
  const PoincareReport r5 = poincare_check(model, m, d_fp, {u5}, 50, 0.25, 2, seed);
  const PoincareReport r6 = poincare_check(model, m, d_fp, {u6}, 50, 0.25, 2, seed);
  const bool positive = r5.sup_ratio > 0.0 && r6.sup_ratio > 0.0;
  const double factor = positive ? std::max(r5.sup_ratio, r6.sup_ratio) /
                                       std::min(r5.sup_ratio, r6.sup_ratio)
                                 : 1e300;
  r.pass = positive && factor < 2.0;
  r.detail = fmt("sup ratio %.4f at level 5 vs %.4f at level 6 (factor %.3f)",
                 r5.sup_ratio, r6.sup_ratio, factor);
  return r;
}

CriterionResult c13_determinism(const AcceptanceOptions& opt) {
  CriterionResult r;
  r.name = "determinism";
  if (opt.cli_path.empty()) {
    r.detail = "no CLI binary provided (set FRACTALP_CLI_BIN)";
    return r;
  }
  const fs::path a = opt.scratch_dir / "det_a";
  const fs::path b = opt.scratch_dir / "det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  fs::create_directories(a);
  fs::create_directories(b);
  const std::string base = opt.cli_path.string() +
                           " suite --preset sg --p 2 --seed 7 --emit-only --out ";
  const int rc1 = std::system((base + a.string() + " > /dev/null 2>&1").c_str());
  const int rc2 = std::system((base + b.string() + " > /dev/null 2>&1").c_str());
  if (rc1 != 0 || rc2 != 0) {
    r.detail = fmt("suite emit runs exited %d and %d", rc1, rc2);
    return r;
  }
  long files = 0;
  std::string mismatch;
  for (const fs::directory_entry& ent : fs::recursive_directory_iterator(a)) {
    if (!ent.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(ent.path(), a);
    const fs::path other = b / rel;
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    if (!fs::exists(other) || slurp(ent.path()) != slurp(other)) {
      mismatch = rel.string();
      break;
    }
  }
  r.pass = mismatch.empty() && files > 0;
  r.detail = mismatch.empty()
                 ? fmt("%ld files byte-identical across two runs", files)
                 : fmt("mismatch in %s", mismatch.c_str());
  return r;
}

}  // namespace

CriterionResult run_criterion(int index, const AcceptanceOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  switch (index) {
    case 1: r = c1_harmonic_extension(); break;
    case 2: r = c2_eigenform(); break;
    case 3: r = c3_exponents(); break;
    case 4: r = c4_trace_consistency(); break;
    case 5: r = c5_measure_additivity(opt.seed); break;
    case 6: r = c6_gc_battery(opt.seed); break;
    case 7: r = c7_chain_rule(); break;
    case 8: r = c8_weak_monotonicity(opt.seed); break;
    case 9: r = c9_scan(opt.seed); break;
    case 10: r = c10_resistance(opt.seed); break;
    case 11: r = c11_comparability(opt.seed); break;
    case 12: r = c12_poincare(opt.seed); break;
    case 13: r = c13_determinism(opt); break;
    default:
      throw std::invalid_argument("criterion index out of range (1..13)");
  }
  r.index = index;
  r.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt) {
  std::vector<CriterionResult> out;
  for (int i = 1; i <= 13; ++i) out.push_back(run_criterion(i, opt));
  return out;
}

void print_results(const std::vector<CriterionResult>& results) {
  for (const CriterionResult& r : results)
    std::printf("[%s] %2d %s — %s (%.2f s)\n", r.pass ? "PASS" : "FAIL", r.index,
                r.name.c_str(), r.detail.c_str(), r.seconds);
  std::fflush(stdout);
}

}  // namespace fractalp
