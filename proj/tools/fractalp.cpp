#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "fractalp/acceptance.hpp"
#include "fractalp/besov.hpp"
#include "fractalp/forms.hpp"
#include "fractalp/io.hpp"
#include "fractalp/measures.hpp"
#include "fractalp/metricgeom.hpp"
#include "fractalp/properties.hpp"
#include "fractalp/renorm.hpp"
#include "fractalp/rng.hpp"
#include "fractalp/structure.hpp"
#include "fractalp/word.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace fractalp;

namespace {

// resolved run configuration: defaults < config file < flags < seed env var
struct Common {
  std::string preset = "sg";
  double p = 2.0;
  double rho = 5.0 / 3.0;
  int level = 3;
  int n = 2;  // cell level for measure reports
  int depth = 12;
  long samples = 20000;
  long pairs = 1000;
  std::uint64_t seed = 7;
  std::string out = ".";
  std::string metric = "euclidean";
  std::string control;
  int grid = 720;
  double s = -1.0;  // besov smoothness; negative = use the partition exponent
  double r = 0.25;
  bool emit_only = false;
};

int apply_config(const fs::path& path, Common& c) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "config not readable: " << path << "\n";
    return 2;
  }
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    std::cerr << "config parse error in " << path << ": " << e.what() << "\n";
    return 2;
  }
  if (!j.is_object()) {
    std::cerr << "config root must be an object: " << path << "\n";
    return 2;
  }
  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "preset") c.preset = val.get<std::string>();
      else if (key == "p") c.p = val.get<double>();
      else if (key == "rho") c.rho = val.get<double>();
      else if (key == "level") c.level = val.get<int>();
      else if (key == "n") c.n = val.get<int>();
      else if (key == "depth") c.depth = val.get<int>();
      else if (key == "samples") c.samples = val.get<long>();
      else if (key == "pairs") c.pairs = val.get<long>();
      else if (key == "seed") c.seed = val.get<std::uint64_t>();
      else if (key == "out") c.out = val.get<std::string>();
      else if (key == "metric") c.metric = val.get<std::string>();
      else if (key == "control") c.control = val.get<std::string>();
      else if (key == "grid") c.grid = val.get<int>();
      else if (key == "s") c.s = val.get<double>();
      else if (key == "r") c.r = val.get<double>();
      else {
        std::cerr << "config error at /" << key << ": unknown key\n";
        return 2;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "config error in " << path << ": " << e.what() << "\n";
    return 2;
  }
  return 0;
}

json config_json(const Common& c, const std::string& command) {
  // everything that determines the outputs; the output directory stays out so
  // manifests are byte-identical wherever the artifacts land
  json j;
  j["command"] = command;
  j["preset"] = c.preset;
  j["p"] = c.p;
  j["rho"] = c.rho;
  j["level"] = c.level;
  j["n"] = c.n;
  j["depth"] = c.depth;
  j["samples"] = c.samples;
  j["pairs"] = c.pairs;
  j["metric"] = c.metric;
  j["grid"] = c.grid;
  j["s"] = c.s;
  j["r"] = c.r;
  if (!c.control.empty()) j["control"] = c.control;
  return j;
}

PcfStructure structure_for(const Common&) {
  // `sg` is the only built-in preset; unknown names were rejected at dispatch
  return PcfStructure::sierpinski_gasket();
}

EnergyModel model_for(const Common& c) {
  return EnergyModel::uniform(structure_for(c), c.p, c.rho);
}

double partition_exponent(const Common& c) {
  const PcfStructure st = structure_for(c);
  const ExponentSheet sheet = exponents(st, c.p, c.rho,
                                        SelfSimilarMeasure::uniform(st.alphabet_size()));
  return sheet.s_p_partition;
}

// resistance-metric hook for the Besov context: distances between the
// level-6 cells containing the points, through the dense p=2 table
int install_resistance_metric(const Common& c, const EnergyModel& model,
                              BesovContext& ctx) {
  if (c.p != 2.0) {
    std::cerr << "resistance metric mode is only wired up for p = 2\n";
    return 2;
  }
  const int hook_level = 6;
  if (ctx.sample_depth() < hook_level) {
    std::cerr << "resistance metric mode needs --depth >= 6\n";
    return 2;
  }
  auto mdl = std::make_shared<EnergyModel>(model);
  auto rt = std::make_shared<ResistanceTable>(*mdl, hook_level);
  const int nv = rt->vertex_count();
  double diam = 0.0;
  for (int x = 0; x < nv; ++x)
    for (int y = x + 1; y < nv; ++y) diam = std::max(diam, rt->metric(x, y));

  const int alphabet = mdl->structure().alphabet_size();
  auto dist = [mdl, rt, alphabet](const Letter* a, const Letter* b, int len) {
    std::uint64_t ca = 0, cb = 0;
    for (int i = 0; i < 6; ++i) {
      ca = ca * static_cast<std::uint64_t>(alphabet) + a[i];
      cb = cb * static_cast<std::uint64_t>(alphabet) + b[i];
    }
    const VertexTable& vt = mdl->table(6);
    return rt->metric(vt.id(ca, 0), vt.id(cb, 0));
  };
  double rho_min = mdl->rho()[0];
  for (double x : mdl->rho()) rho_min = std::min(rho_min, x);
  const double scale = std::pow(rho_min, -1.0 / (c.p - 1.0));
  ctx.set_metric(MetricMode::Resistance, dist, diam * 1.0000001, scale);
  return 0;
}

// ---- subcommand bodies (no manifest here; dispatch writes it once) ---------

int handle_structure(const Common& c, const fs::path& out) {
  const PcfStructure st = structure_for(c);
  const VertexTable vt = VertexTable::build(st, c.level);
  json s;
  s["name"] = st.name();
  s["level"] = c.level;
  s["alphabet"] = st.alphabet_size();
  s["boundary"] = st.boundary_size();
  s["vertices"] = vt.vertex_count();
  s["cells"] = vt.cells();
  write_json(out / "structure.json", s);

  std::vector<std::vector<double>> rows;
  for (int id = 0; id < vt.vertex_count(); ++id) {
    const auto [cell, corner] = vt.representative(id);
    const Vec2 xy = vt.has_coords() ? vt.coord(id) : Vec2{};
    rows.push_back({static_cast<double>(id), static_cast<double>(cell),
                    static_cast<double>(corner), xy.x, xy.y});
  }
  write_csv(out / "vertices.csv", {"id", "cell", "corner", "x", "y"}, rows);
  return 0;
}

int handle_solve(const Common& c, const fs::path& out) {
  const EnergyModel model = model_for(c);
  const int B = model.structure().boundary_size();
  std::vector<int> fixed_ids;
  std::vector<double> values(B, 0.0);
  values[0] = 1.0;
  for (int q = 0; q < B; ++q) fixed_ids.push_back(q);
  const SolveResult sol = model.dirichlet_solve(c.level, fixed_ids, values);

  json s;
  s["p"] = c.p;
  s["level"] = c.level;
  s["rho"] = c.rho;
  s["converged"] = sol.converged;
  s["energy"] = sol.energy;
  s["iterations"] = sol.iterations;
  s["grad_norm"] = sol.grad_norm;
  write_json(out / "solve.json", s);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < sol.u.size(); ++i)
    rows.push_back({static_cast<double>(i), sol.u[i]});
  write_csv(out / "solution.csv", {"id", "value"}, rows);
  return sol.converged ? 0 : 3;
}

int handle_eigenform(const Common& c, const fs::path& out) {
  EigenformOptions opt;
  opt.grid_size = c.grid;
  const EigenformResult r = eigenform_solve(structure_for(c), c.p, opt);
  json e;
  e["p"] = c.p;
  e["rho"] = r.rho_p;
  e["residual"] = r.residual;
  e["iterations"] = r.iterations;
  e["converged"] = r.converged;
  e["reduced_fidelity"] = r.reduced_fidelity;
  write_json(out / "eigenform.json", e);
  return r.converged ? 0 : 3;
}

int handle_exponents(const Common& c, const fs::path& out) {
  const PcfStructure st = structure_for(c);
  const EigenformResult r = eigenform_solve(st, c.p);
  if (!r.converged) return 3;
  const ExponentSheet sheet =
      exponents(st, c.p, r.rho_p, SelfSimilarMeasure::uniform(st.alphabet_size()));
  json e;
  e["p"] = sheet.p;
  e["rho"] = r.rho_p;
  e["d_f"] = sheet.d_f;
  e["d_fp"] = sheet.d_fp;
  e["sigma_p"] = sheet.sigma_p;
  e["d_wp"] = sheet.d_wp;
  e["s_p_partition"] = sheet.s_p_partition;
  e["s_p_resistance"] = sheet.s_p_resistance;
  e["r_star"] = sheet.r_star;
  write_json(out / "exponents.json", e);
  return 0;
}

int handle_gc(const Common& c, const fs::path& out) {
  FormUnderTest form;
  if (c.control.empty()) {
    const EnergyModel model = model_for(c);
    form = model_form(model, c.level, c.preset + "-level" + std::to_string(c.level));
    const GcReport rep = gc_battery(form, c.pairs, c.seed);
    return [&] {
      json g;
      g["form"] = form.name;
      g["pairs"] = c.pairs;
      g["homogeneity_ok"] = rep.homogeneity_ok;
      g["total_violations"] = rep.total_violations;
      json checks = json::array();
      for (const GcReport::CheckResult& ck : rep.checks)
        checks.push_back({{"check", ck.check},
                          {"trials", ck.trials},
                          {"violations", ck.violations},
                          {"worst_slack", ck.worst_slack}});
      g["checks"] = checks;
      write_json(out / "gc.json", g);
      return rep.homogeneity_ok && rep.total_violations == 0 ? 0 : 1;
    }();
  }

  if (c.control == "l1-cubed") {
    form.name = "l1-cubed";
    form.dim = 3;
    form.p = 3.0;
    form.energy = [](const std::vector<double>& u) {
      const double s = std::abs(u[1] - u[0]) + std::abs(u[2] - u[1]);
      return s * s * s;
    };
  } else if (c.control == "squares-as-p3") {
    form.name = "squares-as-p3";
    form.dim = 3;
    form.p = 3.0;
    form.energy = [](const std::vector<double>& u) {
      return (u[1] - u[0]) * (u[1] - u[0]) + (u[2] - u[1]) * (u[2] - u[1]);
    };
  } else {
    std::cerr << "unknown control form: " << c.control << "\n";
    return 2;
  }
  const GcReport rep = gc_battery(form, c.pairs, c.seed);
  json g;
  g["form"] = form.name;
  g["pairs"] = c.pairs;
  g["homogeneity_ok"] = rep.homogeneity_ok;
  g["total_violations"] = rep.total_violations;
  write_json(out / "gc.json", g);
  return rep.homogeneity_ok && rep.total_violations == 0 ? 0 : 1;
}

int handle_besov_eval(const Common& c, const fs::path& out) {
  const EnergyModel model = model_for(c);
  BesovContext ctx(model.structure(), SelfSimilarMeasure::uniform(3), c.depth,
                   c.seed);
  KernelSpec k;
  k.s = c.s < 0.0 ? partition_exponent(c) : c.s;
  if (c.metric == "resistance") {
    if (int rc = install_resistance_metric(c, model, ctx)) return rc;
    k.metric = MetricMode::Resistance;
  }
  const ExtendedFunction f(model, model.boundary_harmonic(1, {1.0, 0.0, 0.0}));
  const FunctionalEstimate est = eval_J(ctx, k, c.p, f, c.r, c.samples);
  json b;
  b["p"] = c.p;
  b["s"] = k.s;
  b["r"] = est.r;
  b["value"] = est.value;
  b["std_error"] = est.std_error;
  b["samples"] = est.samples;
  b["zero_pair_batches"] = est.zero_pair_batches;
  write_json(out / "besov.json", b);
  return 0;
}

int handle_besov_wm(const Common& c, const fs::path& out) {
  const EnergyModel model = model_for(c);
  BesovContext ctx(model.structure(), SelfSimilarMeasure::uniform(3), c.depth,
                   c.seed);
  KernelSpec k;
  k.s = c.s < 0.0 ? partition_exponent(c) : c.s;
  if (c.metric == "resistance") {
    if (int rc = install_resistance_metric(c, model, ctx)) return rc;
    k.metric = MetricMode::Resistance;
  }
  const ExtendedFunction f(model, model.boundary_harmonic(1, {1.0, 0.0, 0.0}));
  std::vector<double> radii;
  for (int e = 2; e <= 7; ++e) radii.push_back(std::pow(2.0, -e));
  const WmReport rep = wm_ratio(ctx, k, c.p, f, radii, c.samples);

  json w;
  w["p"] = c.p;
  w["s"] = k.s;
  w["ratio"] = rep.ratio;
  w["radii"] = rep.radii;
  write_json(out / "wm.json", w);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.profile.size(); ++i)
    rows.push_back({rep.radii[i], rep.profile[i].value, rep.profile[i].std_error});
  write_csv(out / "wm.csv", {"r", "value", "std_error"}, rows);
  return 0;
}

int handle_besov_scan(const Common& c, const fs::path& out) {
  const EnergyModel model = model_for(c);
  BesovContext ctx(model.structure(), SelfSimilarMeasure::uniform(3), c.depth,
                   c.seed);
  MetricMode mode = MetricMode::Euclidean;
  if (c.metric == "resistance") {
    if (int rc = install_resistance_metric(c, model, ctx)) return rc;
    mode = MetricMode::Resistance;
  }
  std::vector<std::shared_ptr<const PointFunction>> fs;
  fs.push_back(std::make_shared<ExtendedFunction>(
      model, model.boundary_harmonic(1, {1.0, 0.0, 0.0})));
  fs.push_back(std::make_shared<ExtendedFunction>(
      model, model.boundary_harmonic(1, {0.2, -1.0, 0.5})));
  const double sp = partition_exponent(c);
  const std::vector<double> s_grid = {sp - 0.25, sp - 0.15, sp - 0.05, sp,
                                      sp + 0.05, sp + 0.15};
  std::vector<double> radii;
  for (int e = 2; e <= 6; ++e) radii.push_back(std::pow(2.0, -e));
  const ScanResult scan =
      critical_exponent_scan(ctx, mode, c.p, fs, s_grid, radii, c.samples);

  json sj;
  sj["p"] = c.p;
  sj["s_estimate"] = scan.s_estimate;
  sj["bracket_lo"] = scan.bracket_lo;
  sj["bracket_hi"] = scan.bracket_hi;
  write_json(out / "scan.json", sj);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < scan.s_grid.size(); ++i)
    rows.push_back({scan.s_grid[i], scan.slopes[i]});
  write_csv(out / "scan.csv", {"s", "slope"}, rows);
  return 0;
}

int handle_besov_compare(const Common& c, const fs::path& out) {
  const EnergyModel model = model_for(c);
  BesovContext ctx(model.structure(), SelfSimilarMeasure::uniform(3), c.depth,
                   c.seed);
  if (c.metric == "resistance") {
    if (int rc = install_resistance_metric(c, model, ctx)) return rc;
  }
  const ExtendedFunction f(model, model.boundary_harmonic(1, {1.0, 0.0, 0.0}));
  const double s = c.s < 0.0 ? partition_exponent(c) : c.s;
  const std::vector<double> radii = {0.4, 0.2, 0.1, 0.05};
  const ComparabilityReport rep =
      kernel_comparability(ctx, c.p, f, s, radii, c.samples);
  json cj;
  cj["p"] = c.p;
  cj["s"] = s;
  cj["dominated"] = rep.dominated;
  cj["c_prime"] = rep.c_prime;
  write_json(out / "compare.json", cj);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.radii.size(); ++i)
    rows.push_back({rep.radii[i], rep.ratio[i]});
  write_csv(out / "compare.csv", {"r", "ratio"}, rows);
  return rep.dominated ? 0 : 1;
}

int handle_measures_cells(const Common& c, const fs::path& out) {
  const EnergyModel model = model_for(c);
  const DiscreteFunction u = model.boundary_harmonic(c.level, {1.0, 0.0, 0.0});
  const CellMeasure cm = cell_energy_measure(model, u, c.n);
  json m;
  m["p"] = c.p;
  m["level"] = c.level;
  m["n"] = c.n;
  m["total"] = cm.total;
  m["energy"] = model.energy(u);
  write_json(out / "measures.json", m);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < cm.mass.size(); ++i)
    rows.push_back({static_cast<double>(i), cm.mass[i]});
  write_csv(out / "cells.csv", {"cell", "mass"}, rows);
  return 0;
}

int handle_measures_chain(const Common& c, const fs::path& out) {
  const EnergyModel model = model_for(c);
  const SelfSimilarMeasure m = SelfSimilarMeasure::uniform(3);
  const DiscreteFunction u = model.boundary_harmonic(c.level, {1.0, 0.0, 0.0});
  const ChainRuleReport rep = chain_rule_check(
      model, m, u, [](double t) { return t * t; },
      [](double t) { return 2.0 * t; }, c.n);
  json j;
  j["p"] = c.p;
  j["level"] = c.level;
  j["n"] = c.n;
  j["max_rel_error"] = rep.max_rel_error;
  write_json(out / "chain.json", j);
  return 0;
}

int handle_measures_locality(const Common& c, const fs::path& out) {
  const EnergyModel model = model_for(c);
  const int depth = std::max(c.level, 4);
  const DiscreteFunction b0 = cell_bump(model, Word::parse("00", 3), depth);
  const DiscreteFunction b1 = cell_bump(model, Word::parse("11", 3), depth);
  const DiscreteFunction v = model.boundary_harmonic(depth, {0.3, -0.7, 0.2});
  const LocalityReport rep = strong_locality_check(model, b0, b1, v, c.n);
  json j;
  j["p"] = c.p;
  j["level"] = depth;
  j["n"] = c.n;
  j["checks"] = rep.checks.size();
  j["skipped"] = rep.skipped;
  j["max_abs_error"] = rep.max_abs_error;
  write_json(out / "locality.json", j);
  return 0;
}

int handle_metric_resistance(const Common& c, const fs::path& out) {
  const EnergyModel model = model_for(c);
  const ResistanceTable rt(model, c.level);
  json j;
  j["p"] = c.p;
  j["level"] = c.level;
  j["vertices"] = rt.vertex_count();
  j["dense"] = rt.dense();
  write_json(out / "metric.json", j);

  // boundary pairs plus a deterministic sample of interior pairs
  std::vector<std::vector<double>> rows;
  const int B = model.structure().boundary_size();
  for (int q = 0; q < B; ++q)
    for (int qp = q + 1; qp < B; ++qp)
      rows.push_back({static_cast<double>(q), static_cast<double>(qp),
                      rt.resistance(q, qp), rt.metric(q, qp)});
  CounterRng rng(c.seed, "metric-dump");
  const std::uint64_t nv = static_cast<std::uint64_t>(rt.vertex_count());
  for (int t = 0; t < 20; ++t) {
    const int x = static_cast<int>(rng.uniform_below(nv));
    int y = static_cast<int>(rng.uniform_below(nv - 1));
    if (y >= x) ++y;
    rows.push_back({static_cast<double>(x), static_cast<double>(y),
                    rt.resistance(x, y), rt.metric(x, y)});
  }
  write_csv(out / "resistance.csv", {"x", "y", "resistance", "metric"}, rows);
  return 0;
}

int handle_metric_fits(const Common& c, const fs::path& out) {
  const EnergyModel model = model_for(c);
  const int scale_level = std::min(c.level, 3);
  const ScalingReport sc = scaling_check(model, scale_level, 100, c.seed);
  const ExponentFit fit = metric_exponent_fit(model, std::max(c.level, 4), 300,
                                              c.seed);
  json j;
  j["p"] = c.p;
  j["scaling_level"] = scale_level;
  j["scaling_pairs"] = sc.pairs;
  j["scaling_max_slack"] = sc.max_slack;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["residual_band"] = fit.residual_band;
  j["decades"] = fit.decades;
  j["fit_pairs"] = fit.pairs;
  write_json(out / "fits.json", j);
  return 0;
}

int handle_metric_poincare(const Common& c, const fs::path& out) {
  const EnergyModel model = model_for(c);
  const SelfSimilarMeasure m = SelfSimilarMeasure::uniform(3);
  const ExponentSheet sheet = exponents(model.structure(), c.p, c.rho, m);
  const int ulevel = std::max(c.level, 4);
  const DiscreteFunction u = model.boundary_harmonic(ulevel, {1.0, 0.0, 0.0});
  const PoincareReport rep =
      poincare_check(model, m, sheet.d_fp, {u}, 10, 0.25, 2, c.seed);
  json j;
  j["p"] = c.p;
  j["level"] = ulevel;
  j["sup_ratio"] = rep.sup_ratio;
  j["balls"] = rep.balls.size();
  j["skipped"] = rep.skipped;
  write_json(out / "poincare.json", j);
  return 0;
}

// fast deterministic artifact bundle; also the target of the determinism
// criterion, which re-runs it in two directories and compares bytes
int emit_bundle(const Common& c, const fs::path& out) {
  Common e = c;
  e.level = 3;
  if (int rc = handle_structure(e, out)) return rc;
  if (int rc = handle_eigenform(e, out)) return rc;
  if (int rc = handle_exponents(e, out)) return rc;
  if (int rc = handle_solve(e, out)) return rc;

  Common g = c;
  g.level = 2;
  g.pairs = 500;
  if (int rc = handle_gc(g, out)) return rc;

  Common b = c;
  b.samples = 10000;
  b.depth = 10;
  if (int rc = handle_besov_wm(b, out)) return rc;
  if (int rc = handle_besov_scan(b, out)) return rc;

  Common mm = c;
  mm.level = 4;
  mm.n = 2;
  if (int rc = handle_measures_cells(mm, out)) return rc;
  if (int rc = handle_metric_fits(mm, out)) return rc;
  if (int rc = handle_metric_poincare(mm, out)) return rc;
  return 0;
}

int handle_suite(const Common& c, const fs::path& out, const fs::path& self) {
  if (c.emit_only) return emit_bundle(c, out);

  AcceptanceOptions opt;
  opt.seed = c.seed;
  opt.scratch_dir = out / "scratch";
  opt.cli_path = self;
  fs::create_directories(opt.scratch_dir);
  const std::vector<CriterionResult> results = run_acceptance(opt);
  print_results(results);
  fs::remove_all(opt.scratch_dir);

  json j;
  bool all = true;
  json arr = json::array();
  for (const CriterionResult& r : results) {
    all = all && r.pass;
    arr.push_back({{"index", r.index},
                   {"name", r.name},
                   {"pass", r.pass},
                   {"detail", r.detail}});
  }
  j["criteria"] = arr;
  j["all_pass"] = all;
  write_json(out / "suite.json", j);
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for p-energy forms on p.c.f. fractals"};
  app.require_subcommand(0, 1);

  Common c;
  std::string config_path;

  // config file first (lowest precedence), flags override it below
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
  }
  if (!config_path.empty()) {
    if (int rc = apply_config(config_path, c)) return rc;
  }

  app.add_option("--config", config_path, "JSON config file (flags override)");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--preset", c.preset, "built-in structure preset (sg)");
    sub->add_option("--p", c.p, "energy exponent p > 1");
    sub->add_option("--rho", c.rho, "per-letter renormalization weight");
    sub->add_option("--level", c.level, "vertex refinement level");
    sub->add_option("--n", c.n, "cell level for measure reports");
    sub->add_option("--depth", c.depth, "address sampling depth");
    sub->add_option("--samples", c.samples, "Monte Carlo samples per radius");
    sub->add_option("--pairs", c.pairs, "random pairs for inequality batteries");
    sub->add_option("--seed", c.seed, "deterministic seed (FRACTALP_SEED overrides)");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--metric", c.metric, "euclidean | resistance")
        ->check(CLI::IsMember({"euclidean", "resistance"}));
    return sub;
  };

  CLI::App* s_structure = add_common(
      app.add_subcommand("structure", "build and dump a vertex table"));
  CLI::App* s_solve = add_common(
      app.add_subcommand("solve", "p-harmonic Dirichlet solve"));
  CLI::App* s_eigen = add_common(
      app.add_subcommand("eigenform", "renormalization fixed point"));
  s_eigen->add_option("--grid", c.grid, "circle-form grid size");
  CLI::App* s_expo = add_common(
      app.add_subcommand("exponents", "dimension and smoothness sheet"));
  CLI::App* s_gc = add_common(
      app.add_subcommand("gc", "structural inequality battery"));
  s_gc->add_option("--control", c.control,
                   "negative control: l1-cubed | squares-as-p3");

  CLI::App* s_besov = app.add_subcommand("besov", "smoothness functionals");
  s_besov->require_subcommand(1);
  CLI::App* s_b_eval = add_common(s_besov->add_subcommand("eval", "one J estimate"));
  s_b_eval->add_option("--s", c.s, "smoothness (default: partition exponent)");
  s_b_eval->add_option("--r", c.r, "kernel radius");
  CLI::App* s_b_wm = add_common(
      s_besov->add_subcommand("wm", "weak-monotonicity profile"));
  s_b_wm->add_option("--s", c.s, "smoothness (default: partition exponent)");
  CLI::App* s_b_scan = add_common(
      s_besov->add_subcommand("scan", "critical exponent scan"));
  CLI::App* s_b_cmp = add_common(
      s_besov->add_subcommand("compare", "kernel comparability"));
  s_b_cmp->add_option("--s", c.s, "smoothness (default: partition exponent)");

  CLI::App* s_meas = app.add_subcommand("measures", "p-energy measures");
  s_meas->require_subcommand(1);
  CLI::App* s_m_cells = add_common(
      s_meas->add_subcommand("cells", "cell energy masses"));
  CLI::App* s_m_chain = add_common(
      s_meas->add_subcommand("chain", "chain-rule comparison"));
  CLI::App* s_m_loc = add_common(
      s_meas->add_subcommand("locality", "strong locality identities"));

  CLI::App* s_metric = app.add_subcommand("metric", "resistance geometry");
  s_metric->require_subcommand(1);
  CLI::App* s_mt_res = add_common(
      s_metric->add_subcommand("resistance", "resistance table dump"));
  CLI::App* s_mt_fit = add_common(
      s_metric->add_subcommand("fits", "scaling and exponent fits"));
  CLI::App* s_mt_poi = add_common(
      s_metric->add_subcommand("poincare", "Poincare ratios"));

  CLI::App* s_suite = add_common(
      app.add_subcommand("suite", "full acceptance run"));
  s_suite->add_flag("--emit-only", c.emit_only, "only write the artifact bundle")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }

  if (const char* env = std::getenv("FRACTALP_SEED"))
    c.seed = std::strtoull(env, nullptr, 10);

  if (c.preset != "sg") {
    std::cerr << "unknown preset: " << c.preset << " (built-ins: sg)\n";
    return 2;
  }
  if (!(c.p > 1.0)) {
    std::cerr << "--p must be > 1\n";
    return 2;
  }

  fs::path self = argv[0];
  std::error_code ec;
  const fs::path resolved = fs::canonical("/proc/self/exe", ec);
  if (!ec) self = resolved;

  std::string command;
  int rc = 0;
  try {
    const fs::path out = c.out;
    fs::create_directories(out);
    if (s_structure->parsed()) { command = "structure"; rc = handle_structure(c, out); }
    else if (s_solve->parsed()) { command = "solve"; rc = handle_solve(c, out); }
    else if (s_eigen->parsed()) { command = "eigenform"; rc = handle_eigenform(c, out); }
    else if (s_expo->parsed()) { command = "exponents"; rc = handle_exponents(c, out); }
    else if (s_gc->parsed()) { command = "gc"; rc = handle_gc(c, out); }
    else if (s_besov->parsed()) {
      if (s_b_eval->parsed()) { command = "besov.eval"; rc = handle_besov_eval(c, out); }
      else if (s_b_wm->parsed()) { command = "besov.wm"; rc = handle_besov_wm(c, out); }
      else if (s_b_scan->parsed()) { command = "besov.scan"; rc = handle_besov_scan(c, out); }
      else { command = "besov.compare"; rc = handle_besov_compare(c, out); }
    } else if (s_meas->parsed()) {
      if (s_m_cells->parsed()) { command = "measures.cells"; rc = handle_measures_cells(c, out); }
      else if (s_m_chain->parsed()) { command = "measures.chain"; rc = handle_measures_chain(c, out); }
      else { command = "measures.locality"; rc = handle_measures_locality(c, out); }
    } else if (s_metric->parsed()) {
      if (s_mt_res->parsed()) { command = "metric.resistance"; rc = handle_metric_resistance(c, out); }
      else if (s_mt_fit->parsed()) { command = "metric.fits"; rc = handle_metric_fits(c, out); }
      else { command = "metric.poincare"; rc = handle_metric_poincare(c, out); }
    } else if (s_suite->parsed()) {
      command = c.emit_only ? "suite.emit" : "suite";
      rc = handle_suite(c, out, self);
    }
    if (rc == 0 || rc == 1)
      write_json(out / "manifest.json", make_manifest(config_json(c, command), c.seed));
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return rc;
}
