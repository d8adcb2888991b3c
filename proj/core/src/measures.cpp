#include "fractalp/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>

#include "fractalp/pgraph.hpp"
#include "fractalp/word.hpp"

namespace fractalp {

namespace {

void check_function(const EnergyModel& model, const DiscreteFunction& u) {
  if (u.level < 0) throw std::invalid_argument("measures: negative level");
  const VertexTable& vt = model.table(u.level);
  if (u.v.size() != static_cast<std::size_t>(vt.vertex_count()))
    throw std::invalid_argument("measures: function size does not match level");
}

void cell_letters(std::uint64_t cell, int alphabet, int level, Letter* out) {
  for (int k = level - 1; k >= 0; --k) {
    out[k] = static_cast<Letter>(cell % static_cast<std::uint64_t>(alphabet));
    cell /= static_cast<std::uint64_t>(alphabet);
  }
}

// finest-level edges (global vertex ids and weights) of one level-n cell;
// every edge of the full graph lies in exactly one such bundle
struct EdgeBundle {
  std::vector<std::array<std::uint32_t, 2>> ends;
  std::vector<double> w;
};

EdgeBundle cell_edges(const EnergyModel& model, int level, std::uint64_t top,
                      int n) {
  const PcfStructure& st = model.structure();
  const int alphabet = st.alphabet_size();
  const int nb = st.boundary_size();
  const VertexTable& vt = model.table(level);
  const BoundaryGraphForm& base = model.base_form();
  EdgeBundle out;
  const std::uint64_t span = cell_count(alphabet, level - n);
  Letter digs[64];
  for (std::uint64_t t = 0; t < span; ++t) {
    const std::uint64_t cell = top * span + t;
    cell_letters(cell, alphabet, level, digs);
    const double rw = model.rho_word(digs, level);
    for (int q = 0; q < nb; ++q)
      for (int qp = q + 1; qp < nb; ++qp) {
        const double bw = base.weight(q, qp);
        if (bw == 0.0) continue;
        out.ends.push_back({static_cast<std::uint32_t>(vt.id(cell, q)),
                            static_cast<std::uint32_t>(vt.id(cell, qp))});
        out.w.push_back(rw * bw);
      }
  }
  return out;
}

double bundle_energy(const EdgeBundle& eb, const std::vector<double>& f,
                     double p) {
  double e = 0.0;
  for (std::size_t i = 0; i < eb.w.size(); ++i) {
    const double d = f[eb.ends[i][0]] - f[eb.ends[i][1]];
    e += eb.w[i] * std::pow(std::abs(d), p);
  }
  return e;
}

double bundle_energy_two(const EdgeBundle& eb, const std::vector<double>& f,
                         const std::vector<double>& g, double p) {
  double e = 0.0;
  for (std::size_t i = 0; i < eb.w.size(); ++i) {
    const double df = f[eb.ends[i][0]] - f[eb.ends[i][1]];
    const double dg = g[eb.ends[i][0]] - g[eb.ends[i][1]];
    e += eb.w[i] * signed_power(df, p) * dg;
  }
  return e;
}

}  // namespace

CellMeasure cell_energy_measure(const EnergyModel& model,
                                const DiscreteFunction& u, int n) {
  check_function(model, u);
  if (n < 0 || n > u.level)
    throw std::invalid_argument("measures: aggregation level out of range");
  const int alphabet = model.structure().alphabet_size();
  CellMeasure out;
  out.level = n;
  const std::uint64_t cells = cell_count(alphabet, n);
  out.mass.assign(cells, 0.0);
  for (std::uint64_t c = 0; c < cells; ++c) {
    const EdgeBundle eb = cell_edges(model, u.level, c, n);
    out.mass[c] = bundle_energy(eb, u.v, model.p());
    out.total += out.mass[c];
  }
  return out;
}

SignedCellMeasure two_variable_measure(const EnergyModel& model,
                                       const DiscreteFunction& u,
                                       const DiscreteFunction& v, int n) {
  check_function(model, u);
  check_function(model, v);
  if (u.level != v.level)
    throw std::invalid_argument("measures: operands live on different levels");
  if (n < 0 || n > u.level)
    throw std::invalid_argument("measures: aggregation level out of range");
  const int alphabet = model.structure().alphabet_size();
  SignedCellMeasure out;
  out.level = n;
  const std::uint64_t cells = cell_count(alphabet, n);
  out.mass.assign(cells, 0.0);
  for (std::uint64_t c = 0; c < cells; ++c) {
    const EdgeBundle eb = cell_edges(model, u.level, c, n);
    out.mass[c] = bundle_energy_two(eb, u.v, v.v, model.p());
    out.total += out.mass[c];
  }
  return out;
}

double psi_functional(const EnergyModel& model, const DiscreteFunction& u,
                      const DiscreteFunction& phi) {
  check_function(model, u);
  check_function(model, phi);
  if (u.level != phi.level)
    throw std::invalid_argument("measures: weight lives on a different level");
  const double p = model.p();
  DiscreteFunction uphi{u.level, std::vector<double>(u.v.size())};
  DiscreteFunction upow{u.level, std::vector<double>(u.v.size())};
  const double q = p / (p - 1.0);
  for (std::size_t i = 0; i < u.v.size(); ++i) {
    uphi.v[i] = u.v[i] * phi.v[i];
    upow.v[i] = std::pow(std::abs(u.v[i]), q);
  }
  const double c = std::pow((p - 1.0) / p, p - 1.0);
  return model.energy_two(u, uphi) - c * model.energy_two(upow, phi);
}

DiscreteFunction cell_bump(const EnergyModel& model, const Word& w, int depth,
                           const SolveOptions& opt) {
  const PcfStructure& st = model.structure();
  const int alphabet = st.alphabet_size();
  const int nb = st.boundary_size();
  const int k = static_cast<int>(w.size());
  if (depth < k) throw std::invalid_argument("measures: bump depth above its cell");
  const VertexTable& vt = model.table(depth);
  const VertexTable& vk = model.table(k);
  DiscreteFunction out{depth, std::vector<double>(
                                  static_cast<std::size_t>(vt.vertex_count()), 0.0)};

  // pin every level-k vertex: one on the named cell's corners, zero elsewhere
  std::vector<double> pinned(static_cast<std::size_t>(vk.vertex_count()), 0.0);
  const std::uint64_t wi = index_of_word(w, alphabet);
  for (int q = 0; q < nb; ++q)
    pinned[static_cast<std::size_t>(vk.id(wi, q))] = 1.0;

  const std::uint64_t span = cell_count(alphabet, depth - k);
  const std::uint64_t topcells = cell_count(alphabet, k);
  for (std::uint64_t c = 0; c < topcells; ++c) {
    double cv[16];
    bool flat = true;
    for (int q = 0; q < nb; ++q) {
      cv[q] = pinned[static_cast<std::size_t>(vk.id(c, q))];
      if (cv[q] != cv[0]) flat = false;
    }
    if (flat) {
      // constant corners fill the whole subtree with that constant
      for (std::uint64_t t = 0; t < span; ++t)
        for (int q = 0; q < nb; ++q)
          out.v[static_cast<std::size_t>(vt.id(c * span + t, q))] = cv[0];
      continue;
    }
    // mixed corners: p-harmonic fill of the cell's subtree, corners pinned
    const EdgeBundle eb = cell_edges(model, depth, c, k);
    std::unordered_map<std::uint32_t, int> local;
    std::vector<std::uint32_t> back;
    auto intern = [&](std::uint32_t gid) {
      auto [it, fresh] = local.try_emplace(gid, static_cast<int>(back.size()));
      if (fresh) back.push_back(gid);
      return it->second;
    };
    PGraph g;
    for (std::size_t i = 0; i < eb.w.size(); ++i) {
      const int a = intern(eb.ends[i][0]);
      const int b = intern(eb.ends[i][1]);
      g.add_edge(a, b, eb.w[i]);
    }
    g.n = static_cast<int>(back.size());
    std::vector<char> fixed(back.size(), 0);
    std::vector<double> values(back.size(), 0.0);
    for (int q = 0; q < nb; ++q) {
      // the cell corner seen from the finest level: repeat its fixed letter
      std::uint64_t sub = c;
      for (int t = 0; t < depth - k; ++t)
        sub = sub * static_cast<std::uint64_t>(alphabet) +
              static_cast<std::uint64_t>(st.fixed_letter(q));
      const int lid = intern(static_cast<std::uint32_t>(vt.id(sub, q)));
      fixed[static_cast<std::size_t>(lid)] = 1;
      values[static_cast<std::size_t>(lid)] = cv[q];
    }
    const SolveResult sol = minimize_p_energy(g, model.p(), fixed, values, opt);
    for (std::size_t i = 0; i < back.size(); ++i)
      out.v[back[i]] = sol.u[i];
  }
  return out;
}

ChainRuleReport chain_rule_check(const EnergyModel& model,
                                 const SelfSimilarMeasure& m,
                                 const DiscreteFunction& u,
                                 const std::function<double(double)>& Phi,
                                 const std::function<double(double)>& dPhi,
                                 int n, int depth) {
  check_function(model, u);
  if (n < 0 || n > u.level)
    throw std::invalid_argument("measures: aggregation level out of range");
  if (depth < 0) depth = n;
  if (depth < n || depth > u.level)
    throw std::invalid_argument("measures: chain-rule depth out of range");
  const double p = model.p();
  DiscreteFunction phiu{u.level, std::vector<double>(u.v.size())};
  for (std::size_t i = 0; i < u.v.size(); ++i) phiu.v[i] = Phi(u.v[i]);
  const CellMeasure mu = cell_energy_measure(model, u, depth);
  const CellMeasure mphi = cell_energy_measure(model, phiu, n);
  // measure-weighted cell averages of u at the subdivision level
  const CellFunction fine_avg = cell_average(model, u);
  const CellFunction avg = average_project(model.structure(), m, fine_avg, depth);

  // |Phi'(u_v)|^p * mass_u(v) on each level-depth subcell, summed per
  // level-n parent; word indices are positional, so the parent of v is a
  // plain division
  std::uint64_t shrink = 1;
  for (int t = 0; t < depth - n; ++t)
    shrink *= static_cast<std::uint64_t>(model.structure().alphabet_size());
  std::vector<double> rhs_mass(mphi.mass.size(), 0.0);
  for (std::size_t v = 0; v < mu.mass.size(); ++v)
    rhs_mass[v / shrink] += std::pow(std::abs(dPhi(avg.v[v])), p) * mu.mass[v];

  ChainRuleReport rep;
  rep.level = n;
  rep.rel_error.assign(mphi.mass.size(), -1.0);
  const double scale = std::max(mphi.total, 1e-300);
  for (std::size_t c = 0; c < mphi.mass.size(); ++c) {
    const double lhs = mphi.mass[c];
    const double rhs = rhs_mass[c];
    const double denom = std::max(std::abs(lhs), std::abs(rhs));
    if (denom <= 1e-15 * scale) continue;  // both sides vanish; nothing to rate
    const double rel = std::abs(lhs - rhs) / denom;
    rep.rel_error[c] = rel;
    rep.max_rel_error = std::max(rep.max_rel_error, rel);
  }
  return rep;
}

LocalityReport strong_locality_check(const EnergyModel& model,
                                     const DiscreteFunction& u1,
                                     const DiscreteFunction& u2,
                                     const DiscreteFunction& v, int n) {
  check_function(model, u1);
  check_function(model, u2);
  check_function(model, v);
  if (u1.level != u2.level || u1.level != v.level)
    throw std::invalid_argument("measures: operands live on different levels");
  if (n < 0 || n > u1.level)
    throw std::invalid_argument("measures: aggregation level out of range");
  const double p = model.p();
  const int alphabet = model.structure().alphabet_size();

  double umax = 1.0;
  for (double x : u1.v) umax = std::max(umax, std::abs(x));
  for (double x : u2.v) umax = std::max(umax, std::abs(x));
  for (double x : v.v) umax = std::max(umax, std::abs(x));
  const double ztol = 1e-12 * umax;

  auto diff_small = [&](const std::vector<double>& f, const EdgeBundle& eb,
                        std::size_t i) {
    return std::abs(f[eb.ends[i][0]] - f[eb.ends[i][1]]) <= ztol;
  };

  std::vector<double> sum12(v.v.size()), s1v(v.v.size()), s2v(v.v.size()),
      s12v(v.v.size()), d12(v.v.size());
  for (std::size_t i = 0; i < v.v.size(); ++i) {
    sum12[i] = u1.v[i] + u2.v[i];
    s1v[i] = u1.v[i] + v.v[i];
    s2v[i] = u2.v[i] + v.v[i];
    s12v[i] = u1.v[i] + u2.v[i] + v.v[i];
    d12[i] = u1.v[i] - u2.v[i];
  }

  LocalityReport rep;
  rep.level = n;
  const std::uint64_t cells = cell_count(alphabet, n);
  for (std::uint64_t c = 0; c < cells; ++c) {
    const EdgeBundle eb = cell_edges(model, u1.level, c, n);
    bool const1 = true, const2 = true, constd = true, cover12 = true,
         coverdv = true;
    for (std::size_t i = 0; i < eb.w.size(); ++i) {
      const bool z1 = diff_small(u1.v, eb, i);
      const bool z2 = diff_small(u2.v, eb, i);
      const bool zd = diff_small(d12, eb, i);
      const bool zv = diff_small(v.v, eb, i);
      const1 = const1 && z1;
      const2 = const2 && z2;
      constd = constd && zd;
      cover12 = cover12 && (z1 || z2);
      coverdv = coverdv && (zd || zv);
    }
    bool any = false;
    auto push = [&](char item, double lhs, double rhs) {
      rep.checks.push_back({item, c, lhs, rhs, std::abs(lhs - rhs)});
      rep.max_abs_error = std::max(rep.max_abs_error, std::abs(lhs - rhs));
      any = true;
    };
    if (const1) push('a', bundle_energy(eb, u1.v, p), 0.0);
    if (const2) push('a', bundle_energy(eb, u2.v, p), 0.0);
    // adding a locally-constant function cannot move the local mass
    if (const1) push('b', bundle_energy(eb, s1v, p), bundle_energy(eb, v.v, p));
    if (const2) push('b', bundle_energy(eb, s2v, p), bundle_energy(eb, v.v, p));
    if (constd) push('b', bundle_energy(eb, u1.v, p), bundle_energy(eb, u2.v, p));
    if (cover12) {
      push('c', bundle_energy(eb, s12v, p) + bundle_energy(eb, v.v, p),
           bundle_energy(eb, s1v, p) + bundle_energy(eb, s2v, p));
      push('c', bundle_energy_two(eb, sum12, v.v, p),
           bundle_energy_two(eb, u1.v, v.v, p) +
               bundle_energy_two(eb, u2.v, v.v, p));
    }
    if (coverdv) {
      push('d', bundle_energy_two(eb, u1.v, v.v, p),
           bundle_energy_two(eb, u2.v, v.v, p));
      push('d', bundle_energy_two(eb, v.v, u1.v, p),
           bundle_energy_two(eb, v.v, u2.v, p));
    }
    if (!any) ++rep.skipped;
  }
  return rep;
}

}  // namespace fractalp
