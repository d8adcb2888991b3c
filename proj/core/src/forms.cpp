#include "fractalp/forms.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "fractalp/rng.hpp"

namespace fractalp {

BoundaryGraphForm BoundaryGraphForm::complete(int B, double weight) {
  BoundaryGraphForm f;
  f.B = B;
  f.w.assign(static_cast<std::size_t>(B * (B - 1) / 2), weight);
  return f;
}

double BoundaryGraphForm::energy(double p, const std::vector<double>& u) const {
  double e = 0.0;
  for (int q = 0; q < B; ++q)
    for (int qp = q + 1; qp < B; ++qp)
      e += weight(q, qp) * std::pow(std::abs(u[static_cast<std::size_t>(q)] -
                                             u[static_cast<std::size_t>(qp)]),
                                    p);
  return e;
}

EnergyModel::EnergyModel(PcfStructure st, double p, BoundaryGraphForm base,
                         std::vector<double> rho)
    : st_(std::move(st)), p_(p), base_(std::move(base)), rho_(std::move(rho)) {
  if (!(p_ > 1.0)) throw std::invalid_argument("p must exceed 1");
  if (base_.B != st_.boundary_size())
    throw std::invalid_argument("base form size must match the boundary");
  if (base_.w.size() != static_cast<std::size_t>(base_.B * (base_.B - 1) / 2))
    throw std::invalid_argument("base form weight table has the wrong size");
  for (double w : base_.w)
    if (!(w >= 0.0)) throw std::invalid_argument("base weights must be >= 0");
  if (rho_.size() != static_cast<std::size_t>(st_.alphabet_size()))
    throw std::invalid_argument("one renormalization weight per letter required");
  for (double r : rho_)
    if (!(r > 1.0))
      throw std::invalid_argument("renormalization weights must exceed 1");
}

EnergyModel EnergyModel::uniform(PcfStructure st, double p, double rho_scalar) {
  const int B = st.boundary_size();
  const int N = st.alphabet_size();
  return EnergyModel(std::move(st), p, BoundaryGraphForm::complete(B),
                     std::vector<double>(static_cast<std::size_t>(N), rho_scalar));
}

double EnergyModel::rho_word(const Word& w) const {
  double r = 1.0;
  for (std::size_t i = 0; i < w.size(); ++i) r *= rho_[w[i]];
  return r;
}

double EnergyModel::rho_word(const Letter* w, int len) const {
  double r = 1.0;
  for (int i = 0; i < len; ++i) r *= rho_[w[static_cast<std::size_t>(i)]];
  return r;
}

const VertexTable& EnergyModel::table(int level) const {
  auto it = tables_.find(level);
  if (it == tables_.end())
    it = tables_
             .emplace(level, std::make_shared<const VertexTable>(
                                 VertexTable::build(st_, level)))
             .first;
  return *it->second;
}

const PGraph& EnergyModel::graph(int level) const {
  auto it = graphs_.find(level);
  if (it != graphs_.end()) return *it->second;

  const VertexTable& vt = table(level);
  auto g = std::make_shared<PGraph>();
  g->n = vt.vertex_count();
  const int N = st_.alphabet_size();
  const std::uint64_t cells = vt.cells();
  for (std::uint64_t cell = 0; cell < cells; ++cell) {
    double rw = 1.0;
    for (std::uint64_t rest = cell, l = 0; l < static_cast<std::uint64_t>(level);
         ++l, rest /= static_cast<std::uint64_t>(N))
      rw *= rho_[rest % static_cast<std::uint64_t>(N)];
    for (int q = 0; q < base_.B; ++q)
      for (int qp = q + 1; qp < base_.B; ++qp) {
        const double w = base_.weight(q, qp);
        if (w > 0.0) g->add_edge(vt.id(cell, q), vt.id(cell, qp), rw * w);
      }
  }
  graphs_.emplace(level, g);
  return *g;
}

const CellGraph& EnergyModel::cell_graph(int level) const {
  auto it = cellgraphs_.find(level);
  if (it == cellgraphs_.end())
    it = cellgraphs_
             .emplace(level, std::make_shared<const CellGraph>(
                                 cell_adjacency(st_, table(level))))
             .first;
  return *it->second;
}

double EnergyModel::energy(const DiscreteFunction& u) const {
  const PGraph& g = graph(u.level);
  if (static_cast<int>(u.v.size()) != g.n)
    throw std::invalid_argument("function size does not match its level");
  return graph_energy(g, p_, u.v);
}

double EnergyModel::energy_two(const DiscreteFunction& u,
                               const DiscreteFunction& v) const {
  if (u.level != v.level)
    throw std::invalid_argument("energy_two needs functions at one level");
  const PGraph& g = graph(u.level);
  if (static_cast<int>(u.v.size()) != g.n ||
      static_cast<int>(v.v.size()) != g.n)
    throw std::invalid_argument("function size does not match its level");
  return graph_energy_two(g, p_, u.v, v.v);
}

SolveResult EnergyModel::dirichlet_solve(int level,
                                         const std::vector<int>& fixed_ids,
                                         const std::vector<double>& values,
                                         const SolveOptions& opt) const {
  if (fixed_ids.size() != values.size())
    throw std::invalid_argument("one value per fixed vertex required");
  if (fixed_ids.empty())
    throw std::invalid_argument("at least one vertex must be fixed");
  const PGraph& g = graph(level);
  std::vector<char> fixed(static_cast<std::size_t>(g.n), 0);
  std::vector<double> bvals(static_cast<std::size_t>(g.n), 0.0);
  for (std::size_t i = 0; i < fixed_ids.size(); ++i) {
    const int id = fixed_ids[i];
    if (id < 0 || id >= g.n)
      throw std::invalid_argument("fixed vertex id out of range");
    if (fixed[static_cast<std::size_t>(id)] &&
        bvals[static_cast<std::size_t>(id)] != values[i])
      throw std::invalid_argument("conflicting values for a fixed vertex");
    fixed[static_cast<std::size_t>(id)] = 1;
    bvals[static_cast<std::size_t>(id)] = values[i];
  }
  return minimize_p_energy(g, p_, fixed, bvals, opt);
}

HarmonicFunction EnergyModel::boundary_harmonic(int level,
                                                const std::vector<double>& boundary,
                                                const SolveOptions& opt) const {
  const int B = st_.boundary_size();
  if (static_cast<int>(boundary.size()) != B)
    throw std::invalid_argument("one value per boundary vertex required");
  std::vector<int> ids(static_cast<std::size_t>(B));
  for (int q = 0; q < B; ++q) ids[static_cast<std::size_t>(q)] = q;
  return HarmonicFunction{dirichlet_solve(level, ids, boundary, opt), level};
}

DiscreteFunction EnergyModel::harmonic_extend(const DiscreteFunction& u, int level,
                                              const SolveOptions& opt) const {
  if (level < u.level)
    throw std::invalid_argument("extension target must not be coarser");
  if (level == u.level) return u;
  // ids of the coarse table embed into the fine one unchanged
  const int nk = table(u.level).vertex_count();
  if (static_cast<int>(u.v.size()) != nk)
    throw std::invalid_argument("function size does not match its level");
  std::vector<int> ids(static_cast<std::size_t>(nk));
  for (int i = 0; i < nk; ++i) ids[static_cast<std::size_t>(i)] = i;
  const SolveResult r = dirichlet_solve(level, ids, u.v, opt);
  return DiscreteFunction{level, r.u};
}

EnergyModel::Capacity EnergyModel::capacity(int level,
                                            const std::vector<int>& zero_ids,
                                            const std::vector<int>& one_ids,
                                            const SolveOptions& opt) const {
  if (zero_ids.empty() || one_ids.empty())
    throw std::invalid_argument("capacity needs two nonempty vertex sets");
  std::vector<int> ids = zero_ids;
  ids.insert(ids.end(), one_ids.begin(), one_ids.end());
  std::vector<double> vals(zero_ids.size(), 0.0);
  vals.insert(vals.end(), one_ids.size(), 1.0);
  const SolveResult r = dirichlet_solve(level, ids, vals, opt);
  Capacity c;
  c.value = r.energy;
  c.potential = DiscreteFunction{level, r.u};
  return c;
}

std::vector<double> EnergyModel::harmonic_energy_profile(
    const std::vector<double>& boundary, int max_level,
    const SolveOptions& opt) const {
  std::vector<double> prof;
  prof.reserve(static_cast<std::size_t>(max_level + 1));
  for (int n = 0; n <= max_level; ++n)
    prof.push_back(energy(boundary_harmonic(n, boundary, opt)));
  return prof;
}

// ---- cell-average machinery -------------------------------------------------

double cell_graph_energy(const CellGraph& g, double p,
                         const std::vector<double>& cellvals,
                         const std::vector<std::uint64_t>& keep) {
  std::vector<char> kept;
  if (!keep.empty()) {
    kept.assign(static_cast<std::size_t>(g.cell_count), 0);
    for (std::uint64_t c : keep) kept[c] = 1;
  }
  double e = 0.0;
  for (const auto& [a, b] : g.edges) {
    if (!kept.empty() && (!kept[a] || !kept[b])) continue;
    e += std::pow(std::abs(cellvals[a] - cellvals[b]), p);
  }
  return e;
}

CellFunction cell_average(const EnergyModel& model, const DiscreteFunction& f) {
  const VertexTable& vt = model.table(f.level);
  if (static_cast<int>(f.v.size()) != vt.vertex_count())
    throw std::invalid_argument("function size does not match its level");
  const int B = vt.boundary_size();
  CellFunction out;
  out.level = f.level;
  out.v.resize(static_cast<std::size_t>(vt.cells()));
  for (std::uint64_t cell = 0; cell < vt.cells(); ++cell) {
    double s = 0.0;
    for (int q = 0; q < B; ++q)
      s += f.v[static_cast<std::size_t>(vt.id(cell, q))];
    out.v[cell] = s / B;
  }
  return out;
}

CellFunction average_project(const PcfStructure& st, const SelfSimilarMeasure& m,
                             const CellFunction& f, int level_to) {
  if (level_to < 0 || level_to > f.level)
    throw std::invalid_argument("projection target must be a coarser level");
  const int N = st.alphabet_size();
  if (f.v.size() != cell_count(N, f.level))
    throw std::invalid_argument("cell function size does not match its level");
  if (level_to == f.level) return f;
  const int drop = f.level - level_to;
  const std::uint64_t tails = cell_count(N, drop);
  CellFunction out;
  out.level = level_to;
  out.v.assign(static_cast<std::size_t>(cell_count(N, level_to)), 0.0);
  for (std::uint64_t idx = 0; idx < f.v.size(); ++idx)
    out.v[idx / tails] += m.mass(idx % tails, N, drop) * f.v[idx];
  return out;
}

namespace {

// dense symmetric max of (Av)^T Lc (Av) / v^T Lf v over the range of Lf,
// realized through the pseudo-inverse square root of Lf
struct QuotientEig {
  double value = 0.0;
  Eigen::VectorXd maximizer;
};

QuotientEig quotient_max_p2(const Eigen::MatrixXd& Lc, const Eigen::MatrixXd& Avg,
                            const Eigen::MatrixXd& Lf) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Lf);
  const auto& ev = es.eigenvalues();
  const double cutoff = 1e-10 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd inv_sqrt(ev.size());
  for (int i = 0; i < ev.size(); ++i)
    inv_sqrt[i] = ev[i] > cutoff ? 1.0 / std::sqrt(ev[i]) : 0.0;
  const Eigen::MatrixXd P =
      es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
  const Eigen::MatrixXd M = P * (Avg.transpose() * Lc * Avg) * P;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(M);
  QuotientEig out;
  Eigen::Index top;
  out.value = es2.eigenvalues().maxCoeff(&top);
  out.maximizer = P * es2.eigenvectors().col(top);
  return out;
}

struct RatioProblem {
  double p = 2.0;
  std::vector<std::pair<int, int>> coarse_edges;  // compact coarse indices
  std::vector<std::pair<int, int>> fine_edges;    // compact fine indices
  std::vector<double> avg_weight;                 // tail mass per fine slot
  int block = 1;                                  // fine slots per coarse cell

  double coarse_of(const std::vector<double>& f, int w) const {
    double c = 0.0;
    for (int j = 0; j < block; ++j)
      c += avg_weight[static_cast<std::size_t>(j)] *
           f[static_cast<std::size_t>(w * block + j)];
    return c;
  }

  double num(const std::vector<double>& f, std::vector<double>& coarse) const {
    for (std::size_t w = 0; w * static_cast<std::size_t>(block) < f.size(); ++w)
      coarse[w] = coarse_of(f, static_cast<int>(w));
    double e = 0.0;
    for (const auto& [a, b] : coarse_edges)
      e += std::pow(std::abs(coarse[static_cast<std::size_t>(a)] -
                             coarse[static_cast<std::size_t>(b)]),
                    p);
    return e;
  }

  double den(const std::vector<double>& f) const {
    double e = 0.0;
    for (const auto& [a, b] : fine_edges)
      e += std::pow(std::abs(f[static_cast<std::size_t>(a)] -
                             f[static_cast<std::size_t>(b)]),
                    p);
    return e;
  }
};

// ascent on log(num) - log(den); returns the attained ratio
double ratio_ascent(const RatioProblem& prob, std::vector<double>& f) {
  const std::size_t n = f.size();
  std::vector<double> coarse(n / static_cast<std::size_t>(prob.block));
  std::vector<double> grad(n), trial(n);
  double num = prob.num(f, coarse);
  double den = prob.den(f);
  if (!(den > 0.0) || !(num > 0.0)) return 0.0;
  double step = 0.1;
  for (int it = 0; it < 400; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    // d num / d coarse, then chain through the averaging weights
    std::vector<double> gc(coarse.size(), 0.0);
    for (const auto& [a, b] : prob.coarse_edges) {
      const double d = coarse[static_cast<std::size_t>(a)] -
                       coarse[static_cast<std::size_t>(b)];
      const double s = prob.p * signed_power(d, prob.p);
      gc[static_cast<std::size_t>(a)] += s;
      gc[static_cast<std::size_t>(b)] -= s;
    }
    for (std::size_t w = 0; w < coarse.size(); ++w)
      for (int j = 0; j < prob.block; ++j)
        grad[w * static_cast<std::size_t>(prob.block) +
             static_cast<std::size_t>(j)] +=
            gc[w] * prob.avg_weight[static_cast<std::size_t>(j)] / num;
    for (const auto& [a, b] : prob.fine_edges) {
      const double d = f[static_cast<std::size_t>(a)] - f[static_cast<std::size_t>(b)];
      const double s = prob.p * signed_power(d, prob.p) / den;
      grad[static_cast<std::size_t>(a)] -= s;
      grad[static_cast<std::size_t>(b)] += s;
    }
    const double g0 = std::log(num) - std::log(den);
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = f[i] + step * grad[i];
      const double tn = prob.num(trial, coarse);
      const double td = prob.den(trial);
      if (tn > 0.0 && td > 0.0 && std::log(tn) - std::log(td) > g0 + 1e-14) {
        f = trial;
        num = tn;
        den = td;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    // refresh coarse for the accepted point
    num = prob.num(f, coarse);
    if (!moved || step < 1e-16) break;
    // keep the iterate scaled
    double mx = 0.0;
    for (double x : f) mx = std::max(mx, std::abs(x));
    if (mx > 0.0)
      for (double& x : f) x /= mx;
    num = prob.num(f, coarse);
    den = prob.den(f);
  }
  return num / den;
}

}  // namespace

DisparityResult disparity_constant(const EnergyModel& model,
                                   const SelfSimilarMeasure& m,
                                   int n, const std::vector<std::uint64_t>& A,
                                   int k, int restarts, std::uint64_t seed) {
  if (A.empty()) throw std::invalid_argument("cell set must be nonempty");
  if (k < 1) throw std::invalid_argument("refinement depth must be positive");
  const int N = model.structure().alphabet_size();
  const std::uint64_t block = cell_count(N, k);
  const CellGraph& gc = model.cell_graph(n);
  const CellGraph& gf = model.cell_graph(n + k);

  // compact indexing: coarse = position in A, fine = position in the subcells
  std::vector<long> coarse_pos(static_cast<std::size_t>(gc.cell_count), -1);
  for (std::size_t i = 0; i < A.size(); ++i)
    coarse_pos[A[i]] = static_cast<long>(i);
  std::vector<long> fine_pos(static_cast<std::size_t>(gf.cell_count), -1);
  std::vector<std::uint64_t> S;
  S.reserve(A.size() * block);
  for (std::uint64_t a : A)
    for (std::uint64_t j = 0; j < block; ++j) {
      fine_pos[a * block + j] = static_cast<long>(S.size());
      S.push_back(a * block + j);
    }

  RatioProblem prob;
  prob.p = model.p();
  prob.block = static_cast<int>(block);
  prob.avg_weight.resize(block);
  for (std::uint64_t j = 0; j < block; ++j)
    prob.avg_weight[j] = m.mass(j, N, k);
  for (const auto& [a, b] : gc.edges)
    if (coarse_pos[a] >= 0 && coarse_pos[b] >= 0)
      prob.coarse_edges.emplace_back(static_cast<int>(coarse_pos[a]),
                                     static_cast<int>(coarse_pos[b]));
  for (const auto& [a, b] : gf.edges)
    if (fine_pos[a] >= 0 && fine_pos[b] >= 0)
      prob.fine_edges.emplace_back(static_cast<int>(fine_pos[a]),
                                   static_cast<int>(fine_pos[b]));

  // dense quadratic solve; exact for p = 2 and the seed otherwise
  const long nf = static_cast<long>(S.size());
  Eigen::MatrixXd Lc = Eigen::MatrixXd::Zero(static_cast<long>(A.size()),
                                             static_cast<long>(A.size()));
  for (const auto& [a, b] : prob.coarse_edges) {
    Lc(a, a) += 1.0;
    Lc(b, b) += 1.0;
    Lc(a, b) -= 1.0;
    Lc(b, a) -= 1.0;
  }
  Eigen::MatrixXd Lf = Eigen::MatrixXd::Zero(nf, nf);
  for (const auto& [a, b] : prob.fine_edges) {
    Lf(a, a) += 1.0;
    Lf(b, b) += 1.0;
    Lf(a, b) -= 1.0;
    Lf(b, a) -= 1.0;
  }
  Eigen::MatrixXd Avg =
      Eigen::MatrixXd::Zero(static_cast<long>(A.size()), nf);
  for (std::size_t w = 0; w < A.size(); ++w)
    for (std::uint64_t j = 0; j < block; ++j)
      Avg(static_cast<long>(w), static_cast<long>(w * block + j)) =
          prob.avg_weight[j];
  const QuotientEig q2 = quotient_max_p2(Lc, Avg, Lf);

  DisparityResult out;
  if (model.p() == 2.0) {
    out.value = q2.value;
    out.certified = true;
    out.maximizer.assign(q2.maximizer.data(), q2.maximizer.data() + nf);
    return out;
  }

  // projected-ascent estimate: quadratic maximizer seed plus random restarts
  std::vector<double> best(static_cast<std::size_t>(nf));
  for (long i = 0; i < nf; ++i) best[static_cast<std::size_t>(i)] = q2.maximizer[i];
  double best_val = ratio_ascent(prob, best);
  for (int r = 0; r < restarts; ++r) {
    CounterRng rng(seed, "disparity-restart", static_cast<std::uint64_t>(r));
    std::vector<double> f(static_cast<std::size_t>(nf));
    for (double& x : f) x = rng.normal();
    const double v = ratio_ascent(prob, f);
    if (v > best_val) {
      best_val = v;
      best = f;
    }
  }
  out.value = best_val;
  out.maximizer = best;
  out.certified = false;
  return out;
}

ConductanceResult conductance_constant(const EnergyModel& model, int M, int k) {
  if (M < 1) throw std::invalid_argument("neighborhood radius must be positive");
  if (k < 0) throw std::invalid_argument("refinement depth must be >= 0");
  ConductanceResult out;
  out.value = 0.0;
  out.separated = false;

  // deeper levels repeat these capacities by self-similarity of the cell
  // graphs, so scanning levels 1 and 2 exhausts the distinct cases
  for (int n = 1; n <= 2; ++n) {
    const CellGraph& gn = model.cell_graph(n);
    const auto adj = gn.adjacency();
    const CellGraph& gf = model.cell_graph(n + k);
    const std::uint64_t block =
        cell_count(model.structure().alphabet_size(), k);

    PGraph pg;
    pg.n = static_cast<int>(gf.cell_count);
    for (const auto& [a, b] : gf.edges)
      pg.add_edge(static_cast<int>(a), static_cast<int>(b), 1.0);

    for (std::uint64_t w = 0; w < gn.cell_count; ++w) {
      // cell-graph distances from w
      std::vector<long> dist(static_cast<std::size_t>(gn.cell_count), -1);
      std::deque<std::uint64_t> queue{w};
      dist[w] = 0;
      while (!queue.empty()) {
        const std::uint64_t c = queue.front();
        queue.pop_front();
        for (std::uint64_t x : adj[c])
          if (dist[x] < 0) {
            dist[x] = dist[c] + 1;
            queue.push_back(x);
          }
      }
      std::vector<std::uint64_t> far;
      for (std::uint64_t c = 0; c < gn.cell_count; ++c)
        if (dist[c] < 0 || dist[c] > M) far.push_back(c);
      if (far.empty()) continue;  // the neighborhood swallowed the level

      std::vector<char> fixed(static_cast<std::size_t>(pg.n), 0);
      std::vector<double> bvals(static_cast<std::size_t>(pg.n), 0.0);
      for (std::uint64_t j = 0; j < block; ++j) {
        fixed[static_cast<std::size_t>(w * block + j)] = 1;
        bvals[static_cast<std::size_t>(w * block + j)] = 1.0;
      }
      for (std::uint64_t c : far)
        for (std::uint64_t j = 0; j < block; ++j)
          fixed[static_cast<std::size_t>(c * block + j)] = 1;

      const SolveResult r = minimize_p_energy(pg, model.p(), fixed, bvals);
      if (!out.separated || r.energy > out.value) {
        out.value = r.energy;
        out.witness_level = n;
        out.witness_cell = w;
      }
      out.separated = true;
    }
  }
  return out;
}

WpProfile wp_seminorm(const EnergyModel& model, const SelfSimilarMeasure& m,
                      const DiscreteFunction& f, const std::vector<int>& levels) {
  if (!model.sigma_p())
    throw std::invalid_argument("wp_seminorm needs sigma_p set on the model");
  const double sigma = *model.sigma_p();
  const CellFunction top = cell_average(model, f);
  WpProfile out;
  out.levels = levels;
  out.values.reserve(levels.size());
  for (int n : levels) {
    if (n < 0 || n > f.level)
      throw std::invalid_argument("profile level must lie in [0, f.level]");
    const CellFunction pn = average_project(model.structure(), m, top, n);
    const double e = cell_graph_energy(model.cell_graph(n), model.p(), pn.v);
    out.values.push_back(std::pow(sigma, n) * e);
  }
  for (std::size_t i = 0; i < out.values.size(); ++i)
    if (out.values[i] > out.max_value) {
      out.max_value = out.values[i];
      out.argmax_level = out.levels[i];
    }
  out.seminorm_p = std::pow(out.max_value, 1.0 / model.p());
  return out;
}

}  // namespace fractalp
