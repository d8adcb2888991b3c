#include "fractalp/metricgeom.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "fractalp/measures.hpp"
#include "fractalp/rng.hpp"
#include "fractalp/word.hpp"

namespace fractalp {

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double band = 0.0;  // max abs residual
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
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
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i)
    f.band = std::max(f.band, std::abs(y[i] - (f.slope * x[i] + f.intercept)));
  return f;
}

// longest word of the scale partition; with level-homogeneous weights this is
// the common partition level
int partition_level(const EnergyModel& model, double s) {
  const std::vector<Word> part =
      partition_scale(model.structure(), model.p(), model.rho(), s);
  std::size_t l = 0;
  for (const Word& w : part) l = std::max(l, w.size());
  return static_cast<int>(l);
}

// the level-l cell under (or containing) a center address, padding short
// addresses with the letter that fixes corner 0
std::uint64_t cell_at_level(const PcfStructure& st, const Word& center, int l) {
  std::uint64_t cell = 0;
  for (int i = 0; i < l; ++i) {
    const Letter next =
        i < static_cast<int>(center.size())
            ? center[static_cast<std::size_t>(i)]
            : static_cast<Letter>(st.fixed_letter(0));
    cell = cell * static_cast<std::uint64_t>(st.alphabet_size()) +
           static_cast<std::uint64_t>(next);
  }
  return cell;
}

}  // namespace

ResistanceTable::ResistanceTable(const EnergyModel& model, int level,
                                 const SolveOptions& opt)
    : model_(&model),
      level_(level),
      p_(model.p()),
      n_(model.table(level).vertex_count()),
      opt_(opt) {
  if (p_ != 2.0 || n_ > 2048) return;  // per-pair solves on demand instead
  // dense effective resistances through the pseudo-inverse: shifting the
  // weighted Laplacian by the rank-one J/n makes it invertible, and the shift
  // cancels from the resistance combination
  Eigen::MatrixXd M = Eigen::MatrixXd::Constant(n_, n_, 1.0 / n_);
  const PGraph& g = model.graph(level);
  for (std::size_t i = 0; i < g.edge_count(); ++i) {
    const int a = g.ea[i], b = g.eb[i];
    const double w = g.w[i];
    M(a, a) += w;
    M(b, b) += w;
    M(a, b) -= w;
    M(b, a) -= w;
  }
  const Eigen::MatrixXd Mi =
      M.ldlt().solve(Eigen::MatrixXd::Identity(n_, n_));
  dense_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_), 0.0);
  for (int x = 0; x < n_; ++x)
    for (int y = x + 1; y < n_; ++y) {
      const double r = std::max(0.0, Mi(x, x) + Mi(y, y) - 2.0 * Mi(x, y));
      dense_[static_cast<std::size_t>(x) * static_cast<std::size_t>(n_) +
             static_cast<std::size_t>(y)] = r;
      dense_[static_cast<std::size_t>(y) * static_cast<std::size_t>(n_) +
             static_cast<std::size_t>(x)] = r;
    }
}

double ResistanceTable::resistance(int x, int y) const {
  if (x < 0 || y < 0 || x >= n_ || y >= n_)
    throw std::invalid_argument("resistance: vertex id out of range");
  if (x == y) return 0.0;
  if (!dense_.empty())
    return dense_[static_cast<std::size_t>(x) * static_cast<std::size_t>(n_) +
                  static_cast<std::size_t>(y)];
  const auto key = std::minmax(x, y);
  const auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const double r =
      1.0 / model_->capacity(level_, {key.first}, {key.second}, opt_).value;
  cache_.emplace(key, r);
  return r;
}

double ResistanceTable::metric(int x, int y) const {
  return std::pow(resistance(x, y), 1.0 / (p_ - 1.0));
}

double resistance(const EnergyModel& model, int level, int x, int y,
                  const SolveOptions& opt) {
  if (x == y) return 0.0;
  return 1.0 / model.capacity(level, {x}, {y}, opt).value;
}

ScalingReport scaling_check(const EnergyModel& model, int n, long pair_count,
                            std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("scaling: need at least one level");
  const PcfStructure& st = model.structure();
  const int alphabet = st.alphabet_size();
  CounterRng rng(seed, "scaling");

  std::map<int, ResistanceTable> tables;
  auto table_at = [&](int level) -> ResistanceTable& {
    auto it = tables.find(level);
    if (it == tables.end())
      it = tables.emplace(level, ResistanceTable(model, level)).first;
    return it->second;
  };

  ScalingReport rep;
  for (long t = 0; t < pair_count; ++t) {
    const int l = 1 + static_cast<int>(rng.uniform_below(
                          static_cast<std::uint64_t>(n)));
    Word w;
    for (int i = 0; i < l; ++i)
      w.push_back(static_cast<Letter>(
          rng.uniform_below(static_cast<std::uint64_t>(alphabet))));
    const int m = n - l;
    const VertexTable& vm = model.table(m);
    const VertexTable& vn = model.table(n);
    const int count = vm.vertex_count();
    int x = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(count)));
    int y = static_cast<int>(
        rng.uniform_below(static_cast<std::uint64_t>(count - 1)));
    if (y >= x) ++y;
    const double coarse = table_at(m).resistance(x, y);

    const std::uint64_t wcell =
        index_of_word(w, alphabet) * cell_count(alphabet, m);
    const auto [cx, qx] = vm.representative(x);
    const auto [cy, qy] = vm.representative(y);
    const int ix = vn.id(wcell + cx, qx);
    const int iy = vn.id(wcell + cy, qy);
    const double fine = table_at(n).resistance(ix, iy);

    const double slack = fine - coarse / model.rho_word(w);
    ++rep.pairs;
    if (rep.pairs == 1 || slack > rep.max_slack) {
      rep.max_slack = slack;
      rep.witness_word = w;
      rep.witness_x = x;
      rep.witness_y = y;
    }
  }
  return rep;
}

ExponentFit metric_exponent_fit(const EnergyModel& model, int n,
                                long pair_count, std::uint64_t seed) {
  const VertexTable& vt = model.table(n);
  if (!vt.has_coords())
    throw std::invalid_argument("metric fit: structure has no coordinates");
  const int alphabet = model.structure().alphabet_size();
  const int nb = model.structure().boundary_size();
  const ResistanceTable rt(model, n);
  CounterRng rng(seed, "metric-fit");

  // pairs of corner vertices of one cell, the cell drawn uniformly at a
  // uniform level: distances step through the contraction scales exactly,
  // and the resistance varies only by the bounded shunting of the rest of
  // the structure, so the log-log cloud hugs a line
  std::vector<double> lx, ly;
  for (long t = 0; t < pair_count; ++t) {
    const int l = 1 + static_cast<int>(
                          rng.uniform_below(static_cast<std::uint64_t>(n)));
    const std::uint64_t cell = rng.uniform_below(cell_count(alphabet, l));
    const int q1 = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(nb)));
    int q2 = static_cast<int>(
        rng.uniform_below(static_cast<std::uint64_t>(nb - 1)));
    if (q2 >= q1) ++q2;
    // corner q of the cell is the deepest repetition of its fixed letter
    auto corner_vertex = [&](int q) {
      std::uint64_t sub = cell;
      const std::uint64_t letter =
          static_cast<std::uint64_t>(model.structure().fixed_letter(q));
      for (int k = l; k < n; ++k) sub = sub * alphabet + letter;
      return vt.id(sub, q);
    };
    const int x = corner_vertex(q1);
    const int y = corner_vertex(q2);
    if (y == x) continue;
    const double d = std::sqrt(dist2(vt.coord(x), vt.coord(y)));
    if (!(d > 0.0)) continue;
    const double r = rt.resistance(x, y);
    if (!(r > 0.0)) continue;
    lx.push_back(std::log(d));
    ly.push_back(std::log(r));
  }
  if (lx.size() < 2) throw std::runtime_error("metric fit: too few usable pairs");

  const LineFit f = fit_line(lx, ly);
  ExponentFit out;
  out.slope = f.slope;
  out.intercept = f.intercept;
  out.residual_band = f.band;
  out.pairs = static_cast<long>(lx.size());
  const auto [lo, hi] = std::minmax_element(lx.begin(), lx.end());
  out.decades = (*hi - *lo) / std::log(10.0);
  return out;
}

AhlforsReport ahlfors_check(const EnergyModel& model, const ResistanceTable& rt,
                            const SelfSimilarMeasure& m, double d_fp,
                            int centers, const std::vector<double>& s_grid,
                            std::uint64_t seed) {
  if (centers < 1) throw std::invalid_argument("ahlfors: need centers");
  const int level = rt.level();
  const VertexTable& vt = model.table(level);
  const int alphabet = model.structure().alphabet_size();
  const int nb = model.structure().boundary_size();
  const std::uint64_t cells = cell_count(alphabet, level);
  CounterRng rng(seed, "ahlfors");

  std::vector<int> xs;
  for (int i = 0; i < centers; ++i)
    xs.push_back(static_cast<int>(
        rng.uniform_below(static_cast<std::uint64_t>(vt.vertex_count()))));

  AhlforsReport rep;
  rep.scales = s_grid;
  for (double s : s_grid) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int x : xs) {
      // ball mass: cells whose nearest corner lies within metric radius s
      double mass = 0.0;
      for (std::uint64_t c = 0; c < cells; ++c) {
        double dmin = std::numeric_limits<double>::infinity();
        for (int q = 0; q < nb; ++q)
          dmin = std::min(dmin, rt.metric(x, vt.id(c, q)));
        if (dmin < s) mass += m.mass(c, alphabet, level);
      }
      if (!(mass > 0.0)) {
        ++rep.below_resolution;
        continue;
      }
      const double ratio = mass / std::pow(s, d_fp);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    rep.ratio_min.push_back(std::isfinite(lo) ? lo : 0.0);
    rep.ratio_max.push_back(hi);
  }
  double bandlo = std::numeric_limits<double>::infinity();
  double bandhi = 0.0;
  for (std::size_t i = 0; i < rep.ratio_min.size(); ++i) {
    if (rep.ratio_min[i] > 0.0) bandlo = std::min(bandlo, rep.ratio_min[i]);
    bandhi = std::max(bandhi, rep.ratio_max[i]);
  }
  rep.band = bandlo > 0.0 && std::isfinite(bandlo) ? bandhi / bandlo : 0.0;
  return rep;
}

CapacityProfile capacity_profile(const EnergyModel& model, const Word& center,
                                 const std::vector<double>& s_grid, int depth,
                                 const SolveOptions& opt) {
  if (depth < 0) throw std::invalid_argument("capacity profile: negative depth");
  const PcfStructure& st = model.structure();
  CapacityProfile prof;
  prof.scales = s_grid;
  std::vector<double> lx, ly;
  for (double s : s_grid) {
    const int l = partition_level(model, s);
    const std::uint64_t c0 = cell_at_level(st, center, l);
    const std::vector<std::uint64_t> hood =
        cell_neighborhood(model.cell_graph(l), {c0}, 1);
    // scale-s cutoff: pointwise max of the neighborhood's cell bumps
    const int fill = l + depth;
    std::vector<double> u;
    for (std::uint64_t c : hood) {
      const DiscreteFunction b = cell_bump(model, word_of_index(c, st.alphabet_size(), l),
                                           fill, opt);
      if (u.empty()) u.assign(b.v.size(), 0.0);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::max(u[i], b.v[i]);
    }
    const double e = model.energy(DiscreteFunction{fill, u});
    prof.energy.push_back(e);
    if (e > 0.0) {
      lx.push_back(std::log(s));
      ly.push_back(std::log(e));
    }
  }
  if (lx.size() >= 2) prof.fitted_exponent = fit_line(lx, ly).slope;
  return prof;
}

PoincareReport poincare_check(const EnergyModel& model,
                              const SelfSimilarMeasure& m, double d_fp,
                              const std::vector<DiscreteFunction>& us,
                              int ball_count, double s, int inflate,
                              std::uint64_t seed) {
  if (us.empty()) throw std::invalid_argument("poincare: no test functions");
  if (inflate < 1) throw std::invalid_argument("poincare: inflate must be >= 1");
  const PcfStructure& st = model.structure();
  const int alphabet = st.alphabet_size();
  const double p = model.p();
  const int l = partition_level(model, s);
  const std::uint64_t cells = cell_count(alphabet, l);
  const CellGraph& cg = model.cell_graph(l);

  // per-function precomputation: fine cell averages and level-l energy masses
  struct Prepared {
    const DiscreteFunction* u;
    CellFunction avg;
    CellMeasure mass;
  };
  std::vector<Prepared> prep;
  for (const DiscreteFunction& u : us) {
    if (u.level < l)
      throw std::invalid_argument("poincare: test function coarser than the scale");
    prep.push_back({&u, cell_average(model, u), cell_energy_measure(model, u, l)});
  }

  CounterRng rng(seed, "poincare");
  PoincareReport rep;
  const double denom_scale = std::pow(s, d_fp + p - 1.0);
  for (int t = 0; t < ball_count; ++t) {
    const std::uint64_t c0 = rng.uniform_below(cells);
    const std::vector<std::uint64_t> hood = cell_neighborhood(cg, {c0}, 1);
    const std::vector<std::uint64_t> wide = cell_neighborhood(cg, {c0}, inflate);
    double best = -1.0;
    for (const Prepared& pr : prep) {
      const int fl = pr.u->level;
      const std::uint64_t span = cell_count(alphabet, fl - l);
      // measure-weighted mean over the neighborhood, then the p-variance
      double wsum = 0.0, mean = 0.0;
      for (std::uint64_t c : hood)
        for (std::uint64_t k = 0; k < span; ++k) {
          const std::uint64_t fc = c * span + k;
          const double w = m.mass(fc, alphabet, fl);
          wsum += w;
          mean += w * pr.avg.v[fc];
        }
      if (!(wsum > 0.0)) continue;
      mean /= wsum;
      double var = 0.0;
      for (std::uint64_t c : hood)
        for (std::uint64_t k = 0; k < span; ++k) {
          const std::uint64_t fc = c * span + k;
          var += m.mass(fc, alphabet, fl) *
                 std::pow(std::abs(pr.avg.v[fc] - mean), p);
        }
      double emass = 0.0;
      for (std::uint64_t c : wide) emass += pr.mass.mass[c];
      if (!(emass > 0.0)) continue;  // nothing under the inflated ball
      best = std::max(best, var / (denom_scale * emass));
    }
    if (best < 0.0) {
      ++rep.skipped;
      continue;
    }
    rep.balls.push_back({c0, s, best});
    rep.sup_ratio = std::max(rep.sup_ratio, best);
  }
  return rep;
}

std::vector<std::uint64_t> cell_neighborhood(const CellGraph& g,
                                             const std::vector<std::uint64_t>& seed,
                                             int k) {
  const auto adj = g.adjacency();
  std::vector<int> dist(g.cell_count, -1);
  std::deque<std::uint64_t> queue;
  std::vector<std::uint64_t> out;
  for (std::uint64_t c : seed) {
    if (c >= g.cell_count)
      throw std::invalid_argument("neighborhood: seed cell out of range");
    if (dist[c] >= 0) continue;
    dist[c] = 0;
    queue.push_back(c);
    out.push_back(c);
  }
  while (!queue.empty()) {
    const std::uint64_t c = queue.front();
    queue.pop_front();
    if (dist[c] >= k) continue;
    for (std::uint64_t nb : adj[c])
      if (dist[nb] < 0) {
        dist[nb] = dist[c] + 1;
        queue.push_back(nb);
        out.push_back(nb);
      }
  }
  return out;
}

}  // namespace fractalp
