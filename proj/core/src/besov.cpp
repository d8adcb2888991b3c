#include "fractalp/besov.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "fractalp/pgraph.hpp"
#include "fractalp/rng.hpp"
#include "fractalp/word.hpp"

namespace fractalp {

namespace {

// most-significant letter first, matching index_of_word
void cell_digits(std::uint64_t cell, int alphabet, int level, Letter* out) {
  for (int k = level - 1; k >= 0; --k) {
    out[k] = static_cast<Letter>(cell % static_cast<std::uint64_t>(alphabet));
    cell /= static_cast<std::uint64_t>(alphabet);
  }
}

constexpr int kMaxAddr = 96;

// inverse-CDF draw of `n` letters under the measure weights; one uniform per
// letter so the stream layout never depends on the weights hit
void draw_letters(CounterRng& rng, const std::vector<double>& w, int n,
                  Letter* out) {
  const int nw = static_cast<int>(w.size());
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform();
    int pick = nw - 1;
    double acc = 0.0;
    for (int i = 0; i < nw; ++i) {
      acc += w[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    out[k] = static_cast<Letter>(pick);
  }
}

// non-owning f(F_w .) view used by the word-averaged kernel
class PrefixView final : public PointFunction {
 public:
  PrefixView(const Word& w, const PointFunction& f) : w_(&w), f_(&f) {}
  double eval(const Letter* addr, int len) const override {
    const int wl = static_cast<int>(w_->size());
    if (wl + len > kMaxAddr) throw std::length_error("besov: address too long");
    Letter buf[kMaxAddr];
    for (int i = 0; i < wl; ++i) buf[i] = (*w_)[static_cast<std::size_t>(i)];
    std::copy(addr, addr + len, buf + wl);
    return f_->eval(buf, wl + len);
  }

 private:
  const Word* w_;
  const PointFunction* f_;
};

struct BatchAccum {
  double a = 0.0;  // primary kernel sum
  double b = 0.0;  // secondary kernel sum (comparability runs two at once)
  long pairs = 0;  // admissible draws seen by this batch
};

// One (x,y) pair stream shared by every functional: the draws are a pure
// function of (seed, tag, radius, batch), never of the integrand or the
// smoothness parameter, so estimates that reuse a tag see identical pairs and
// compare pathwise.  x ~ m by letter draws; y ~ m restricted to the candidate
// cells of the ball cover, reweighted by the candidate mass.
template <typename Visit>
long run_pair_stream(const BesovContext& ctx, double r, long samples,
                     const std::string& tag, std::array<BatchAccum, 64>& batches,
                     Visit&& visit) {
  if (!(r > 0.0)) throw std::invalid_argument("besov: radius must be positive");
  if (samples < 1) throw std::invalid_argument("besov: need at least one sample");
  const int level = ctx.level_for_radius(r);
  const int depth = ctx.sample_depth();
  if (level > depth)
    throw std::invalid_argument("besov: sample depth too shallow for radius");
  const auto& w = ctx.measure().weights();
  const int alphabet = ctx.structure().alphabet_size();
  const long per = (samples + 63) / 64;
  const std::uint64_t rbits = std::bit_cast<std::uint64_t>(r);
  Letter x[kMaxAddr];
  Letter y[kMaxAddr];
  std::vector<double> cmass;
  for (int bt = 0; bt < 64; ++bt) {
    CounterRng rng(ctx.seed(), tag, rbits, static_cast<std::uint64_t>(bt));
    BatchAccum& acc = batches[static_cast<std::size_t>(bt)];
    for (long i = 0; i < per; ++i) {
      draw_letters(rng, w, depth, x);
      const auto cov = ctx.ball_cover(x, r, level);
      if (cov.inside.empty() && cov.straddle.empty()) continue;
      if (!(cov.mass > 0.0)) continue;
      // candidate cells keep their full measure; the indicator inside `visit`
      // trims the straddlers' overshoot, so the reweighting stays unbiased
      cmass.clear();
      double m_cand = 0.0;
      for (std::uint64_t c : cov.inside) {
        const double mc = ctx.measure().mass(c, alphabet, level);
        cmass.push_back(mc);
        m_cand += mc;
      }
      for (std::uint64_t c : cov.straddle) {
        const double mc = ctx.measure().mass(c, alphabet, level);
        cmass.push_back(mc);
        m_cand += mc;
      }
      if (!(m_cand > 0.0)) continue;
      const double u = rng.uniform() * m_cand;
      std::uint64_t cell = 0;
      double walk = 0.0;
      std::size_t pick = cmass.size() - 1;
      for (std::size_t j = 0; j < cmass.size(); ++j) {
        walk += cmass[j];
        if (u < walk) {
          pick = j;
          break;
        }
      }
      cell = pick < cov.inside.size()
                 ? cov.inside[pick]
                 : cov.straddle[pick - cov.inside.size()];
      cell_digits(cell, alphabet, level, y);
      draw_letters(rng, w, depth - level, y + level);
      const double d = ctx.distance(x, y, depth);
      ++acc.pairs;
      visit(acc, x, y, d, m_cand, cov.mass);
    }
  }
  return per;
}

FunctionalEstimate finish_estimate(const std::array<BatchAccum, 64>& batches,
                                   long per, double r) {
  FunctionalEstimate e;
  e.r = r;
  e.samples = per * 64;
  double means[64];
  double total = 0.0;
  for (int i = 0; i < 64; ++i) {
    means[i] = batches[static_cast<std::size_t>(i)].a / static_cast<double>(per);
    total += means[i];
    if (batches[static_cast<std::size_t>(i)].pairs == 0) ++e.zero_pair_batches;
  }
  e.value = total / 64.0;
  double ss = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double dv = means[i] - e.value;
    ss += dv * dv;
  }
  e.std_error = std::sqrt(ss / (64.0 * 63.0));
  return e;
}

void check_kernel(const BesovContext& ctx, const KernelSpec& k, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("besov: exponent p must be positive");
  if (k.metric != ctx.metric_mode())
    throw std::invalid_argument("besov: kernel metric mode differs from the context");
  if (k.variant == KernelVariant::Averaged) {
    if (k.n < 0) throw std::invalid_argument("besov: averaging depth negative");
    if (!(k.sigma > 0.0))
      throw std::invalid_argument("besov: averaging weight must be positive");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// point functions

ExtendedFunction::ExtendedFunction(const EnergyModel& model, DiscreteFunction base)
    : interp_(std::make_shared<HarmonicInterpolator>(model, std::move(base))) {}

double ExtendedFunction::eval(const Letter* addr, int len) const {
  return interp_->value_at(addr, len);
}

double PrefixedFunction::eval(const Letter* addr, int len) const {
  const int wl = static_cast<int>(w_.size());
  if (wl + len > kMaxAddr) throw std::length_error("besov: address too long");
  Letter buf[kMaxAddr];
  for (int i = 0; i < wl; ++i) buf[i] = w_[static_cast<std::size_t>(i)];
  std::copy(addr, addr + len, buf + wl);
  return f_->eval(buf, wl + len);
}

CoordFunction::CoordFunction(const PcfStructure& st, std::function<double(Vec2)> f)
    : st_(&st), f_(std::move(f)) {
  if (!st.has_geometry())
    throw std::invalid_argument("besov: coordinate function needs ambient maps");
  Vec2 c{0.0, 0.0};
  const int nb = st.boundary_size();
  for (int q = 0; q < nb; ++q) {
    const Vec2 v = st.boundary_coord(q);
    c.x += v.x;
    c.y += v.y;
  }
  center_ = {c.x / nb, c.y / nb};
}

double CoordFunction::eval(const Letter* addr, int len) const {
  return f_(st_->map_point(addr, len, center_));
}

// ---------------------------------------------------------------------------
// context and ball geometry

BesovContext::BesovContext(const PcfStructure& st, SelfSimilarMeasure m,
                           int sample_depth, std::uint64_t seed)
    : st_(&st), m_(std::move(m)), depth_(sample_depth), seed_(seed) {
  if (sample_depth < 1 || sample_depth > 60)
    throw std::invalid_argument("besov: sample depth out of range");
  if (static_cast<int>(m_.weights().size()) != st.alphabet_size())
    throw std::invalid_argument("besov: measure arity mismatch");
  diam_ = st.diameter();
  if (st.has_geometry()) {
    const int nb = st.boundary_size();
    corner_cache_.resize(static_cast<std::size_t>(nb));
    Vec2 c{0.0, 0.0};
    for (int q = 0; q < nb; ++q) {
      corner_cache_[static_cast<std::size_t>(q)] = st.boundary_coord(q);
      c.x += corner_cache_[static_cast<std::size_t>(q)].x;
      c.y += corner_cache_[static_cast<std::size_t>(q)].y;
    }
    center_ = {c.x / nb, c.y / nb};
    radius0_ = 0.0;
    for (int q = 0; q < nb; ++q)
      radius0_ = std::max(
          radius0_,
          std::sqrt(dist2(center_, corner_cache_[static_cast<std::size_t>(q)])));
  }
}

void BesovContext::set_metric(
    MetricMode mode, std::function<double(const Letter*, const Letter*, int)> dist,
    double diameter, double level_scale) {
  mode_ = mode;
  dist_ = std::move(dist);
  if (dist_) {
    if (!(diameter > 0.0))
      throw std::invalid_argument("besov: metric diameter must be positive");
    if (level_scale < 0.0 || level_scale >= 1.0)
      throw std::invalid_argument("besov: level scale must lie in [0,1)");
    diam_ = diameter;
    scale_ = level_scale;
  } else {
    diam_ = st_->diameter();
    scale_ = 0.0;
  }
}

double BesovContext::distance(const Letter* a, const Letter* b, int len) const {
  if (dist_) return dist_(a, b, len);
  if (!st_->has_geometry())
    throw std::logic_error("besov: no ambient coordinates and no metric hook");
  return std::sqrt(
      dist2(st_->map_point(a, len, center_), st_->map_point(b, len, center_)));
}

int BesovContext::level_for_radius(double r) const {
  if (!(r > 0.0)) throw std::invalid_argument("besov: radius must be positive");
  const double shrink = (dist_ && scale_ > 0.0) ? scale_ : st_->r_star();
  int level = 0;
  double d = diam_;
  while (d >= 0.25 * r && level < 48) {
    d *= shrink;
    ++level;
  }
  return level;
}

// conservative two-sided test of a cell against B(x,r): the representative is
// the centroid image (or a padded corner address under a metric hook) and the
// radius bound contracts per level, so "inside"/"outside" verdicts are proofs
// and everything undecided is a straddler
bool BesovContext::cell_bounds(std::uint64_t cell, int level, const Letter* x,
                               double r, bool& inside, bool& outside) const {
  Letter digs[kMaxAddr];
  cell_digits(cell, st_->alphabet_size(), level, digs);
  double d;
  double rad;
  if (dist_) {
    if (level > depth_)
      throw std::invalid_argument("besov: metric hook cannot refine below samples");
    Letter buf[kMaxAddr];
    std::copy(digs, digs + level, buf);
    const Letter pad = static_cast<Letter>(st_->fixed_letter(0));
    for (int k = level; k < depth_; ++k) buf[k] = pad;
    d = dist_(buf, x, depth_);
    const double shrink = scale_ > 0.0 ? scale_ : st_->r_star();
    rad = diam_;
    for (int k = 0; k < level; ++k) rad *= shrink;
  } else {
    const Vec2 c = st_->map_point(digs, level, center_);
    const Vec2 xp = st_->map_point(x, depth_, center_);
    d = std::sqrt(dist2(c, xp));
    rad = radius0_;
    const double shrink = st_->r_star();
    for (int k = 0; k < level; ++k) rad *= shrink;
  }
  inside = d + rad < r;
  outside = d - rad >= r;
  return inside || outside;
}

BesovContext::BallCover BesovContext::ball_cover(const Letter* x, double r,
                                                 int level) const {
  if (level < 0 || level > 48)
    throw std::invalid_argument("besov: cover level out of range");
  if (!(r > 0.0)) throw std::invalid_argument("besov: radius must be positive");
  BallCover out;
  out.level = level;
  const int alphabet = st_->alphabet_size();

  // distance from x to a cell's representative point, same convention as the
  // bounds; decides the frontier cells of the mass refinement
  auto rep_dist = [&](std::uint64_t cell, int lv) -> double {
    Letter digs[kMaxAddr];
    cell_digits(cell, alphabet, lv, digs);
    if (dist_) {
      Letter buf[kMaxAddr];
      std::copy(digs, digs + lv, buf);
      const Letter pad = static_cast<Letter>(st_->fixed_letter(0));
      for (int k = lv; k < depth_; ++k) buf[k] = pad;
      return dist_(buf, x, depth_);
    }
    return std::sqrt(dist2(st_->map_point(digs, lv, center_),
                           st_->map_point(x, depth_, center_)));
  };

  // straddler mass share: keep refining three levels past the cover level,
  // then let the representative point decide the frontier
  const int stop = level + 3;
  std::function<double(std::uint64_t, int)> refine_mass =
      [&](std::uint64_t cell, int lv) -> double {
    bool in = false;
    bool outb = false;
    cell_bounds(cell, lv, x, r, in, outb);
    if (outb) return 0.0;
    if (in) return m_.mass(cell, alphabet, lv);
    if (lv >= stop)
      return rep_dist(cell, lv) < r ? m_.mass(cell, alphabet, lv) : 0.0;
    double s = 0.0;
    for (int i = 0; i < alphabet; ++i)
      s += refine_mass(cell * static_cast<std::uint64_t>(alphabet) +
                           static_cast<std::uint64_t>(i),
                       lv + 1);
    return s;
  };

  std::function<void(std::uint64_t, int)> walk = [&](std::uint64_t cell, int lv) {
    bool in = false;
    bool outb = false;
    cell_bounds(cell, lv, x, r, in, outb);
    if (outb) return;
    if (in) {
      // a proven-inside subtree expands to its level cells wholesale
      std::uint64_t span = 1;
      for (int k = lv; k < level; ++k) span *= static_cast<std::uint64_t>(alphabet);
      const std::uint64_t first = cell * span;
      for (std::uint64_t t = 0; t < span; ++t) {
        out.inside.push_back(first + t);
        out.mass += m_.mass(first + t, alphabet, level);
      }
      return;
    }
    if (lv == level) {
      out.straddle.push_back(cell);
      out.mass += refine_mass(cell, lv);
      return;
    }
    for (int i = 0; i < alphabet; ++i)
      walk(cell * static_cast<std::uint64_t>(alphabet) +
               static_cast<std::uint64_t>(i),
           lv + 1);
  };
  walk(0, 0);
  return out;
}

double BesovContext::ball_mass_exact(const Letter* x, double r, int level) const {
  if (level < 0 || level > 48)
    throw std::invalid_argument("besov: enumeration level out of range");
  if (!(r > 0.0)) throw std::invalid_argument("besov: radius must be positive");
  const int alphabet = st_->alphabet_size();
  auto rep_dist = [&](std::uint64_t cell, int lv) -> double {
    Letter digs[kMaxAddr];
    cell_digits(cell, alphabet, lv, digs);
    if (dist_) {
      Letter buf[kMaxAddr];
      std::copy(digs, digs + lv, buf);
      const Letter pad = static_cast<Letter>(st_->fixed_letter(0));
      for (int k = lv; k < depth_; ++k) buf[k] = pad;
      return dist_(buf, x, depth_);
    }
    return std::sqrt(dist2(st_->map_point(digs, lv, center_),
                           st_->map_point(x, depth_, center_)));
  };
  std::function<double(std::uint64_t, int)> descend =
      [&](std::uint64_t cell, int lv) -> double {
    bool in = false;
    bool outb = false;
    cell_bounds(cell, lv, x, r, in, outb);
    if (outb) return 0.0;
    if (in) return m_.mass(cell, alphabet, lv);
    if (lv >= level)
      return rep_dist(cell, lv) < r ? m_.mass(cell, alphabet, lv) : 0.0;
    double s = 0.0;
    for (int i = 0; i < alphabet; ++i)
      s += descend(cell * static_cast<std::uint64_t>(alphabet) +
                       static_cast<std::uint64_t>(i),
                   lv + 1);
    return s;
  };
  return descend(0, 0);
}

// ---------------------------------------------------------------------------
// functionals

FunctionalEstimate eval_J(const BesovContext& ctx, const KernelSpec& k, double p,
                          const PointFunction& f, double r, long samples,
                          const std::string& tag) {
  check_kernel(ctx, k, p);
  if (k.variant == KernelVariant::Averaged) {
    // expand into plain ball kernels of the word-composed function, one
    // sub-stream per word so reruns stay reproducible term by term
    KernelSpec plain = k;
    plain.variant = KernelVariant::BallPower;
    plain.n = 0;
    plain.sigma = 1.0;
    const int alphabet = ctx.structure().alphabet_size();
    FunctionalEstimate out;
    out.r = r;
    double val = 0.0;
    double var = 0.0;
    double sig_l = 1.0;
    for (int l = 0; l <= k.n; ++l) {
      const std::uint64_t words = cell_count(alphabet, l);
      for (std::uint64_t wi = 0; wi < words; ++wi) {
        const Word w = word_of_index(wi, alphabet, l);
        const PrefixView pf(w, f);
        const FunctionalEstimate e =
            eval_J(ctx, plain, p, pf, r, samples, tag + ":" + w.str());
        val += sig_l * e.value;
        var += (sig_l * e.std_error) * (sig_l * e.std_error);
        out.samples += e.samples;
        out.zero_pair_batches += e.zero_pair_batches;
      }
      sig_l *= k.sigma;
    }
    out.value = val / (k.n + 1);
    out.std_error = std::sqrt(var) / (k.n + 1);
    return out;
  }

  const int depth = ctx.sample_depth();
  const double ps = p * k.s;
  const double rdenom = std::pow(r, ps);
  const bool ball = k.variant == KernelVariant::BallPower;
  std::array<BatchAccum, 64> batches{};
  const long per = run_pair_stream(
      ctx, r, samples, tag, batches,
      [&](BatchAccum& acc, const Letter* x, const Letter* y, double d,
          double m_cand, double m_ball) {
        if (!(d < r)) return;
        const double df = f.eval(x, depth) - f.eval(y, depth);
        if (df == 0.0) return;
        const double denom =
            ball ? rdenom * m_ball
                 : (d > 0.0 ? std::pow(d, ps) * m_ball : 0.0);
        if (!(denom > 0.0)) return;
        acc.a += m_cand * std::pow(std::abs(df), p) / denom;
      });
  return finish_estimate(batches, per, r);
}

FunctionalEstimate eval_J_two(const BesovContext& ctx, const KernelSpec& k,
                              double p, const PointFunction& f,
                              const PointFunction& g, double r, long samples,
                              const std::string& tag) {
  check_kernel(ctx, k, p);
  if (k.variant == KernelVariant::Averaged) {
    KernelSpec plain = k;
    plain.variant = KernelVariant::BallPower;
    plain.n = 0;
    plain.sigma = 1.0;
    const int alphabet = ctx.structure().alphabet_size();
    FunctionalEstimate out;
    out.r = r;
    double val = 0.0;
    double var = 0.0;
    double sig_l = 1.0;
    for (int l = 0; l <= k.n; ++l) {
      const std::uint64_t words = cell_count(alphabet, l);
      for (std::uint64_t wi = 0; wi < words; ++wi) {
        const Word w = word_of_index(wi, alphabet, l);
        const PrefixView pf(w, f);
        const PrefixView pg(w, g);
        const FunctionalEstimate e =
            eval_J_two(ctx, plain, p, pf, pg, r, samples, tag + ":" + w.str());
        val += sig_l * e.value;
        var += (sig_l * e.std_error) * (sig_l * e.std_error);
        out.samples += e.samples;
        out.zero_pair_batches += e.zero_pair_batches;
      }
      sig_l *= k.sigma;
    }
    out.value = val / (k.n + 1);
    out.std_error = std::sqrt(var) / (k.n + 1);
    return out;
  }

  const int depth = ctx.sample_depth();
  const double ps = p * k.s;
  const double rdenom = std::pow(r, ps);
  const bool ball = k.variant == KernelVariant::BallPower;
  std::array<BatchAccum, 64> batches{};
  const long per = run_pair_stream(
      ctx, r, samples, tag, batches,
      [&](BatchAccum& acc, const Letter* x, const Letter* y, double d,
          double m_cand, double m_ball) {
        if (!(d < r)) return;
        const double df = f.eval(x, depth) - f.eval(y, depth);
        const double dg = g.eval(x, depth) - g.eval(y, depth);
        if (df == 0.0 || dg == 0.0) return;
        const double denom =
            ball ? rdenom * m_ball
                 : (d > 0.0 ? std::pow(d, ps) * m_ball : 0.0);
        if (!(denom > 0.0)) return;
        acc.a += m_cand * signed_power(df, p) * dg / denom;
      });
  return finish_estimate(batches, per, r);
}

WmReport wm_ratio(const BesovContext& ctx, const KernelSpec& k, double p,
                  const PointFunction& f, const std::vector<double>& r_grid,
                  long samples) {
  if (r_grid.empty()) throw std::invalid_argument("besov: empty radius grid");
  WmReport rep;
  rep.radii = r_grid;
  for (double r : r_grid) rep.profile.push_back(eval_J(ctx, k, p, f, r, samples, "wm"));
  double sup = 0.0;
  for (const auto& e : rep.profile) sup = std::max(sup, e.value);
  // the three smallest radii stand in for the r -> 0 limit
  std::vector<std::size_t> order(r_grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return r_grid[a] < r_grid[b]; });
  double floor_val = std::numeric_limits<double>::infinity();
  const std::size_t take = std::min<std::size_t>(3, order.size());
  for (std::size_t i = 0; i < take; ++i)
    floor_val = std::min(floor_val, rep.profile[order[i]].value);
  if (floor_val > 0.0 && std::isfinite(floor_val)) rep.ratio = sup / floor_val;
  return rep;
}

KsEstimate ks_limit_estimate(const BesovContext& ctx, const KernelSpec& k,
                             double p, const PointFunction& f,
                             const std::vector<double>& r_sequence,
                             long samples) {
  if (r_sequence.empty()) throw std::invalid_argument("besov: empty radius list");
  KsEstimate out;
  out.radii = r_sequence;
  for (double r : r_sequence)
    out.profile.push_back(eval_J(ctx, k, p, f, r, samples, "ks"));
  out.value = out.profile.back().value;
  const std::size_t n = out.profile.size();
  const std::size_t first = n > 3 ? n - 3 : 0;
  for (std::size_t i = first + 1; i < n; ++i) {
    const double prev = std::abs(out.profile[i - 1].value);
    const double change =
        std::abs(out.profile[i].value - out.profile[i - 1].value) /
        std::max(prev, 1e-300);
    out.tail_rel_change = std::max(out.tail_rel_change, change);
  }
  return out;
}

ScanResult critical_exponent_scan(
    const BesovContext& ctx, MetricMode metric, double p,
    const std::vector<std::shared_ptr<const PointFunction>>& f_set,
    const std::vector<double>& s_grid, const std::vector<double>& r_grid,
    long samples) {
  if (f_set.empty()) throw std::invalid_argument("besov: scan needs functions");
  if (s_grid.empty()) throw std::invalid_argument("besov: scan needs s grid");
  if (r_grid.size() < 2)
    throw std::invalid_argument("besov: scan needs at least two radii");
  if (metric != ctx.metric_mode())
    throw std::invalid_argument("besov: scan metric mode differs from the context");
  if (!(p > 0.0)) throw std::invalid_argument("besov: exponent p must be positive");

  // J_s(r) = r^{-ps} A(r) for the ball kernel, so one s-free evaluation per
  // (f, r) determines the whole slope family: slope(s) = slope_A - p s,
  // exactly linear in s by construction
  KernelSpec base;
  base.variant = KernelVariant::BallPower;
  base.s = 0.0;
  base.metric = metric;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t fi = 0; fi < f_set.size(); ++fi) {
    std::vector<double> lx;
    std::vector<double> ly;
    bool ok = true;
    for (double r : r_grid) {
      const FunctionalEstimate e = eval_J(ctx, base, p, *f_set[fi], r, samples,
                                          "scan:" + std::to_string(fi));
      if (!(e.value > 0.0)) {
        ok = false;
        break;
      }
      lx.push_back(std::log(r));
      ly.push_back(std::log(e.value));
    }
    if (!ok) continue;
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t j = 0; j < lx.size(); ++j) {
      mx += lx[j];
      my += ly[j];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(ly.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t j = 0; j < lx.size(); ++j) {
      sxy += (lx[j] - mx) * (ly[j] - my);
      sxx += (lx[j] - mx) * (lx[j] - mx);
    }
    best = std::max(best, sxy / sxx);
  }
  if (!std::isfinite(best))
    throw std::runtime_error("besov: every scan function degenerated to zero");

  ScanResult out;
  out.s_grid = s_grid;
  for (double s : s_grid) out.slopes.push_back(best - p * s);
  out.s_estimate = best / p;
  // bracket with the nearest grid points below/above when they exist
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (double s : s_grid) {
    if (s <= out.s_estimate) lo = std::max(lo, s);
    if (s >= out.s_estimate) hi = std::min(hi, s);
  }
  out.bracket_lo = std::isfinite(lo) ? lo : out.s_estimate;
  out.bracket_hi = std::isfinite(hi) ? hi : out.s_estimate;
  return out;
}

ComparabilityReport kernel_comparability(const BesovContext& ctx, double p,
                                         const PointFunction& f, double s,
                                         const std::vector<double>& r_grid,
                                         long samples) {
  if (r_grid.empty()) throw std::invalid_argument("besov: empty radius grid");
  if (!(p > 0.0)) throw std::invalid_argument("besov: exponent p must be positive");
  ComparabilityReport rep;
  rep.radii = r_grid;
  const int depth = ctx.sample_depth();
  const double ps = p * s;
  for (double r : r_grid) {
    const double rdenom = std::pow(r, ps);
    std::array<BatchAccum, 64> batches{};
    const long per = run_pair_stream(
        ctx, r, samples, "cmp", batches,
        [&](BatchAccum& acc, const Letter* x, const Letter* y, double d,
            double m_cand, double m_ball) {
          if (!(d < r) || !(d > 0.0) || !(m_ball > 0.0)) return;
          const double df = f.eval(x, depth) - f.eval(y, depth);
          if (df == 0.0) return;
          const double num = m_cand * std::pow(std::abs(df), p) / m_ball;
          const double c_ball = num / rdenom;
          const double c_dist = num / std::pow(d, ps);
          acc.a += c_dist;
          acc.b += c_ball;
          if (c_dist < c_ball * (1.0 - 1e-12)) rep.dominated = false;
        });
    double sum_dist = 0.0;
    double sum_ball = 0.0;
    for (const auto& b : batches) {
      sum_dist += b.a;
      sum_ball += b.b;
    }
    (void)per;
    rep.ratio.push_back(sum_ball > 0.0 ? sum_dist / sum_ball : 1.0);
  }
  rep.c_prime = *std::max_element(rep.ratio.begin(), rep.ratio.end());
  return rep;
}

}  // namespace fractalp
