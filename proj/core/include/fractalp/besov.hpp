#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fractalp/extend.hpp"
#include "fractalp/forms.hpp"
#include "fractalp/structure.hpp"

namespace fractalp {

enum class KernelVariant { BallPower, DistancePower, Averaged };
enum class MetricMode { Euclidean, Resistance };

// k_r(x,y) selector for the smoothness functionals:
//   BallPower      1{d<r} / (r^{ps} m(B(x,r)))
//   DistancePower  1{d<r} / (d(x,y)^{ps} m(B(x,r)))
//   Averaged       word-averaged BallPower, depth `n`, scale factor sigma
struct KernelSpec {
  KernelVariant variant = KernelVariant::BallPower;
  double s = 1.0;
  MetricMode metric = MetricMode::Euclidean;
  int n = 0;           // Averaged only
  double sigma = 1.0;  // Averaged only: per-level weight
};

// point function evaluable at fixed-depth addresses
class PointFunction {
 public:
  virtual ~PointFunction() = default;
  virtual double eval(const Letter* addr, int len) const = 0;
};

class ExtendedFunction : public PointFunction {
 public:
  ExtendedFunction(const EnergyModel& model, DiscreteFunction base);
  double eval(const Letter* addr, int len) const override;

 private:
  std::shared_ptr<HarmonicInterpolator> interp_;
};

// phi o f, pointwise (so contractions commute with evaluation exactly)
class ComposedFunction : public PointFunction {
 public:
  ComposedFunction(std::function<double(double)> phi,
                   std::shared_ptr<const PointFunction> f)
      : phi_(std::move(phi)), f_(std::move(f)) {}
  double eval(const Letter* addr, int len) const override {
    return phi_(f_->eval(addr, len));
  }

 private:
  std::function<double(double)> phi_;
  std::shared_ptr<const PointFunction> f_;
};

// x -> f(F_w x): prepends a fixed word to every address
class PrefixedFunction : public PointFunction {
 public:
  PrefixedFunction(Word w, std::shared_ptr<const PointFunction> f)
      : w_(std::move(w)), f_(std::move(f)) {}
  double eval(const Letter* addr, int len) const override;

 private:
  Word w_;
  std::shared_ptr<const PointFunction> f_;
};

// closed-form function of the ambient coordinates
class CoordFunction : public PointFunction {
 public:
  CoordFunction(const PcfStructure& st, std::function<double(Vec2)> f);
  double eval(const Letter* addr, int len) const override;

 private:
  const PcfStructure* st_;
  Vec2 center_;
  std::function<double(Vec2)> f_;
};

// Shared geometry/measure state for the Monte-Carlo functionals.  Distances
// come either from ambient coordinates or from a caller-provided metric on
// addresses (the resistance approximation plugs in through that hook).
class BesovContext {
 public:
  BesovContext(const PcfStructure& st, SelfSimilarMeasure m, int sample_depth,
               std::uint64_t seed);

  const PcfStructure& structure() const { return *st_; }
  const SelfSimilarMeasure& measure() const { return m_; }
  int sample_depth() const { return depth_; }
  std::uint64_t seed() const { return seed_; }

  // `level_scale`: contraction factor per level of cell diameters in the new
  // metric, so that diameter * level_scale^l bounds every level-l cell; 0
  // keeps the ambient ratio r_star
  void set_metric(MetricMode mode,
                  std::function<double(const Letter*, const Letter*, int)> dist,
                  double diameter, double level_scale = 0.0);
  MetricMode metric_mode() const { return mode_; }
  double distance(const Letter* a, const Letter* b, int len) const;
  double diameter() const { return diam_; }

  // cells at `level` meeting the ball B(x, r), split into fully-inside and
  // straddling; `mass` adds the straddlers' share by refining them three
  // levels deeper (frontier cells classified by their representative point),
  // deterministically
  struct BallCover {
    std::vector<std::uint64_t> inside;
    std::vector<std::uint64_t> straddle;
    double mass = 0.0;
    int level = 0;
  };
  BallCover ball_cover(const Letter* x, double r, int level) const;

  // refinement level for radius r: smallest with max cell diameter < r/4
  int level_for_radius(double r) const;

  // measure of B(x, r) by cell enumeration (oracle-grade, no sampling)
  double ball_mass_exact(const Letter* x, double r, int level) const;

 private:
  bool cell_bounds(std::uint64_t cell, int level, const Letter* x, double r,
                   bool& inside, bool& outside) const;

  const PcfStructure* st_;
  SelfSimilarMeasure m_;
  int depth_;
  std::uint64_t seed_;
  MetricMode mode_ = MetricMode::Euclidean;
  std::function<double(const Letter*, const Letter*, int)> dist_;
  double diam_ = 1.0;
  double scale_ = 0.0;  // per-level cell diameter factor; 0 = use r_star
  std::vector<Vec2> corner_cache_;  // boundary coords
  Vec2 center_{0.0, 0.0};           // boundary centroid
  double radius0_ = 1.0;            // max centroid-to-corner distance
};

struct FunctionalEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long samples = 0;
  long zero_pair_batches = 0;  // batches that found no admissible pair
  double r = 0.0;
};

// J_{p,r}(f) = iint |f(x)-f(y)|^p k_r(x,y) dm dm, sampled over `samples`
// (x,y) pairs in 64 deterministic batches keyed by (seed, tag, radius)
FunctionalEstimate eval_J(const BesovContext& ctx, const KernelSpec& k, double p,
                          const PointFunction& f, double r, long samples,
                          const std::string& tag = "J");

// two-variable variant: sgn(df)|df|^{p-1} dg against the same kernel
FunctionalEstimate eval_J_two(const BesovContext& ctx, const KernelSpec& k,
                              double p, const PointFunction& f,
                              const PointFunction& g, double r, long samples,
                              const std::string& tag = "J2");

struct WmReport {
  std::vector<double> radii;
  std::vector<FunctionalEstimate> profile;
  double ratio = 1.0;  // sup over grid / min over the three smallest radii
};
WmReport wm_ratio(const BesovContext& ctx, const KernelSpec& k, double p,
                  const PointFunction& f, const std::vector<double>& r_grid,
                  long samples);

struct KsEstimate {
  double value = 0.0;            // estimate at the smallest radius
  double tail_rel_change = 0.0;  // max successive relative change, last 3 radii
  std::vector<double> radii;
  std::vector<FunctionalEstimate> profile;
};
KsEstimate ks_limit_estimate(const BesovContext& ctx, const KernelSpec& k,
                             double p, const PointFunction& f,
                             const std::vector<double>& r_sequence, long samples);

struct ScanResult {
  double s_estimate = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  std::vector<double> s_grid;
  std::vector<double> slopes;  // best (max) log-log slope across f_set per s
};
// critical smoothness: the s where the least-squares slope of log J vs log r
// crosses zero, maximized over the test functions
ScanResult critical_exponent_scan(
    const BesovContext& ctx, MetricMode metric, double p,
    const std::vector<std::shared_ptr<const PointFunction>>& f_set,
    const std::vector<double>& s_grid, const std::vector<double>& r_grid,
    long samples);

struct ComparabilityReport {
  std::vector<double> radii;
  std::vector<double> ratio;  // J^{k#} / J^{k^s} per radius, same sample pairs
  double c_prime = 1.0;       // max ratio over the grid (min side is >= 1)
  bool dominated = true;      // every pathwise contribution respected k# >= k^s
};
ComparabilityReport kernel_comparability(const BesovContext& ctx, double p,
                                         const PointFunction& f, double s,
                                         const std::vector<double>& r_grid,
                                         long samples);

}  // namespace fractalp
