#pragma once

#include <map>
#include <string>
#include <vector>

#include "fractalp/forms.hpp"
#include "fractalp/renorm.hpp"

namespace fractalp {

// R(x,y) = 1/cap({x},{y}) on V_n with the model's weights; the metric is
// R_hat = R^{1/(p-1)}.  Dense table via the pseudo-inverse of the weighted
// Laplacian at p = 2; per-pair convex solves (cached) otherwise.
class ResistanceTable {
 public:
  ResistanceTable(const EnergyModel& model, int level,
                  const SolveOptions& opt = {});

  int level() const { return level_; }
  double p() const { return p_; }
  int vertex_count() const { return n_; }
  bool dense() const { return !dense_.empty(); }

  double resistance(int x, int y) const;
  double metric(int x, int y) const;  // R^{1/(p-1)}

 private:
  const EnergyModel* model_;
  int level_;
  double p_;
  int n_;
  SolveOptions opt_;
  std::vector<double> dense_;  // row-major n*n when p == 2 and n is small
  mutable std::map<std::pair<int, int>, double> cache_;
};

double resistance(const EnergyModel& model, int level, int x, int y,
                  const SolveOptions& opt = {});

struct ScalingReport {
  double max_slack = 0.0;  // max of R(F_w x, F_w y) - rho_w^{-1} R(x, y)
  Word witness_word;
  int witness_x = 0, witness_y = 0;
  long pairs = 0;
};
// verify R(F_w x, F_w y) <= rho_w^{-1} R(x,y) on sampled words and pairs
ScalingReport scaling_check(const EnergyModel& model, int n, long pair_count,
                            std::uint64_t seed);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_band = 0.0;  // max abs deviation of log R from the fit
  long pairs = 0;
  double decades = 0.0;  // spread of log10 d over the sample
};
// least-squares slope of log R against log of the ambient distance; needs at
// least 1.5 decades of distance spread
ExponentFit metric_exponent_fit(const EnergyModel& model, int n,
                                long pair_count, std::uint64_t seed);

struct AhlforsReport {
  std::vector<double> scales;
  std::vector<double> ratio_min;  // min over centers of m(B(x,s))/s^d_fp
  std::vector<double> ratio_max;
  double band = 0.0;  // overall max/min
  long below_resolution = 0;
};
AhlforsReport ahlfors_check(const EnergyModel& model, const ResistanceTable& rt,
                            const SelfSimilarMeasure& m, double d_fp,
                            int centers, const std::vector<double>& s_grid,
                            std::uint64_t seed);

struct CapacityProfile {
  std::vector<double> scales;
  std::vector<double> energy;  // p-energy of the max-of-cutoffs test function
  double fitted_exponent = 0.0;  // log-log slope, expected near -(p-1)
};
// build the scale-s neighborhood cutoff around a center address and measure
// its energy across a grid of scales; `depth` is how many levels below the
// scale's partition level the cutoff is filled in
CapacityProfile capacity_profile(const EnergyModel& model, const Word& center,
                                 const std::vector<double>& s_grid, int depth,
                                 const SolveOptions& opt = {});

struct PoincareReport {
  struct Ball {
    std::uint64_t center_cell = 0;
    double s = 0.0;
    double ratio = 0.0;  // variance integral / (s^{d_fp+p-1} * inflated mass)
  };
  std::vector<Ball> balls;
  double sup_ratio = 0.0;
  long skipped = 0;  // balls where the energy mass under them vanishes
};
// (p,p)-Poincare ratios over sampled scale-s cell neighborhoods; `inflate`
// is the radius multiplier applied to the energy-measure side
PoincareReport poincare_check(const EnergyModel& model,
                              const SelfSimilarMeasure& m, double d_fp,
                              const std::vector<DiscreteFunction>& us,
                              int ball_count, double s, int inflate,
                              std::uint64_t seed);

// neighborhoods in the level-n cell graph: cells within graph distance k of
// the cells containing the vertex/cell seed
std::vector<std::uint64_t> cell_neighborhood(const CellGraph& g,
                                             const std::vector<std::uint64_t>& seed,
                                             int k);

}  // namespace fractalp
