#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "fractalp/pgraph.hpp"
#include "fractalp/structure.hpp"

namespace fractalp {

// symmetric edge weights on the boundary set V_0 (flat upper triangle)
struct BoundaryGraphForm {
  int B = 0;
  std::vector<double> w;  // size B*(B-1)/2, pair (q<q') at offset below

  static BoundaryGraphForm complete(int B, double weight = 1.0);

  int offset(int q, int qp) const {
    if (q > qp) std::swap(q, qp);
    return q * B - q * (q + 1) / 2 + (qp - q - 1);
  }
  double weight(int q, int qp) const { return w[static_cast<std::size_t>(offset(q, qp))]; }
  double energy(double p, const std::vector<double>& u) const;
};

// values per vertex id of VertexTable(level)
struct DiscreteFunction {
  int level = 0;
  std::vector<double> v;
};

// solver output that remembers its level, so it reads back either as the raw
// SolveResult (u, energy, convergence) or as the extended DiscreteFunction
struct HarmonicFunction : SolveResult {
  int level = 0;
  operator DiscreteFunction() const { return DiscreteFunction{level, u}; }
};

// values per cell (word index) at a level
struct CellFunction {
  int level = 0;
  std::vector<double> v;
};

// Self-similar p-energy at every level:
//   E^n(u) = sum_{|w|=n} rho_w * E_0(u o F_w),   rho_w = prod_i rho[w_i].
// Vertex tables and level graphs are built lazily and cached.
class EnergyModel {
 public:
  EnergyModel(PcfStructure st, double p, BoundaryGraphForm base,
              std::vector<double> rho);

  // unit base form, all letter weights equal to rho_scalar
  static EnergyModel uniform(PcfStructure st, double p, double rho_scalar);

  const PcfStructure& structure() const { return st_; }
  double p() const { return p_; }
  const BoundaryGraphForm& base_form() const { return base_; }
  const std::vector<double>& rho() const { return rho_; }
  double rho_word(const Word& w) const;
  double rho_word(const Letter* w, int len) const;

  // cell-average renormalization factor, when one has been derived
  std::optional<double> sigma_p() const { return sigma_p_; }
  void set_sigma_p(double s) { sigma_p_ = s; }

  const VertexTable& table(int level) const;
  const PGraph& graph(int level) const;
  const CellGraph& cell_graph(int level) const;

  double energy(const DiscreteFunction& u) const;
  double energy_two(const DiscreteFunction& u, const DiscreteFunction& v) const;

  // minimize E^level subject to u = values at the marked vertex ids
  SolveResult dirichlet_solve(int level, const std::vector<int>& fixed_ids,
                              const std::vector<double>& values,
                              const SolveOptions& opt = {}) const;

  // p-harmonic extension of boundary data (values on V_0) to V_level
  HarmonicFunction boundary_harmonic(int level,
                                     const std::vector<double>& boundary,
                                     const SolveOptions& opt = {}) const;

  // p-harmonic extension of a function on V_k to V_level (ids of V_k embed)
  DiscreteFunction harmonic_extend(const DiscreteFunction& u, int level,
                                   const SolveOptions& opt = {}) const;

  // cap(A0, A1) at a level: minimize E^level with u=0 on A0, u=1 on A1
  struct Capacity {
    double value = 0.0;
    DiscreteFunction potential;
  };
  Capacity capacity(int level, const std::vector<int>& zero_ids,
                    const std::vector<int>& one_ids,
                    const SolveOptions& opt = {}) const;

  // E^n(u_n) for p-harmonic extensions u_n of the same boundary data; an
  // exact renormalization weight makes this sequence constant in n
  std::vector<double> harmonic_energy_profile(const std::vector<double>& boundary,
                                              int max_level,
                                              const SolveOptions& opt = {}) const;

 private:
  PcfStructure st_;
  double p_;
  BoundaryGraphForm base_;
  std::vector<double> rho_;
  std::optional<double> sigma_p_;
  mutable std::map<int, std::shared_ptr<const VertexTable>> tables_;
  mutable std::map<int, std::shared_ptr<const PGraph>> graphs_;
  mutable std::map<int, std::shared_ptr<const CellGraph>> cellgraphs_;
};

// ---- cell-average machinery -------------------------------------------------

// unweighted p-energy over the cell-graph edges, restricted to a cell subset
// if `keep` is nonempty (an edge counts when both endpoints are kept)
double cell_graph_energy(const CellGraph& g, double p,
                         const std::vector<double>& cellvals,
                         const std::vector<std::uint64_t>& keep = {});

// corner mean per cell: vertex function -> cell function at the same level
CellFunction cell_average(const EnergyModel& model, const DiscreteFunction& f);

// measure-weighted mean over the depth-k subcells of each target cell;
// level_to <= f.level, identity when equal
CellFunction average_project(const PcfStructure& st, const SelfSimilarMeasure& m,
                             const CellFunction& f, int level_to);

// Largest ratio of coarse to fine cell-graph energy over a connected cell set
// A at level n, the coarse side averaged down from level n+k.  Exact for
// p = 2 (generalized symmetric eigenproblem on the quotient by constants);
// for other p a projected-ascent estimate seeded with the p=2 maximizer.
struct DisparityResult {
  double value = 0.0;
  std::vector<double> maximizer;  // cell function on the level-(n+k) subcells of A
  bool certified = false;         // true only on the p = 2 path
};
DisparityResult disparity_constant(const EnergyModel& model,
                                   const SelfSimilarMeasure& m,
                                   int n, const std::vector<std::uint64_t>& A,
                                   int k, int restarts = 20,
                                   std::uint64_t seed = 1);

// Worst cell-separation capacity: sup over cells w (levels 1..2, the deeper
// ones repeat by self-similarity) of the unweighted level-(|w|+k) cell-graph
// capacity between the subcells of w and the subcells of everything at
// cell-graph distance > M from w.
struct ConductanceResult {
  double value = 0.0;
  bool separated = true;  // false when some M-neighborhood is the whole level
  int witness_level = 0;
  std::uint64_t witness_cell = 0;
};
ConductanceResult conductance_constant(const EnergyModel& model, int M, int k);

// profile n -> sigma^n * (cell-graph energy of the level-n average of f);
// requires sigma_p set on the model
struct WpProfile {
  std::vector<int> levels;
  std::vector<double> values;  // sigma^n E_cell^n(P_n f)
  double max_value = 0.0;
  int argmax_level = 0;
  double seminorm_p = 0.0;  // max^{1/p}
};
WpProfile wp_seminorm(const EnergyModel& model, const SelfSimilarMeasure& m,
                      const DiscreteFunction& f, const std::vector<int>& levels);

}  // namespace fractalp
