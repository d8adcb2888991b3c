#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fractalp/forms.hpp"

namespace fractalp {

// per-cell masses of the energy distribution of one function
struct CellMeasure {
  int level = 0;
  std::vector<double> mass;  // one per word index
  double total = 0.0;
};

using SignedCellMeasure = CellMeasure;  // same layout, masses may be negative

// mass(w) = sum over the depth cells below w of their weighted edge energies;
// every finest edge belongs to exactly one cell, so the masses add up to the
// total energy with no tolerance
CellMeasure cell_energy_measure(const EnergyModel& model,
                                const DiscreteFunction& u, int n);

SignedCellMeasure two_variable_measure(const EnergyModel& model,
                                       const DiscreteFunction& u,
                                       const DiscreteFunction& v, int n);

// Psi(u; phi) = E(u; u*phi) - ((p-1)/p)^{p-1} E(|u|^{p/(p-1)}; phi);
// nonnegative for phi >= 0, and Psi(u; 1) = E(u)
double psi_functional(const EnergyModel& model, const DiscreteFunction& u,
                      const DiscreteFunction& phi);

// cutoff of a cell: 1 on the cell, p-harmonic in each neighboring cell,
// 0 beyond (every level-|w| vertex is pinned, cells are filled independently)
DiscreteFunction cell_bump(const EnergyModel& model, const Word& w, int depth,
                           const SolveOptions& opt = {});

struct ChainRuleReport {
  int level = 0;
  std::vector<double> rel_error;  // per cell; -1 marks skipped (both sides ~ 0)
  double max_rel_error = 0.0;
};

// compare the energy measure of Phi(u) against |Phi'(u_w)|^p * measure of u,
// with u_w the measure-weighted cell average of u. Errors are reported per
// level-n cell; depth sets the granularity of the right-hand side: each
// level-n cell is split into its level-depth subcells, the derivative factor
// is applied on every subcell at that subcell's own average, and the pieces
// are summed. depth < 0 (the default) means depth = n, i.e. one
// representative value per reported cell.
ChainRuleReport chain_rule_check(const EnergyModel& model,
                                 const SelfSimilarMeasure& m,
                                 const DiscreteFunction& u,
                                 const std::function<double(double)>& Phi,
                                 const std::function<double(double)>& dPhi,
                                 int n, int depth = -1);

// Exact locality identities of the energy measure, checked cell by cell on
// the cells where their constancy hypotheses hold:
//  (a) u constant on the cell        -> mass_u = 0
//  (b) u - v constant on the cell    -> mass_u = mass_v
//  (c) cell split by u1 = a1 / u2 = a2 ->
//        G<u1+u2+v> + G<v> = G<u1+v> + G<u2+v>   and
//        G<u1+u2; v>       = G<u1; v> + G<u2; v>
//  (d) cell split by u1 - u2 = a / v = b ->
//        G<u1; v> = G<u2; v>       and G<v; u1> = G<v; u2>
struct LocalityReport {
  struct Item {
    char item = 'a';
    std::uint64_t cell = 0;
    double lhs = 0.0, rhs = 0.0;
    double abs_error = 0.0;
  };
  int level = 0;
  std::vector<Item> checks;
  long skipped = 0;  // cells whose hypotheses failed for every item
  double max_abs_error = 0.0;
};

LocalityReport strong_locality_check(const EnergyModel& model,
                                     const DiscreteFunction& u1,
                                     const DiscreteFunction& u2,
                                     const DiscreteFunction& v, int n);

}  // namespace fractalp
