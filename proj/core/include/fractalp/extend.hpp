#pragma once

#include <unordered_map>
#include <vector>

#include "fractalp/forms.hpp"

namespace fractalp {

// Cell-wise p-harmonic refinement of a base function to arbitrary depth.
//
// The corner values of a cell determine its children's corner values by one
// small constrained minimization on the level-1 graph (closed-form linear
// rule at p = 2, Newton otherwise); results are cached per (level, cell), so
// repeated point queries along nearby addresses stay cheap.
class HarmonicInterpolator {
 public:
  HarmonicInterpolator(const EnergyModel& model, DiscreteFunction base,
                       const SolveOptions& opt = {});

  const EnergyModel& model() const { return *model_; }
  int base_level() const { return base_.level; }

  // corner values of the cell addressed by the first `len` letters of `addr`
  const std::vector<double>& corners(const Letter* addr, int len) const;

  // corner mean of the addressed cell — the point-value proxy used by the
  // kernel functionals
  double value_at(const Letter* addr, int len) const;

 private:
  struct KeyHash {
    std::size_t operator()(const std::pair<int, std::uint64_t>& k) const {
      return std::hash<std::uint64_t>()(
          (static_cast<std::uint64_t>(k.first) << 52) ^ k.second);
    }
  };

  const std::vector<double>& refine(int level, std::uint64_t cell) const;

  const EnergyModel* model_;
  DiscreteFunction base_;
  SolveOptions opt_;
  int B_ = 0;
  // level-1 interpolation stencil shared by every cell
  mutable std::unordered_map<std::pair<int, std::uint64_t>, std::vector<double>,
                             KeyHash>
      cache_;
};

}  // namespace fractalp
