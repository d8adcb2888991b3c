#include "fractalp/extend.hpp"

#include <stdexcept>

namespace fractalp {

HarmonicInterpolator::HarmonicInterpolator(const EnergyModel& model,
                                           DiscreteFunction base,
                                           const SolveOptions& opt)
    : model_(&model), base_(std::move(base)), opt_(opt) {
  B_ = model.structure().boundary_size();
  if (base_.level < 0) throw std::invalid_argument("base level must be >= 0");
  if (static_cast<int>(base_.v.size()) !=
      model.table(base_.level).vertex_count())
    throw std::invalid_argument("base function size does not match its level");
}

const std::vector<double>& HarmonicInterpolator::refine(int level,
                                                        std::uint64_t cell) const {
  const auto key = std::make_pair(level, cell);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  if (level <= base_.level) {
    // coarse ids embed into the base table, so this is a direct read
    const VertexTable& vt = model_->table(level);
    std::vector<double> c(static_cast<std::size_t>(B_));
    for (int q = 0; q < B_; ++q)
      c[static_cast<std::size_t>(q)] =
          base_.v[static_cast<std::size_t>(vt.id(cell, q))];
    return cache_.emplace(key, std::move(c)).first->second;
  }

  const int N = model_->structure().alphabet_size();
  const std::vector<double>& parent =
      refine(level - 1, cell / static_cast<std::uint64_t>(N));

  // one constrained minimization on the level-1 graph fills all children
  const PGraph& g1 = model_->graph(1);
  const VertexTable& v1 = model_->table(1);
  std::vector<char> fixed(static_cast<std::size_t>(g1.n), 0);
  std::vector<double> bvals(static_cast<std::size_t>(g1.n), 0.0);
  for (int q = 0; q < B_; ++q) {
    fixed[static_cast<std::size_t>(q)] = 1;  // boundary ids are 0..B-1
    bvals[static_cast<std::size_t>(q)] = parent[static_cast<std::size_t>(q)];
  }
  const SolveResult r = minimize_p_energy(g1, model_->p(), fixed, bvals, opt_);

  const std::uint64_t base_child = (cell / static_cast<std::uint64_t>(N)) *
                                   static_cast<std::uint64_t>(N);
  for (int i = 0; i < N; ++i) {
    std::vector<double> c(static_cast<std::size_t>(B_));
    for (int q = 0; q < B_; ++q)
      c[static_cast<std::size_t>(q)] =
          r.u[static_cast<std::size_t>(v1.id(static_cast<std::uint64_t>(i), q))];
    cache_.emplace(
        std::make_pair(level, base_child + static_cast<std::uint64_t>(i)),
        std::move(c));
  }
  return cache_.at(key);
}

const std::vector<double>& HarmonicInterpolator::corners(const Letter* addr,
                                                         int len) const {
  const int N = model_->structure().alphabet_size();
  std::uint64_t idx = 0;
  for (int i = 0; i < len; ++i)
    idx = idx * static_cast<std::uint64_t>(N) + addr[i];
  return refine(len, idx);
}

double HarmonicInterpolator::value_at(const Letter* addr, int len) const {
  const std::vector<double>& c = corners(addr, len);
  double s = 0.0;
  for (double x : c) s += x;
  return s / static_cast<double>(B_);
}

}  // namespace fractalp
