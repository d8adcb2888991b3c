#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fractalp/rng.hpp"
#include "fractalp/word.hpp"

namespace fractalp {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline double dist2(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// planar affine contraction  x -> A x + t
struct Affine2 {
  double a = 0.5, b = 0.0, tx = 0.0;
  double c = 0.0, d = 0.5, ty = 0.0;
  Vec2 apply(const Vec2& v) const {
    return {a * v.x + b * v.y + tx, c * v.x + d * v.y + ty};
  }
};

// F_i(q) and F_j(q') are the same point of the fractal
struct Gluing {
  int i = 0, q = 0;
  int j = 0, qp = 0;
};

// Post-critically finite self-similar structure with a finite boundary V_0.
// Each boundary vertex must be the fixed point of exactly one contraction
// (declared via fixed_letter); that covers the gasket-type structures this
// lab targets and is what makes the level-recursive vertex identification
// below exact.
class PcfStructure {
 public:
  PcfStructure(int alphabet, std::vector<std::string> boundary_labels,
               std::vector<int> fixed_letter, std::vector<Gluing> gluings,
               std::optional<std::vector<Affine2>> maps = std::nullopt,
               std::vector<int> contraction_levels = {},
               std::string name = "custom");

  static PcfStructure sierpinski_gasket();

  int alphabet_size() const { return N_; }
  int boundary_size() const { return B_; }
  const std::string& name() const { return name_; }
  const std::vector<std::string>& boundary_labels() const { return labels_; }
  int fixed_letter(int q) const { return fixed_[static_cast<std::size_t>(q)]; }
  const std::vector<Gluing>& gluings() const { return gluings_; }
  bool has_geometry() const { return maps_.has_value(); }
  const std::vector<Affine2>& maps() const { return *maps_; }
  int contraction_level(int letter) const {
    return levels_[static_cast<std::size_t>(letter)];
  }
  const std::vector<int>& contraction_levels() const { return levels_; }

  // boundary vertex coordinates (fixed points of their letters)
  Vec2 boundary_coord(int q) const;
  // F_w applied to a point, letters applied outermost-first
  Vec2 map_point(const Word& w, const Vec2& v) const;
  Vec2 map_point(const Letter* w, int len, const Vec2& v) const;
  // geometric contraction ratio r_* (per unit contraction level); similitude
  // ratio of the maps, validated to be shared across letters up to levels
  double r_star() const { return r_star_; }
  double diameter() const { return diameter_; }

 private:
  void validate() const;

  int N_;
  int B_;
  std::string name_;
  std::vector<std::string> labels_;
  std::vector<int> fixed_;
  std::vector<Gluing> gluings_;
  std::optional<std::vector<Affine2>> maps_;
  std::vector<int> levels_;
  double r_star_ = 0.5;
  double diameter_ = 1.0;
};

// Identified vertex set V_n = union of F_w(V_0) over |w| = n.
//
// Construction walks levels upward: V_k is N glued copies of V_{k-1}, glued
// along the images of the boundary vertices named by the gluing relation.
// Ids are stable across levels: the vertex set of level k-1 embeds into level
// k preserving ids (in particular boundary vertex q has id q at every level),
// and new vertices get fresh ids in lexicographic (cell, corner) order.
class VertexTable {
 public:
  static VertexTable build(const PcfStructure& st, int level);

  int level() const { return level_; }
  int vertex_count() const { return vcount_; }
  std::uint64_t cells() const { return cells_; }
  int boundary_size() const { return B_; }

  int id(std::uint64_t cell, int corner) const {
    return ids_[cell * static_cast<std::uint64_t>(B_) +
                static_cast<std::uint64_t>(corner)];
  }
  int id(const Word& w, int corner) const;

  // lexicographically smallest (cell, corner) pair mapping to this id
  std::pair<std::uint64_t, int> representative(int id) const {
    return reps_[static_cast<std::size_t>(id)];
  }

  bool has_coords() const { return !coords_.empty(); }
  const Vec2& coord(int id) const { return coords_[static_cast<std::size_t>(id)]; }

  // ids of all corners of every cell touching the given vertex
  const std::vector<std::pair<std::uint64_t, int>>& pairs_of(int id) const {
    return pairs_of_[static_cast<std::size_t>(id)];
  }

 private:
  int level_ = 0;
  int vcount_ = 0;
  int B_ = 0;
  int N_ = 0;
  std::uint64_t cells_ = 1;
  std::vector<int> ids_;                                   // cell*B + corner -> id
  std::vector<std::pair<std::uint64_t, int>> reps_;        // id -> canonical pair
  std::vector<std::vector<std::pair<std::uint64_t, int>>> pairs_of_;
  std::vector<Vec2> coords_;
};

// cell graph (T_n, E_n^*): cells adjacent iff they share an identified vertex
struct CellGraph {
  int level = 0;
  std::uint64_t cell_count = 1;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;

  std::vector<std::vector<std::uint64_t>> adjacency() const;
};

CellGraph cell_adjacency(const PcfStructure& st, const VertexTable& vt);

// m = sum_i theta_i (F_i)_* m
class SelfSimilarMeasure {
 public:
  explicit SelfSimilarMeasure(std::vector<double> weights);
  static SelfSimilarMeasure uniform(int alphabet);

  double weight(int letter) const { return theta_[static_cast<std::size_t>(letter)]; }
  const std::vector<double>& weights() const { return theta_; }

  double mass(const Word& w) const;
  double mass(const Letter* w, int len) const;
  double mass(std::uint64_t cell, int alphabet, int level) const;

 private:
  std::vector<double> theta_;
};

// Monte Carlo carrier for m: fixed-depth addresses, one per sample
struct SampleCloud {
  std::uint64_t seed = 0;
  int depth = 0;
  long count = 0;
  std::vector<Letter> letters;  // count*depth, row-major
  std::vector<Vec2> coords;     // optional, one per sample

  const Letter* address(long i) const {
    return letters.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(depth);
  }
};

SampleCloud sample_measure(const PcfStructure& st, const SelfSimilarMeasure& m,
                           long count, int depth, std::uint64_t seed);

// Scale partition: minimal words w with rho_w^{-1/(p-1)} <= s (whole-space
// word for s = 1).  Every infinite address has exactly one prefix in the set.
std::vector<Word> partition_scale(const PcfStructure& st, double p,
                                  const std::vector<double>& rho, double s);

}  // namespace fractalp
