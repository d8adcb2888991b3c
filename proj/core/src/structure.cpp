#include "fractalp/structure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace fractalp {

namespace {

// minimal union-find over dense int ids (path halving, union by index so the
// surviving root is deterministic)
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[static_cast<std::size_t>(b)] = a;  // smaller id wins
  }
};

}  // namespace

PcfStructure::PcfStructure(int alphabet, std::vector<std::string> boundary_labels,
                           std::vector<int> fixed_letter,
                           std::vector<Gluing> gluings,
                           std::optional<std::vector<Affine2>> maps,
                           std::vector<int> contraction_levels, std::string name)
    : N_(alphabet),
      B_(static_cast<int>(boundary_labels.size())),
      name_(std::move(name)),
      labels_(std::move(boundary_labels)),
      fixed_(std::move(fixed_letter)),
      gluings_(std::move(gluings)),
      maps_(std::move(maps)),
      levels_(std::move(contraction_levels)) {
  if (levels_.empty()) levels_.assign(static_cast<std::size_t>(N_), 1);
  validate();

  if (maps_) {
    // similitude ratio of each map from its first column; cross-checked
    // against the declared contraction levels
    const double r0 = std::hypot((*maps_)[0].a, (*maps_)[0].c);
    r_star_ = std::pow(r0, 1.0 / levels_[0]);
    for (int i = 0; i < N_; ++i) {
      const Affine2& f = (*maps_)[static_cast<std::size_t>(i)];
      const double col1 = std::hypot(f.a, f.c);
      const double col2 = std::hypot(f.b, f.d);
      if (std::abs(col1 - col2) > 1e-12 * (col1 + col2))
        throw std::invalid_argument("contraction is not a similitude");
      const double expected = std::pow(r_star_, levels_[static_cast<std::size_t>(i)]);
      if (std::abs(col1 - expected) > 1e-9)
        throw std::invalid_argument(
            "contraction ratios inconsistent with the declared levels");
    }
    diameter_ = 0.0;
    for (int q = 0; q < B_; ++q)
      for (int r = q + 1; r < B_; ++r)
        diameter_ =
            std::max(diameter_, std::sqrt(dist2(boundary_coord(q), boundary_coord(r))));
  }
}

void PcfStructure::validate() const {
  if (N_ < 2) throw std::invalid_argument("alphabet must have at least 2 letters");
  if (B_ < 2) throw std::invalid_argument("boundary must have at least 2 vertices");
  if (B_ > N_)
    throw std::invalid_argument("more boundary vertices than contractions");
  if (static_cast<int>(fixed_.size()) != B_)
    throw std::invalid_argument("fixed_letter must name one letter per boundary vertex");
  std::set<int> used;
  for (int f : fixed_) {
    if (f < 0 || f >= N_) throw std::invalid_argument("fixed letter out of range");
    if (!used.insert(f).second)
      throw std::invalid_argument("two boundary vertices share a fixed letter");
  }
  for (const Gluing& g : gluings_) {
    if (g.i < 0 || g.i >= N_ || g.j < 0 || g.j >= N_)
      throw std::invalid_argument("gluing letter out of range");
    if (g.q < 0 || g.q >= B_ || g.qp < 0 || g.qp >= B_)
      throw std::invalid_argument("gluing corner out of range");
    if (g.i == g.j)
      throw std::invalid_argument("gluing must join two distinct cells");
    // F_i(q) with fixed(q) = i is the boundary point q itself; a gluing that
    // pins two such points would collapse the boundary
    if (fixed_[static_cast<std::size_t>(g.q)] == g.i &&
        fixed_[static_cast<std::size_t>(g.qp)] == g.j)
      throw std::invalid_argument("gluing identifies two boundary vertices");
  }
  if (maps_ && static_cast<int>(maps_->size()) != N_)
    throw std::invalid_argument("need one contraction per letter");
  if (static_cast<int>(levels_.size()) != N_)
    throw std::invalid_argument("need one contraction level per letter");
  for (int l : levels_)
    if (l < 1) throw std::invalid_argument("contraction levels must be >= 1");
  if (maps_) {
    for (const Gluing& g : gluings_) {
      const Vec2 a = (*maps_)[static_cast<std::size_t>(g.i)].apply(boundary_coord(g.q));
      const Vec2 b = (*maps_)[static_cast<std::size_t>(g.j)].apply(boundary_coord(g.qp));
      if (dist2(a, b) > 1e-9)
        throw std::invalid_argument("gluing does not match the geometry");
    }
  }
}

PcfStructure PcfStructure::sierpinski_gasket() {
  const Vec2 q[3] = {{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}};
  std::vector<Affine2> maps;
  for (int i = 0; i < 3; ++i)
    maps.push_back({0.5, 0.0, q[i].x / 2, 0.0, 0.5, q[i].y / 2});
  return PcfStructure(3, {"q0", "q1", "q2"}, {0, 1, 2},
                      {{0, 1, 1, 0}, {0, 2, 2, 0}, {1, 2, 2, 1}},
                      std::move(maps), {1, 1, 1}, "sg");
}

Vec2 PcfStructure::boundary_coord(int q) const {
  if (!maps_) throw std::logic_error("structure has no geometry");
  const Affine2& f = (*maps_)[static_cast<std::size_t>(fixed_[static_cast<std::size_t>(q)])];
  // fixed point of x -> Ax + t: solve (I - A) x = t
  const double m00 = 1.0 - f.a, m01 = -f.b, m10 = -f.c, m11 = 1.0 - f.d;
  const double det = m00 * m11 - m01 * m10;
  return {(f.tx * m11 - f.ty * m01) / det, (f.ty * m00 - f.tx * m10) / det};
}

Vec2 PcfStructure::map_point(const Word& w, const Vec2& v) const {
  return map_point(w.letters().data(), static_cast<int>(w.size()), v);
}

Vec2 PcfStructure::map_point(const Letter* w, int len, const Vec2& v) const {
  if (!maps_) throw std::logic_error("structure has no geometry");
  Vec2 p = v;
  for (int i = len - 1; i >= 0; --i)
    p = (*maps_)[static_cast<std::size_t>(w[i])].apply(p);
  return p;
}

VertexTable VertexTable::build(const PcfStructure& st, int level) {
  const int N = st.alphabet_size();
  const int B = st.boundary_size();

  VertexTable t;
  t.level_ = 0;
  t.B_ = B;
  t.N_ = N;
  t.cells_ = 1;
  t.vcount_ = B;
  t.ids_.resize(static_cast<std::size_t>(B));
  for (int q = 0; q < B; ++q) {
    t.ids_[static_cast<std::size_t>(q)] = q;
    t.reps_.push_back({0, q});
    t.pairs_of_.push_back({{0, q}});
  }
  if (st.has_geometry()) {
    for (int q = 0; q < B; ++q) t.coords_.push_back(st.boundary_coord(q));
  }

  for (int k = 1; k <= level; ++k) {
    const VertexTable prev = std::move(t);
    const std::uint64_t pcells = prev.cells_;
    const int pv = prev.vcount_;

    t = VertexTable();
    t.level_ = k;
    t.B_ = B;
    t.N_ = N;
    t.cells_ = pcells * static_cast<std::uint64_t>(N);

    // provisional id of slot (cell, q): copy index * |V_{k-1}| + id within copy
    UnionFind uf(N * pv);
    for (const Gluing& g : st.gluings())
      uf.unite(g.i * pv + g.q, g.j * pv + g.qp);

    // old ids come first, claimed through the level-(k-1) -> level-k embedding
    std::vector<int> assigned(static_cast<std::size_t>(N) * static_cast<std::size_t>(pv), -1);
    for (int v = 0; v < pv; ++v) {
      const auto [pcell, q] = prev.representative(v);
      const std::uint64_t cell =
          pcell * static_cast<std::uint64_t>(N) +
          static_cast<std::uint64_t>(st.fixed_letter(q));
      const int copy = static_cast<int>(cell / pcells);
      const int within = prev.id(cell % pcells, q);
      const int root = uf.find(copy * pv + within);
      if (assigned[static_cast<std::size_t>(root)] >= 0)
        throw std::logic_error("gluing collapsed two distinct vertices");
      assigned[static_cast<std::size_t>(root)] = v;
    }

    t.ids_.resize(t.cells_ * static_cast<std::uint64_t>(B));
    int next_id = pv;
    for (std::uint64_t cell = 0; cell < t.cells_; ++cell) {
      const int copy = static_cast<int>(cell / pcells);
      const std::uint64_t sub = cell % pcells;
      for (int q = 0; q < B; ++q) {
        const int root = uf.find(copy * pv + prev.id(sub, q));
        if (assigned[static_cast<std::size_t>(root)] < 0)
          assigned[static_cast<std::size_t>(root)] = next_id++;
        t.ids_[cell * static_cast<std::uint64_t>(B) + static_cast<std::uint64_t>(q)] =
            assigned[static_cast<std::size_t>(root)];
      }
    }
    t.vcount_ = next_id;

    t.reps_.assign(static_cast<std::size_t>(t.vcount_), {~0ull, 0});
    t.pairs_of_.assign(static_cast<std::size_t>(t.vcount_), {});
    std::vector<char> seen(static_cast<std::size_t>(t.vcount_), 0);
    for (std::uint64_t cell = 0; cell < t.cells_; ++cell)
      for (int q = 0; q < B; ++q) {
        const int id = t.ids_[cell * static_cast<std::uint64_t>(B) +
                              static_cast<std::uint64_t>(q)];
        if (!seen[static_cast<std::size_t>(id)]) {
          seen[static_cast<std::size_t>(id)] = 1;
          t.reps_[static_cast<std::size_t>(id)] = {cell, q};
        }
        t.pairs_of_[static_cast<std::size_t>(id)].push_back({cell, q});
      }

    if (st.has_geometry()) {
      t.coords_.resize(static_cast<std::size_t>(t.vcount_));
      for (int v = 0; v < t.vcount_; ++v) {
        const auto [cell, q] = t.reps_[static_cast<std::size_t>(v)];
        const Word w = word_of_index(cell, N, k);
        t.coords_[static_cast<std::size_t>(v)] = st.map_point(w, st.boundary_coord(q));
      }
    }
  }

  return t;
}

int VertexTable::id(const Word& w, int corner) const {
  if (static_cast<int>(w.size()) != level_)
    throw std::invalid_argument("word length does not match the table level");
  return id(index_of_word(w, N_), corner);
}

std::vector<std::vector<std::uint64_t>> CellGraph::adjacency() const {
  std::vector<std::vector<std::uint64_t>> adj(cell_count);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

CellGraph cell_adjacency(const PcfStructure& st, const VertexTable& vt) {
  (void)st;
  CellGraph g;
  g.level = vt.level();
  g.cell_count = vt.cells();
  std::set<std::pair<std::uint64_t, std::uint64_t>> edges;
  for (int v = 0; v < vt.vertex_count(); ++v) {
    const auto& slots = vt.pairs_of(v);
    for (std::size_t a = 0; a < slots.size(); ++a)
      for (std::size_t b = a + 1; b < slots.size(); ++b) {
        const std::uint64_t ca = slots[a].first, cb = slots[b].first;
        if (ca != cb) edges.insert({std::min(ca, cb), std::max(ca, cb)});
      }
  }
  g.edges.assign(edges.begin(), edges.end());
  return g;
}

SelfSimilarMeasure::SelfSimilarMeasure(std::vector<double> weights)
    : theta_(std::move(weights)) {
  if (theta_.size() < 2) throw std::invalid_argument("need one weight per letter");
  double sum = 0.0;
  for (double w : theta_) {
    if (w <= 0.0) throw std::invalid_argument("measure weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("measure weights must sum to 1");
  for (double& w : theta_) w /= sum;  // tidy up rounding
}

SelfSimilarMeasure SelfSimilarMeasure::uniform(int alphabet) {
  return SelfSimilarMeasure(
      std::vector<double>(static_cast<std::size_t>(alphabet), 1.0 / alphabet));
}

double SelfSimilarMeasure::mass(const Word& w) const {
  return mass(w.letters().data(), static_cast<int>(w.size()));
}

double SelfSimilarMeasure::mass(const Letter* w, int len) const {
  double m = 1.0;
  for (int i = 0; i < len; ++i) m *= theta_[w[i]];
  return m;
}

double SelfSimilarMeasure::mass(std::uint64_t cell, int alphabet, int level) const {
  double m = 1.0;
  for (int i = 0; i < level; ++i) {
    m *= theta_[static_cast<std::size_t>(cell % static_cast<std::uint64_t>(alphabet))];
    cell /= static_cast<std::uint64_t>(alphabet);
  }
  return m;
}

SampleCloud sample_measure(const PcfStructure& st, const SelfSimilarMeasure& m,
                           long count, int depth, std::uint64_t seed) {
  if (static_cast<int>(m.weights().size()) != st.alphabet_size())
    throw std::invalid_argument("measure does not match the alphabet");
  SampleCloud cloud;
  cloud.seed = seed;
  cloud.depth = depth;
  cloud.count = count;
  cloud.letters.resize(static_cast<std::size_t>(count) * static_cast<std::size_t>(depth));

  // cumulative weights for inverse-CDF letter draws
  std::vector<double> cum(m.weights().size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cum.size(); ++i) {
    acc += m.weights()[i];
    cum[i] = acc;
  }
  cum.back() = 1.0 + 1e-16;

  for (long i = 0; i < count; ++i) {
    CounterRng rng(seed, "measure-cloud", static_cast<std::uint64_t>(i));
    for (int k = 0; k < depth; ++k) {
      const double u = rng.uniform();
      Letter l = 0;
      while (u >= cum[l]) ++l;
      cloud.letters[static_cast<std::size_t>(i) * static_cast<std::size_t>(depth) +
                    static_cast<std::size_t>(k)] = l;
    }
  }

  if (st.has_geometry()) {
    Vec2 centroid{0, 0};
    for (int q = 0; q < st.boundary_size(); ++q) {
      centroid.x += st.boundary_coord(q).x / st.boundary_size();
      centroid.y += st.boundary_coord(q).y / st.boundary_size();
    }
    cloud.coords.resize(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i)
      cloud.coords[static_cast<std::size_t>(i)] =
          st.map_point(cloud.address(i), depth, centroid);
  }
  return cloud;
}

std::vector<Word> partition_scale(const PcfStructure& st, double p,
                                  const std::vector<double>& rho, double s) {
  if (p <= 1.0) throw std::invalid_argument("p must exceed 1");
  if (s <= 0.0) throw std::invalid_argument("scale must be positive");
  if (static_cast<int>(rho.size()) != st.alphabet_size())
    throw std::invalid_argument("need one weight per letter");
  for (double r : rho)
    if (r <= 1.0)
      throw std::invalid_argument("weights must exceed 1 for scales to shrink");

  // rho_w^{-1/(p-1)} <= s  <=>  -log rho_w <= (p-1) log s
  const double target = (p - 1.0) * std::log(s);
  std::vector<Word> out;
  Word w;
  double neg_log = 0.0;  // -log rho_w
  // iterative DFS; descend until the scale condition first holds
  struct Frame {
    Letter next = 0;
  };
  std::vector<Frame> stack;
  auto admissible = [&]() { return neg_log <= target + 1e-15; };
  if (admissible()) return {w};
  stack.push_back({});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next >= st.alphabet_size()) {
      stack.pop_back();
      if (!w.empty()) {
        neg_log += std::log(rho[w[w.size() - 1]]);
        w.pop_back();
      }
      continue;
    }
    const Letter l = f.next++;
    w.push_back(l);
    neg_log -= std::log(rho[l]);
    if (admissible()) {
      out.push_back(w);
      neg_log += std::log(rho[l]);
      w.pop_back();
    } else {
      stack.push_back({});
    }
  }
  return out;
}

}  // namespace fractalp
