#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "fractalp/structure.hpp"

using namespace fractalp;

namespace {

// ---- independent oracle: identify vertices by geometric coincidence --------
//
// Enumerate every (cell, corner) slot at a level, place it with the affine
// maps, and union slots whose coordinates coincide.  This never looks at the
// gluing relation, so it cross-checks the recursive identification.
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

struct SlotOracle {
  int classes = 0;
  std::vector<int> class_of;  // per slot (cell*B + corner)
  std::vector<Vec2> coords;   // per slot
};

SlotOracle geometric_identification(const PcfStructure& st, int level) {
  const int B = st.boundary_size();
  const int N = st.alphabet_size();
  std::uint64_t cells = 1;
  for (int i = 0; i < level; ++i) cells *= static_cast<std::uint64_t>(N);

  SlotOracle out;
  const std::size_t slots = static_cast<std::size_t>(cells) * B;
  out.coords.resize(slots);
  for (std::uint64_t c = 0; c < cells; ++c) {
    const Word w = word_of_index(c, N, level);
    for (int q = 0; q < B; ++q)
      out.coords[c * B + static_cast<std::uint64_t>(q)] =
          st.map_point(w, st.boundary_coord(q));
  }

  UnionFind uf(static_cast<int>(slots));
  const double tol = 1e-9 * st.diameter();
  for (std::size_t a = 0; a < slots; ++a)
    for (std::size_t b = a + 1; b < slots; ++b)
      if (dist2(out.coords[a], out.coords[b]) < tol) uf.unite(static_cast<int>(a), static_cast<int>(b));

  std::map<int, int> remap;
  out.class_of.resize(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    const int root = uf.find(static_cast<int>(s));
    auto it = remap.find(root);
    if (it == remap.end()) it = remap.emplace(root, static_cast<int>(remap.size())).first;
    out.class_of[s] = it->second;
  }
  out.classes = static_cast<int>(remap.size());
  return out;
}

// cell adjacency from the oracle: cells sharing an identified slot class
std::set<std::pair<std::uint64_t, std::uint64_t>> oracle_adjacency(
    const PcfStructure& st, int level, const SlotOracle& o) {
  const int B = st.boundary_size();
  std::map<int, std::set<std::uint64_t>> cells_of_class;
  for (std::size_t s = 0; s < o.class_of.size(); ++s)
    cells_of_class[o.class_of[s]].insert(static_cast<std::uint64_t>(s) / B);
  std::set<std::pair<std::uint64_t, std::uint64_t>> edges;
  for (const auto& [cls, cs] : cells_of_class)
    for (auto a = cs.begin(); a != cs.end(); ++a)
      for (auto b = std::next(a); b != cs.end(); ++b) edges.insert({*a, *b});
  return edges;
}

}  // namespace

TEST_CASE("gasket preset basics") {
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  CHECK(st.alphabet_size() == 3);
  CHECK(st.boundary_size() == 3);
  CHECK(st.has_geometry());
  CHECK(st.r_star() == doctest::Approx(0.5));
  CHECK(st.diameter() == doctest::Approx(1.0));
  // boundary vertices are the fixed points of their letters
  for (int q = 0; q < 3; ++q) {
    const Vec2 fp = st.boundary_coord(q);
    Word w;
    w.push_back(static_cast<Letter>(st.fixed_letter(q)));
    const Vec2 im = st.map_point(w, fp);
    CHECK(dist2(fp, im) < 1e-12);
  }
}

TEST_CASE("vertex counts match the geometric oracle") {
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  // frozen expected counts for levels 0..4: 3, 6, 15, 42, 123
  const int expected[] = {3, 6, 15, 42, 123};
  for (int n = 0; n <= 4; ++n) {
    const VertexTable vt = VertexTable::build(st, n);
    CHECK(vt.vertex_count() == expected[n]);
    const SlotOracle o = geometric_identification(st, n);
    CHECK(o.classes == expected[n]);
    // slot-by-slot agreement of the partition (up to relabeling)
    std::map<int, int> cls_to_id;
    bool consistent = true;
    for (std::uint64_t c = 0; c < vt.cells(); ++c)
      for (int q = 0; q < 3; ++q) {
        const int cls = o.class_of[c * 3 + static_cast<std::uint64_t>(q)];
        const int id = vt.id(c, q);
        auto it = cls_to_id.find(cls);
        if (it == cls_to_id.end())
          cls_to_id.emplace(cls, id);
        else if (it->second != id)
          consistent = false;
      }
    CHECK(consistent);
    CHECK(static_cast<int>(cls_to_id.size()) == expected[n]);
  }
}

TEST_CASE("ids are stable across levels (embedding preserves ids)") {
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  const VertexTable v2 = VertexTable::build(st, 2);
  const VertexTable v3 = VertexTable::build(st, 3);
  // boundary ids stay 0..B-1: boundary vertex q sits in the cell addressed by
  // its fixed letter repeated
  for (int q = 0; q < 3; ++q) {
    const auto f = static_cast<std::uint64_t>(st.fixed_letter(q));
    CHECK(v2.id(f * 3 + f, q) == q);
    CHECK(v3.id((f * 3 + f) * 3 + f, q) == q);
  }
  // every level-2 vertex id reappears at level 3 at the embedded slot
  for (int id = 0; id < v2.vertex_count(); ++id) {
    const auto [cell, corner] = v2.representative(id);
    const std::uint64_t child = cell * 3 + static_cast<std::uint64_t>(st.fixed_letter(corner));
    CHECK(v3.id(child, corner) == id);
  }
  // fresh level-3 ids start right after the level-2 ids
  CHECK(v3.vertex_count() == 42);
  CHECK(v2.vertex_count() == 15);
}

TEST_CASE("coordinates agree across all representatives") {
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  const VertexTable vt = VertexTable::build(st, 3);
  REQUIRE(vt.has_coords());
  for (int id = 0; id < vt.vertex_count(); ++id) {
    for (const auto& [cell, corner] : vt.pairs_of(id)) {
      const Word w = word_of_index(cell, 3, 3);
      const Vec2 pt = st.map_point(w, st.boundary_coord(corner));
      CHECK(dist2(pt, vt.coord(id)) < 1e-9);
    }
  }
}

TEST_CASE("cell adjacency matches the oracle: 3 edges at level 1, 12 at level 2") {
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  for (int n : {1, 2}) {
    const VertexTable vt = VertexTable::build(st, n);
    const CellGraph cg = cell_adjacency(st, vt);
    const SlotOracle o = geometric_identification(st, n);
    const auto expect = oracle_adjacency(st, n, o);
    CHECK(cg.edges.size() == expect.size());
    for (const auto& e : cg.edges) CHECK(expect.count(e) == 1);
    if (n == 1) CHECK(cg.edges.size() == 3);
    if (n == 2) CHECK(cg.edges.size() == 12);
  }
}

TEST_CASE("degenerate gluings are rejected") {
  // gluing that would identify two boundary vertices (fixed-point corners on
  // both sides) must be refused at construction
  const PcfStructure sg = PcfStructure::sierpinski_gasket();
  std::vector<Gluing> bad = sg.gluings();
  bad.push_back({0, 0, 1, 1});  // F_0(q0) = q0 and F_1(q1) = q1 would merge V_0
  CHECK_THROWS_AS(PcfStructure(3, {"q0", "q1", "q2"}, {0, 1, 2}, bad,
                               std::vector<Affine2>(sg.maps()), {1, 1, 1}),
                  std::invalid_argument);
}

TEST_CASE("self-similar measure masses multiply along words") {
  SelfSimilarMeasure m({0.5, 0.3, 0.2});
  const Word w = Word::parse("021", 3);
  CHECK(m.mass(w) == doctest::Approx(0.5 * 0.2 * 0.3));
  // uniform measure of any level-n cell is N^-n
  SelfSimilarMeasure u = SelfSimilarMeasure::uniform(3);
  CHECK(u.mass(Word::parse("01", 3)) == doctest::Approx(1.0 / 9.0));
  // masses at one level sum to 1
  double total = 0.0;
  for (std::uint64_t c = 0; c < 27; ++c) total += m.mass(c, 3, 3);
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("sampling is deterministic and measure-consistent") {
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  SelfSimilarMeasure m({0.6, 0.25, 0.15});
  const SampleCloud a = sample_measure(st, m, 5000, 6, 99);
  const SampleCloud b = sample_measure(st, m, 5000, 6, 99);
  CHECK(a.letters == b.letters);
  // prefix stability: the first samples do not depend on the total count
  const SampleCloud c = sample_measure(st, m, 100, 6, 99);
  for (int i = 0; i < 100 * 6; ++i) CHECK(a.letters[i] == c.letters[i]);
  // first-letter frequencies approximate the weights
  std::vector<double> freq(3, 0.0);
  for (long i = 0; i < a.count; ++i) freq[a.address(i)[0]] += 1.0 / a.count;
  CHECK(std::abs(freq[0] - 0.6) < 0.03);
  CHECK(std::abs(freq[1] - 0.25) < 0.03);
  CHECK(std::abs(freq[2] - 0.15) < 0.03);
}

TEST_CASE("scale partition covers addresses exactly once") {
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  const std::vector<double> rho(3, 5.0 / 3.0);
  const double p = 2.0;
  for (double s : {1.0, 0.7, 0.3, 0.1}) {
    const auto part = partition_scale(st, p, rho, s);
    REQUIRE(!part.empty());
    // each word satisfies the scale bound and its parent does not
    for (const Word& w : part) {
      double rw = 1.0;
      for (std::size_t i = 0; i < w.size(); ++i) rw *= rho[w[i]];
      const double val = std::pow(rw, -1.0 / (p - 1.0));
      CHECK(val <= s + 1e-12);
      if (!w.empty()) {
        const double parent = std::pow(rw / rho[w[w.size() - 1]], -1.0 / (p - 1.0));
        CHECK(parent > s);
      }
    }
    // unique-prefix covering: deep cells have exactly one covering word
    const int deep = 6;
    std::uint64_t covered = 0;
    for (std::uint64_t c = 0; c < 729; ++c) {
      const Word w = word_of_index(c, 3, deep);
      int hits = 0;
      for (const Word& v : part) {
        if (v.size() > static_cast<std::size_t>(deep)) continue;
        bool prefix = true;
        for (std::size_t i = 0; i < v.size(); ++i)
          if (v[i] != w[i]) { prefix = false; break; }
        hits += prefix;
      }
      CHECK(hits == 1);
      covered += (hits == 1);
    }
    CHECK(covered == 729);
  }
}
