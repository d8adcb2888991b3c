#include "fractalp/pgraph.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace fractalp {

double graph_energy(const PGraph& g, double p, const std::vector<double>& u) {
  double e = 0.0;
  for (std::size_t i = 0; i < g.edge_count(); ++i) {
    const double d = u[static_cast<std::size_t>(g.ea[i])] -
                     u[static_cast<std::size_t>(g.eb[i])];
    e += g.w[i] * std::pow(std::abs(d), p);
  }
  return e;
}

double graph_energy_two(const PGraph& g, double p, const std::vector<double>& u,
                        const std::vector<double>& v) {
  double e = 0.0;
  for (std::size_t i = 0; i < g.edge_count(); ++i) {
    const std::size_t a = static_cast<std::size_t>(g.ea[i]);
    const std::size_t b = static_cast<std::size_t>(g.eb[i]);
    e += g.w[i] * signed_power(u[a] - u[b], p) * (v[a] - v[b]);
  }
  return e;
}

namespace {

// smoothed edge potential (t^2 + eps^2)^{p/2} and its first two derivatives
struct EdgeCalculus {
  double p;
  double eps2;
  double value(double t) const { return std::pow(t * t + eps2, p / 2.0); }
  double d1(double t) const {
    return p * t * std::pow(t * t + eps2, p / 2.0 - 1.0);
  }
  double d2(double t) const {
    const double s = t * t + eps2;
    return p * std::pow(s, p / 2.0 - 2.0) * ((p - 1.0) * t * t + eps2);
  }
};

double smoothed_objective(const PGraph& g, const EdgeCalculus& ec,
                          const std::vector<double>& u) {
  double e = 0.0;
  for (std::size_t i = 0; i < g.edge_count(); ++i)
    e += g.w[i] * ec.value(u[static_cast<std::size_t>(g.ea[i])] -
                           u[static_cast<std::size_t>(g.eb[i])]);
  return e;
}

}  // namespace

SolveResult minimize_p_energy(const PGraph& g, double p,
                              const std::vector<char>& fixed,
                              const std::vector<double>& boundary,
                              const SolveOptions& opt) {
  if (p <= 1.0) throw std::invalid_argument("p must exceed 1");
  if (static_cast<int>(fixed.size()) != g.n ||
      static_cast<int>(boundary.size()) != g.n)
    throw std::invalid_argument("fixed/boundary size must match the vertex count");

  // compact indexing of the free vertices
  std::vector<int> free_of(static_cast<std::size_t>(g.n), -1);
  std::vector<int> vert_of;
  for (int v = 0; v < g.n; ++v)
    if (!fixed[static_cast<std::size_t>(v)]) {
      free_of[static_cast<std::size_t>(v)] = static_cast<int>(vert_of.size());
      vert_of.push_back(v);
    }
  const int nf = static_cast<int>(vert_of.size());

  SolveResult res;
  res.u = boundary;
  for (int v = 0; v < g.n; ++v)
    if (fixed[static_cast<std::size_t>(v)])
      res.u[static_cast<std::size_t>(v)] = boundary[static_cast<std::size_t>(v)];

  // initial guess: mean of the pinned values
  double mean = 0.0;
  int pinned = 0;
  for (int v = 0; v < g.n; ++v)
    if (fixed[static_cast<std::size_t>(v)]) {
      mean += boundary[static_cast<std::size_t>(v)];
      ++pinned;
    }
  mean = pinned > 0 ? mean / pinned : 0.0;
  for (int v : vert_of) res.u[static_cast<std::size_t>(v)] = mean;

  if (nf == 0) {
    res.energy = graph_energy(g, p, res.u);
    res.converged = true;
    return res;
  }

  // equal pinned values extend to the exact constant (unique minimizer);
  // bypassing the solve keeps the zero energy exact in floating point
  bool all_equal = pinned > 0;
  double first = 0.0;
  bool seen = false;
  for (int v = 0; v < g.n && all_equal; ++v)
    if (fixed[static_cast<std::size_t>(v)]) {
      if (!seen) {
        first = boundary[static_cast<std::size_t>(v)];
        seen = true;
      } else if (boundary[static_cast<std::size_t>(v)] != first) {
        all_equal = false;
      }
    }
  if (all_equal) {
    for (int v : vert_of) res.u[static_cast<std::size_t>(v)] = first;
    res.energy = 0.0;
    res.grad_norm = 0.0;
    res.converged = true;
    return res;
  }

  using Sp = Eigen::SparseMatrix<double>;
  using Trip = Eigen::Triplet<double>;

  // p = 2: one exact weighted-Laplacian solve
  if (p == 2.0) {
    std::vector<Trip> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
    for (std::size_t i = 0; i < g.edge_count(); ++i) {
      const int a = g.ea[i], b = g.eb[i];
      const int fa = free_of[static_cast<std::size_t>(a)];
      const int fb = free_of[static_cast<std::size_t>(b)];
      const double w = g.w[i];
      if (fa >= 0) trips.emplace_back(fa, fa, w);
      if (fb >= 0) trips.emplace_back(fb, fb, w);
      if (fa >= 0 && fb >= 0) {
        trips.emplace_back(fa, fb, -w);
        trips.emplace_back(fb, fa, -w);
      } else if (fa >= 0) {
        rhs[fa] += w * res.u[static_cast<std::size_t>(b)];
      } else if (fb >= 0) {
        rhs[fb] += w * res.u[static_cast<std::size_t>(a)];
      }
    }
    Sp L(nf, nf);
    L.setFromTriplets(trips.begin(), trips.end());
    // isolated free components (no path to a pinned vertex) have a zero row;
    // a tiny diagonal shift pins them to the initial mean without touching
    // the well-posed part beyond roundoff
    for (int i = 0; i < nf; ++i)
      if (L.coeff(i, i) == 0.0) {
        L.coeffRef(i, i) = 1.0;
        rhs[i] = mean;
      }
    Eigen::SimplicialLLT<Sp> llt(L);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("quadratic energy solve failed");
    const Eigen::VectorXd x = llt.solve(rhs);
    for (int i = 0; i < nf; ++i)
      res.u[static_cast<std::size_t>(vert_of[static_cast<std::size_t>(i)])] = x[i];
    res.energy = graph_energy(g, p, res.u);
    res.iterations = 1;
    // report the true stationarity defect
    double gn = 0.0;
    std::vector<double> grad(static_cast<std::size_t>(nf), 0.0);
    for (std::size_t i = 0; i < g.edge_count(); ++i) {
      const double d = res.u[static_cast<std::size_t>(g.ea[i])] -
                       res.u[static_cast<std::size_t>(g.eb[i])];
      const int fa = free_of[static_cast<std::size_t>(g.ea[i])];
      const int fb = free_of[static_cast<std::size_t>(g.eb[i])];
      if (fa >= 0) grad[static_cast<std::size_t>(fa)] += 2.0 * g.w[i] * d;
      if (fb >= 0) grad[static_cast<std::size_t>(fb)] -= 2.0 * g.w[i] * d;
    }
    for (double gv : grad) gn = std::max(gn, std::abs(gv));
    res.grad_norm = gn;
    res.converged = true;
    return res;
  }

  // smoothed Newton with Levenberg fallback and decade continuation on eps
  std::vector<double> eps_stages;
  for (double e = opt.eps_start; e > opt.eps_end * 1.0000001; e *= 0.1)
    eps_stages.push_back(e);
  eps_stages.push_back(opt.eps_end);

  std::vector<double> grad(static_cast<std::size_t>(nf));
  bool all_converged = true;

  for (double eps : eps_stages) {
    const EdgeCalculus ec{p, eps * eps};
    bool stage_done = false;
    int flat_steps = 0;
    long last_improve = 0;
    double best_gn = std::numeric_limits<double>::infinity();
    for (long it = 0; it < opt.max_iter; ++it) {
      // gradient and Hessian of the smoothed objective on the free block
      std::fill(grad.begin(), grad.end(), 0.0);
      std::vector<Trip> trips;
      for (std::size_t i = 0; i < g.edge_count(); ++i) {
        const int a = g.ea[i], b = g.eb[i];
        const double d = res.u[static_cast<std::size_t>(a)] -
                         res.u[static_cast<std::size_t>(b)];
        const double g1 = g.w[i] * ec.d1(d);
        const double h = g.w[i] * ec.d2(d);
        const int fa = free_of[static_cast<std::size_t>(a)];
        const int fb = free_of[static_cast<std::size_t>(b)];
        if (fa >= 0) {
          grad[static_cast<std::size_t>(fa)] += g1;
          trips.emplace_back(fa, fa, h);
        }
        if (fb >= 0) {
          grad[static_cast<std::size_t>(fb)] -= g1;
          trips.emplace_back(fb, fb, h);
        }
        if (fa >= 0 && fb >= 0) {
          trips.emplace_back(fa, fb, -h);
          trips.emplace_back(fb, fa, -h);
        }
      }

      const double obj = smoothed_objective(g, ec, res.u);
      double gn = 0.0;
      for (double gv : grad) gn = std::max(gn, std::abs(gv));
      res.grad_norm = gn;
      if (gn < opt.grad_tol * (1.0 + std::abs(obj))) {
        stage_done = true;
        break;
      }
      // no meaningful progress in a long while: the re-test below decides
      if (gn < 0.5 * best_gn) {
        best_gn = gn;
        last_improve = it;
      }
      if (it - last_improve > 50) break;

      Sp H(nf, nf);
      H.setFromTriplets(trips.begin(), trips.end());
      Eigen::VectorXd gvec(nf);
      for (int i = 0; i < nf; ++i) gvec[i] = grad[static_cast<std::size_t>(i)];

      // Newton direction; on factorization trouble, add Levenberg shifts
      Eigen::VectorXd dir;
      double shift = 0.0;
      double diag_scale = 0.0;
      for (int i = 0; i < nf; ++i) diag_scale = std::max(diag_scale, H.coeff(i, i));
      if (diag_scale <= 0.0) diag_scale = 1.0;
      for (int attempt = 0; attempt < 40; ++attempt) {
        Sp Hs = H;
        if (shift > 0.0)
          for (int i = 0; i < nf; ++i) Hs.coeffRef(i, i) += shift;
        Eigen::SimplicialLLT<Sp> llt(Hs);
        if (llt.info() == Eigen::Success) {
          dir = llt.solve(-gvec);
          if (llt.info() == Eigen::Success) break;
        }
        shift = shift == 0.0 ? 1e-12 * diag_scale : shift * 10.0;
      }
      if (dir.size() == 0)
        throw std::runtime_error("energy Hessian factorization failed");

      const double slope = gvec.dot(dir);

      // once the predicted decrease sinks below the objective's double
      // resolution the line search cannot certify anything; near the minimum
      // the full Newton step is a contraction, so take it unguarded (a few
      // times at most -- the gradient test above ends the stage)
      if (-slope <= 8.0 * std::numeric_limits<double>::epsilon() *
                        (1.0 + std::abs(obj)) &&
          flat_steps < 8) {
        ++flat_steps;
        ++res.iterations;
        for (int i = 0; i < nf; ++i)
          res.u[static_cast<std::size_t>(vert_of[static_cast<std::size_t>(i)])] +=
              dir[i];
        continue;
      }

      // backtracking line search (Armijo)
      double t = 1.0;
      std::vector<double> trial = res.u;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        for (int i = 0; i < nf; ++i)
          trial[static_cast<std::size_t>(vert_of[static_cast<std::size_t>(i)])] =
              res.u[static_cast<std::size_t>(vert_of[static_cast<std::size_t>(i)])] +
              t * dir[i];
        if (smoothed_objective(g, ec, trial) <= obj + 1e-4 * t * slope) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      ++res.iterations;
      if (!accepted) break;  // numerically flat; the gradient check decides
      for (int i = 0; i < nf; ++i)
        res.u[static_cast<std::size_t>(vert_of[static_cast<std::size_t>(i)])] +=
            t * dir[i];
    }
    if (!stage_done) {
      // re-test the tolerance after the iteration cap
      const EdgeCalculus ec2{p, eps * eps};
      const double obj = smoothed_objective(g, ec2, res.u);
      stage_done = res.grad_norm < opt.grad_tol * (1.0 + std::abs(obj));
    }
    if (opt.verbose)
      std::fprintf(stderr, "  [stage eps=%.1e] done=%d iters=%ld gn=%.3e\n", eps,
                   static_cast<int>(stage_done), res.iterations, res.grad_norm);
    all_converged = all_converged && stage_done;
  }

  res.energy = graph_energy(g, p, res.u);
  res.converged = all_converged;
  return res;
}

}  // namespace fractalp
