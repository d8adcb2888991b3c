#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace fractalp {

// sgn(t) |t|^(p-1)
inline double signed_power(double t, double p) {
  if (t == 0.0) return 0.0;
  const double m = std::pow(std::abs(t), p - 1.0);
  return t > 0.0 ? m : -m;
}

// finite weighted graph carrying  E(u) = sum_e w_e |u(a_e) - u(b_e)|^p
struct PGraph {
  int n = 0;  // vertex count
  std::vector<int> ea, eb;
  std::vector<double> w;

  void add_edge(int a, int b, double weight) {
    ea.push_back(a);
    eb.push_back(b);
    w.push_back(weight);
  }
  std::size_t edge_count() const { return w.size(); }
};

double graph_energy(const PGraph& g, double p, const std::vector<double>& u);

// one-sided derivative form  E(u; v) = (1/p) d/dt E(u + t v) |_{t=0}
//                                    = sum_e w_e sgn(du)|du|^{p-1} dv
double graph_energy_two(const PGraph& g, double p, const std::vector<double>& u,
                        const std::vector<double>& v);

struct SolveOptions {
  double eps_start = 1e-2;   // smoothing half-width, first continuation stage
  double eps_end = 1e-10;    // last stage (decade steps in between)
  double grad_tol = 1e-12;   // stop at ||grad||_inf < grad_tol * (1 + |obj|)
  long max_iter = 100000;    // per continuation stage
  bool verbose = false;
};

struct SolveResult {
  std::vector<double> u;
  double energy = 0.0;        // unsmoothed p-energy of the minimizer
  double grad_norm = 0.0;     // final smoothed-gradient sup norm (free vertices)
  long iterations = 0;        // total Newton/descent steps across stages
  bool converged = false;
};

// Minimize E over functions agreeing with `boundary` where `fixed` is set.
// Strictly convex once smoothed: |t| ~ sqrt(t^2 + eps^2) keeps the edge
// Hessian positive for every p > 1, so damped Newton (Armijo backtracking,
// Levenberg shifts on factorization trouble) works across the whole range,
// with eps driven to eps_end by decade continuation.  p = 2 short-circuits
// to a single weighted-Laplacian solve.
SolveResult minimize_p_energy(const PGraph& g, double p,
                              const std::vector<char>& fixed,
                              const std::vector<double>& boundary,
                              const SolveOptions& opt = {});

}  // namespace fractalp
