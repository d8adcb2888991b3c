#include "fractalp/renorm.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace fractalp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// orthonormal basis of the mean-zero plane in R^3; E0 points along the
// reference direction
const std::array<double, 3> kE0 = {2.0 / std::sqrt(6.0), -1.0 / std::sqrt(6.0),
                                   -1.0 / std::sqrt(6.0)};
const std::array<double, 3> kF0 = {0.0, 1.0 / std::sqrt(2.0),
                                   -1.0 / std::sqrt(2.0)};

}  // namespace

CircleForm::CircleForm(double p, std::vector<double> log_values)
    : p_(p), logv_(std::move(log_values)) {
  if (!(p_ > 1.0)) throw std::invalid_argument("p must exceed 1");
  if (logv_.size() < 4)
    throw std::invalid_argument("circle grid needs at least 4 directions");
  for (double v : logv_)
    if (!std::isfinite(v))
      throw std::invalid_argument("circle form log values must be finite");
}

CircleForm CircleForm::from_graph(const BoundaryGraphForm& base, double p, int M) {
  if (base.B != 3)
    throw std::invalid_argument("circle representation needs a 3-point boundary");
  std::vector<double> logv(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) {
    const std::array<double, 3> d = direction(kTwoPi * j / M);
    const double e = base.energy(p, {d[0], d[1], d[2]});
    if (!(e > 0.0))
      throw std::invalid_argument(
          "base form vanishes on a non-constant direction");
    logv[static_cast<std::size_t>(j)] = std::log(e);
  }
  CircleForm c(p, std::move(logv));
  c.gen_ = base;
  return c;
}

std::array<double, 3> CircleForm::direction(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * kE0[0] + s * kF0[0], c * kE0[1] + s * kF0[1],
          c * kE0[2] + s * kF0[2]};
}

void CircleForm::polar(const std::vector<double>& u, double& r, double& theta) {
  // E0 and F0 are mean-zero, so projecting u already drops its mean part
  const double a = u[0] * kE0[0] + u[1] * kE0[1] + u[2] * kE0[2];
  const double b = u[0] * kF0[0] + u[1] * kF0[1] + u[2] * kF0[2];
  r = std::hypot(a, b);
  theta = r > 0.0 ? std::atan2(b, a) : 0.0;
}

double CircleForm::log_interp(double theta) const {
  const int M = grid_size();
  double t = theta / kTwoPi * M;
  t -= std::floor(t / M) * M;  // wrap into [0, M)
  int j = static_cast<int>(std::floor(t));
  if (j >= M) j = M - 1;
  const double s = t - j;
  const auto at = [&](int k) {
    return logv_[static_cast<std::size_t>(((k % M) + M) % M)];
  };
  const double f0 = at(j - 1), f1 = at(j), f2 = at(j + 1), f3 = at(j + 2);
  return 0.5 * (2.0 * f1 + (-f0 + f2) * s +
                (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) * s * s +
                (-f0 + 3.0 * f1 - 3.0 * f2 + f3) * s * s * s);
}

double CircleForm::at_angle(double theta) const { return std::exp(log_interp(theta)); }

double CircleForm::at_angle_log_deriv(double theta) const {
  const int M = grid_size();
  double t = theta / kTwoPi * M;
  t -= std::floor(t / M) * M;
  int j = static_cast<int>(std::floor(t));
  if (j >= M) j = M - 1;
  const double s = t - j;
  const auto at = [&](int k) {
    return logv_[static_cast<std::size_t>(((k % M) + M) % M)];
  };
  const double f0 = at(j - 1), f1 = at(j), f2 = at(j + 1), f3 = at(j + 2);
  const double ds = 0.5 * ((-f0 + f2) +
                           2.0 * (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) * s +
                           3.0 * (-f0 + 3.0 * f1 - 3.0 * f2 + f3) * s * s);
  return ds * M / kTwoPi;
}

double CircleForm::energy(const std::vector<double>& u) const {
  if (u.size() != 3)
    throw std::invalid_argument("circle forms take 3-point boundary data");
  if (gen_) return gen_->energy(p_, u);
  double r, theta;
  polar(u, r, theta);
  if (r == 0.0) return 0.0;
  return std::pow(r, p_) * at_angle(theta);
}

double CircleForm::sup_relative_gap(const CircleForm& other) const {
  double worst = 0.0;
  const int M = grid_size();
  for (int j = 0; j < M; ++j) {
    const double theta = kTwoPi * j / M;
    const double a = std::exp(logv_[static_cast<std::size_t>(j)]);
    const double b = other.at_angle(theta);
    worst = std::max(worst, std::abs(a - b) / std::max(std::max(a, b), 1e-300));
  }
  return worst;
}

double boundary_energy(const AnyBoundaryForm& form, double p,
                       const std::vector<double>& u) {
  if (std::holds_alternative<BoundaryGraphForm>(form))
    return std::get<BoundaryGraphForm>(form).energy(p, u);
  return std::get<CircleForm>(form).energy(u);
}

// ---- renormalization steps ---------------------------------------------------

BoundaryGraphForm trace_graph_p2(const PcfStructure& st,
                                 const BoundaryGraphForm& E0) {
  const VertexTable vt = VertexTable::build(st, 1);
  const int n = vt.vertex_count();
  const int B = st.boundary_size();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (std::uint64_t cell = 0; cell < vt.cells(); ++cell)
    for (int q = 0; q < B; ++q)
      for (int qp = q + 1; qp < B; ++qp) {
        const double w = E0.weight(q, qp);
        const int a = vt.id(cell, q), b = vt.id(cell, qp);
        L(a, a) += w;
        L(b, b) += w;
        L(a, b) -= w;
        L(b, a) -= w;
      }
  const int ni = n - B;
  BoundaryGraphForm out = BoundaryGraphForm::complete(B, 0.0);
  Eigen::MatrixXd S = L.topLeftCorner(B, B);
  if (ni > 0) {
    const Eigen::MatrixXd Lbi = L.topRightCorner(B, ni);
    const Eigen::MatrixXd Lii = L.bottomRightCorner(ni, ni);
    S -= Lbi * Lii.ldlt().solve(Lbi.transpose());
  }
  for (int q = 0; q < B; ++q)
    for (int qp = q + 1; qp < B; ++qp)
      out.w[static_cast<std::size_t>(out.offset(q, qp))] = -S(q, qp);
  return out;
}

namespace {

// minimize sum of per-cell circle-form energies over the interior of V_1 with
// the boundary pinned; exact analytic gradient, Newton with a numeric Hessian.
// All quantities scale linearly with the form, so the iterate path (and hence
// the minimum, to roundoff) commutes with rescaling the form.
struct TraceMinimizer {
  const CircleForm* E0;
  const VertexTable* vt;
  int B = 3;
  int n = 0;

  double eval(const std::vector<double>& w, std::vector<double>* grad) const {
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
    const double p = E0->p();
    double total = 0.0;
    for (std::uint64_t cell = 0; cell < vt->cells(); ++cell) {
      const int i0 = vt->id(cell, 0), i1 = vt->id(cell, 1), i2 = vt->id(cell, 2);
      const double a = w[static_cast<std::size_t>(i0)] * kE0[0] +
                       w[static_cast<std::size_t>(i1)] * kE0[1] +
                       w[static_cast<std::size_t>(i2)] * kE0[2];
      const double b = w[static_cast<std::size_t>(i0)] * kF0[0] +
                       w[static_cast<std::size_t>(i1)] * kF0[1] +
                       w[static_cast<std::size_t>(i2)] * kF0[2];
      const double r2 = a * a + b * b;
      if (r2 <= 1e-300) continue;  // constant on the cell: no energy, flat slope
      const double r = std::sqrt(r2);
      const double theta = std::atan2(b, a);
      const double V = E0->at_angle(theta);
      const double rp = std::pow(r, p);
      total += rp * V;
      if (grad) {
        const double Sp = E0->at_angle_log_deriv(theta);
        const double common = std::pow(r, p - 2.0) * V;
        const double da = common * (p * a - Sp * b);
        const double db = common * (p * b + Sp * a);
        (*grad)[static_cast<std::size_t>(i0)] += da * kE0[0] + db * kF0[0];
        (*grad)[static_cast<std::size_t>(i1)] += da * kE0[1] + db * kF0[1];
        (*grad)[static_cast<std::size_t>(i2)] += da * kE0[2] + db * kF0[2];
      }
    }
    return total;
  }

  // minimize over ids >= B, w[0..B-1] already holding the boundary data
  double minimize(std::vector<double>& w) const {
    const int ni = n - B;
    if (ni <= 0) return eval(w, nullptr);
    std::vector<double> grad(static_cast<std::size_t>(n));
    std::vector<double> gplus(static_cast<std::size_t>(n));
    Eigen::MatrixXd H(ni, ni);
    Eigen::VectorXd g(ni);
    double f = eval(w, &grad);
    for (int it = 0; it < 100; ++it) {
      double ginf = 0.0;
      for (int i = 0; i < ni; ++i) {
        g[i] = grad[static_cast<std::size_t>(B + i)];
        ginf = std::max(ginf, std::abs(g[i]));
      }
      if (ginf <= 1e-12 * std::max(f, 1e-300)) break;

      // numeric Hessian from the analytic gradient
      const double h = 1e-6;
      for (int i = 0; i < ni; ++i) {
        const double save = w[static_cast<std::size_t>(B + i)];
        w[static_cast<std::size_t>(B + i)] = save + h;
        eval(w, &gplus);
        w[static_cast<std::size_t>(B + i)] = save;
        for (int k = 0; k < ni; ++k)
          H(k, i) = (gplus[static_cast<std::size_t>(B + k)] -
                     grad[static_cast<std::size_t>(B + k)]) /
                    h;
      }
      H = 0.5 * (H + H.transpose()).eval();

      Eigen::VectorXd dir;
      double shift = 0.0;
      for (int attempt = 0; attempt < 30; ++attempt) {
        Eigen::MatrixXd Hs = H;
        for (int i = 0; i < ni; ++i) Hs(i, i) += shift;
        const Eigen::LLT<Eigen::MatrixXd> llt(Hs);
        if (llt.info() == Eigen::Success) {
          dir = llt.solve(-g);
          break;
        }
        shift = shift == 0.0 ? 1e-8 * std::abs(H.trace() / ni) + 1e-300
                             : shift * 10.0;
      }
      if (dir.size() == 0) dir = -g;

      const double slope = g.dot(dir);
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 50; ++ls) {
        for (int i = 0; i < ni; ++i)
          w[static_cast<std::size_t>(B + i)] += t * dir[i];
        const double ft = eval(w, &grad);
        if (ft <= f + 1e-4 * t * slope) {
          f = ft;
          moved = true;
          break;
        }
        for (int i = 0; i < ni; ++i)
          w[static_cast<std::size_t>(B + i)] -= t * dir[i];
        t *= 0.5;
      }
      if (!moved) {
        eval(w, &grad);  // restore the gradient of the unmoved point
        break;
      }
    }
    return f;
  }
};

}  // namespace

CircleForm trace_circle(const PcfStructure& st, const CircleForm& E0) {
  if (st.boundary_size() != 3)
    throw std::invalid_argument("circle trace needs a 3-point boundary");
  const VertexTable vt = VertexTable::build(st, 1);
  TraceMinimizer tm{&E0, &vt, 3, vt.vertex_count()};

  const int M = E0.grid_size();
  std::vector<double> logv(static_cast<std::size_t>(M));
  std::vector<double> w(static_cast<std::size_t>(vt.vertex_count()), 0.0);
  for (int j = 0; j < M; ++j) {
    const std::array<double, 3> u = CircleForm::direction(kTwoPi * j / M);
    for (int q = 0; q < 3; ++q) w[static_cast<std::size_t>(q)] = u[q];
    if (j == 0)  // interior starts at the boundary mean; later nodes warm-start
      for (int i = 3; i < vt.vertex_count(); ++i)
        w[static_cast<std::size_t>(i)] = (u[0] + u[1] + u[2]) / 3.0;
    const double m = tm.minimize(w);
    if (!(m > 0.0))
      throw std::runtime_error("trace minimization lost positivity");
    logv[static_cast<std::size_t>(j)] = std::log(m);
  }
  return CircleForm(E0.p(), std::move(logv));
}

namespace {

// exact trace evaluation for a graph form at one boundary datum via the
// level-1 p-energy minimization
double graph_trace_value(const PcfStructure& st, const BoundaryGraphForm& E0,
                         double p, const std::vector<double>& u) {
  const VertexTable vt = VertexTable::build(st, 1);
  PGraph g;
  g.n = vt.vertex_count();
  const int B = st.boundary_size();
  for (std::uint64_t cell = 0; cell < vt.cells(); ++cell)
    for (int q = 0; q < B; ++q)
      for (int qp = q + 1; qp < B; ++qp) {
        const double w = E0.weight(q, qp);
        if (w > 0.0) g.add_edge(vt.id(cell, q), vt.id(cell, qp), w);
      }
  std::vector<char> fixed(static_cast<std::size_t>(g.n), 0);
  std::vector<double> bvals(static_cast<std::size_t>(g.n), 0.0);
  for (int q = 0; q < B; ++q) {
    fixed[static_cast<std::size_t>(q)] = 1;
    bvals[static_cast<std::size_t>(q)] = u[static_cast<std::size_t>(q)];
  }
  return minimize_p_energy(g, p, fixed, bvals).energy;
}

// graph-ansatz trace for p != 2: evaluate the exact trace on the pair
// directions and solve the linear system expressing those values through
// candidate weights
BoundaryGraphForm trace_graph_ansatz(const PcfStructure& st,
                                     const BoundaryGraphForm& E0, double p) {
  const int B = st.boundary_size();
  const int P = B * (B - 1) / 2;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(P, P);
  Eigen::VectorXd t(P);
  BoundaryGraphForm pattern = BoundaryGraphForm::complete(B, 0.0);
  for (int q = 0; q < B; ++q)
    for (int qp = q + 1; qp < B; ++qp) {
      const int row = pattern.offset(q, qp);
      std::vector<double> u(static_cast<std::size_t>(B), 0.0);
      u[static_cast<std::size_t>(q)] = 1.0;
      u[static_cast<std::size_t>(qp)] = -1.0;
      t[row] = graph_trace_value(st, E0, p, u);
      for (int a = 0; a < B; ++a)
        for (int b = a + 1; b < B; ++b) {
          const double diff = std::abs(u[static_cast<std::size_t>(a)] -
                                       u[static_cast<std::size_t>(b)]);
          if (diff > 0.0)
            A(row, pattern.offset(a, b)) += std::pow(diff, p);
        }
    }
  const Eigen::VectorXd wsol = A.fullPivLu().solve(t);
  BoundaryGraphForm out = BoundaryGraphForm::complete(B, 0.0);
  for (int i = 0; i < P; ++i)
    out.w[static_cast<std::size_t>(i)] = std::max(wsol[i], 0.0);
  return out;
}

}  // namespace

AnyBoundaryForm trace(const PcfStructure& st, double p,
                      const AnyBoundaryForm& E0, int grid_size) {
  if (std::holds_alternative<CircleForm>(E0))
    return trace_circle(st, std::get<CircleForm>(E0));
  const BoundaryGraphForm& g = std::get<BoundaryGraphForm>(E0);
  if (p == 2.0) return trace_graph_p2(st, g);
  if (st.boundary_size() == 3)
    return trace_circle(st, CircleForm::from_graph(g, p, grid_size));
  return trace_graph_ansatz(st, g, p);
}

namespace {

double graph_sup_rel_gap(const BoundaryGraphForm& a, const BoundaryGraphForm& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.w.size(); ++i)
    worst = std::max(worst, std::abs(a.w[i] - b.w[i]) /
                                std::max(std::max(a.w[i], b.w[i]), 1e-300));
  return worst;
}

}  // namespace

EigenformResult eigenform_solve(const PcfStructure& st, double p,
                                const EigenformOptions& opt) {
  if (!(p > 1.0)) throw std::invalid_argument("p must exceed 1");
  const int B = st.boundary_size();
  EigenformResult res;

  if (p == 2.0 || B != 3) {
    // graph iteration: exact Schur at p = 2, pair-fitted ansatz otherwise
    BoundaryGraphForm E = BoundaryGraphForm::complete(B);
    res.reduced_fidelity = (p != 2.0);
    double lam = 1.0;
    for (int it = 1; it <= opt.max_iter; ++it) {
      BoundaryGraphForm T =
          p == 2.0 ? trace_graph_p2(st, E) : trace_graph_ansatz(st, E, p);
      lam = T.weight(0, 1);
      if (!(lam > 0.0))
        throw std::runtime_error("trace lost the reference pair weight");
      for (double& w : T.w) w /= lam;
      const double gap = graph_sup_rel_gap(T, E);
      E = T;
      res.iterations = it;
      if (gap < opt.tol) {
        res.converged = true;
        break;
      }
    }
    res.rho_p = 1.0 / lam;
    BoundaryGraphForm T =
        p == 2.0 ? trace_graph_p2(st, E) : trace_graph_ansatz(st, E, p);
    for (double& w : T.w) w *= res.rho_p;
    res.residual = graph_sup_rel_gap(T, E);
    res.form = E;
    return res;
  }

  // circle iteration on a 3-point boundary
  CircleForm seed = CircleForm::from_graph(BoundaryGraphForm::complete(3), p,
                                           opt.grid_size);
  std::vector<double> logv = seed.log_values();
  const double ref = logv[0];
  for (double& v : logv) v -= ref;
  CircleForm C(p, logv);
  double lam = 1.0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    const CircleForm T = trace_circle(st, C);
    std::vector<double> lt = T.log_values();
    const double lref = lt[0];
    lam = std::exp(lref);
    for (double& v : lt) v -= lref;
    CircleForm Tn(p, std::move(lt));
    const double gap = Tn.sup_relative_gap(C);
    C = Tn;
    res.iterations = it;
    if (gap < opt.tol) {
      res.converged = true;
      break;
    }
  }
  res.rho_p = 1.0 / lam;
  const CircleForm T = trace_circle(st, C);
  std::vector<double> lt = T.log_values();
  for (double& v : lt) v += std::log(res.rho_p);
  res.residual = CircleForm(p, std::move(lt)).sup_relative_gap(C);
  res.form = C;
  return res;
}

ExponentSheet exponents(const PcfStructure& st, double p, double rho_p,
                        const SelfSimilarMeasure& m) {
  if (!(p > 1.0)) throw std::invalid_argument("p must exceed 1");
  if (!(rho_p > 1.0)) throw std::invalid_argument("rho must exceed 1");
  (void)m;
  ExponentSheet sh;
  sh.p = p;
  sh.r_star = st.r_star();
  const double log_inv_r = std::log(1.0 / st.r_star());
  const int N = st.alphabet_size();

  // similarity dimension: sum_i r*^{l_i d} = 1
  bool uniform_levels = true;
  for (int i = 1; i < N; ++i)
    uniform_levels = uniform_levels &&
                     st.contraction_level(i) == st.contraction_level(0);
  if (uniform_levels) {
    sh.d_f = std::log(static_cast<double>(N)) /
             (st.contraction_level(0) * log_inv_r);
  } else {
    double lo = 1e-12, hi = 64.0;
    const auto phi = [&](double d) {
      double s = 0.0;
      for (int i = 0; i < N; ++i)
        s += std::pow(st.r_star(), st.contraction_level(i) * d);
      return s - 1.0;
    };
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (phi(mid) > 0.0 ? lo : hi) = mid;
    }
    sh.d_f = 0.5 * (lo + hi);
  }

  // with one shared weight, sum_i rho^{ -d/(p-1) } = 1 has a closed form
  sh.d_fp = (p - 1.0) * std::log(static_cast<double>(N)) / std::log(rho_p);
  sh.sigma_p = rho_p;
  sh.d_wp = sh.d_f + std::log(sh.sigma_p) / log_inv_r;
  sh.s_p_partition = sh.d_wp / p;
  sh.s_p_resistance = (sh.d_fp + p - 1.0) / p;
  return sh;
}

}  // namespace fractalp
