#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fractalp/forms.hpp"
#include "fractalp/structure.hpp"

namespace fractalp {

// p-homogeneous constant-free form on R^{V_0} for #V_0 = 3, stored by its
// values on M uniform directions of the circle {sum u = 0, |u| = 1}.
// at_angle reads the grid through periodic cubic interpolation of log E;
// energy() additionally remembers the generating graph form when the circle
// form was built by from_graph and then evaluates it exactly (|t|^p kinks of
// p < 2 forms defeat any fixed-order interpolation near edge-degenerate
// directions).  theta = 0 is the reference direction (1,0,0) minus its mean,
// normalized.
class CircleForm {
 public:
  CircleForm(double p, std::vector<double> log_values);
  static CircleForm from_graph(const BoundaryGraphForm& base, double p, int M);

  double p() const { return p_; }
  int grid_size() const { return static_cast<int>(logv_.size()); }
  const std::vector<double>& log_values() const { return logv_; }

  double at_angle(double theta) const;       // form value on the unit circle
  double at_angle_log_deriv(double theta) const;  // d/dtheta of log at_angle
  double energy(const std::vector<double>& u) const;  // any u in R^3
  double sup_relative_gap(const CircleForm& other) const;

  // coordinates of the circle point at angle theta (mean-zero, unit norm)
  static std::array<double, 3> direction(double theta);
  // polar decomposition of the mean-zero part: radius and angle
  static void polar(const std::vector<double>& u, double& r, double& theta);

 private:
  double log_interp(double theta) const;

  double p_;
  std::vector<double> logv_;
  std::optional<BoundaryGraphForm> gen_;  // exact generator, when known
};

using AnyBoundaryForm = std::variant<BoundaryGraphForm, CircleForm>;

double boundary_energy(const AnyBoundaryForm& form, double p,
                       const std::vector<double>& u);

// One renormalization step with unit letter weights:
//   (trace E0)(u) = inf { sum_i E0(v o F_i) : v on V_1, v|_{V_0} = u }.
// p = 2 graph forms go through the exact Schur complement and stay graph
// forms; circle forms re-minimize per grid direction.
BoundaryGraphForm trace_graph_p2(const PcfStructure& st,
                                 const BoundaryGraphForm& E0);
CircleForm trace_circle(const PcfStructure& st, const CircleForm& E0);
AnyBoundaryForm trace(const PcfStructure& st, double p,
                      const AnyBoundaryForm& E0, int grid_size = 720);

struct EigenformOptions {
  int grid_size = 720;
  int max_iter = 500;
  double tol = 1e-8;  // sup-relative change between normalized iterates
};

struct EigenformResult {
  AnyBoundaryForm form;     // fixed point, normalized to 1 at the reference direction
  double rho_p = 0.0;       // reciprocal of the trace eigenvalue
  double residual = 0.0;    // sup-relative gap of rho_p * trace(form) vs form
  int iterations = 0;
  bool converged = false;
  bool reduced_fidelity = false;  // graph-ansatz fallback for #V_0 > 3, p != 2
};

EigenformResult eigenform_solve(const PcfStructure& st, double p,
                                const EigenformOptions& opt = {});

// Derived dimensions and smoothness exponents of one (structure, p, rho_p)
// configuration.
struct ExponentSheet {
  double p = 2.0;
  double d_f = 0.0;        // similarity dimension in the ambient metric
  double d_fp = 0.0;       // solves sum_i rho_i^{-d/(p-1)} = 1
  double sigma_p = 0.0;    // energy scaling factor
  double d_wp = 0.0;       // d_f + log(sigma_p)/log(1/r_star)
  double s_p_partition = 0.0;   // d_wp / p
  double s_p_resistance = 0.0;  // (d_fp + p - 1) / p
  double r_star = 0.5;
};

ExponentSheet exponents(const PcfStructure& st, double p, double rho_p,
                        const SelfSimilarMeasure& m);

}  // namespace fractalp
