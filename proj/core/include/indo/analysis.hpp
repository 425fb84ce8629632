#pragma once

#include <optional>
#include <string>
#include <vector>

#include "indo/inner_solvers.hpp"
#include "indo/network.hpp"
#include "indo/objectives.hpp"
#include "indo/pmm.hpp"
#include "indo/types.hpp"

namespace indo {

struct GammaInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// JOR convergence interval
/// (0, 2 (m + alpha (1 - w_d) + eps) / (M + eps + alpha (1 - w_m) + alpha (1 - w_d))).
GammaInterval jor_gamma_interval(double m, double M, double alpha, double eps,
                                 double w_d, double w_m);

/// The fixed relaxation used in the experiments:
/// 2 (m + eps + alpha (1 - w_d)) / (M + 2 alpha + eps); always inside the
/// interval above.
double practical_gamma(double m, double M, double alpha, double eps,
                       double w_d);

/// Block-wise matrix norm max_i sum_j ||T_ij||_2 of an nN x nN matrix viewed
/// as an N x N grid of n x n blocks. Dominates the spectral radius.
double block_norm(const Mat& T, int n);

/// Exact block norms of the iteration matrices, computed per block without
/// assembling T (off-diagonal blocks are scalar multiples of diagonal or
/// inverse-factor blocks).
double block_norm(const JorSplitting& s);
double block_norm(const EsomSplitting& s);

/// Closed-form ||T||_b bounds under equal diagonal weights w_ii = w, gamma=1
/// for the JOR route. The JOR bound is guaranteed < 1 only when
/// eps > max{M - 2m, 0}; `indo_valid` carries that flag.
struct SplittingBounds {
  double esom = 0.0;
  double indo = 0.0;
  bool indo_valid = false;
};
SplittingBounds splitting_norm_bounds(double m, double M, double alpha,
                                      double eps, double w);

/// Smallest guaranteed inner iteration count such that, starting from d = 0,
/// ||H d^ell + g|| <= eta ||g||:
/// ceil(ln(eta / c) / |ln sigma_T|) clamped below at 1, with
/// c = ((M + 2 + eps) / (m + eps)) sqrt((eps + M + alpha(1-w_m)) /
/// (eps + m + alpha(1-w_d))).
/// Throws std::domain_error when sigma_T >= 1 (no finite bound).
int inner_iteration_bound(double eta, double m, double M, double alpha,
                          double eps, double w_d, double w_m, double sigma_T);

/// Dense assembly of the iteration matrix (desk scale; throws above
/// nN = 2000): T_gamma = gamma D^{-1} G + (1 - gamma) I for JOR,
/// D_E^{-1} B for ESOM.
Mat dense_iteration_matrix(const JorSplitting& s);
Mat dense_iteration_matrix(const EsomSplitting& s);

struct SpectralEstimate {
  double value = 0.0;
  bool converged = true;
};

/// Spectral radius of the iteration matrix. The JOR matrix, at desk scale,
/// goes through the symmetric similar matrix D^{-1/2} C_gamma D^{-1/2}
/// (exact symmetric eigensolve); otherwise a matrix-free power iteration with
/// tolerance 1e-10 runs, flagged if it fails to settle within 1e5 steps.
SpectralEstimate spectral_radius(const JorSplitting& s);
SpectralEstimate spectral_radius(const EsomSplitting& s);

/// Constants of the outer linear-convergence guarantee for a given
/// parameter pick: feasibility of zeta in ((m+M)/(2mM), eps/(8 M^2)), the
/// delta pieces, the contraction ratio (1 + delta_tilde)/(1 + delta), and the
/// largest admissible forcing term eta_bar.
struct ContractionConstants {
  bool feasible = false;
  std::string note;
  double zeta = 0.0, beta = 0.0, phi = 0.0;
  double delta_a = 0.0, delta_b = 0.0, delta = 0.0, delta_tilde = 0.0;
  double eta_bar = 0.0;
  double ratio = 1.0;  // (1 + delta_tilde) / (1 + delta)
};

ContractionConstants contraction_constants(double m, double M, double alpha,
                                           double eps, double lambda2,
                                           double zeta, double beta, double phi,
                                           double delta_tilde_ratio = 0.5);

/// Default documented grid search over (beta, phi) in {1.5, 2, 3, 5, 8}^2 and
/// nine zeta fractions across the feasible interval, maximizing delta.
ContractionConstants tune_contraction_constants(double m, double M,
                                                double alpha, double eps,
                                                double lambda2);

/// Eigendecomposition of I - W with square-root and pseudo-inverse
/// square-root actions on stacked block vectors.
class ConsensusSqrt {
 public:
  explicit ConsensusSqrt(const Network& net);
  Vec sqrt_apply(const Vec& v, int n) const;
  Vec pinv_sqrt_apply(const Vec& v, int n) const;
  /// Norm of the component of v living in the nullspace of I - W.
  double nullspace_norm(const Vec& v, int n) const;

 private:
  Mat U_;
  Vec lam_;
  int N_ = 0;
};

/// Lyapunov quantity ||v - v*||^2 + alpha eps ||x - x*||^2 where v is the
/// untransformed dual recovered from q on the range of (I - W)^{1/2} and
/// (x*, v*) is the primal-dual solution built from y_star. Construction
/// throws if grad f(x*) has a component outside the range beyond 1e-8
/// (y_star is then not optimal).
class LyapunovMonitor {
 public:
  LyapunovMonitor(const ProblemInstance& inst, const Network& net,
                  double alpha, double eps, const Vec& y_star);
  double value(const Vec& x, const Vec& q) const;
  const Vec& x_star() const { return x_star_; }
  const Vec& v_star() const { return v_star_; }

 private:
  ConsensusSqrt sq_;
  Vec x_star_, v_star_;
  double alpha_eps_ = 0.0;
  int n_ = 0, N_ = 0;
};

double lyapunov_value(const Vec& x, const Vec& q, const ProblemInstance& inst,
                      const Network& net, double alpha, double eps,
                      const Vec& y_star);

/// Per-iteration verification of the convergence-analysis inequalities on a
/// recorded run: (a) the second-order model bound, (b) the forcing condition,
/// (c) the step-error bound, (d) the Lyapunov descent inequality for the
/// supplied zeta. Violations are reported with margins, never thrown.
struct InequalityViolation {
  int k = 0;
  std::string check;
  double margin = 0.0;
};

struct InequalityReport {
  int iterations = 0;
  std::vector<InequalityViolation> violations;
  // smallest slack seen per check; nonnegative means the inequality held
  double min_model = 0.0, min_forcing = 0.0, min_step_error = 0.0,
         min_descent = 0.0;
  bool pass() const { return violations.empty(); }
};

InequalityReport check_inequalities(const RunResult& run,
                                    const ProblemInstance& inst,
                                    const Network& net, double alpha,
                                    double eps, double zeta);

/// Everything the sidecar reports about expected rates for one configured
/// run: the gamma interval, measured/estimated contraction quantities of the
/// inner iteration matrix, the closed-form norm bounds (equal-w_ii graphs
/// only), the guaranteed inner-iteration count for forcing runs, and the
/// outer contraction constants.
struct RateReport {
  GammaInterval gamma_interval;
  double practical_gamma = 0.0;
  std::optional<SpectralEstimate> sigma_T;
  std::optional<double> block_norm_T;
  bool equal_diagonal = false;
  std::optional<SplittingBounds> bounds;
  std::optional<int> ell_bound;
  ContractionConstants constants;
};

RateReport make_rate_report(const ProblemInstance& inst, const Network& net,
                            const SolverConfig& config);

}  // namespace indo
