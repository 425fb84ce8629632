#pragma once

#include <Eigen/Cholesky>

#include <stdexcept>
#include <vector>

#include "indo/network.hpp"
#include "indo/objectives.hpp"
#include "indo/pmm.hpp"
#include "indo/types.hpp"

namespace indo {

/// Jacobi Overrelaxation splitting H = D - G with D the scalar diagonal of H:
/// [D_ii]_j = eps + alpha (1 - w_ii) + [hess_i]_jj. The off-diagonal action
/// G_ij = alpha w_ij I runs over the neighbor lists; G_ii = diag(hess_i) -
/// hess_i is applied through the frozen snapshots, so no dense block is
/// formed.
struct JorSplitting {
  std::vector<HessianSnapshot> hess;
  std::vector<Vec> D;  // per-node diagonal entries of D_ii
  const Network* net = nullptr;
  double alpha = 0.0, eps = 0.0, gamma = 1.0;

  Vec apply_H(const Vec& v) const;
};

JorSplitting jor_build(const ProblemInstance& inst, const Network& net,
                       const Vec& x_point, double alpha, double eps,
                       double gamma);
JorSplitting jor_build(std::vector<HessianSnapshot> hess, const Network& net,
                       double alpha, double eps, double gamma);

/// One JOR sweep:
/// d'_i = gamma D_ii^{-1} (G_ii d_i + alpha sum_j w_ij d_j - g_i) +
///        (1 - gamma) d_i.
/// Pure in (splitting, d, g); one neighbor exchange of d per call.
Vec jor_step(const JorSplitting& s, const Vec& d, const Vec& g);

/// ESOM splitting H = D_E - B with block-diagonal
/// [D_E]_ii = hess_i + (2 alpha (1 - w_ii) + eps) I (factored once per outer
/// iteration) and B_ii = alpha (1 - w_ii) I, B_ij = alpha w_ij I.
struct EsomSplitting {
  std::vector<HessianSnapshot> hess;
  std::vector<Eigen::LLT<Mat>> factor;  // of [D_E]_ii
  const Network* net = nullptr;
  double alpha = 0.0, eps = 0.0;

  Vec apply_H(const Vec& v) const;
};

EsomSplitting esom_build(const ProblemInstance& inst, const Network& net,
                         const Vec& x_point, double alpha, double eps);
EsomSplitting esom_build(std::vector<HessianSnapshot> hess, const Network& net,
                         double alpha, double eps);

/// One ESOM sweep: d'_i = [D_E]_ii^{-1} (alpha (1 - w_ii) d_i +
/// alpha sum_j w_ij d_j - g_i). The recursion is anchored at d^{-1} = 0, so
/// the first application reduces to d^0_i = -[D_E]_ii^{-1} g_i.
Vec esom_step(const EsomSplitting& s, const Vec& d, const Vec& g);

struct InnerResult {
  Vec d;
  double residual = 0.0;  // ||H d + g||_2 of the returned direction
  int ell_used = 0;
  long long exchanges = 0;  // neighbor exchanges of d performed
};

/// Raised when the forcing condition is still unmet at the iteration cap;
/// signals gamma outside the convergence interval or an unreachable eta.
class ForcingCapError : public std::runtime_error {
 public:
  ForcingCapError(double last_residual, int ell)
      : std::runtime_error(
            "inner solve: forcing condition unmet after " +
            std::to_string(ell) +
            " iterations (last residual " + std::to_string(last_residual) + ")"),
        last_residual(last_residual),
        ell(ell) {}
  double last_residual;
  int ell;
};

InnerResult inner_solve(const JorSplitting& s, const Vec& g,
                        const InnerPolicy& policy, const Vec& d0,
                        ForcingNorm norm = ForcingNorm::two);

InnerResult inner_solve(const EsomSplitting& s, const Vec& g,
                        const InnerPolicy& policy,
                        ForcingNorm norm = ForcingNorm::two);

/// The practical k=0 presolve: JOR from d = 0 until the residual infinity
/// norm drops strictly below ||g||_inf (at least one sweep; capped).
InnerResult jor_initial_solve(const JorSplitting& s, const Vec& g,
                              int cap = 1000);

}  // namespace indo
