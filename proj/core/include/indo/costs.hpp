#pragma once

#include "indo/objectives.hpp"
#include "indo/pmm.hpp"

namespace indo {

/// Per-node scalar-product units charged per outer iteration with ell inner
/// iterations. Logistic: J (2 + n/2) derivative work + N for the consensus in
/// g + n ell matrix-vector products + N ell / n for the d consensus, plus
/// n ell diagonal solves (JOR route) or n^2/6 for the dense block inverse
/// (ESOM route). Quadratic: the derivative term collapses to n (the Hessian
/// is constant) and the ESOM inverse moves to a one-time setup charge.
/// Fractional SPs are kept as reals.
double sp_cost_per_iteration(Variant variant, ProblemKind kind, double J,
                             int n, int N, int ell);

/// One-time charge at k = 0: n^2/6 for ESOM on quadratic costs, else 0.
double sp_cost_setup(Variant variant, ProblemKind kind, int n);

/// Cost model for a run on this instance; the logistic J term uses the most
/// loaded node (synchronous rounds are paced by it).
CostModel make_cost_model(Variant variant, const ProblemInstance& inst);

}  // namespace indo
