#include "indo/costs.hpp"

#include <algorithm>

namespace indo {

namespace {

// Work that does not scale with the inner iteration count: derivative
// evaluation plus the consensus step in g.
double fixed_term(Variant variant, ProblemKind kind, double J, int n, int N) {
  const double derivatives =
      kind == ProblemKind::logistic ? J * (2.0 + n / 2.0) : double(n);
  double fixed = derivatives + N;
  // ESOM refactors the dense block every iteration only when the Hessian
  // changes; for quadratic costs that charge moves to the one-time setup.
  if (variant == Variant::esom && kind == ProblemKind::logistic)
    fixed += static_cast<double>(n) * n / 6.0;
  return fixed;
}

// Per inner iteration: one matrix-vector product (n) plus the d consensus
// (N/n), plus the diagonal solve (n) on the JOR route.
double inner_term(Variant variant, int n, int N) {
  double per = n + static_cast<double>(N) / n;
  if (variant == Variant::indo) per += n;
  return per;
}

}  // namespace

double sp_cost_per_iteration(Variant variant, ProblemKind kind, double J,
                             int n, int N, int ell) {
  return fixed_term(variant, kind, J, n, N) + ell * inner_term(variant, n, N);
}

double sp_cost_setup(Variant variant, ProblemKind kind, int n) {
  if (variant == Variant::esom && kind == ProblemKind::quadratic)
    return static_cast<double>(n) * n / 6.0;
  return 0.0;
}

CostModel make_cost_model(Variant variant, const ProblemInstance& inst) {
  double J = 0.0;
  if (inst.kind == ProblemKind::logistic)
    for (int i = 0; i < inst.N; ++i)
      J = std::max(J, static_cast<double>(inst.node_size(i)));
  CostModel c;
  c.fixed_per_iteration = fixed_term(variant, inst.kind, J, inst.n, inst.N);
  c.per_inner_iteration = inner_term(variant, inst.n, inst.N);
  c.setup = sp_cost_setup(variant, inst.kind, inst.n);
  return c;
}

}  // namespace indo
