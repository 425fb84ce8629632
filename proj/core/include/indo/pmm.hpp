#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "indo/network.hpp"
#include "indo/objectives.hpp"
#include "indo/types.hpp"

namespace indo {

enum class Variant { indo, esom };

enum class D0Policy { zero, warm, initial_solve };

enum class ForcingNorm { two, inf };

/// Inner-solve stopping rule: either a fixed iteration count or the inexact
/// Newton forcing condition ||H d + g|| <= eta ||g|| with an iteration cap.
struct InnerPolicy {
  enum class Mode { fixed_count, forcing };
  Mode mode = Mode::fixed_count;
  int ell = 1;           // fixed_count
  double eta = 0.1;      // forcing
  int cap = 100000;      // forcing
  static InnerPolicy fixed(int ell) {
    InnerPolicy p;
    p.mode = Mode::fixed_count;
    p.ell = ell;
    return p;
  }
  static InnerPolicy forcing(double eta, int cap = 100000) {
    InnerPolicy p;
    p.mode = Mode::forcing;
    p.eta = eta;
    p.cap = cap;
    return p;
  }
};

struct SolverConfig {
  Variant variant = Variant::indo;
  double alpha = 1.0;
  double eps = 1.0;
  double gamma = 1.0;  // JOR relaxation; ignored by ESOM
  InnerPolicy inner;
  D0Policy d0 = D0Policy::warm;
  ForcingNorm forcing_norm = ForcingNorm::two;
  bool check_gamma = true;

  /// Throws std::invalid_argument on nonpositive alpha/eps, a bad inner
  /// policy, or (checked mode, INDO) gamma outside the convergence interval
  /// derived from the instance and network constants.
  void validate(const ProblemInstance& inst, const Network& net) const;
};

/// Primal/dual iterate plus the cumulative cost counters. The dual blocks q_i
/// start at zero and stay in range(I - W), so they sum to zero per coordinate.
struct PmmState {
  int k = 0;
  Vec x, q, d_warm;
  long long comm_rounds = 0;  // neighbor exchanges of n-vectors, per node
  double sp_cost = 0.0;       // scalar-product units, per node
  bool x_exchanged = false;   // neighbors hold the current x blocks
};

struct TraceRecord {
  int k = 0;
  double metric = 0.0;          // E (quadratic) or V (logistic)
  double residual_2norm = 0.0;  // ||H d + g|| of the accepted step
  long long comm_rounds_cum = 0;
  double sp_cost_cum = 0.0;
  std::optional<double> lyapunov;
  int ell_used = 0;
};

/// Raw per-iteration quantities captured when inequality monitoring is on.
/// x, q, g are the pre-update values; r = H d + g for the accepted d.
struct IterationInternals {
  Vec x, q, d, g, r;
  double eta = 0.0;  // configured forcing term, or 0 for fixed-count runs
};

struct RunHooks {
  std::function<double(const Vec& x, const Vec& q)> lyapunov;
  bool record_internals = false;
  double stop_metric = 0.0;  // stop once metric < stop_metric (0 = disabled)
};

/// Closed-form cost charged to the sp_cost counter; see costs.hpp for the
/// model that produces these numbers. An outer iteration with ell inner
/// iterations costs fixed_per_iteration + ell * per_inner_iteration.
struct CostModel {
  double setup = 0.0;
  double fixed_per_iteration = 0.0;
  double per_inner_iteration = 0.0;
};

struct RunResult {
  std::vector<TraceRecord> trace;
  PmmState final_state;
  bool aborted = false;
  std::string abort_reason;
  std::vector<IterationInternals> internals;
  double max_dual_residual = 0.0;   // max |sum_i q_i[j]| / (1 + ||q||)
  int initial_solve_iterations = 0; // k=0 presolve work, kept out of counters
};

/// g_i = grad f_i(x_i) + q_i + alpha [(1 - w_ii) x_i - sum_j w_ij x_j].
/// Charges one neighbor exchange of x unless the state is already exchanged
/// (the dual step of the previous iteration shares its exchange).
Vec compute_g(PmmState& state, const ProblemInstance& inst, const Network& net,
              double alpha);

/// Matrix-free action of H = hess f(x) + alpha (I - W) + eps I on v, with the
/// Hessian frozen at the snapshots.
Vec apply_frozen_hessian(const std::vector<HessianSnapshot>& hess,
                         const Network& net, double alpha, double eps,
                         const Vec& v);

/// Same action with the Hessian evaluated at x_point.
Vec apply_hessian(const ProblemInstance& inst, const Network& net, double alpha,
                  double eps, const Vec& x_point, const Vec& v);

/// x <- x + d; unit step, no line search.
void primal_update(PmmState& state, const Vec& d);

/// q <- q + alpha (I - W) x; charges the per-iteration x exchange.
void dual_update(PmmState& state, const Network& net, double alpha);

/// K outer iterations of the configured method: inner solve, primal update,
/// dual update, one trace record per iteration. Deterministic. Divergence
/// (metric beyond 1e12) and inner-solver failures end the run early with the
/// partial trace kept and abort_reason set.
RunResult run(const SolverConfig& config, const ProblemInstance& inst,
              const Network& net, int K, const RunHooks& hooks = {},
              const CostModel& cost = {}, const Vec* x0 = nullptr);

}  // namespace indo
