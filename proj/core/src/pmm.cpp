#include "indo/pmm.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "indo/analysis.hpp"
#include "indo/inner_solvers.hpp"

namespace indo {

namespace {

constexpr double kDivergenceGuard = 1e12;

std::vector<HessianSnapshot> snapshot_all(const ProblemInstance& inst,
                                          const Vec& x) {
  std::vector<HessianSnapshot> snaps;
  snaps.reserve(inst.N);
  for (int i = 0; i < inst.N; ++i)
    snaps.push_back(inst.hessian_snapshot(
        i, x.segment(static_cast<Eigen::Index>(i) * inst.n, inst.n)));
  return snaps;
}

// max_j |sum_i q_i[j]| / (1 + ||q||)
double dual_range_residual(const Vec& q, int n, int N) {
  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += q[static_cast<Eigen::Index>(i) * n + j];
    worst = std::max(worst, std::abs(s));
  }
  return worst / (1.0 + q.norm());
}

}  // namespace

void SolverConfig::validate(const ProblemInstance& inst,
                            const Network& net) const {
  if (!(alpha > 0.0)) throw std::invalid_argument("config: alpha must be > 0");
  if (!(eps > 0.0)) throw std::invalid_argument("config: eps must be > 0");
  if (inner.mode == InnerPolicy::Mode::fixed_count && inner.ell < 1)
    throw std::invalid_argument("config: ell must be >= 1");
  if (inner.mode == InnerPolicy::Mode::forcing) {
    if (!(inner.eta > 0.0))
      throw std::invalid_argument("config: forcing eta must be > 0");
    if (inner.cap < 1)
      throw std::invalid_argument("config: forcing cap must be >= 1");
  }
  if (variant == Variant::indo) {
    if (!(gamma > 0.0)) throw std::invalid_argument("config: gamma must be > 0");
    if (check_gamma) {
      GammaInterval iv = jor_gamma_interval(inst.m, inst.M, alpha, eps,
                                            net.w_d, net.w_m);
      if (gamma >= iv.hi)
        throw std::invalid_argument(
            "config: gamma = " + std::to_string(gamma) +
            " outside the JOR convergence interval (0, " +
            std::to_string(iv.hi) + ")");
    }
  }
}

Vec compute_g(PmmState& state, const ProblemInstance& inst, const Network& net,
              double alpha) {
  if (!state.x_exchanged) {
    ++state.comm_rounds;
    state.x_exchanged = true;
  }
  Vec g = consensus_laplacian(net, state.x, inst.n, alpha);
  g += state.q;
  for (int i = 0; i < inst.N; ++i)
    g.segment(static_cast<Eigen::Index>(i) * inst.n, inst.n) +=
        inst.gradient(i,
                      state.x.segment(static_cast<Eigen::Index>(i) * inst.n,
                                      inst.n));
  return g;
}

Vec apply_frozen_hessian(const std::vector<HessianSnapshot>& hess,
                         const Network& net, double alpha, double eps,
                         const Vec& v) {
  const int n = static_cast<int>(v.size()) / net.N;
  Vec out = consensus_laplacian(net, v, n, alpha);
  for (int i = 0; i < net.N; ++i) {
    auto vi = v.segment(static_cast<Eigen::Index>(i) * n, n);
    out.segment(static_cast<Eigen::Index>(i) * n, n) +=
        hess[i].apply(vi) + eps * vi;
  }
  return out;
}

Vec apply_hessian(const ProblemInstance& inst, const Network& net, double alpha,
                  double eps, const Vec& x_point, const Vec& v) {
  return apply_frozen_hessian(snapshot_all(inst, x_point), net, alpha, eps, v);
}

void primal_update(PmmState& state, const Vec& d) {
  state.x += d;
  state.x_exchanged = false;
}

void dual_update(PmmState& state, const Network& net, double alpha) {
  const int n = static_cast<int>(state.x.size()) / net.N;
  state.q += consensus_laplacian(net, state.x, n, alpha);
  ++state.comm_rounds;
  state.x_exchanged = true;
}

RunResult run(const SolverConfig& config, const ProblemInstance& inst,
              const Network& net, int K, const RunHooks& hooks,
              const CostModel& cost, const Vec* x0) {
  config.validate(inst, net);
  if (K < 1) throw std::invalid_argument("run: K must be >= 1");
  if (inst.N != net.N)
    throw std::invalid_argument("run: instance/network node counts differ");

  const Eigen::Index dim = static_cast<Eigen::Index>(inst.n) * inst.N;
  RunResult result;
  PmmState state;
  state.x = x0 ? *x0 : Vec::Zero(dim);
  state.q = Vec::Zero(dim);
  state.d_warm = Vec::Zero(dim);
  // the all-zero initializer is known network-wide without an exchange
  state.x_exchanged = !x0 || x0->isZero(0.0);

  Vec y_star;
  if (inst.kind == ProblemKind::quadratic) y_star = quadratic_solution(inst);

  // Quadratic Hessians do not depend on x, so the splitting (including the
  // ESOM per-node factorization) is built once; otherwise it is refrozen at
  // every x^k.
  const bool constant_hessian = inst.kind == ProblemKind::quadratic;
  std::optional<JorSplitting> jor;
  std::optional<EsomSplitting> esom;

  result.trace.reserve(K);
  for (int k = 0; k < K; ++k) {
    Vec g = compute_g(state, inst, net, config.alpha);
    InnerResult inner;
    Vec r_vec;
    const Vec x_pre = state.x, q_pre = state.q;
    try {
      if (config.variant == Variant::indo) {
        if (!jor || !constant_hessian)
          jor = jor_build(snapshot_all(inst, state.x), net, config.alpha,
                          config.eps, config.gamma);
        Vec d0 = Vec::Zero(dim);
        if (config.d0 == D0Policy::warm) {
          d0 = state.d_warm;
        } else if (config.d0 == D0Policy::initial_solve) {
          if (k == 0) {
            // Presolve work is setup, kept out of the per-iteration counters
            // and reported separately.
            InnerResult init = jor_initial_solve(*jor, g);
            d0 = std::move(init.d);
            result.initial_solve_iterations = init.ell_used;
          } else {
            d0 = state.d_warm;
          }
        }
        inner = inner_solve(*jor, g, config.inner, d0, config.forcing_norm);
        if (hooks.record_internals) r_vec = jor->apply_H(inner.d) + g;
      } else {
        if (!esom || !constant_hessian)
          esom = esom_build(snapshot_all(inst, state.x), net, config.alpha,
                            config.eps);
        inner = inner_solve(*esom, g, config.inner, config.forcing_norm);
        if (hooks.record_internals) r_vec = esom->apply_H(inner.d) + g;
      }
    } catch (const std::exception& e) {
      result.aborted = true;
      result.abort_reason =
          "iteration " + std::to_string(k) + ": " + e.what();
      break;
    }
    state.comm_rounds += inner.exchanges;

    primal_update(state, inner.d);
    dual_update(state, net, config.alpha);
    state.d_warm = inner.d;
    state.k = k + 1;
    state.sp_cost += (k == 0 ? cost.setup : 0.0) + cost.fixed_per_iteration +
                     inner.ell_used * cost.per_inner_iteration;

    result.max_dual_residual = std::max(
        result.max_dual_residual, dual_range_residual(state.q, inst.n, inst.N));

    TraceRecord rec;
    rec.k = k;
    rec.metric = inst.kind == ProblemKind::quadratic
                     ? mean_relative_error(state.x, y_star, inst.N)
                     : mean_aggregate_objective(state.x, inst);
    rec.residual_2norm = inner.residual;
    rec.comm_rounds_cum = state.comm_rounds;
    rec.sp_cost_cum = state.sp_cost;
    rec.ell_used = inner.ell_used;
    if (hooks.lyapunov) rec.lyapunov = hooks.lyapunov(state.x, state.q);
    result.trace.push_back(rec);

    if (hooks.record_internals) {
      IterationInternals it;
      it.x = x_pre;
      it.q = q_pre;
      it.d = inner.d;
      it.g = std::move(g);
      it.r = std::move(r_vec);
      it.eta =
          config.inner.mode == InnerPolicy::Mode::forcing ? config.inner.eta : 0.0;
      result.internals.push_back(std::move(it));
    }

    if (!std::isfinite(rec.metric) || rec.metric > kDivergenceGuard) {
      result.aborted = true;
      result.abort_reason = "iteration " + std::to_string(k) +
                            ": error metric " + std::to_string(rec.metric) +
                            " exceeded the divergence guard";
      break;
    }
    if (hooks.stop_metric > 0.0 && rec.metric < hooks.stop_metric) break;
  }
  result.final_state = std::move(state);
  return result;
}

}  // namespace indo
