#include <doctest.h>

#include <cmath>

#include "indo/analysis.hpp"
#include "oracles.hpp"

using namespace indo;

namespace {

Network cycle_network(int N) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < N; ++i) edges.push_back({i, (i + 1) % N});
  return network_from_edges(N, edges);
}

Network complete_network(int N) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) edges.push_back({i, j});
  return network_from_edges(N, edges);
}

}  // namespace

TEST_CASE("gamma interval formula") {
  SUBCASE("hand-computed value") {
    GammaInterval iv = jor_gamma_interval(1.0, 101.0, 101.0, 101.0, 0.5, 0.5);
    CHECK(iv.lo == 0.0);
    CHECK(iv.hi == doctest::Approx(305.0 / 303.0).epsilon(1e-14));
  }
  SUBCASE("symbolic collapse when m = M and w_d = w_m") {
    const double m = 3.0, a = 2.0, e = 0.5, w = 0.25;
    GammaInterval iv = jor_gamma_interval(m, m, a, e, w, w);
    CHECK(iv.hi == doctest::Approx(2.0 * (m + a * (1 - w) + e) /
                                   (m + e + 2 * a * (1 - w))));
  }
  SUBCASE("the practical relaxation always sits inside the interval") {
    Rng rng(77);
    for (int t = 0; t < 200; ++t) {
      double m = 0.01 + rng.uniform01() * 10;
      double M = m * (1.0 + 10 * rng.uniform01());
      double a = 0.1 + 100 * rng.uniform01();
      double e = 0.1 + 100 * rng.uniform01();
      double w_m = 0.05 + 0.9 * rng.uniform01();
      double w_d = w_m + (0.999 - w_m) * rng.uniform01();
      CHECK(practical_gamma(m, M, a, e, w_d) <=
            jor_gamma_interval(m, M, a, e, w_d, w_m).hi + 1e-12);
    }
  }
}

TEST_CASE("block norm of explicit grids") {
  const int n = 3;
  SUBCASE("identity") { CHECK(block_norm(Mat::Identity(6, 6), n) ==
                              doctest::Approx(1.0)); }
  SUBCASE("single off-diagonal block") {
    Mat T = Mat::Zero(6, 6);
    T.block(0, 3, 3, 3) = 2.5 * Mat::Identity(3, 3);
    CHECK(block_norm(T, n) == doctest::Approx(2.5));
  }
  SUBCASE("random grid against the eigenvalue oracle") {
    Rng rng(11);
    Mat T(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) T(i, j) = rng.normal();
    CHECK(block_norm(T, n) ==
          doctest::Approx(oracle::block_norm_eig(T, n)).epsilon(1e-10));
  }
}

TEST_CASE("structural block norms equal the dense-grid computation") {
  ProblemInstance inst = quadratic_generate(3, 4, 80);
  Network net = generate_rgg(4, 81);
  Rng rng(6);
  Vec x(12);
  for (int i = 0; i < 12; ++i) x[i] = rng.normal();
  const double a = 1.9, e = 0.8;
  JorSplitting jor = jor_build(inst, net, x, a, e, 0.85);
  CHECK(block_norm(jor) ==
        doctest::Approx(
            block_norm(oracle::dense_T_jor(inst, net, a, e, 0.85, x), 3))
            .epsilon(1e-10));
  EsomSplitting esom = esom_build(inst, net, x, a, e);
  CHECK(block_norm(esom) ==
        doctest::Approx(block_norm(oracle::dense_T_esom(inst, net, a, e, x), 3))
            .epsilon(1e-10));
}

TEST_CASE("closed-form splitting bounds") {
  SUBCASE("hand-computed logistic-style constants") {
    const double m = 1e-4, M = 1.0001, a = M, e = M, w = 0.5;
    SplittingBounds b = splitting_norm_bounds(m, M, a, e, w);
    CHECK(b.esom == doctest::Approx(1.0001 / 2.0003).epsilon(1e-14));
    CHECK(b.indo ==
          doctest::Approx((M - m + a * 0.5) / (a * 0.5 + e + m)).epsilon(1e-14));
    CHECK(b.esom < 1.0);
    CHECK(b.indo < 1.0);
    CHECK(b.indo_valid);  // eps = 1.0001 > M - 2m = 0.9999
  }
  SUBCASE("the validity flag follows eps > max{M - 2m, 0}") {
    CHECK_FALSE(splitting_norm_bounds(1.0, 10.0, 1.0, 7.9, 0.5).indo_valid);
    CHECK(splitting_norm_bounds(1.0, 10.0, 1.0, 8.1, 0.5).indo_valid);
    CHECK(splitting_norm_bounds(1.0, 1.5, 1.0, 1e-6, 0.5).indo_valid);
  }
  SUBCASE("symbolic collapse at m = M") {
    const double m = 2.0, a = 3.0, e = 0.7, w = 0.4;
    SplittingBounds b = splitting_norm_bounds(m, m, a, e, w);
    CHECK(b.indo ==
          doctest::Approx(a * (1 - w) / (a * (1 - w) + e + m)).epsilon(1e-14));
  }
}

TEST_CASE("measured block norms respect the closed-form bounds") {
  // cycles and complete graphs have equal diagonal weights
  for (int trial = 0; trial < 6; ++trial) {
    Network net = trial % 2 == 0 ? cycle_network(4 + trial)
                                 : complete_network(4 + trial);
    CHECK(net.w_d - net.w_m <= 1e-14);
    ProblemInstance inst = quadratic_generate(2, net.N, 90 + trial);
    const double a = inst.M, e = inst.M;
    SplittingBounds bounds =
        splitting_norm_bounds(inst.m, inst.M, a, e, net.w_d);
    Vec x0 = Vec::Zero(2 * net.N);
    CHECK(block_norm(jor_build(inst, net, x0, a, e, 1.0)) <=
          bounds.indo + 1e-8);
    CHECK(block_norm(esom_build(inst, net, x0, a, e)) <= bounds.esom + 1e-8);
  }
}

TEST_CASE("guaranteed inner iteration count") {
  SUBCASE("clamps to one when eta is already loose") {
    CHECK(inner_iteration_bound(10.0, 1.0, 2.0, 1.0, 1.0, 0.5, 0.5, 0.5) == 1);
  }
  SUBCASE("grows without bound as sigma approaches one") {
    int prev = 0;
    for (double sigma : {0.5, 0.9, 0.99, 0.999}) {
      int b = inner_iteration_bound(0.01, 1.0, 2.0, 1.0, 1.0, 0.5, 0.5, sigma);
      CHECK(b >= prev);
      prev = b;
    }
    CHECK(prev > 1000);
  }
  SUBCASE("sigma at or above one has no finite bound") {
    CHECK_THROWS_AS(inner_iteration_bound(0.1, 1.0, 2.0, 1.0, 1.0, 0.5, 0.5, 1.0),
                    std::domain_error);
  }
  SUBCASE("empirical sweep counts stay below the bound on scalar systems") {
    ProblemInstance inst = quadratic_generate(1, 2, 95);
    Network net = network_from_edges(2, {{0, 1}});
    const double a = inst.M, e = inst.M;
    const double gamma = practical_gamma(inst.m, inst.M, a, e, net.w_d);
    JorSplitting jor = jor_build(inst, net, Vec::Zero(2), a, e, gamma);
    const double sigma = spectral_radius(jor).value;
    Rng rng(7);
    Vec g(2);
    g << rng.normal(), rng.normal();
    for (double eta : {0.5, 0.1, 0.01}) {
      InnerResult r = inner_solve(jor, g, InnerPolicy::forcing(eta),
                                  Vec::Zero(2));
      CHECK(r.ell_used <= inner_iteration_bound(eta, inst.m, inst.M, a, e,
                                                net.w_d, net.w_m, sigma));
    }
  }
}

TEST_CASE("spectral radius of the iteration matrices") {
  ProblemInstance inst = quadratic_generate(2, 3, 100);
  Network net = generate_rgg(3, 101);
  Vec x0 = Vec::Zero(6);

  SUBCASE("gamma = 1 with a fully diagonal decoupled system gives zero") {
    ProblemInstance diag = inst;
    for (auto& B : diag.B) B = Mat(B.diagonal().asDiagonal());
    JorSplitting jor = jor_build(diag, net, x0, 0.0, 1.0, 1.0);
    CHECK(spectral_radius(jor).value <= 1e-12);
  }
  SUBCASE("gamma = 0 freezes the iteration, radius one") {
    JorSplitting jor = jor_build(inst, net, x0, 1.0, 1.0, 0.5);
    jor.gamma = 0.0;  // analysis-only: the identity iteration
    CHECK(spectral_radius(jor).value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("norm dominance and agreement with the dense eigensolve") {
    const double a = inst.M, e = inst.M;
    const double gamma = practical_gamma(inst.m, inst.M, a, e, net.w_d);
    JorSplitting jor = jor_build(inst, net, x0, a, e, gamma);
    SpectralEstimate sj = spectral_radius(jor);
    CHECK(sj.value <= block_norm(jor) + 1e-8);
    Eigen::EigenSolver<Mat> es(
        oracle::dense_T_jor(inst, net, a, e, gamma, x0));
    CHECK(sj.value ==
          doctest::Approx(es.eigenvalues().cwiseAbs().maxCoeff())
              .epsilon(1e-9));

    EsomSplitting esom = esom_build(inst, net, x0, a, e);
    SpectralEstimate se = spectral_radius(esom);
    CHECK(se.converged);
    CHECK(se.value <= block_norm(esom) + 1e-8);
    Eigen::EigenSolver<Mat> ee(oracle::dense_T_esom(inst, net, a, e, x0));
    CHECK(se.value ==
          doctest::Approx(ee.eigenvalues().cwiseAbs().maxCoeff())
              .epsilon(1e-8));
  }
}

TEST_CASE("dense iteration matrices match the oracle assembly") {
  ProblemInstance inst = quadratic_generate(2, 3, 104);
  Network net = generate_rgg(3, 105);
  Rng rng(8);
  Vec x(6);
  for (int i = 0; i < 6; ++i) x[i] = rng.normal();
  const double a = 1.2, e = 0.9, gamma = 0.7;
  Mat Tj = dense_iteration_matrix(jor_build(inst, net, x, a, e, gamma));
  CHECK((Tj - oracle::dense_T_jor(inst, net, a, e, gamma, x)).norm() <= 1e-11);
  Mat Te = dense_iteration_matrix(esom_build(inst, net, x, a, e));
  CHECK((Te - oracle::dense_T_esom(inst, net, a, e, x)).norm() <= 1e-11);
}

TEST_CASE("outer contraction constants") {
  SUBCASE("hand-evaluated feasible instance") {
    // m=1, M=2, alpha=eps=1000, lambda2=1, beta=phi=2, zeta=15 inside
    // (0.75, 31.25); feasibility needs eps > 4 M (m+M) / m = 24
    ContractionConstants c =
        contraction_constants(1.0, 2.0, 1000.0, 1000.0, 1.0, 15.0, 2.0, 2.0);
    REQUIRE(c.feasible);
    CHECK(c.delta_a == doctest::Approx(4.0 / 3000.0 - 1.0 / 15000.0)
                           .epsilon(1e-13));
    CHECK(c.delta_b ==
          doctest::Approx(std::min(520000.0 / 2000128.0, 2000.0 / 12.0))
              .epsilon(1e-13));
    CHECK(c.delta == doctest::Approx(c.delta_a));
    CHECK(c.delta_tilde < c.delta);
    CHECK(c.eta_bar > 0.0);
    CHECK(c.ratio < 1.0);
    CHECK(c.ratio > 0.0);
  }
  SUBCASE("boundary behavior of delta_a and delta_b") {
    const double m = 1.0, M = 2.0, e = 1000.0, lo = 3.0 / 4.0, hi = e / 32.0;
    ContractionConstants near_lo = contraction_constants(
        m, M, 1.0, e, 1.0, lo * (1.0 + 1e-9), 2.0, 2.0);
    CHECK(near_lo.delta_a > 0.0);
    CHECK(near_lo.delta_a < 1e-6);
    ContractionConstants near_hi = contraction_constants(
        m, M, 1.0, e, 1.0, hi * (1.0 - 1e-9), 2.0, 2.0);
    CHECK(near_hi.delta_b > 0.0);
    CHECK(near_hi.delta_b < 1e-6);
  }
  SUBCASE("infeasibility is explicit, never clamped") {
    ContractionConstants out =
        contraction_constants(1.0, 2.0, 1000.0, 1000.0, 1.0, 60.0, 2.0, 2.0);
    CHECK_FALSE(out.feasible);
    CHECK(out.note.find("zeta") != std::string::npos);
    ContractionConstants empty =
        contraction_constants(1.0, 2.0, 1.0, 10.0, 1.0, 1.0, 2.0, 2.0);
    CHECK_FALSE(empty.feasible);
    CHECK(empty.note.find("eps") != std::string::npos);
  }
  SUBCASE("the default grid search lands on a feasible pick") {
    ContractionConstants c =
        tune_contraction_constants(1.0, 2.0, 100.0, 100.0, 0.8);
    CHECK(c.feasible);
    CHECK(c.ratio < 1.0);
    CHECK(c.eta_bar > 0.0);
  }
}

TEST_CASE("lyapunov monitor") {
  ProblemInstance inst = quadratic_generate(2, 3, 106);
  Network net = generate_rgg(3, 107);
  Vec y_star = quadratic_solution(inst);
  const double a = inst.M, e = inst.M;
  LyapunovMonitor mon(inst, net, a, e, y_star);

  SUBCASE("zero at the primal-dual solution") {
    Vec x_star = mon.x_star();
    Vec q_star = -oracle::block_gradient(inst, x_star);
    CHECK(mon.value(x_star, q_star) <=
          1e-12 * (1.0 + mon.v_star().squaredNorm()));
  }
  SUBCASE("collapses to the dual norm at x = x*, q = 0") {
    CHECK(mon.value(mon.x_star(), Vec::Zero(6)) ==
          doctest::Approx(mon.v_star().squaredNorm()));
  }
  SUBCASE("a non-optimal reference point is rejected") {
    CHECK_THROWS(LyapunovMonitor(inst, net, a, e, y_star.array() + 1.0));
  }
  SUBCASE("monotone along a tightly forced run") {
    SolverConfig cfg;
    cfg.variant = Variant::indo;
    cfg.alpha = a;
    cfg.eps = e;
    cfg.gamma = practical_gamma(inst.m, inst.M, a, e, net.w_d);
    cfg.inner = InnerPolicy::forcing(1e-10);
    RunHooks hooks;
    hooks.lyapunov = [&](const Vec& x, const Vec& q) { return mon.value(x, q); };
    RunResult res = run(cfg, inst, net, 30, hooks);
    REQUIRE_FALSE(res.aborted);
    for (std::size_t k = 1; k < res.trace.size(); ++k)
      CHECK(*res.trace[k].lyapunov <=
            *res.trace[k - 1].lyapunov * (1.0 + 1e-10));
  }
}

TEST_CASE("inequality monitor passes clean runs on both problem kinds") {
  Network net = generate_rgg(3, 109);

  auto check_kind = [&](const ProblemInstance& inst) {
    SolverConfig cfg;
    cfg.variant = Variant::indo;
    cfg.alpha = inst.M;
    cfg.eps = inst.M;
    cfg.gamma = practical_gamma(inst.m, inst.M, cfg.alpha, cfg.eps, net.w_d);
    cfg.inner = InnerPolicy::forcing(0.1);
    RunHooks hooks;
    hooks.record_internals = true;
    RunResult res = run(cfg, inst, net, 20, hooks);
    REQUIRE_FALSE(res.aborted);
    const double zeta = (inst.m + inst.M) / (inst.m * inst.M);
    InequalityReport rep =
        check_inequalities(res, inst, net, cfg.alpha, cfg.eps, zeta);
    CHECK(rep.iterations == 20);
    CHECK(rep.violations.empty());
    return rep;
  };

  SUBCASE("quadratic: the model error is exactly zero") {
    InequalityReport rep = check_kind(quadratic_generate(2, 3, 110));
    CHECK(std::abs(rep.min_model) <= 1e-8);
  }
  SUBCASE("logistic") {
    Rng rng(12);
    Mat features(18, 3);
    Vec labels(18);
    for (int k = 0; k < 18; ++k) {
      for (int j = 0; j < 3; ++j) features(k, j) = rng.normal();
      labels[k] = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    }
    check_kind(logistic_from_samples(features, labels, 3, 1e-2, 3));
  }
  SUBCASE("runs without internals are rejected") {
    ProblemInstance inst = quadratic_generate(2, 3, 111);
    SolverConfig cfg;
    cfg.alpha = cfg.eps = inst.M;
    cfg.gamma = practical_gamma(inst.m, inst.M, cfg.alpha, cfg.eps, net.w_d);
    RunResult res = run(cfg, inst, net, 3);
    CHECK_THROWS_AS(check_inequalities(res, inst, net, cfg.alpha, cfg.eps, 1.0),
                    std::invalid_argument);
  }
}

TEST_CASE("rate report snapshot") {
  ProblemInstance inst = quadratic_generate(2, 4, 112);
  Network net = cycle_network(4);
  SolverConfig cfg;
  cfg.variant = Variant::indo;
  cfg.alpha = inst.M;
  cfg.eps = inst.M;
  cfg.gamma = practical_gamma(inst.m, inst.M, cfg.alpha, cfg.eps, net.w_d);
  cfg.inner = InnerPolicy::forcing(0.1);
  RateReport rep = make_rate_report(inst, net, cfg);
  CHECK(rep.gamma_interval.hi > 0.0);
  CHECK(rep.practical_gamma <= rep.gamma_interval.hi + 1e-12);
  REQUIRE(rep.sigma_T.has_value());
  CHECK(rep.sigma_T->value < 1.0);
  REQUIRE(rep.block_norm_T.has_value());
  CHECK(rep.sigma_T->value <= *rep.block_norm_T + 1e-8);
  CHECK(rep.equal_diagonal);
  REQUIRE(rep.bounds.has_value());
  REQUIRE(rep.ell_bound.has_value());
  CHECK(*rep.ell_bound >= 1);
}
