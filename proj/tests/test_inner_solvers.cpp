#include <doctest.h>

#include "indo/inner_solvers.hpp"
#include "indo/network.hpp"
#include "indo/objectives.hpp"
#include "oracles.hpp"

using namespace indo;

namespace {

Vec random_vec(Rng& rng, Eigen::Index size) {
  Vec v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = rng.normal();
  return v;
}

struct SmallCase {
  ProblemInstance inst;
  Network net;
  Vec x, g;
  double alpha, eps;
};

SmallCase make_case(int n, int N, std::uint64_t seed, double alpha,
                    double eps) {
  SmallCase c{quadratic_generate(n, N, seed), generate_rgg(N, seed + 100),
              Vec(), Vec(), alpha, eps};
  Rng rng(seed + 7);
  c.x = random_vec(rng, static_cast<Eigen::Index>(n) * N);
  c.g = random_vec(rng, static_cast<Eigen::Index>(n) * N);
  return c;
}

}  // namespace

TEST_CASE("splitting identities H = D - G and H = D_E - B") {
  SmallCase c = make_case(3, 4, 2, 2.0, 1.5);
  Mat H = oracle::dense_H(c.inst, c.net, c.alpha, c.eps, c.x);
  Mat D = oracle::dense_D(c.inst, c.net, c.alpha, c.eps, c.x);
  Mat G = oracle::dense_G(c.inst, c.net, c.alpha, c.x);
  CHECK((D - G - H).cwiseAbs().maxCoeff() <= 1e-12 * H.norm());
  Mat DE = oracle::dense_DE(c.inst, c.net, c.alpha, c.eps, c.x);
  Mat B = oracle::dense_B(c.inst, c.net, c.alpha);
  CHECK((DE - B - H).cwiseAbs().maxCoeff() <= 1e-12 * H.norm());

  JorSplitting jor = jor_build(c.inst, c.net, c.x, c.alpha, c.eps, 0.8);
  EsomSplitting esom = esom_build(c.inst, c.net, c.x, c.alpha, c.eps);
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    Vec v = random_vec(rng, c.x.size());
    Vec hv = H * v;
    CHECK((jor.apply_H(v) - hv).norm() <= 1e-10 * (1.0 + hv.norm()));
    CHECK((esom.apply_H(v) - hv).norm() <= 1e-10 * (1.0 + hv.norm()));
  }
  // library D matches the formula-built diagonal
  for (int i = 0; i < c.net.N; ++i)
    for (int j = 0; j < c.inst.n; ++j)
      CHECK(jor.D[i][j] ==
            doctest::Approx(D(i * c.inst.n + j, i * c.inst.n + j))
                .epsilon(1e-14));
}

TEST_CASE("jor_step equals the dense iteration formula") {
  SmallCase c = make_case(2, 3, 4, 1.3, 0.7);
  const double gamma = 0.9;
  JorSplitting jor = jor_build(c.inst, c.net, c.x, c.alpha, c.eps, gamma);
  Mat T = oracle::dense_T_jor(c.inst, c.net, c.alpha, c.eps, gamma, c.x);
  Mat Dinv = oracle::dense_D(c.inst, c.net, c.alpha, c.eps, c.x).inverse();
  Rng rng(9);
  Vec d = random_vec(rng, c.x.size());
  Vec expect = T * d - gamma * Dinv * c.g;
  CHECK((jor_step(jor, d, c.g) - expect).norm() <= 1e-11 * (1.0 + expect.norm()));
}

TEST_CASE("exact solutions are fixed points of both sweeps") {
  SmallCase c = make_case(3, 3, 6, 2.2, 1.1);
  Mat H = oracle::dense_H(c.inst, c.net, c.alpha, c.eps, c.x);
  Vec d_star = H.ldlt().solve(-c.g);
  JorSplitting jor = jor_build(c.inst, c.net, c.x, c.alpha, c.eps, 0.85);
  EsomSplitting esom = esom_build(c.inst, c.net, c.x, c.alpha, c.eps);
  CHECK((jor_step(jor, d_star, c.g) - d_star).norm() <=
        1e-10 * (1.0 + d_star.norm()));
  CHECK((esom_step(esom, d_star, c.g) - d_star).norm() <=
        1e-10 * (1.0 + d_star.norm()));
}

TEST_CASE("decoupled diagonal problems are solved in one sweep") {
  // alpha = 0 removes the network coupling; with diagonal blocks the JOR
  // splitting has G = 0 and gamma = 1 lands on the solution immediately.
  ProblemInstance inst = quadratic_generate(3, 2, 8);
  for (auto& B : inst.B) B = Mat(B.diagonal().asDiagonal());
  Network net = generate_rgg(2, 3);
  Rng rng(1);
  Vec x = random_vec(rng, 6), g = random_vec(rng, 6);
  JorSplitting jor = jor_build(inst, net, x, 0.0, 0.5, 1.0);
  Vec d1 = jor_step(jor, random_vec(rng, 6), g);
  CHECK((jor.apply_H(d1) + g).norm() <= 1e-12 * g.norm());
}

TEST_CASE("scalar blocks have zero G_ii and the hand-computed half step") {
  ProblemInstance inst = quadratic_generate(1, 2, 12);
  Network net = generate_rgg(2, 3);
  Mat G = oracle::dense_G(inst, net, 1.5, Vec::Zero(2));
  CHECK(G(0, 0) == 0.0);
  CHECK(G(1, 1) == 0.0);

  // decoupled scalar system h d = -g: one relaxed sweep from zero gives
  // d = -gamma g / h
  Rng rng(2);
  Vec g = random_vec(rng, 2);
  JorSplitting jor = jor_build(inst, net, Vec::Zero(2), 0.0, 0.25, 0.5);
  Vec d1 = jor_step(jor, Vec::Zero(2), g);
  for (int i = 0; i < 2; ++i) {
    const double h = inst.B[i](0, 0) + 0.25;
    CHECK(d1[i] == doctest::Approx(-0.5 * g[i] / h).epsilon(1e-14));
  }
}

TEST_CASE("esom with alpha = 0 is the exact proximal Newton step") {
  SmallCase c = make_case(3, 3, 14, 0.0, 0.9);
  EsomSplitting esom = esom_build(c.inst, c.net, c.x, 0.0, c.eps);
  InnerResult r = inner_solve(esom, c.g, InnerPolicy::fixed(1));
  CHECK(r.residual <= 1e-11 * c.g.norm());
}

TEST_CASE("esom directions reproduce the truncated series") {
  SmallCase c = make_case(2, 4, 16, 1.7, 0.8);
  Mat DEinv = oracle::dense_DE(c.inst, c.net, c.alpha, c.eps, c.x).inverse();
  Mat B = oracle::dense_B(c.inst, c.net, c.alpha);
  EsomSplitting esom = esom_build(c.inst, c.net, c.x, c.alpha, c.eps);
  for (int ell : {1, 2, 3}) {
    Vec series = Vec::Zero(c.g.size());
    Mat P = Mat::Identity(c.g.size(), c.g.size());
    for (int t = 0; t <= ell; ++t) {
      series -= P * (DEinv * c.g);
      P = P * (DEinv * B);
    }
    InnerResult r = inner_solve(esom, c.g, InnerPolicy::fixed(ell));
    CHECK((r.d - series).norm() <= 1e-10 * (1.0 + series.norm()));
    CHECK(r.ell_used == ell);
    CHECK(r.exchanges == ell);
  }
}

TEST_CASE("zero gradient short-circuits to the zero direction") {
  SmallCase c = make_case(2, 3, 18, 1.0, 1.0);
  JorSplitting jor = jor_build(c.inst, c.net, c.x, c.alpha, c.eps, 0.9);
  EsomSplitting esom = esom_build(c.inst, c.net, c.x, c.alpha, c.eps);
  Vec zero = Vec::Zero(c.g.size());
  for (const InnerPolicy& policy :
       {InnerPolicy::fixed(3), InnerPolicy::forcing(0.1)}) {
    InnerResult rj = inner_solve(jor, zero, policy, zero);
    CHECK(rj.d.norm() == 0.0);
    CHECK(rj.residual == 0.0);
    CHECK(rj.ell_used == 0);
    CHECK(rj.exchanges == 0);
    InnerResult re = inner_solve(esom, zero, policy);
    CHECK(re.d.norm() == 0.0);
    CHECK(re.ell_used == 0);
  }
}

TEST_CASE("forcing mode stops at the requested relative residual") {
  SmallCase c = make_case(3, 4, 20, 2.0, 1.0);
  JorSplitting jor = jor_build(c.inst, c.net, c.x, c.alpha, c.eps, 0.8);
  EsomSplitting esom = esom_build(c.inst, c.net, c.x, c.alpha, c.eps);
  const Vec zero = Vec::Zero(c.g.size());
  for (double eta : {0.5, 0.05, 1e-3}) {
    InnerResult rj = inner_solve(jor, c.g, InnerPolicy::forcing(eta), zero);
    CHECK(rj.residual <= eta * c.g.norm());
    CHECK(rj.exchanges == rj.ell_used);
    InnerResult re = inner_solve(esom, c.g, InnerPolicy::forcing(eta));
    CHECK(re.residual <= eta * c.g.norm());
  }

  SUBCASE("a warm start already inside the tolerance costs nothing") {
    Mat H = oracle::dense_H(c.inst, c.net, c.alpha, c.eps, c.x);
    Vec d_star = H.ldlt().solve(-c.g);
    InnerResult r = inner_solve(jor, c.g, InnerPolicy::forcing(0.5), d_star);
    CHECK(r.ell_used == 0);
    CHECK((r.d - d_star).norm() == 0.0);
  }

  SUBCASE("the infinity-norm option gates on sup norms") {
    InnerPolicy p = InnerPolicy::forcing(0.25);
    InnerResult r = inner_solve(jor, c.g, p, zero, ForcingNorm::inf);
    CHECK((jor.apply_H(r.d) + c.g).lpNorm<Eigen::Infinity>() <=
          0.25 * c.g.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("inner error evolves as c <- T c for both methods") {
  SmallCase c = make_case(2, 3, 22, 1.4, 1.2);
  Mat H = oracle::dense_H(c.inst, c.net, c.alpha, c.eps, c.x);
  Vec d_star = H.ldlt().solve(-c.g);

  const double gamma = 0.75;
  JorSplitting jor = jor_build(c.inst, c.net, c.x, c.alpha, c.eps, gamma);
  Mat Tj = oracle::dense_T_jor(c.inst, c.net, c.alpha, c.eps, gamma, c.x);
  Rng rng(3);
  Vec d = random_vec(rng, c.g.size());
  for (int l = 0; l < 10; ++l) {
    Vec next = jor_step(jor, d, c.g);
    CHECK((next - d_star - Tj * (d - d_star)).norm() <= 1e-9);
    d = next;
  }

  EsomSplitting esom = esom_build(c.inst, c.net, c.x, c.alpha, c.eps);
  Mat Te = oracle::dense_T_esom(c.inst, c.net, c.alpha, c.eps, c.x);
  d = random_vec(rng, c.g.size());
  for (int l = 0; l < 10; ++l) {
    Vec next = esom_step(esom, d, c.g);
    CHECK((next - d_star - Te * (d - d_star)).norm() <= 1e-9);
    d = next;
  }
}

TEST_CASE("residuals contract over fifty sweeps inside the safe interval") {
  for (std::uint64_t seed : {30u, 31u, 32u}) {
    SmallCase c = make_case(2, 4, seed, 0.0, 0.0);
    c.alpha = c.inst.M;
    c.eps = c.inst.M;
    const double gamma =
        0.9 * 2.0 * (c.inst.m + c.alpha * (1.0 - c.net.w_d) + c.eps) /
        (c.inst.M + c.eps + c.alpha * (1.0 - c.net.w_m) +
         c.alpha * (1.0 - c.net.w_d));
    JorSplitting jor = jor_build(c.inst, c.net, c.x, c.alpha, c.eps, gamma);
    EsomSplitting esom = esom_build(c.inst, c.net, c.x, c.alpha, c.eps);
    InnerResult rj =
        inner_solve(jor, c.g, InnerPolicy::fixed(50), Vec::Zero(c.g.size()));
    InnerResult re = inner_solve(esom, c.g, InnerPolicy::fixed(50));
    CHECK(rj.residual < c.g.norm());
    CHECK(re.residual < c.g.norm());
  }
}

TEST_CASE("the forcing cap reports divergence outside the safe interval") {
  // two equal scalar nodes make the norm bound tight, so 1.5 gamma_max
  // genuinely diverges
  ProblemInstance inst;
  inst.kind = ProblemKind::quadratic;
  inst.n = 1;
  inst.N = 2;
  inst.B = {Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 1.0)};
  inst.b = {Vec::Constant(1, 1.0), Vec::Constant(1, 2.0)};
  inst.m = inst.M = 1.0;
  Network net = network_from_edges(2, {{0, 1}});
  const double alpha = 1.0, eps = 1.0;
  const double gamma_max = 2.0 * (1.0 + 0.5 * alpha + eps) /
                           (1.0 + eps + 2.0 * alpha * 0.5);
  JorSplitting jor =
      jor_build(inst, net, Vec::Zero(2), alpha, eps, 1.5 * gamma_max);
  Vec g(2);
  g << 1.0, -2.0;
  CHECK_THROWS_AS(
      inner_solve(jor, g, InnerPolicy::forcing(1e-8, 200), Vec::Zero(2)),
      ForcingCapError);
}

TEST_CASE("initial solve makes at least one sweep and drops the sup norm") {
  SmallCase c = make_case(2, 3, 36, 2.0, 2.0);
  JorSplitting jor = jor_build(c.inst, c.net, c.x, c.alpha, c.eps, 0.8);
  InnerResult r = jor_initial_solve(jor, c.g);
  CHECK(r.ell_used >= 1);
  CHECK((jor.apply_H(r.d) + c.g).lpNorm<Eigen::Infinity>() <
        c.g.lpNorm<Eigen::Infinity>());
}
