#include "indo/inner_solvers.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace indo {

namespace {

double forcing_residual(const Vec& r, ForcingNorm norm) {
  return norm == ForcingNorm::two ? r.norm()
                                  : r.lpNorm<Eigen::Infinity>();
}

}  // namespace

Vec JorSplitting::apply_H(const Vec& v) const {
  return apply_frozen_hessian(hess, *net, alpha, eps, v);
}

Vec EsomSplitting::apply_H(const Vec& v) const {
  return apply_frozen_hessian(hess, *net, alpha, eps, v);
}

JorSplitting jor_build(std::vector<HessianSnapshot> hess, const Network& net,
                       double alpha, double eps, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("jor_build: gamma must be > 0");
  JorSplitting s;
  s.hess = std::move(hess);
  s.net = &net;
  s.alpha = alpha;
  s.eps = eps;
  s.gamma = gamma;
  s.D.resize(net.N);
  for (int i = 0; i < net.N; ++i) {
    Vec d = s.hess[i].diagonal();
    d.array() += eps + alpha * (1.0 - net.W(i, i));
    if (d.minCoeff() <= 0.0)
      throw std::runtime_error(
          "jor_build: nonpositive diagonal entry; local Hessian is not "
          "positive definite");
    s.D[i] = std::move(d);
  }
  return s;
}

JorSplitting jor_build(const ProblemInstance& inst, const Network& net,
                       const Vec& x_point, double alpha, double eps,
                       double gamma) {
  std::vector<HessianSnapshot> hess;
  hess.reserve(net.N);
  for (int i = 0; i < net.N; ++i)
    hess.push_back(inst.hessian_snapshot(
        i, x_point.segment(static_cast<Eigen::Index>(i) * inst.n, inst.n)));
  return jor_build(std::move(hess), net, alpha, eps, gamma);
}

Vec jor_step(const JorSplitting& s, const Vec& d, const Vec& g) {
  const Network& net = *s.net;
  const int n = static_cast<int>(s.D[0].size());
  Vec out(d.size());
  for (int i = 0; i < net.N; ++i) {
    auto di = d.segment(static_cast<Eigen::Index>(i) * n, n);
    // G_ii d_i = diag(hess_i) d_i - hess_i d_i
    Vec acc = s.hess[i].diagonal().cwiseProduct(di) - s.hess[i].apply(di);
    for (int j : net.neighbors[i])
      acc.noalias() +=
          s.alpha * net.W(i, j) * d.segment(static_cast<Eigen::Index>(j) * n, n);
    acc -= g.segment(static_cast<Eigen::Index>(i) * n, n);
    out.segment(static_cast<Eigen::Index>(i) * n, n) =
        s.gamma * acc.cwiseQuotient(s.D[i]) + (1.0 - s.gamma) * di;
  }
  return out;
}

EsomSplitting esom_build(std::vector<HessianSnapshot> hess, const Network& net,
                         double alpha, double eps) {
  EsomSplitting s;
  s.hess = std::move(hess);
  s.net = &net;
  s.alpha = alpha;
  s.eps = eps;
  s.factor.reserve(net.N);
  for (int i = 0; i < net.N; ++i) {
    Mat block = s.hess[i].dense();
    block.diagonal().array() += 2.0 * alpha * (1.0 - net.W(i, i)) + eps;
    s.factor.emplace_back(block);
    if (s.factor.back().info() != Eigen::Success)
      throw std::runtime_error(
          "esom_build: block factorization failed; local Hessian is not "
          "positive definite");
  }
  return s;
}

EsomSplitting esom_build(const ProblemInstance& inst, const Network& net,
                         const Vec& x_point, double alpha, double eps) {
  std::vector<HessianSnapshot> hess;
  hess.reserve(net.N);
  for (int i = 0; i < net.N; ++i)
    hess.push_back(inst.hessian_snapshot(
        i, x_point.segment(static_cast<Eigen::Index>(i) * inst.n, inst.n)));
  return esom_build(std::move(hess), net, alpha, eps);
}

Vec esom_step(const EsomSplitting& s, const Vec& d, const Vec& g) {
  const Network& net = *s.net;
  const int n = static_cast<int>(g.size()) / net.N;
  Vec out(d.size());
  for (int i = 0; i < net.N; ++i) {
    Vec rhs = s.alpha * (1.0 - net.W(i, i)) *
              d.segment(static_cast<Eigen::Index>(i) * n, n);
    for (int j : net.neighbors[i])
      rhs.noalias() +=
          s.alpha * net.W(i, j) * d.segment(static_cast<Eigen::Index>(j) * n, n);
    rhs -= g.segment(static_cast<Eigen::Index>(i) * n, n);
    out.segment(static_cast<Eigen::Index>(i) * n, n) = s.factor[i].solve(rhs);
  }
  return out;
}

InnerResult inner_solve(const JorSplitting& s, const Vec& g,
                        const InnerPolicy& policy, const Vec& d0,
                        ForcingNorm norm) {
  InnerResult res;
  if (g.norm() == 0.0) {
    res.d = Vec::Zero(g.size());
    return res;
  }
  if (policy.mode == InnerPolicy::Mode::fixed_count) {
    if (policy.ell < 1)
      throw std::invalid_argument("inner_solve: fixed count needs ell >= 1");
    res.d = d0;
    for (int l = 0; l < policy.ell; ++l) res.d = jor_step(s, res.d, g);
    res.ell_used = policy.ell;
    res.exchanges = policy.ell;
    res.residual = (s.apply_H(res.d) + g).norm();
    return res;
  }
  // Forcing mode: stop at the first iterate with ||H d + g|| <= eta ||g||.
  const double target = policy.eta * forcing_residual(g, norm);
  res.d = d0;
  Vec r = s.apply_H(res.d) + g;
  double rn = forcing_residual(r, norm);
  while (rn > target) {
    if (res.ell_used >= policy.cap) throw ForcingCapError(rn, res.ell_used);
    res.d = jor_step(s, res.d, g);
    ++res.ell_used;
    ++res.exchanges;
    r = s.apply_H(res.d) + g;
    rn = forcing_residual(r, norm);
  }
  res.residual = r.norm();
  return res;
}

InnerResult inner_solve(const EsomSplitting& s, const Vec& g,
                        const InnerPolicy& policy, ForcingNorm norm) {
  InnerResult res;
  if (g.norm() == 0.0) {
    res.d = Vec::Zero(g.size());
    return res;
  }
  const Vec zero = Vec::Zero(g.size());
  res.d = esom_step(s, zero, g);  // d^0 = -D_E^{-1} g, no exchange
  if (policy.mode == InnerPolicy::Mode::fixed_count) {
    if (policy.ell < 1)
      throw std::invalid_argument("inner_solve: fixed count needs ell >= 1");
    for (int l = 0; l < policy.ell; ++l) res.d = esom_step(s, res.d, g);
    res.ell_used = policy.ell;
    res.exchanges = policy.ell;
    res.residual = (s.apply_H(res.d) + g).norm();
    return res;
  }
  const double target = policy.eta * forcing_residual(g, norm);
  Vec r = s.apply_H(res.d) + g;
  double rn = forcing_residual(r, norm);
  while (rn > target) {
    if (res.ell_used >= policy.cap) throw ForcingCapError(rn, res.ell_used);
    res.d = esom_step(s, res.d, g);
    ++res.ell_used;
    ++res.exchanges;
    r = s.apply_H(res.d) + g;
    rn = forcing_residual(r, norm);
  }
  res.residual = r.norm();
  return res;
}

InnerResult jor_initial_solve(const JorSplitting& s, const Vec& g, int cap) {
  InnerResult res;
  res.d = Vec::Zero(g.size());
  const double target = g.lpNorm<Eigen::Infinity>();
  if (target == 0.0) return res;
  // ||H 0 + g||_inf equals the target, so at least one sweep is required and
  // the stop is on strict decrease.
  for (int l = 0; l < cap; ++l) {
    res.d = jor_step(s, res.d, g);
    ++res.ell_used;
    ++res.exchanges;
    Vec r = s.apply_H(res.d) + g;
    if (r.lpNorm<Eigen::Infinity>() < target) {
      res.residual = r.norm();
      return res;
    }
  }
  throw ForcingCapError((s.apply_H(res.d) + g).lpNorm<Eigen::Infinity>(),
                        res.ell_used);
}

}  // namespace indo
