#include "indo/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace indo {

namespace {

constexpr double kZeroEigTol = 1e-10;
constexpr int kDenseGate = 2000;  // largest nN assembled densely

double spectral_norm(const Mat& A) {
  return Eigen::BDCSVD<Mat>(A).singularValues()[0];
}

Mat dense_node_G(const HessianSnapshot& h) {
  Mat Gii = h.dense();
  Gii = Mat(Gii.diagonal().asDiagonal()) - Gii;
  return Gii;
}

// |lambda|_max via the norm-ratio of a doubled application, which settles
// even when +-lambda pairs are present.
SpectralEstimate power_iteration(const std::function<Vec(const Vec&)>& apply,
                                 Eigen::Index dim) {
  Vec v(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    v[i] = 1.0 + 1e-3 * std::sin(static_cast<double>(i));
  v.normalize();
  double prev = -1.0;
  for (int t = 0; t < 100000; ++t) {
    Vec w = apply(apply(v));
    double nw = w.norm();
    if (nw == 0.0) return {0.0, true};
    double est = std::sqrt(nw);
    if (t > 2 && std::abs(est - prev) <= 1e-10 * std::max(1.0, est))
      return {est, true};
    prev = est;
    v = w / nw;
  }
  return {prev, false};
}

}  // namespace

GammaInterval jor_gamma_interval(double m, double M, double alpha, double eps,
                                 double w_d, double w_m) {
  GammaInterval iv;
  iv.lo = 0.0;
  iv.hi = 2.0 * (m + alpha * (1.0 - w_d) + eps) /
          (M + eps + alpha * (1.0 - w_m) + alpha * (1.0 - w_d));
  return iv;
}

double practical_gamma(double m, double M, double alpha, double eps,
                       double w_d) {
  return 2.0 * (m + eps + alpha * (1.0 - w_d)) / (M + 2.0 * alpha + eps);
}

double block_norm(const Mat& T, int n) {
  const int N = static_cast<int>(T.rows()) / n;
  double worst = 0.0;
  for (int i = 0; i < N; ++i) {
    double row = 0.0;
    for (int j = 0; j < N; ++j)
      row += spectral_norm(T.block(static_cast<Eigen::Index>(i) * n,
                                   static_cast<Eigen::Index>(j) * n, n, n));
    worst = std::max(worst, row);
  }
  return worst;
}

double block_norm(const JorSplitting& s) {
  const Network& net = *s.net;
  const int n = static_cast<int>(s.D[0].size());
  double worst = 0.0;
  for (int i = 0; i < net.N; ++i) {
    Vec dinv = s.D[i].cwiseInverse();
    Mat diag_block = s.gamma * dinv.asDiagonal() * dense_node_G(s.hess[i]);
    diag_block.diagonal().array() += 1.0 - s.gamma;
    double row = spectral_norm(diag_block);
    // off-diagonal blocks are gamma alpha w_ij D_ii^{-1}, a diagonal matrix
    const double dmax = dinv.maxCoeff();
    for (int j : net.neighbors[i]) row += s.gamma * s.alpha * net.W(i, j) * dmax;
    worst = std::max(worst, row);
  }
  return worst;
}

double block_norm(const EsomSplitting& s) {
  const Network& net = *s.net;
  double worst = 0.0;
  for (int i = 0; i < net.N; ++i) {
    Mat block = s.factor[i].matrixL();
    // lambda_min of [D_E]_ii from its Cholesky factor
    Mat de = s.factor[i].reconstructedMatrix();
    Eigen::SelfAdjointEigenSolver<Mat> es(de, Eigen::EigenvaluesOnly);
    const double lam_min = es.eigenvalues().minCoeff();
    // ||[D_E]_ii^{-1} c I||_2 = c / lambda_min; the B row sums to
    // 2 alpha (1 - w_ii)
    worst = std::max(worst,
                     2.0 * s.alpha * (1.0 - net.W(i, i)) / lam_min);
  }
  return worst;
}

SplittingBounds splitting_norm_bounds(double m, double M, double alpha,
                                      double eps, double w) {
  SplittingBounds b;
  b.esom = 2.0 * alpha * (1.0 - w) / (2.0 * alpha * (1.0 - w) + eps + m);
  b.indo = (M - m + alpha * (1.0 - w)) / (alpha * (1.0 - w) + eps + m);
  b.indo_valid = eps > std::max(M - 2.0 * m, 0.0);
  return b;
}

int inner_iteration_bound(double eta, double m, double M, double alpha,
                          double eps, double w_d, double w_m, double sigma_T) {
  if (!(eta > 0.0))
    throw std::invalid_argument("inner_iteration_bound: eta must be > 0");
  if (!(sigma_T > 0.0 && sigma_T < 1.0))
    throw std::domain_error(
        "inner_iteration_bound: no finite bound for sigma(T) >= 1");
  const double c = (M + 2.0 + eps) / (m + eps) *
                   std::sqrt((eps + M + alpha * (1.0 - w_m)) /
                             (eps + m + alpha * (1.0 - w_d)));
  if (eta >= c) return 1;
  // smallest ell with c sigma^ell <= eta; both logs are negative here
  const double raw = std::log(eta / c) / std::log(sigma_T);
  return std::max(1, static_cast<int>(std::ceil(raw)));
}

Mat dense_iteration_matrix(const JorSplitting& s) {
  const Network& net = *s.net;
  const int n = static_cast<int>(s.D[0].size());
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * net.N;
  if (dim > kDenseGate)
    throw std::invalid_argument("dense_iteration_matrix: nN beyond desk scale");
  Mat T = Mat::Zero(dim, dim);
  for (int i = 0; i < net.N; ++i) {
    Vec dinv = s.D[i].cwiseInverse();
    Mat diag_block = s.gamma * dinv.asDiagonal() * dense_node_G(s.hess[i]);
    diag_block.diagonal().array() += 1.0 - s.gamma;
    T.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(i) * n,
            n, n) = diag_block;
    for (int j : net.neighbors[i])
      T.block(static_cast<Eigen::Index>(i) * n,
              static_cast<Eigen::Index>(j) * n, n, n) =
          Mat((s.gamma * s.alpha * net.W(i, j) * dinv).asDiagonal());
  }
  return T;
}

Mat dense_iteration_matrix(const EsomSplitting& s) {
  const Network& net = *s.net;
  const int n = static_cast<int>(s.factor[0].matrixLLT().rows());
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * net.N;
  if (dim > kDenseGate)
    throw std::invalid_argument("dense_iteration_matrix: nN beyond desk scale");
  Mat T = Mat::Zero(dim, dim);
  for (int i = 0; i < net.N; ++i) {
    Mat inv = s.factor[i].solve(Mat::Identity(n, n));
    T.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(i) * n,
            n, n) = s.alpha * (1.0 - net.W(i, i)) * inv;
    for (int j : net.neighbors[i])
      T.block(static_cast<Eigen::Index>(i) * n,
              static_cast<Eigen::Index>(j) * n, n, n) =
          s.alpha * net.W(i, j) * inv;
  }
  return T;
}

SpectralEstimate spectral_radius(const JorSplitting& s) {
  const Network& net = *s.net;
  const int n = static_cast<int>(s.D[0].size());
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * net.N;
  if (dim <= kDenseGate) {
    // T_gamma = D^{-1} C_gamma with C_gamma = gamma G + (1 - gamma) D shares
    // its spectrum with the symmetric D^{-1/2} C_gamma D^{-1/2}.
    Vec dfull(dim);
    for (int i = 0; i < net.N; ++i)
      dfull.segment(static_cast<Eigen::Index>(i) * n, n) = s.D[i];
    Mat C = Mat::Zero(dim, dim);
    for (int i = 0; i < net.N; ++i) {
      C.block(static_cast<Eigen::Index>(i) * n,
              static_cast<Eigen::Index>(i) * n, n, n) =
          s.gamma * dense_node_G(s.hess[i]);
      for (int j : net.neighbors[i])
        C.block(static_cast<Eigen::Index>(i) * n,
                static_cast<Eigen::Index>(j) * n, n, n) =
            Mat((s.gamma * s.alpha * net.W(i, j) * Vec::Ones(n)).asDiagonal());
    }
    C.diagonal() += (1.0 - s.gamma) * dfull;
    Vec dsqrt_inv = dfull.cwiseSqrt().cwiseInverse();
    Mat S = dsqrt_inv.asDiagonal() * C * dsqrt_inv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().cwiseAbs().maxCoeff(), true};
  }
  const Vec zero = Vec::Zero(dim);
  return power_iteration([&](const Vec& v) { return jor_step(s, v, zero); },
                         dim);
}

SpectralEstimate spectral_radius(const EsomSplitting& s) {
  const Eigen::Index dim =
      static_cast<Eigen::Index>(s.factor[0].matrixLLT().rows()) * s.net->N;
  const Vec zero = Vec::Zero(dim);
  return power_iteration([&](const Vec& v) { return esom_step(s, v, zero); },
                         dim);
}

ContractionConstants contraction_constants(double m, double M, double alpha,
                                           double eps, double lambda2,
                                           double zeta, double beta, double phi,
                                           double delta_tilde_ratio) {
  if (!(beta > 1.0) || !(phi > 1.0))
    throw std::invalid_argument("contraction_constants: need beta, phi > 1");
  if (!(delta_tilde_ratio > 0.0 && delta_tilde_ratio < 1.0))
    throw std::invalid_argument(
        "contraction_constants: delta_tilde_ratio must lie in (0, 1)");
  ContractionConstants c;
  c.zeta = zeta;
  c.beta = beta;
  c.phi = phi;
  const double zeta_lo = (m + M) / (2.0 * m * M);
  const double zeta_hi = eps / (8.0 * M * M);
  if (zeta_hi <= zeta_lo) {
    c.note = "infeasible: the zeta interval is empty, requires eps > 4 M (m + M) / m";
    return c;
  }
  if (!(zeta > zeta_lo && zeta < zeta_hi)) {
    c.note = "infeasible: zeta outside (" + std::to_string(zeta_lo) + ", " +
             std::to_string(zeta_hi) + ")";
    return c;
  }
  c.feasible = true;
  c.delta_a = 2.0 * m * M / ((m + M) * eps) - 1.0 / (eps * zeta);
  const double b1 =
      (alpha * eps - 8.0 * M * M * alpha * zeta) * (phi - 1.0) * (beta - 1.0) *
      lambda2 /
      (beta * eps * eps * (phi - 1.0) +
       8.0 * M * M * beta * (beta - 1.0) * phi);
  const double b2 = 2.0 * alpha * lambda2 / ((m + M) * phi * beta);
  c.delta_b = std::min(b1, b2);
  c.delta = std::min(c.delta_a, c.delta_b);
  c.delta_tilde = delta_tilde_ratio * c.delta;
  const double denom =
      alpha * zeta + c.delta * beta * phi / ((phi - 1.0) * lambda2);
  const double eta2 =
      std::min(c.delta_tilde * alpha * eps /
                   (4.0 * (M + 2.0 * alpha) * (M + 2.0 * alpha) * denom),
               c.delta_tilde / (8.0 * denom));
  c.eta_bar = std::sqrt(eta2);
  c.ratio = (1.0 + c.delta_tilde) / (1.0 + c.delta);
  return c;
}

ContractionConstants tune_contraction_constants(double m, double M,
                                                double alpha, double eps,
                                                double lambda2) {
  const double zeta_lo = (m + M) / (2.0 * m * M);
  const double zeta_hi = eps / (8.0 * M * M);
  ContractionConstants best;
  best.note = "infeasible: the zeta interval is empty, requires eps > 4 M (m + M) / m";
  if (zeta_hi <= zeta_lo) return best;
  const double grid[] = {1.5, 2.0, 3.0, 5.0, 8.0};
  for (double beta : grid) {
    for (double phi : grid) {
      for (int t = 1; t <= 9; ++t) {
        const double zeta = zeta_lo + (zeta_hi - zeta_lo) * (t / 10.0);
        ContractionConstants c =
            contraction_constants(m, M, alpha, eps, lambda2, zeta, beta, phi);
        if (c.feasible && (!best.feasible || c.delta > best.delta)) best = c;
      }
    }
  }
  return best;
}

ConsensusSqrt::ConsensusSqrt(const Network& net) : N_(net.N) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat::Identity(N_, N_) - net.W);
  U_ = es.eigenvectors();
  lam_ = es.eigenvalues().cwiseMax(0.0);
}

Vec ConsensusSqrt::sqrt_apply(const Vec& v, int n) const {
  Mat V(N_, n);
  for (int i = 0; i < N_; ++i)
    V.row(i) = v.segment(static_cast<Eigen::Index>(i) * n, n);
  Mat Y = U_ * (lam_.cwiseSqrt().asDiagonal() * (U_.transpose() * V));
  Vec out(static_cast<Eigen::Index>(n) * N_);
  for (int i = 0; i < N_; ++i)
    out.segment(static_cast<Eigen::Index>(i) * n, n) = Y.row(i);
  return out;
}

Vec ConsensusSqrt::pinv_sqrt_apply(const Vec& v, int n) const {
  Vec f(N_);
  for (int i = 0; i < N_; ++i)
    f[i] = lam_[i] > kZeroEigTol ? 1.0 / std::sqrt(lam_[i]) : 0.0;
  Mat V(N_, n);
  for (int i = 0; i < N_; ++i)
    V.row(i) = v.segment(static_cast<Eigen::Index>(i) * n, n);
  Mat Y = U_ * (f.asDiagonal() * (U_.transpose() * V));
  Vec out(static_cast<Eigen::Index>(n) * N_);
  for (int i = 0; i < N_; ++i)
    out.segment(static_cast<Eigen::Index>(i) * n, n) = Y.row(i);
  return out;
}

double ConsensusSqrt::nullspace_norm(const Vec& v, int n) const {
  Mat V(N_, n);
  for (int i = 0; i < N_; ++i)
    V.row(i) = v.segment(static_cast<Eigen::Index>(i) * n, n);
  Mat C = U_.transpose() * V;
  double acc = 0.0;
  for (int i = 0; i < N_; ++i)
    if (lam_[i] <= kZeroEigTol) acc += C.row(i).squaredNorm();
  return std::sqrt(acc);
}

LyapunovMonitor::LyapunovMonitor(const ProblemInstance& inst,
                                 const Network& net, double alpha, double eps,
                                 const Vec& y_star)
    : sq_(net), alpha_eps_(alpha * eps), n_(inst.n), N_(inst.N) {
  x_star_.resize(static_cast<Eigen::Index>(n_) * N_);
  Vec grad_star(static_cast<Eigen::Index>(n_) * N_);
  for (int i = 0; i < N_; ++i) {
    x_star_.segment(static_cast<Eigen::Index>(i) * n_, n_) = y_star;
    grad_star.segment(static_cast<Eigen::Index>(i) * n_, n_) =
        inst.gradient(i, y_star);
  }
  if (sq_.nullspace_norm(grad_star, n_) > 1e-8 * (1.0 + grad_star.norm()))
    throw std::runtime_error(
        "lyapunov: grad f(x*) leaves the range of (I - W)^{1/2}; the supplied "
        "point is not optimal");
  v_star_ = sq_.pinv_sqrt_apply(-grad_star, n_);
}

double LyapunovMonitor::value(const Vec& x, const Vec& q) const {
  Vec v = sq_.pinv_sqrt_apply(q, n_);
  return (v - v_star_).squaredNorm() +
         alpha_eps_ * (x - x_star_).squaredNorm();
}

double lyapunov_value(const Vec& x, const Vec& q, const ProblemInstance& inst,
                      const Network& net, double alpha, double eps,
                      const Vec& y_star) {
  return LyapunovMonitor(inst, net, alpha, eps, y_star).value(x, q);
}

InequalityReport check_inequalities(const RunResult& run,
                                    const ProblemInstance& inst,
                                    const Network& net, double alpha,
                                    double eps, double zeta) {
  if (run.internals.empty())
    throw std::invalid_argument(
        "check_inequalities: the run was executed without internals "
        "recording");
  if (!(zeta > 0.0))
    throw std::invalid_argument("check_inequalities: zeta must be > 0");

  const int n = inst.n;
  const double m = inst.m, M = inst.M, L = inst.L;
  const Vec y_star = centralized_minimizer(inst);
  LyapunovMonitor lyap(inst, net, alpha, eps, y_star);
  Vec grad_star(static_cast<Eigen::Index>(n) * inst.N);
  for (int i = 0; i < inst.N; ++i)
    grad_star.segment(static_cast<Eigen::Index>(i) * n, n) =
        inst.gradient(i, y_star);

  InequalityReport rep;
  const double inf = std::numeric_limits<double>::infinity();
  rep.min_model = rep.min_forcing = rep.min_step_error = rep.min_descent = inf;

  auto record = [&](int k, const char* name, double margin, double scale,
                    double& min_slot) {
    min_slot = std::min(min_slot, margin);
    if (margin < -1e-8 * (1.0 + scale))
      rep.violations.push_back({k, name, margin});
  };

  auto block_gradient = [&](const Vec& x) {
    Vec g(x.size());
    for (int i = 0; i < inst.N; ++i)
      g.segment(static_cast<Eigen::Index>(i) * n, n) = inst.gradient(
          i, x.segment(static_cast<Eigen::Index>(i) * n, n));
    return g;
  };

  for (std::size_t k = 0; k < run.internals.size(); ++k) {
    const IterationInternals& it = run.internals[k];
    const Vec x_next = it.x + it.d;
    const Vec grad_k = block_gradient(it.x);
    const Vec grad_next = block_gradient(x_next);

    Vec hd(it.d.size());
    for (int i = 0; i < inst.N; ++i) {
      auto di = it.d.segment(static_cast<Eigen::Index>(i) * n, n);
      hd.segment(static_cast<Eigen::Index>(i) * n, n) =
          inst.hessian_snapshot(
                  i, it.x.segment(static_cast<Eigen::Index>(i) * n, n))
              .apply(di);
    }

    // (a) second-order model error against min{2M, (L/2)||d||} ||d||
    const double dn = it.d.norm();
    const double model_lhs = (grad_k - grad_next + hd).norm();
    const double model_rhs = std::min(2.0 * M, 0.5 * L * dn) * dn;
    record(static_cast<int>(k), "model", model_rhs - model_lhs,
           model_rhs + model_lhs, rep.min_model);

    // (b) forcing condition, meaningful when a forcing term was configured
    const double gn = it.g.norm();
    const double rn = it.r.norm();
    if (it.eta > 0.0)
      record(static_cast<int>(k), "forcing", it.eta * gn - rn,
             it.eta * gn + rn, rep.min_forcing);

    // (c) step-error bound ||e|| <= min{2M, (L/2)||d||} ||d|| + eta ||g||
    const Vec e = hd + grad_k - grad_next - it.r;
    const double eta_eff = it.eta > 0.0 ? it.eta : rn / std::max(gn, 1e-300);
    const double step_rhs = model_rhs + eta_eff * gn;
    record(static_cast<int>(k), "step_error", step_rhs - e.norm(),
           step_rhs + e.norm(), rep.min_step_error);

    // (d) Lyapunov descent with the supplied zeta
    const Vec q_next = it.q + consensus_laplacian(net, x_next, n, alpha);
    const double u_k = lyap.value(it.x, it.q);
    const double u_next = lyap.value(x_next, q_next);
    const Vec dx = x_next - lyap.x_star();
    const double cx = 2.0 * alpha * m * M / (m + M) - alpha / zeta;
    const double weighted =
        cx * dx.squaredNorm() +
        alpha * alpha * dx.dot(consensus_laplacian(net, dx, n, 1.0));
    const double rhs_d = -2.0 * alpha / (m + M) *
                             (grad_next - grad_star).squaredNorm() -
                         weighted - alpha * eps * dn * dn +
                         alpha * zeta * e.squaredNorm();
    const double lhs_d = u_next - u_k;
    record(static_cast<int>(k), "descent", rhs_d - lhs_d,
           std::abs(rhs_d) + std::abs(lhs_d) + u_k, rep.min_descent);
  }
  rep.iterations = static_cast<int>(run.internals.size());
  return rep;
}

RateReport make_rate_report(const ProblemInstance& inst, const Network& net,
                            const SolverConfig& config) {
  RateReport rep;
  rep.gamma_interval = jor_gamma_interval(inst.m, inst.M, config.alpha,
                                          config.eps, net.w_d, net.w_m);
  rep.practical_gamma =
      practical_gamma(inst.m, inst.M, config.alpha, config.eps, net.w_d);

  const Vec x0 = Vec::Zero(static_cast<Eigen::Index>(inst.n) * inst.N);
  if (config.variant == Variant::indo) {
    JorSplitting split =
        jor_build(inst, net, x0, config.alpha, config.eps, config.gamma);
    rep.sigma_T = spectral_radius(split);
    rep.block_norm_T = block_norm(split);
  } else {
    EsomSplitting split = esom_build(inst, net, x0, config.alpha, config.eps);
    rep.sigma_T = spectral_radius(split);
    rep.block_norm_T = block_norm(split);
  }

  rep.equal_diagonal = (net.w_d - net.w_m) <= 1e-12;
  if (rep.equal_diagonal)
    rep.bounds = splitting_norm_bounds(inst.m, inst.M, config.alpha, config.eps,
                                       net.w_d);

  if (config.inner.mode == InnerPolicy::Mode::forcing && rep.sigma_T &&
      rep.sigma_T->converged && rep.sigma_T->value < 1.0 &&
      rep.sigma_T->value > 0.0) {
    rep.ell_bound =
        inner_iteration_bound(config.inner.eta, inst.m, inst.M, config.alpha,
                              config.eps, net.w_d, net.w_m, rep.sigma_T->value);
  }

  rep.constants = tune_contraction_constants(inst.m, inst.M, config.alpha,
                                             config.eps, net.lambda2);
  return rep;
}

}  // namespace indo
