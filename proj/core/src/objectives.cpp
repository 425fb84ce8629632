#include "indo/objectives.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace indo {

namespace {

// log(1 + exp(-t)) without overflow
double softplus_neg(double t) {
  if (t > 0.0) return std::log1p(std::exp(-t));
  return -t + std::log1p(std::exp(t));
}

// sigma(-t) = 1 / (1 + exp(t)); saturates cleanly at 0 for large t
double sigmoid_neg(double t) { return 1.0 / (1.0 + std::exp(t)); }

}  // namespace

HessianSnapshot HessianSnapshot::constant(const Mat* block) {
  HessianSnapshot s;
  s.block_ = block;
  s.diag_ = block->diagonal();
  return s;
}

HessianSnapshot HessianSnapshot::weighted_gram(const Mat* features,
                                               int row_begin, int row_end,
                                               Vec weights, double ridge) {
  HessianSnapshot s;
  s.features_ = features;
  s.row_begin_ = row_begin;
  s.row_end_ = row_end;
  s.weights_ = std::move(weights);
  s.ridge_ = ridge;
  const auto rows = features->middleRows(row_begin, row_end - row_begin);
  s.diag_ = (rows.array().square().colwise() * s.weights_.array())
                .colwise()
                .sum()
                .transpose();
  s.diag_.array() += ridge;
  return s;
}

Vec HessianSnapshot::apply(const Vec& v) const {
  if (block_) return (*block_) * v;
  const auto rows = features_->middleRows(row_begin_, row_end_ - row_begin_);
  Vec u = rows * v;
  u.array() *= weights_.array();
  Vec out = rows.transpose() * u;
  out.noalias() += ridge_ * v;
  return out;
}

Mat HessianSnapshot::dense() const {
  if (block_) return *block_;
  const auto rows = features_->middleRows(row_begin_, row_end_ - row_begin_);
  Mat out = rows.transpose() * weights_.asDiagonal() * rows;
  out.diagonal().array() += ridge_;
  return out;
}

int ProblemInstance::node_size(int i) const {
  if (kind != ProblemKind::logistic) return 0;
  return node_offset[i + 1] - node_offset[i];
}

double ProblemInstance::value(int i, const Vec& y) const {
  if (kind == ProblemKind::quadratic) {
    Vec r = y - b[i];
    return 0.5 * r.dot(B[i] * r);
  }
  const int lo = node_offset[i], cnt = node_size(i);
  Vec t = features.middleRows(lo, cnt) * y;
  double acc = 0.0;
  for (int j = 0; j < cnt; ++j) acc += softplus_neg(labels[lo + j] * t[j]);
  return acc / cnt + 0.5 * reg * y.squaredNorm();
}

Vec ProblemInstance::gradient(int i, const Vec& y) const {
  if (kind == ProblemKind::quadratic) return B[i] * (y - b[i]);
  const int lo = node_offset[i], cnt = node_size(i);
  const auto rows = features.middleRows(lo, cnt);
  Vec t = rows * y;
  Vec coeff(cnt);
  for (int j = 0; j < cnt; ++j)
    coeff[j] = -labels[lo + j] * sigmoid_neg(labels[lo + j] * t[j]) / cnt;
  Vec g = rows.transpose() * coeff;
  g.noalias() += reg * y;
  return g;
}

Mat ProblemInstance::hessian(int i, const Vec& y) const {
  return hessian_snapshot(i, y).dense();
}

Vec ProblemInstance::hessian_diagonal(int i, const Vec& y) const {
  return hessian_snapshot(i, y).diagonal();
}

HessianSnapshot ProblemInstance::hessian_snapshot(int i, const Vec& y) const {
  if (kind == ProblemKind::quadratic) return HessianSnapshot::constant(&B[i]);
  const int lo = node_offset[i], cnt = node_size(i);
  Vec t = features.middleRows(lo, cnt) * y;
  Vec w(cnt);
  for (int j = 0; j < cnt; ++j) {
    double s = sigmoid_neg(labels[lo + j] * t[j]);
    w[j] = s * (1.0 - s) / cnt;
  }
  return HessianSnapshot::weighted_gram(&features, lo, lo + cnt, std::move(w),
                                        reg);
}

double ProblemInstance::aggregate_value(const Vec& y) const {
  double acc = 0.0;
  for (int i = 0; i < N; ++i) acc += value(i, y);
  return acc;
}

ProblemInstance quadratic_generate(int n, int N, std::uint64_t seed) {
  if (n < 1 || N < 1)
    throw std::invalid_argument("quadratic_generate: need n >= 1, N >= 1");
  Rng rng(seed);
  ProblemInstance inst;
  inst.kind = ProblemKind::quadratic;
  inst.n = n;
  inst.N = N;
  inst.B.resize(N);
  inst.b.resize(N);
  inst.m = std::numeric_limits<double>::infinity();
  inst.M = 0.0;
  for (int i = 0; i < N; ++i) {
    Vec bi(n);
    for (int j = 0; j < n; ++j) bi[j] = rng.uniform(1.0, 31.0);
    Vec S(n);
    for (int j = 0; j < n; ++j) S[j] = rng.uniform(1.0, 101.0);
    Mat C(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) C(r, c) = rng.normal();
    Mat sym = 0.5 * (C + C.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    const Mat& P = es.eigenvectors();
    Mat Bi = P * S.asDiagonal() * P.transpose();
    Mat sym_B = 0.5 * (Bi + Bi.transpose());  // exact symmetry
    Bi = sym_B;
    Eigen::SelfAdjointEigenSolver<Mat> bs(Bi, Eigen::EigenvaluesOnly);
    inst.m = std::min(inst.m, bs.eigenvalues().minCoeff());
    inst.M = std::max(inst.M, bs.eigenvalues().maxCoeff());
    inst.B[i] = std::move(Bi);
    inst.b[i] = std::move(bi);
  }
  return inst;
}

Vec quadratic_solution(const ProblemInstance& inst) {
  if (inst.kind != ProblemKind::quadratic)
    throw std::invalid_argument("quadratic_solution: quadratic instance only");
  Mat A = Mat::Zero(inst.n, inst.n);
  Vec rhs = Vec::Zero(inst.n);
  for (int i = 0; i < inst.N; ++i) {
    A += inst.B[i];
    rhs.noalias() += inst.B[i] * inst.b[i];
  }
  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("quadratic_solution: aggregate not SPD");
  Vec y = llt.solve(rhs);
  if ((A * y - rhs).norm() > 1e-8 * rhs.norm())
    throw std::runtime_error("quadratic_solution: residual too large");
  return y;
}

ProblemInstance logistic_from_samples(Mat features, Vec labels, int N,
                                      double reg, std::uint64_t seed) {
  const int T = static_cast<int>(features.rows());
  const int n = static_cast<int>(features.cols());
  if (N < 1) throw std::invalid_argument("logistic_from_samples: N >= 1");
  if (T < N)
    throw std::invalid_argument(
        "logistic_from_samples: fewer samples than nodes");
  if (labels.size() != T)
    throw std::invalid_argument("logistic_from_samples: label count mismatch");
  for (int j = 0; j < T; ++j)
    if (labels[j] != 1.0 && labels[j] != -1.0)
      throw std::invalid_argument(
          "logistic_from_samples: labels must be exactly +-1");
  if (!(reg > 0.0))
    throw std::invalid_argument("logistic_from_samples: reg must be > 0");

  // Fisher-Yates permutation, then contiguous near-equal blocks.
  Rng rng(seed);
  std::vector<int> perm(T);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = T - 1; i > 0; --i) {
    int j = static_cast<int>(rng.integer(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  ProblemInstance inst;
  inst.kind = ProblemKind::logistic;
  inst.n = n;
  inst.N = N;
  inst.reg = reg;
  inst.features.resize(T, n);
  inst.labels.resize(T);
  for (int k = 0; k < T; ++k) {
    inst.features.row(k) = features.row(perm[k]);
    inst.labels[k] = labels[perm[k]];
  }
  inst.node_offset.resize(N + 1);
  const int base = T / N, extra = T % N;
  inst.node_offset[0] = 0;
  for (int i = 0; i < N; ++i)
    inst.node_offset[i + 1] = inst.node_offset[i] + base + (i < extra ? 1 : 0);

  // One global feature scaling such that the worst-node logistic curvature
  // bound max_i (1/(4|J_i|)) lambda_max(sum_j p_j p_j^T) becomes 1, hence
  // M = 1 + reg. The Gram eigensolve runs on the smaller side of the block.
  double worst = 0.0;
  for (int i = 0; i < N; ++i) {
    const int lo = inst.node_offset[i], cnt = inst.node_offset[i + 1] - lo;
    const auto rows = inst.features.middleRows(lo, cnt);
    Mat gram = (cnt <= n) ? Mat(rows * rows.transpose())
                          : Mat(rows.transpose() * rows);
    Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
    worst = std::max(worst, es.eigenvalues().maxCoeff() / (4.0 * cnt));
  }
  if (worst > 0.0) {
    inst.features *= 1.0 / std::sqrt(worst);
    inst.M = 1.0 + reg;
  } else {
    inst.M = reg;  // no feature curvature at all
  }
  inst.m = reg;

  // Hessian Lipschitz estimate, diagnostics only: the third derivative of
  // the logistic loss is bounded by 1/(6 sqrt(3)).
  double worst_cubed = 0.0;
  for (int i = 0; i < N; ++i) {
    const int lo = inst.node_offset[i], cnt = inst.node_offset[i + 1] - lo;
    double acc = 0.0;
    for (int j = 0; j < cnt; ++j) acc += std::pow(inst.features.row(lo + j).norm(), 3);
    worst_cubed = std::max(worst_cubed, acc / cnt);
  }
  inst.L = worst_cubed / (6.0 * std::sqrt(3.0));
  return inst;
}

ProblemInstance logistic_load(const std::filesystem::path& path, int N,
                              double reg, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("logistic_load: cannot open " + path.string());

  std::vector<double> raw_labels;
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::map<double, int> label_lines;  // first line each distinct label appeared
  int n = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // strip comments and blank lines
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    std::istringstream ls(line);
    double label;
    if (!(ls >> label)) {
      if (ls.eof()) continue;  // blank
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": unparseable label");
    }
    label_lines.emplace(label, line_no);
    if (label_lines.size() > 2)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": more than two label classes");
    std::vector<std::pair<int, double>> row;
    std::string tok;
    while (ls >> tok) {
      auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error(path.string() + ":" +
                                 std::to_string(line_no) +
                                 ": expected index:value, got '" + tok + "'");
      int idx;
      double val;
      try {
        std::size_t used;
        idx = std::stoi(tok.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument("");
        val = std::stod(tok.substr(colon + 1), &used);
        if (used != tok.size() - colon - 1) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw std::runtime_error(path.string() + ":" +
                                 std::to_string(line_no) +
                                 ": bad feature token '" + tok + "'");
      }
      if (idx < 1)
        throw std::runtime_error(path.string() + ":" +
                                 std::to_string(line_no) +
                                 ": feature indices are 1-based");
      n = std::max(n, idx);
      row.emplace_back(idx - 1, val);
    }
    raw_labels.push_back(label);
    rows.push_back(std::move(row));
  }
  if (label_lines.size() != 2)
    throw std::runtime_error("logistic_load: " + path.string() +
                             ": need exactly two label classes, found " +
                             std::to_string(label_lines.size()));

  // Map the two classes onto {-1, +1}: keep +-1 as is, otherwise the smaller
  // label becomes -1.
  const double lo_label = label_lines.begin()->first;
  const double hi_label = label_lines.rbegin()->first;
  auto mapped = [&](double v) {
    if (lo_label == -1.0 && hi_label == 1.0) return v;
    return v == lo_label ? -1.0 : 1.0;
  };

  const int T = static_cast<int>(rows.size());
  Mat features = Mat::Zero(T, n);
  Vec labels(T);
  for (int k = 0; k < T; ++k) {
    labels[k] = mapped(raw_labels[k]);
    for (auto [j, v] : rows[k]) features(k, j) = v;
  }
  return logistic_from_samples(std::move(features), std::move(labels), N, reg,
                               seed);
}

double mean_relative_error(const Vec& x, const Vec& y_star, int N) {
  const int n = static_cast<int>(y_star.size());
  const double denom = y_star.norm();
  if (denom == 0.0)
    throw std::invalid_argument("mean_relative_error: ||y*|| = 0");
  double acc = 0.0;
  for (int i = 0; i < N; ++i)
    acc += (x.segment(static_cast<Eigen::Index>(i) * n, n) - y_star).norm();
  return acc / (N * denom);
}

double mean_aggregate_objective(const Vec& x, const ProblemInstance& inst) {
  double acc = 0.0;
  for (int i = 0; i < inst.N; ++i)
    acc += inst.aggregate_value(
        x.segment(static_cast<Eigen::Index>(i) * inst.n, inst.n));
  return acc / inst.N;
}

Vec centralized_minimizer(const ProblemInstance& inst) {
  if (inst.kind == ProblemKind::quadratic) return quadratic_solution(inst);
  // Damped Newton on the aggregate; strongly convex, so this is quickly exact.
  Vec y = Vec::Zero(inst.n);
  double f = inst.aggregate_value(y);
  double g0 = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    Vec g = Vec::Zero(inst.n);
    for (int i = 0; i < inst.N; ++i) g += inst.gradient(i, y);
    if (iter == 0) g0 = g.norm();
    if (g.norm() <= 1e-12 * (1.0 + g0)) break;
    Mat H = Mat::Zero(inst.n, inst.n);
    for (int i = 0; i < inst.N; ++i) H += inst.hessian(i, y);
    Vec d = Eigen::LLT<Mat>(H).solve(-g);
    double t = 1.0;
    const double slope = g.dot(d);
    while (t > 1e-12) {
      double ft = inst.aggregate_value(y + t * d);
      if (ft <= f + 1e-4 * t * slope) {
        y += t * d;
        f = ft;
        break;
      }
      t *= 0.5;
    }
  }
  return y;
}

}  // namespace indo
