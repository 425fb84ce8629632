#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "indo/types.hpp"

namespace indo {

enum class ProblemKind { quadratic, logistic };

/// Local Hessian frozen at one evaluation point. Exposes the action, the
/// diagonal, and (on demand) the dense block; for logistic costs the action
/// runs through the feature rows so no n x n matrix is formed unless asked.
class HessianSnapshot {
 public:
  static HessianSnapshot constant(const Mat* block);
  static HessianSnapshot weighted_gram(const Mat* features, int row_begin,
                                       int row_end, Vec weights, double ridge);

  const Vec& diagonal() const { return diag_; }
  Vec apply(const Vec& v) const;
  Mat dense() const;

 private:
  HessianSnapshot() = default;
  const Mat* block_ = nullptr;     // constant form
  const Mat* features_ = nullptr;  // weighted-gram form
  int row_begin_ = 0, row_end_ = 0;
  Vec weights_;
  double ridge_ = 0.0;
  Vec diag_;
};

/// The distributed problem: N strongly convex local costs on R^n with
/// analytic first and second derivatives and global curvature bounds
/// m <= eig(hess_i) <= M. Immutable after construction; the evaluators are
/// pure functions of (i, y).
struct ProblemInstance {
  ProblemKind kind = ProblemKind::quadratic;
  int n = 0;
  int N = 0;
  double m = 0.0;  // strong convexity constant
  double M = 0.0;  // gradient Lipschitz constant
  double L = 0.0;  // Hessian Lipschitz estimate (0 for quadratic); diagnostic

  // quadratic payload: f_i(y) = 0.5 (y - b_i)^T B_i (y - b_i)
  std::vector<Mat> B;
  std::vector<Vec> b;

  // logistic payload: rows are permuted so node blocks are contiguous;
  // node i owns rows [node_offset[i], node_offset[i+1])
  Mat features;
  Vec labels;  // exactly +-1
  std::vector<int> node_offset;
  double reg = 0.0;

  int node_size(int i) const;
  double value(int i, const Vec& y) const;
  Vec gradient(int i, const Vec& y) const;
  Mat hessian(int i, const Vec& y) const;
  Vec hessian_diagonal(int i, const Vec& y) const;
  HessianSnapshot hessian_snapshot(int i, const Vec& y) const;
  double aggregate_value(const Vec& y) const;  // sum_i f_i(y)
};

/// Simulated quadratic data: b_i ~ U[1,31]^n, B_i = P_i S_i P_i^T with
/// S_i diagonal U[1,101] and P_i the orthonormal eigenvectors of a symmetrized
/// Gaussian matrix. m and M come from dense per-block eigensolves.
ProblemInstance quadratic_generate(int n, int N, std::uint64_t seed);

/// Exact aggregate minimizer: solves (sum_i B_i) y = sum_i B_i b_i.
Vec quadratic_solution(const ProblemInstance& inst);

/// Regularized logistic regression over an explicit sample matrix. Samples
/// are shuffled with `seed`, split into N near-equal contiguous blocks, and
/// the features are rescaled by one global scalar so that the logistic-loss
/// curvature bound equals 1, i.e. M = 1 + reg.
ProblemInstance logistic_from_samples(Mat features, Vec labels, int N,
                                      double reg, std::uint64_t seed);

/// LIBSVM text ingestion ("label idx:val ...", 1-based indices). Labels must
/// form exactly two classes and are mapped to {-1, +1}. Parse failures carry
/// the offending line number.
ProblemInstance logistic_load(const std::filesystem::path& path, int N,
                              double reg, std::uint64_t seed);

/// E metric: (1/N) sum_i ||x_i - y*|| / ||y*||. Throws if ||y*|| = 0.
double mean_relative_error(const Vec& x, const Vec& y_star, int N);

/// V metric: (1/N) sum_i sum_j f_j(x_i).
double mean_aggregate_objective(const Vec& x, const ProblemInstance& inst);

/// High-accuracy minimizer of sum_i f_i: closed form for quadratic, damped
/// Newton for logistic (gradient norm driven below 1e-12 relative).
Vec centralized_minimizer(const ProblemInstance& inst);

}  // namespace indo
