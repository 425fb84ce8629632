#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "indo/types.hpp"

namespace indo {

/// Undirected communication graph together with its symmetric doubly
/// stochastic weight matrix and the spectral summaries of I - W used by the
/// solver analysis. Immutable after construction; safe to share across
/// threads read-only.
struct Network {
  int N = 0;
  std::vector<std::vector<int>> neighbors;  // sorted, self excluded
  Mat W;
  double w_d = 0.0;        // max_i w_ii
  double w_m = 0.0;        // min_i w_ii
  double lambda2 = 0.0;    // smallest nonzero eigenvalue of I - W
  double lambda_max = 0.0; // largest eigenvalue of I - W
};

struct SpectralSummary {
  double lambda2 = 0.0;
  double lambda_max = 0.0;
  double w_d = 0.0;
  double w_m = 0.0;
};

struct WeightCheck {
  bool pass = false;
  double violation = 0.0;  // magnitude of the worst offense
};

/// Per-invariant report for a candidate weight matrix: symmetry, unit row
/// sums, sparsity pattern matching the graph, connectivity (eigenvalue 0 of
/// I - W simple), and the spectrum of I - W lying in [0, 2].
struct WeightReport {
  WeightCheck symmetry;
  WeightCheck row_sums;
  WeightCheck pattern;
  WeightCheck connectivity;
  WeightCheck spectrum_range;
  bool pass() const {
    return symmetry.pass && row_sums.pass && pattern.pass &&
           connectivity.pass && spectrum_range.pass;
  }
};

/// Metropolis rule: w_ij = 1 / (1 + max{deg(i), deg(j)}) for connected
/// i != j, diagonal fills the row to 1. Caller guarantees a symmetric,
/// connected neighbor structure.
Mat metropolis_weights(const std::vector<std::vector<int>>& neighbors);

/// Dense symmetric eigensolve of I - W. Throws std::runtime_error if more
/// than one eigenvalue falls below the zero threshold (disconnected graph).
SpectralSummary spectral_summary(const Mat& W);

WeightReport validate_weights(const Mat& W,
                              const std::vector<std::vector<int>>& neighbors);

/// Builds a Network (Metropolis weights + spectral summary) from an explicit
/// edge list. Throws on invalid edges or a disconnected graph.
Network network_from_edges(int N, const std::vector<std::pair<int, int>>& edges);

/// Connects points on [0,1]^2 whose Euclidean distance is strictly below
/// `radius`. Deterministic; throws if the result is disconnected.
Network network_from_points(const std::vector<std::array<double, 2>>& points,
                            double radius);

/// Connectivity radius used for random geometric graphs.
double rgg_radius(int N);

/// Random geometric graph: N points uniform on [0,1]^2, edges below
/// rgg_radius(N). Disconnected samples are rejected and redrawn with
/// seed+1, seed+2, ... up to `max_attempts`, then the generation fails with
/// the last seed tried.
Network generate_rgg(int N, std::uint64_t seed, int max_attempts = 1000);

/// Edge list export: one line "i j w_ij" per undirected edge, 0-based.
void write_edge_list(const Network& net, std::ostream& out);

/// Blockwise action of alpha * (I - W) on a stacked vector of N blocks of
/// size n: result_i = alpha * [(1 - w_ii) v_i - sum_{j in O_i} w_ij v_j].
Vec consensus_laplacian(const Network& net, const Vec& v, int n,
                        double alpha = 1.0);

}  // namespace indo
