#include "indo/network.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>

namespace indo {

namespace {

constexpr double kZeroEigTol = 1e-10;

bool connected(const std::vector<std::vector<int>>& nbrs) {
  const int N = static_cast<int>(nbrs.size());
  if (N == 0) return false;
  std::vector<char> seen(N, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : nbrs[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        q.push(v);
      }
    }
  }
  return count == N;
}

std::vector<std::vector<int>> neighbors_from_points(
    const std::vector<std::array<double, 2>>& pts, double radius) {
  const int N = static_cast<int>(pts.size());
  std::vector<std::vector<int>> nbrs(N);
  const double r2 = radius * radius;
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      double dx = pts[i][0] - pts[j][0];
      double dy = pts[i][1] - pts[j][1];
      if (dx * dx + dy * dy < r2) {  // strict: edge iff distance < radius
        nbrs[i].push_back(j);
        nbrs[j].push_back(i);
      }
    }
  }
  return nbrs;
}

Network finish_network(std::vector<std::vector<int>> nbrs) {
  Network net;
  net.N = static_cast<int>(nbrs.size());
  net.neighbors = std::move(nbrs);
  for (auto& list : net.neighbors) std::sort(list.begin(), list.end());
  net.W = metropolis_weights(net.neighbors);
  SpectralSummary s = spectral_summary(net.W);
  net.w_d = s.w_d;
  net.w_m = s.w_m;
  net.lambda2 = s.lambda2;
  net.lambda_max = s.lambda_max;
  return net;
}

}  // namespace

Mat metropolis_weights(const std::vector<std::vector<int>>& neighbors) {
  const int N = static_cast<int>(neighbors.size());
  Mat W = Mat::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    double off = 0.0;
    for (int j : neighbors[i]) {
      double w =
          1.0 / (1.0 + static_cast<double>(std::max(neighbors[i].size(),
                                                    neighbors[j].size())));
      W(i, j) = w;
      off += w;
    }
    W(i, i) = 1.0 - off;
  }
  return W;
}

SpectralSummary spectral_summary(const Mat& W) {
  const int N = static_cast<int>(W.rows());
  if (N < 2) throw std::invalid_argument("spectral_summary: need N >= 2");
  Mat L = Mat::Identity(N, N) - W;
  Eigen::SelfAdjointEigenSolver<Mat> es(L);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_summary: eigensolver failed");
  const Vec& ev = es.eigenvalues();  // ascending
  int zeros = 0;
  while (zeros < N && ev[zeros] < kZeroEigTol) ++zeros;
  if (zeros != 1)
    throw std::runtime_error(
        "spectral_summary: eigenvalue 0 of I - W has multiplicity " +
        std::to_string(zeros) + "; graph is not connected");
  SpectralSummary s;
  s.lambda2 = ev[1];
  s.lambda_max = ev[N - 1];
  s.w_d = W.diagonal().maxCoeff();
  s.w_m = W.diagonal().minCoeff();
  return s;
}

WeightReport validate_weights(const Mat& W,
                              const std::vector<std::vector<int>>& neighbors) {
  const int N = static_cast<int>(W.rows());
  WeightReport rep;

  double asym = (W - W.transpose()).cwiseAbs().maxCoeff();
  rep.symmetry = {asym == 0.0, asym};

  double row_err = (W.rowwise().sum() - Vec::Ones(N)).cwiseAbs().maxCoeff();
  rep.row_sums = {row_err <= 1e-12, row_err};

  // w_ij > 0 iff j is a neighbor or i itself; exactly zero elsewhere.
  double pattern_err = 0.0;
  for (int i = 0; i < N; ++i) {
    std::vector<char> is_nbr(N, 0);
    is_nbr[i] = 1;
    for (int j : neighbors[i]) is_nbr[j] = 1;
    for (int j = 0; j < N; ++j) {
      if (is_nbr[j]) {
        if (W(i, j) <= 0.0)
          pattern_err = std::max(pattern_err, std::abs(W(i, j)) + 1.0);
      } else if (W(i, j) != 0.0) {
        pattern_err = std::max(pattern_err, std::abs(W(i, j)));
      }
    }
  }
  rep.pattern = {pattern_err == 0.0, pattern_err};

  Eigen::SelfAdjointEigenSolver<Mat> es(Mat::Identity(N, N) - W);
  const Vec& ev = es.eigenvalues();
  int zeros = 0;
  while (zeros < N && ev[zeros] < kZeroEigTol) ++zeros;
  rep.connectivity = {zeros == 1, static_cast<double>(zeros)};

  double below = std::max(0.0, -ev[0]);
  double above = std::max(0.0, ev[N - 1] - 2.0);
  rep.spectrum_range = {below <= 1e-12 && above <= 1e-12,
                        std::max(below, above)};
  return rep;
}

Network network_from_edges(int N,
                           const std::vector<std::pair<int, int>>& edges) {
  if (N < 2) throw std::invalid_argument("network_from_edges: need N >= 2");
  std::vector<std::vector<int>> nbrs(N);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= N || j >= N || i == j)
      throw std::invalid_argument("network_from_edges: bad edge (" +
                                  std::to_string(i) + ", " +
                                  std::to_string(j) + ")");
    nbrs[i].push_back(j);
    nbrs[j].push_back(i);
  }
  for (auto& list : nbrs) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return finish_network(std::move(nbrs));
}

Network network_from_points(const std::vector<std::array<double, 2>>& points,
                            double radius) {
  if (points.size() < 2)
    throw std::invalid_argument("network_from_points: need N >= 2");
  return finish_network(neighbors_from_points(points, radius));
}

double rgg_radius(int N) { return std::sqrt(std::log(N) / N); }

Network generate_rgg(int N, std::uint64_t seed, int max_attempts) {
  if (N < 2) throw std::invalid_argument("generate_rgg: need N >= 2");
  const double r = rgg_radius(N);
  std::uint64_t s = seed;
  for (int attempt = 0; attempt < max_attempts; ++attempt, ++s) {
    Rng rng(s);
    std::vector<std::array<double, 2>> pts(N);
    for (auto& p : pts) {
      p[0] = rng.uniform01();
      p[1] = rng.uniform01();
    }
    auto nbrs = neighbors_from_points(pts, r);
    if (!connected(nbrs)) continue;
    return finish_network(std::move(nbrs));
  }
  throw std::runtime_error(
      "generate_rgg: no connected sample within " +
      std::to_string(max_attempts) + " attempts (last seed " +
      std::to_string(s - 1) + ")");
}

void write_edge_list(const Network& net, std::ostream& out) {
  char buf[64];
  for (int i = 0; i < net.N; ++i) {
    for (int j : net.neighbors[i]) {
      if (j <= i) continue;
      std::snprintf(buf, sizeof(buf), "%.17g", net.W(i, j));
      out << i << ' ' << j << ' ' << buf << '\n';
    }
  }
}

Vec consensus_laplacian(const Network& net, const Vec& v, int n, double alpha) {
  Vec out(v.size());
  for (int i = 0; i < net.N; ++i) {
    auto vi = v.segment(static_cast<Eigen::Index>(i) * n, n);
    Vec acc = (1.0 - net.W(i, i)) * vi;
    for (int j : net.neighbors[i])
      acc.noalias() -= net.W(i, j) * v.segment(static_cast<Eigen::Index>(j) * n, n);
    out.segment(static_cast<Eigen::Index>(i) * n, n) = alpha * acc;
  }
  return out;
}

}  // namespace indo
