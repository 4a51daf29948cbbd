#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

namespace curvebic {

inline double log_sum_exp(const Eigen::VectorXd& v) {
  double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf stays -inf
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += std::exp(v(i) - m);
  return m + std::log(s);
}

/// Mean of exp(v) in log space: log((1/n) sum exp(v_i)).
inline double log_mean_exp(const Eigen::VectorXd& v) {
  return log_sum_exp(v) - std::log(static_cast<double>(v.size()));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent per-replicate RNG streams: the master seed and every index are
/// passed once through splitmix64 so neighboring cells/replicates decorrelate.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t rep) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ splitmix64(cell + 0x51ED270B4C9AEB85ULL));
  s = splitmix64(s ^ splitmix64(rep + 0xC2B2AE3D27D4EB4FULL));
  return s;
}

/// Gauss-Hermite nodes/weights for weight function exp(-x^2), via the
/// eigen-decomposition of the Jacobi matrix.
inline void gauss_hermite(int m, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) {
    double b = std::sqrt(i / 2.0);
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes = es.eigenvalues();
  weights.resize(m);
  const double sqrt_pi = std::sqrt(M_PI);
  for (int i = 0; i < m; ++i) {
    double v0 = es.eigenvectors()(0, i);
    weights(i) = sqrt_pi * v0 * v0;
  }
}

/// Runs fn(i) for i in [0, count) over at most jobs threads. Results must be
/// written to caller-owned, index-disjoint slots so output is order-independent.
inline void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  int workers = std::min(jobs, count);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (int i = w; i < count; i += workers) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace curvebic
