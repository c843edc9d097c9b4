#include "dsbm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dsbm/error.hpp"

namespace dsbm {

std::string_view to_string(EigenSort sort) { return sort == EigenSort::Signed ? "signed" : "magnitude"; }

EigenSort eigen_sort_from_string(std::string_view name) {
  if (name == "signed") return EigenSort::Signed;
  if (name == "magnitude") return EigenSort::Magnitude;
  throw ConfigError("unknown eigen sort '" + std::string(name) + "'");
}

std::string_view to_string(ClusterCountFlag flag) {
  switch (flag) {
    case ClusterCountFlag::None: return "none";
    case ClusterCountFlag::NoGapFound: return "NoGapFound";
    case ClusterCountFlag::DegenerateSpectrum: return "DegenerateSpectrum";
  }
  return "none";
}

EigenLadder top_eigenpairs(const Matrix& M, int K, EigenSort sort_mode) {
  const auto n = M.rows();
  if (M.cols() != n) throw DimensionMismatch("top_eigenpairs requires a square matrix");
  if (K < 1 || K > n) throw InvalidArgument("K must lie in [1, n]");
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NoConvergence("symmetric eigensolver did not converge");

  // Eigen returns ascending order; build the requested nonincreasing order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  const Vector& ev = es.eigenvalues();
  if (sort_mode == EigenSort::Magnitude) {
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(ev(a)) > std::abs(ev(b)); });
  }
  EigenLadder ladder;
  ladder.sort_mode = sort_mode;
  ladder.values.resize(n);
  ladder.vectors.resize(n, K);
  for (Eigen::Index i = 0; i < n; ++i) ladder.values(i) = ev(order[static_cast<std::size_t>(i)]);
  for (int k = 0; k < K; ++k) ladder.vectors.col(k) = es.eigenvectors().col(order[static_cast<std::size_t>(k)]);
  return ladder;
}

ClusteringResult cluster_matrix(const Matrix& M, int K, const ClusterOptions& options, std::uint64_t seed) {
  const EigenLadder ladder = top_eigenpairs(M, K, options.sort_mode);
  return kmeans_approx(ladder.vectors, K, options.epsilon, options.restarts, seed);
}

ClusteringResult cluster_snapshot(const EstimatedMatrix& P_hat, int K, const ClusterOptions& options,
                                  std::uint64_t seed) {
  ClusteringResult result = cluster_matrix(P_hat.values, K, options, seed);
  result.r_used = P_hat.r;
  return result;
}

ClusteringResult cluster_average(const SnapshotSequence& snapshots, int K, const ClusterOptions& options,
                                 std::uint64_t seed) {
  if (snapshots.T() == 0) throw InvalidArgument("cluster_average needs at least one snapshot");
  Matrix mean = Matrix::Zero(snapshots.n(), snapshots.n());
  for (const Matrix& A : snapshots.A) mean += A;
  mean /= static_cast<double>(snapshots.T());
  ClusteringResult result = cluster_matrix(mean, K, options, seed);
  result.flags.emplace_back("time-average");
  return result;
}

ClusterCountEstimate estimate_num_clusters_from_values(const Vector& values_desc, double varpi, int K_max) {
  if (!(varpi > 0.0 && varpi < 1.0)) throw InvalidArgument("varpi must lie in (0, 1)");
  const auto n = values_desc.size();
  if (K_max < 1 || K_max > n - 1) throw InvalidArgument("K_max must lie in [1, n - 1]");
  ClusterCountEstimate out;
  if (values_desc(0) <= 0.0) {
    out.K_hat = 1;
    out.flag = ClusterCountFlag::DegenerateSpectrum;
    return out;
  }
  for (int k = 1; k <= K_max; ++k) {
    const double lk = values_desc(k - 1);
    const double next = values_desc(k);
    if (lk > 0.0 && next < varpi * lk) {
      out.K_hat = k;
      return out;
    }
  }
  out.K_hat = K_max;
  out.flag = ClusterCountFlag::NoGapFound;
  return out;
}

ClusterCountEstimate estimate_num_clusters(const Matrix& P_hat, double varpi, int K_max) {
  const auto n = static_cast<int>(P_hat.rows());
  if (n < 2) throw InvalidArgument("estimate_num_clusters needs n >= 2");
  if (K_max <= 0) K_max = std::min(static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))), n - 1);
  Vector values = symmetric_eigenvalues(P_hat).reverse();
  return estimate_num_clusters_from_values(values, varpi, K_max);
}

ClusterCountEstimate estimate_num_clusters(const EstimatedMatrix& P_hat, double varpi, int K_max) {
  return estimate_num_clusters(P_hat.values, varpi, K_max);
}

double lambda_min_nonzero(const Matrix& P, int K) {
  const EigenLadder ladder = top_eigenpairs(P, 1, EigenSort::Magnitude);
  if (K < 1 || K > ladder.values.size()) throw InvalidArgument("K must lie in [1, n]");
  return std::abs(ladder.values(K - 1));
}

double misclustering_bound(double epsilon, int K, double lambda_min, double error_norm) {
  if (!(lambda_min > 0.0)) throw InvalidArgument("lambda_min must be positive");
  return 64.0 * (2.0 + epsilon) * K * error_norm * error_norm / (lambda_min * lambda_min);
}

}  // namespace dsbm
