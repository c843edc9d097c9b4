#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsbm/estimator.hpp"
#include "dsbm/model.hpp"

namespace dsbm {

enum class EigenSort { Signed, Magnitude };

std::string_view to_string(EigenSort sort);
EigenSort eigen_sort_from_string(std::string_view name);

/// All eigenvalues ordered under `sort_mode` (nonincreasing), plus an
/// orthonormal n x K block for the first K of them.
struct EigenLadder {
  Vector values;
  Matrix vectors;
  EigenSort sort_mode = EigenSort::Signed;
};

/// Throws NoConvergence from the eigensolver, InvalidArgument unless 1 <= K <= n.
EigenLadder top_eigenpairs(const Matrix& M, int K, EigenSort sort_mode = EigenSort::Signed);

struct ClusteringResult {
  Labels labels;                   ///< 0-based, in [0, K_used)
  Matrix centers;                  ///< K_used x d
  double objective = 0;            ///< sum of squared distances to assigned centres
  int K_used = 0;
  int r_used = 0;
  double epsilon_target = 0;       ///< nominal; not certified
  int restart_used = 0;            ///< index of the winning restart
  int empty_reseeds = 0;           ///< empty clusters repaired across all restarts
  std::vector<double> objective_trace;  ///< Lloyd objectives of the winning restart
  std::vector<std::string> flags;
};

/// Sum of squared row distances to the centre of each row's label.
double kmeans_objective(const Matrix& rows, const Labels& labels, const Matrix& centers);

/// Best of `restarts` runs of greedy k-means++ seeding followed by Lloyd
/// iterations. Restart i uses derive_seed(seed, i); ties go to the lowest index.
ClusteringResult kmeans_approx(const Matrix& rows, int K, double epsilon, int restarts, std::uint64_t seed);

struct ClusterOptions {
  double epsilon = 0.1;
  int restarts = 20;
  EigenSort sort_mode = EigenSort::Signed;
};

/// Eigenvector rows of M clustered with kmeans_approx.
ClusteringResult cluster_matrix(const Matrix& M, int K, const ClusterOptions& options, std::uint64_t seed);

ClusteringResult cluster_snapshot(const EstimatedMatrix& P_hat, int K, const ClusterOptions& options,
                                  std::uint64_t seed);

/// Clusters the time average of the snapshots.
ClusteringResult cluster_average(const SnapshotSequence& snapshots, int K, const ClusterOptions& options,
                                 std::uint64_t seed);

enum class ClusterCountFlag { None, NoGapFound, DegenerateSpectrum };

std::string_view to_string(ClusterCountFlag flag);

struct ClusterCountEstimate {
  int K_hat = 1;
  ClusterCountFlag flag = ClusterCountFlag::None;
};

/// Ratio rule on eigenvalues sorted in signed nonincreasing order:
/// smallest k <= K_max with lambda_k > 0 and lambda_{k+1} < varpi * lambda_k.
ClusterCountEstimate estimate_num_clusters_from_values(const Vector& values_desc, double varpi, int K_max);

/// K_max <= 0 selects floor(sqrt(n)), capped at n - 1.
ClusterCountEstimate estimate_num_clusters(const Matrix& P_hat, double varpi = 1.0 / 3.0, int K_max = 0);
ClusterCountEstimate estimate_num_clusters(const EstimatedMatrix& P_hat, double varpi = 1.0 / 3.0, int K_max = 0);

/// Smallest |lambda| among the K largest-magnitude eigenvalues of P.
double lambda_min_nonzero(const Matrix& P, int K);

/// 64 (2 + epsilon) K ||P_hat - P||^2 / lambda_min^2, an upper bound on the
/// worst-community error for an exact (1 + epsilon)-approximate k-means.
double misclustering_bound(double epsilon, int K, double lambda_min, double error_norm);

}  // namespace dsbm
