#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dsbm/error.hpp"
#include "dsbm/rng.hpp"
#include "dsbm/spectral.hpp"

namespace dsbm {

namespace {

constexpr int kMaxLloydIterations = 300;

struct RunResult {
  Labels labels;
  Matrix centers;
  double objective = 0;
  int empty_reseeds = 0;
  std::vector<double> trace;
};

std::size_t draw_weighted(const Vector& weights, double total, Rng& rng) {
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    acc += weights(i);
    if (target < acc) return static_cast<std::size_t>(i);
  }
  // Rounding can leave target == total; fall back to the last positive weight.
  for (Eigen::Index i = weights.size(); i-- > 0;) {
    if (weights(i) > 0.0) return static_cast<std::size_t>(i);
  }
  return 0;
}

Vector squared_distances(const Matrix& rows, const Eigen::RowVectorXd& c) {
  return (rows.rowwise() - c).rowwise().squaredNorm();
}

/// Greedy k-means++: each step draws 2 + floor(ln K) D^2-weighted candidates
/// and keeps the one giving the lowest potential.
Matrix seed_centers(const Matrix& rows, int K, Rng& rng) {
  const auto n = rows.rows();
  Matrix centers(K, rows.cols());
  centers.row(0) = rows.row(static_cast<Eigen::Index>(uniform_below(rng, static_cast<std::uint64_t>(n))));
  Vector d2 = squared_distances(rows, centers.row(0));
  const int trials = 2 + static_cast<int>(std::floor(std::log(static_cast<double>(K))));
  for (int k = 1; k < K; ++k) {
    const double total = d2.sum();
    if (!(total > 0.0)) {
      // Fewer distinct points than clusters: any point is as good as another.
      centers.row(k) = rows.row(static_cast<Eigen::Index>(uniform_below(rng, static_cast<std::uint64_t>(n))));
      continue;
    }
    double best_potential = std::numeric_limits<double>::infinity();
    Vector best_d2;
    Eigen::Index best = 0;
    for (int trial = 0; trial < trials; ++trial) {
      const auto idx = static_cast<Eigen::Index>(draw_weighted(d2, total, rng));
      Vector candidate = d2.cwiseMin(squared_distances(rows, rows.row(idx)));
      const double potential = candidate.sum();
      if (potential < best_potential) {
        best_potential = potential;
        best_d2 = std::move(candidate);
        best = idx;
      }
    }
    centers.row(k) = rows.row(best);
    d2 = std::move(best_d2);
  }
  return centers;
}

/// Nearest centre per row (lowest index on ties); returns the objective.
double assign(const Matrix& rows, const Matrix& centers, Labels& labels) {
  double objective = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < centers.rows(); ++k) {
      const double d = (rows.row(i) - centers.row(k)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    objective += best_d;
  }
  return objective;
}

/// Means of the assigned rows. An empty cluster takes over the row farthest
/// from its current centre, which lowers the objective.
int update_centers(const Matrix& rows, Labels& labels, Matrix& centers) {
  const int K = static_cast<int>(centers.rows());
  int reseeds = 0;
  for (;;) {
    std::vector<int> counts(static_cast<std::size_t>(K), 0);
    Matrix sums = Matrix::Zero(K, rows.cols());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const int k = labels[static_cast<std::size_t>(i)];
      sums.row(k) += rows.row(i);
      ++counts[static_cast<std::size_t>(k)];
    }
    const auto empty = std::find(counts.begin(), counts.end(), 0);
    if (empty == counts.end()) {
      for (int k = 0; k < K; ++k) centers.row(k) = sums.row(k) / counts[static_cast<std::size_t>(k)];
      return reseeds;
    }
    for (int k = 0; k < K; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) centers.row(k) = sums.row(k) / counts[static_cast<std::size_t>(k)];
    }
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const int k = labels[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(k)] < 2) continue;
      const double d = (rows.row(i) - centers.row(k)).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    const int target = static_cast<int>(empty - counts.begin());
    labels[static_cast<std::size_t>(far)] = target;
    centers.row(target) = rows.row(far);
    ++reseeds;
  }
}

RunResult lloyd(const Matrix& rows, int K, Rng& rng) {
  RunResult run;
  run.centers = seed_centers(rows, K, rng);
  run.labels.assign(static_cast<std::size_t>(rows.rows()), 0);
  Labels previous;
  for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
    run.trace.push_back(assign(rows, run.centers, run.labels));
    if (run.labels == previous) break;
    run.empty_reseeds += update_centers(rows, run.labels, run.centers);
    run.trace.push_back(kmeans_objective(rows, run.labels, run.centers));
    previous = run.labels;
  }
  // Final centres are the means of the final partition.
  run.empty_reseeds += update_centers(rows, run.labels, run.centers);
  run.objective = kmeans_objective(rows, run.labels, run.centers);
  run.trace.push_back(run.objective);
  return run;
}

}  // namespace

double kmeans_objective(const Matrix& rows, const Labels& labels, const Matrix& centers) {
  if (labels.size() != static_cast<std::size_t>(rows.rows())) throw DimensionMismatch("labels and rows differ in length");
  double total = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const int k = labels[static_cast<std::size_t>(i)];
    if (k < 0 || k >= centers.rows()) throw LabelOutOfRange("label " + std::to_string(k) + " has no centre");
    total += (rows.row(i) - centers.row(k)).squaredNorm();
  }
  return total;
}

ClusteringResult kmeans_approx(const Matrix& rows, int K, double epsilon, int restarts, std::uint64_t seed) {
  const auto n = rows.rows();
  if (K < 1 || K > n) throw InvalidArgument("K must lie in [1, n]");
  if (restarts < 1) throw InvalidArgument("restarts must be >= 1");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!rows.allFinite()) throw InvalidArgument("k-means input has non-finite entries");

  ClusteringResult best;
  best.objective = std::numeric_limits<double>::infinity();
  int reseeds = 0;
  for (int restart = 0; restart < restarts; ++restart) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(restart)));
    RunResult run = lloyd(rows, K, rng);
    reseeds += run.empty_reseeds;
    if (run.objective < best.objective) {
      best.labels = std::move(run.labels);
      best.centers = std::move(run.centers);
      best.objective = run.objective;
      best.restart_used = restart;
      best.objective_trace = std::move(run.trace);
    }
  }
  best.K_used = K;
  best.epsilon_target = epsilon;
  best.empty_reseeds = reseeds;
  if (reseeds > 0) best.flags.emplace_back("EmptyClusterReseeded");
  return best;
}

}  // namespace dsbm
