#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dsbm/model.hpp"

namespace dsbm {

/// permutation[k] is the true class matched to estimated class k.
struct AlignmentResult {
  std::vector<int> permutation;
  Eigen::MatrixXi confusion;   ///< confusion(k_hat, k_true)
  int misclassified_count = 0;
};

enum class AlignMethod { Auto, BruteForce, Hungarian };

/// Permutation maximising agreement. Auto uses brute force for K <= 8 and the
/// Hungarian algorithm otherwise; both are exact.
AlignmentResult align(const Labels& labels_hat, const Labels& labels_true, int K,
                      AlignMethod method = AlignMethod::Auto);

/// Minimum-cost perfect matching on a square cost matrix; returns the column
/// assigned to each row.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

/// Proportion of misclustered nodes after optimal alignment.
double overall_error(const Labels& labels_hat, const Labels& labels_true, int K);

/// ||Theta_hat J - Theta||_0 / n, which counts two entries per misclustered node.
double overall_error_literal(const Labels& labels_hat, const Labels& labels_true, int K);

struct CommunityError {
  double value = 0;
  std::vector<int> permutation;
  bool surrogate = false;   ///< K > 8: overall-optimal permutation used instead of the min-max one
};

/// min over J of max_k (misclustered nodes of true class k) / n_k.
/// Throws EmptyCommunity if a true class is empty, unless skip_empty is set,
/// in which case empty true classes are left out of the maximum.
CommunityError community_error_detail(const Labels& labels_hat, const Labels& labels_true, int K,
                                      bool skip_empty = false);
double community_error(const Labels& labels_hat, const Labels& labels_true, int K);

/// Maximum of a nonempty per-time error vector.
double max_errors(std::span<const double> per_time_errors);

}  // namespace dsbm
