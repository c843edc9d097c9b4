#include "dsbm/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "dsbm/error.hpp"

namespace dsbm {

namespace {

constexpr int kBruteForceMaxK = 8;

Eigen::MatrixXi confusion_matrix(const Labels& labels_hat, const Labels& labels_true, int K) {
  if (K < 1) throw InvalidArgument("K must be positive");
  if (labels_hat.size() != labels_true.size()) throw DimensionMismatch("label vectors differ in length");
  Eigen::MatrixXi c = Eigen::MatrixXi::Zero(K, K);
  for (std::size_t i = 0; i < labels_hat.size(); ++i) {
    const int a = labels_hat[i];
    const int b = labels_true[i];
    if (a < 0 || a >= K || b < 0 || b >= K) {
      throw LabelOutOfRange("label at node " + std::to_string(i) + " outside [0, K)");
    }
    ++c(a, b);
  }
  return c;
}

int agreement(const Eigen::MatrixXi& c, const std::vector<int>& perm) {
  int total = 0;
  for (std::size_t k = 0; k < perm.size(); ++k) total += c(static_cast<Eigen::Index>(k), perm[k]);
  return total;
}

}  // namespace

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  // Potentials-based O(K^3) assignment, 1-indexed internally.
  const auto K = static_cast<int>(cost.rows());
  if (cost.cols() != K) throw DimensionMismatch("hungarian requires a square cost matrix");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(K + 1, 0.0), v(K + 1, 0.0), minv(K + 1);
  std::vector<int> p(K + 1, 0), way(K + 1, 0);
  std::vector<char> used(K + 1);
  for (int i = 1; i <= K; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= K; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= K; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(K), 0);
  for (int j = 1; j <= K; ++j) assignment[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return assignment;
}

AlignmentResult align(const Labels& labels_hat, const Labels& labels_true, int K, AlignMethod method) {
  AlignmentResult out;
  out.confusion = confusion_matrix(labels_hat, labels_true, K);
  if (method == AlignMethod::Auto) method = K <= kBruteForceMaxK ? AlignMethod::BruteForce : AlignMethod::Hungarian;
  if (method == AlignMethod::BruteForce) {
    std::vector<int> perm(static_cast<std::size_t>(K));
    std::iota(perm.begin(), perm.end(), 0);
    int best = -1;
    do {
      const int a = agreement(out.confusion, perm);
      if (a > best) {
        best = a;
        out.permutation = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    out.permutation = hungarian(-out.confusion.cast<double>());
  }
  out.misclassified_count = static_cast<int>(labels_hat.size()) - agreement(out.confusion, out.permutation);
  return out;
}

double overall_error(const Labels& labels_hat, const Labels& labels_true, int K) {
  if (labels_true.empty()) throw InvalidArgument("empty label vectors");
  const AlignmentResult a = align(labels_hat, labels_true, K);
  return static_cast<double>(a.misclassified_count) / static_cast<double>(labels_true.size());
}

double overall_error_literal(const Labels& labels_hat, const Labels& labels_true, int K) {
  return 2.0 * overall_error(labels_hat, labels_true, K);
}

CommunityError community_error_detail(const Labels& labels_hat, const Labels& labels_true, int K, bool skip_empty) {
  const Eigen::MatrixXi c = confusion_matrix(labels_hat, labels_true, K);
  const Eigen::VectorXi sizes = c.colwise().sum().transpose();
  for (int k = 0; k < K; ++k) {
    if (sizes(k) == 0 && !skip_empty) throw EmptyCommunity("true community " + std::to_string(k) + " is empty");
  }
  auto worst = [&](const std::vector<int>& perm) {
    // perm maps estimated class -> true class; invert to get the hat class of each true class.
    std::vector<int> inv(static_cast<std::size_t>(K));
    for (int a = 0; a < K; ++a) inv[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])] = a;
    double w = 0.0;
    for (int k = 0; k < K; ++k) {
      if (sizes(k) == 0) continue;
      const int correct = c(inv[static_cast<std::size_t>(k)], k);
      w = std::max(w, static_cast<double>(sizes(k) - correct) / sizes(k));
    }
    return w;
  };
  CommunityError out;
  if (K <= kBruteForceMaxK) {
    std::vector<int> perm(static_cast<std::size_t>(K));
    std::iota(perm.begin(), perm.end(), 0);
    out.value = std::numeric_limits<double>::infinity();
    do {
      const double w = worst(perm);
      if (w < out.value) {
        out.value = w;
        out.permutation = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    out.permutation = align(labels_hat, labels_true, K, AlignMethod::Hungarian).permutation;
    out.value = worst(out.permutation);
    out.surrogate = true;
  }
  return out;
}

double community_error(const Labels& labels_hat, const Labels& labels_true, int K) {
  return community_error_detail(labels_hat, labels_true, K).value;
}

double max_errors(std::span<const double> per_time_errors) {
  if (per_time_errors.empty()) throw InvalidArgument("max_errors needs a nonempty vector");
  return *std::max_element(per_time_errors.begin(), per_time_errors.end());
}

}  // namespace dsbm
