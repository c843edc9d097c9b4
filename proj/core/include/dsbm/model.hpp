#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dsbm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Community labels of n nodes, each in [0, K). Files use 1-based labels.
using Labels = std::vector<int>;

/// Time-indexed sequence of symmetric n x n matrices (P_t or E[A_t]).
using ProbabilityTensor = std::vector<Matrix>;

struct DsbmParams {
  int n = 0;
  int K = 1;
  int T = 1;
  int s = 0;                  ///< max membership switches per step
  double alpha_n = 1.0;       ///< sparsity factor, B_t = alpha_n * H_t
  double beta = 1.0;          ///< Hoelder smoothness of t -> H_t
  double L = 1.0;             ///< Hoelder constant
  double diag_value = 10.0;   ///< value written into A_t(i, i)
  bool enforce_nonempty = true;
  bool theoretical_sparsity_check = false;
  double c0 = 1.0;            ///< used when theoretical_sparsity_check is on

  /// Throws InvalidArgument on violated invariants.
  void validate() const;
};

/// Labels for t = 0..T-1. Consecutive label vectors differ in at most s places
/// when produced by simulate_memberships.
class MembershipSequence {
 public:
  MembershipSequence() = default;
  MembershipSequence(int K, std::vector<Labels> labels);

  int K() const { return K_; }
  int T() const { return static_cast<int>(labels_.size()); }
  int n() const { return labels_.empty() ? 0 : static_cast<int>(labels_.front().size()); }

  const Labels& at(int t) const { return labels_.at(static_cast<std::size_t>(t)); }
  const std::vector<Labels>& all() const { return labels_; }

  /// n_t(k) for k = 0..K-1.
  std::vector<int> class_sizes(int t) const;
  int n_max(int t) const;
  int n_min(int t) const;
  /// Largest class size over all t.
  int n_max() const;

  /// Number of nodes whose label differs between t and t+1.
  int hamming(int t) const;

 private:
  int K_ = 1;
  std::vector<Labels> labels_;
};

enum class ConnectivityFamily { ConstantMatrix, AffineSinusoid, PolynomialSpline, UserTable };

std::string_view to_string(ConnectivityFamily family);
ConnectivityFamily connectivity_family_from_string(std::string_view name);

/// Smooth connectivity profile f(x; k, k') on [0, 1], with B_t = alpha_n f(t/T).
///
///   ConstantMatrix   f(x) = base
///   AffineSinusoid   f(x) = base + amplitude * sin(2 pi frequency x + phase)
///   PolynomialSpline f(x) = base + amplitude * g(x),
///                    g(x) = sum_m knot_coeffs[m] * (x - knots[m])_+^degree
///   UserTable        f(t/T) = table[t - 1]; linear interpolation off the grid
///
/// Time index t here is 1-based as in t/T; library callers pass 0-based t to
/// eval_connectivity, which evaluates at (t + 1) / T.
struct ConnectivitySpec {
  ConnectivityFamily family = ConnectivityFamily::ConstantMatrix;
  double alpha_n = 1.0;
  Matrix base;
  Matrix amplitude;
  double frequency = 1.0;
  double phase = 0.0;
  int spline_degree = 1;
  std::vector<double> knots;
  std::vector<double> knot_coeffs;
  std::vector<Matrix> table;

  static ConnectivitySpec constant(Matrix base, double alpha_n = 1.0);
  static ConnectivitySpec affine_sinusoid(Matrix base, Matrix amplitude, double alpha_n = 1.0,
                                          double frequency = 1.0, double phase = 0.0);
  static ConnectivitySpec polynomial_spline(Matrix base, Matrix amplitude, int degree, std::vector<double> knots,
                                            std::vector<double> coeffs, double alpha_n = 1.0);
  static ConnectivitySpec user_table(std::vector<Matrix> table, double alpha_n = 1.0);

  int K() const;
  /// f(x; ., .) as a K x K matrix (not yet scaled by alpha_n).
  Matrix shape(double x) const;

  /// Smoothness class the family belongs to: (beta, L) with t -> f in Sigma(beta, L).
  /// AffineSinusoid is infinitely smooth; it reports beta = 2 with the matching L,
  /// which is the order used by default for kernel selection.
  double holder_beta() const;
  double holder_L() const;

  void validate() const;
};

struct ConnectivityReport {
  double c_alpha = 1.0;          ///< smallest C with C^-1 <= max H_t <= C over all t
  double lambda_min_margin = 0;  ///< min over t of lambda_min(H_t)
  double beta = 0;
  double L = 0;
};

ConnectivityReport connectivity_report(const ConnectivitySpec& spec, int T);

/// B_t for 0-based t in [0, T). Throws OutOfRange if an entry leaves [0, 1].
Matrix eval_connectivity(const ConnectivitySpec& spec, int t, int T);

/// P(i, j) = B(labels[i], labels[j]) including the diagonal.
Matrix build_probability_matrix(const Labels& labels, const Matrix& B);

/// Memberships under the switching law: at each step m ~ U{0..s} distinct
/// nodes move to a uniformly chosen different class. With enforce_nonempty a
/// move that would empty a class is redrawn. `initial` defaults to balanced
/// contiguous blocks.
MembershipSequence simulate_memberships(const DsbmParams& params, const std::optional<Labels>& initial,
                                        std::uint64_t seed);

/// Balanced contiguous blocks: node i gets label floor(i * K / n).
Labels balanced_labels(int n, int K);

ProbabilityTensor probability_tensor(const MembershipSequence& memberships, const ConnectivitySpec& spec);

/// Snapshots A_t: symmetric, binary off the diagonal, diag_value on it.
struct SnapshotSequence {
  double diag_value = 10.0;
  std::vector<Matrix> A;

  int T() const { return static_cast<int>(A.size()); }
  int n() const { return A.empty() ? 0 : static_cast<int>(A.front().rows()); }
};

/// Independent Bernoulli draws for i < j at every t, mirrored to (j, i).
SnapshotSequence sample_adjacency(const ProbabilityTensor& P, double diag_value, std::uint64_t seed);

/// E[A_t]: P_t with its diagonal replaced by diag_value.
ProbabilityTensor expected_adjacency(const ProbabilityTensor& P, double diag_value);

}  // namespace dsbm
