#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "dsbm/kernels.hpp"
#include "dsbm/linalg.hpp"
#include "dsbm/model.hpp"

namespace dsbm {

/// Window used to estimate P_t with half-width r. Time indices are 0-based:
/// t < r is LeftBoundary, t >= T - r is RightBoundary, the rest Interior.
struct WindowAssignment {
  int t = 0;
  int r = 0;
  WindowType window = WindowType::Interior;
  std::vector<int> offsets;
};

/// Throws WindowTooLarge when r > floor(T / 2) (the three windows stop
/// partitioning the time axis) and OutOfRange when t is outside [0, T).
WindowAssignment assign_window(int t, int r, int T);

/// Kernel-smoothed snapshot. `values` is unclipped; use clipped() for reporting.
struct EstimatedMatrix {
  int t = 0;
  int r = 0;
  int l = 0;
  WindowType window = WindowType::Interior;
  Matrix values;

  Matrix clipped() const { return values.cwiseMax(0.0).cwiseMin(1.0); }
};

/// Memoises kernels by (window, r, l). Not thread-safe; give each worker its own.
class KernelBank {
 public:
  const DiscreteKernel& get(WindowType window, int r, int l);

 private:
  std::map<std::tuple<int, int, int>, DiscreteKernel> cache_;
};

/// sum_{i in F} (W(i) / |F|) seq[t + i], evaluated as
/// seq[t] + sum_i (W(i) / |F|) (seq[t + i] - seq[t]).
/// The centred form is exact when all terms are equal.
Matrix kernel_smooth(std::span<const Matrix> seq, const WindowAssignment& window, const DiscreteKernel& kernel);

EstimatedMatrix estimate_probability(const SnapshotSequence& snapshots, int t, int r, int l,
                                     KernelBank* bank = nullptr);

/// Terms of the variance constant C_{0,tau}.
struct ConstantTerms {
  double c_tau1 = 0;
  double c_tau2 = 0;
  double c_tau3 = 0;
  double c_tau4 = 0;
  double c0_tau = 0;
};

/// Closed-form C_{0,tau}(tau, c0, C_alpha, W_max). Throws ConstantOverflow
/// when exp(3 W_max) leaves the double range.
ConstantTerms theoretical_constant(double tau, double c0, double C_alpha, double W_max);

/// Largest |W| over every kernel of order l usable for horizon T.
double kernel_w_max(int l, int T);

struct TheoreticalMode {
  double tau = 1.0;
  double c0 = 1.0;
  double C_alpha = 1.0;
};

struct EmpiricalMode {
  double c = 1.0;
};

/// Threshold constant for the Lepskii tests.
using ConstantMode = std::variant<TheoreticalMode, EmpiricalMode>;

struct LepskiiTest {
  int r = 0;
  int rho = 0;
  double statistic = 0;
  double threshold = 0;
  bool pass = false;
};

struct LepskiiTrace {
  int t = 0;
  std::vector<int> candidates;   ///< r values with a solvable kernel at t
  std::vector<LepskiiTest> tests;
  int r_hat = 0;
  double constant = 0;
  std::string mode;              ///< "theoretical" or "empirical"
  std::string search = "prefix-scan: stop at first r failing any test against a smaller candidate";
};

struct LepskiiResult {
  EstimatedMatrix estimate;
  LepskiiTrace trace;
};

struct LepskiiOptions {
  SpectralNormOptions norm;
  std::optional<int> r_max;   ///< defaults to floor(T / 2)
};

/// r_hat = largest candidate r with ||P_r - P_rho|| <= 4 C sqrt(n alpha_n / max(rho, 1))
/// for all smaller candidates rho. Candidates are scanned upwards; the first
/// failure ends the search.
LepskiiResult lepskii_select(const SnapshotSequence& snapshots, int t, int l, double alpha_n,
                             const ConstantMode& mode, const LepskiiOptions& options = {},
                             KernelBank* bank = nullptr);

/// Numeric value of the threshold constant C for a mode.
double lepskii_constant(const ConstantMode& mode, int l, int T);

/// Empirical constant from null (constant-P) pilot sequences: the `quantile`
/// of max_{rho < r} ||P_r - P_rho|| / (4 sqrt(n alpha_n / max(rho, 1))) over
/// pilots and times, so that every Lepskii test passes at that quantile.
double calibrate_empirical_constant(std::span<const SnapshotSequence> pilots, std::span<const int> times, int l,
                                    double alpha_n, double quantile, const LepskiiOptions& options = {});

/// Bias/variance-optimal half-width with unit constants:
/// min(floor((alpha_n T^{2 beta} / n)^{1/(2 beta + 1)}), floor(sqrt(n / (alpha_n n_max s)))).
/// The switching term is dropped when s == 0. Diagnostic only.
int oracle_window(const DsbmParams& params, int n_max);

struct ErrorDecomposition {
  double total = 0;          ///< ||P_hat - P_t||
  double variance_part = 0;  ///< ||P_hat - P_{t,r}||
  double bias_part = 0;      ///< ||P_{t,r} - P_t||
};

/// Splits the estimation error against `truth` using the same window and
/// kernel as `estimate`. Pass expected_adjacency(P, diag) as truth to compare
/// like with like on the diagonal.
ErrorDecomposition error_decomposition(const EstimatedMatrix& estimate, const ProbabilityTensor& truth,
                                       const SpectralNormOptions& norm = {});
ErrorDecomposition error_decomposition(const EstimatedMatrix& estimate, const ProbabilityTensor& truth,
                                       const DiscreteKernel& kernel, const SpectralNormOptions& norm = {});

/// Mean off-diagonal density over all snapshots; plug-in for unknown alpha_n.
double plugin_density(const SnapshotSequence& snapshots);

}  // namespace dsbm
