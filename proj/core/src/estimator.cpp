#include "dsbm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dsbm/error.hpp"

namespace dsbm {

WindowAssignment assign_window(int t, int r, int T) {
  if (T < 1 || t < 0 || t >= T) throw OutOfRange("time index " + std::to_string(t) + " outside [0, T)");
  if (r < 0) throw InvalidArgument("window half-width must be nonnegative");
  if (r > T / 2) {
    throw WindowTooLarge("half-width " + std::to_string(r) + " exceeds floor(T/2) = " + std::to_string(T / 2));
  }
  WindowAssignment a;
  a.t = t;
  a.r = r;
  if (t < r) {
    a.window = WindowType::LeftBoundary;
  } else if (t >= T - r) {
    a.window = WindowType::RightBoundary;
  } else {
    a.window = WindowType::Interior;
  }
  a.offsets = window_offsets(a.window, r);
  return a;
}

const DiscreteKernel& KernelBank::get(WindowType window, int r, int l) {
  const auto key = std::make_tuple(static_cast<int>(window), r, l);
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, build_kernel(window, r, l)).first;
  return it->second;
}

Matrix kernel_smooth(std::span<const Matrix> seq, const WindowAssignment& window, const DiscreteKernel& kernel) {
  if (kernel.window != window.window || kernel.r != window.r) {
    throw DimensionMismatch("kernel does not match the window assignment");
  }
  const auto t = static_cast<std::size_t>(window.t);
  if (t >= seq.size()) throw OutOfRange("time index outside the sequence");
  const Matrix& anchor = seq[t];
  Matrix result = anchor;
  const double card = static_cast<double>(window.offsets.size());
  for (std::size_t idx = 0; idx < window.offsets.size(); ++idx) {
    const int offset = window.offsets[idx];
    if (offset == 0) continue;
    const auto src = static_cast<std::size_t>(window.t + offset);
    if (src >= seq.size()) throw OutOfRange("window reaches outside the sequence");
    if (seq[src].rows() != anchor.rows() || seq[src].cols() != anchor.cols()) {
      throw DimensionMismatch("matrices in the sequence differ in size");
    }
    result.noalias() += (kernel.weights[idx] / card) * (seq[src] - anchor);
  }
  return result;
}

EstimatedMatrix estimate_probability(const SnapshotSequence& snapshots, int t, int r, int l, KernelBank* bank) {
  const WindowAssignment window = assign_window(t, r, snapshots.T());
  DiscreteKernel local;
  const DiscreteKernel* kernel = nullptr;
  if (bank) {
    kernel = &bank->get(window.window, r, l);
  } else {
    local = build_kernel(window.window, r, l);
    kernel = &local;
  }
  EstimatedMatrix out;
  out.t = t;
  out.r = r;
  out.l = l;
  out.window = window.window;
  out.values = kernel_smooth(snapshots.A, window, *kernel);
  return out;
}

ConstantTerms theoretical_constant(double tau, double c0, double C_alpha, double W_max) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (!(c0 > 0.0)) throw InvalidArgument("c0 must be positive");
  if (!(C_alpha >= 1.0)) throw InvalidArgument("C_alpha must be >= 1");
  if (!(W_max >= 1.0)) throw InvalidArgument("W_max must be >= 1");

  const double log_max = std::log(std::numeric_limits<double>::max());
  if (3.0 * W_max >= log_max) {
    throw ConstantOverflow("exp(3 W_max) overflows for W_max = " + std::to_string(W_max));
  }

  ConstantTerms c;
  const double a = tau + std::log(14.0);
  c.c_tau1 = std::max(2.0 * std::sqrt(a), 8.0 * a / 3.0);
  c.c_tau2 = std::max(std::sqrt(2.0 * (tau + 1.0) / c0), (tau + 1.0) / (3.0 * c0));
  c.c_tau3 = std::max(3.0 * (W_max * c.c_tau2 + 1.0), std::exp(3.0 * W_max) + 1.0);
  c.c_tau4 = 8.0 * W_max * (tau + 6.0);
  const double inner = W_max * (1.0 + c.c_tau1) +
                       32.0 * (24.0 * W_max * c.c_tau2 + 4.0 * std::numbers::e * c.c_tau3 + 40.0 * c.c_tau4 + 96.0);
  c.c0_tau = 4.0 * std::sqrt(C_alpha) * inner;
  if (!std::isfinite(c.c0_tau)) throw ConstantOverflow("C_{0,tau} overflows the double range");
  return c;
}

double kernel_w_max(int l, int T) {
  double w = 1.0;
  for (int r = 1; r <= T / 2; ++r) {
    for (WindowType window : {WindowType::Interior, WindowType::LeftBoundary, WindowType::RightBoundary}) {
      try {
        w = std::max(w, build_kernel(window, r, l).w_max());
      } catch (const SingularMomentSystem&) {
        // This (window, r) cannot carry an order-l kernel and is never used.
      }
    }
  }
  return w;
}

int oracle_window(const DsbmParams& params, int n_max) {
  if (params.n < 1 || params.T < 1 || !(params.alpha_n > 0) || !(params.beta > 0)) {
    throw InvalidArgument("oracle_window requires positive n, T, alpha_n and beta");
  }
  auto to_floor = [](double x) {
    const double v = std::floor(x * (1.0 + 1e-12));
    return v >= static_cast<double>(std::numeric_limits<int>::max()) ? std::numeric_limits<int>::max()
                                                                      : static_cast<int>(v);
  };
  const double two_beta = 2.0 * params.beta;
  const double log_value =
      (std::log(params.alpha_n) + two_beta * std::log(static_cast<double>(params.T)) - std::log(params.n)) /
      (two_beta + 1.0);
  const int time_branch = to_floor(std::exp(log_value));
  if (params.s == 0) return time_branch;
  if (n_max < 1) throw InvalidArgument("n_max must be positive");
  const double switch_value = std::sqrt(static_cast<double>(params.n) / (params.alpha_n * n_max * params.s));
  return std::min(time_branch, to_floor(switch_value));
}

ErrorDecomposition error_decomposition(const EstimatedMatrix& estimate, const ProbabilityTensor& truth,
                                       const DiscreteKernel& kernel, const SpectralNormOptions& norm) {
  const int T = static_cast<int>(truth.size());
  const WindowAssignment window = assign_window(estimate.t, estimate.r, T);
  const Matrix& Pt = truth[static_cast<std::size_t>(estimate.t)];
  if (Pt.rows() != estimate.values.rows() || Pt.cols() != estimate.values.cols()) {
    throw DimensionMismatch("estimate and truth differ in size");
  }
  const Matrix Ptr = kernel_smooth(truth, window, kernel);
  ErrorDecomposition d;
  d.total = spectral_norm(estimate.values - Pt, norm);
  d.variance_part = spectral_norm(estimate.values - Ptr, norm);
  d.bias_part = spectral_norm(Ptr - Pt, norm);
  const double slack = 4.0 * norm.tol * (d.variance_part + d.bias_part) + 1e-12;
  if (d.total > d.variance_part + d.bias_part + slack) {
    throw std::logic_error("triangle inequality violated in error decomposition");
  }
  return d;
}

ErrorDecomposition error_decomposition(const EstimatedMatrix& estimate, const ProbabilityTensor& truth,
                                       const SpectralNormOptions& norm) {
  return error_decomposition(estimate, truth, build_kernel(estimate.window, estimate.r, estimate.l), norm);
}

double plugin_density(const SnapshotSequence& snapshots) {
  const int n = snapshots.n();
  if (n < 2 || snapshots.T() == 0) return 0.0;
  double total = 0.0;
  for (const Matrix& A : snapshots.A) total += A.sum() - A.diagonal().sum();
  return total / (static_cast<double>(n) * (n - 1) * snapshots.T());
}

}  // namespace dsbm
