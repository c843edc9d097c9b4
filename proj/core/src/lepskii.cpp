#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dsbm/error.hpp"
#include "dsbm/estimator.hpp"

namespace dsbm {

namespace {

double threshold_scale(int n, double alpha_n, int rho) {
  return 4.0 * std::sqrt(static_cast<double>(n) * alpha_n / std::max(rho, 1));
}

int resolve_r_max(const LepskiiOptions& options, int T) {
  const int r_max = options.r_max.value_or(T / 2);
  if (r_max < 0) throw InvalidArgument("r_max must be nonnegative");
  return std::min(r_max, T / 2);
}

/// Kernel for (t, r) or nullptr when the moment system has no solution.
const DiscreteKernel* try_kernel(KernelBank& bank, const WindowAssignment& window, int l) {
  try {
    return &bank.get(window.window, window.r, l);
  } catch (const SingularMomentSystem&) {
    return nullptr;
  }
}

double quantile_of(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

double lepskii_constant(const ConstantMode& mode, int l, int T) {
  if (const auto* e = std::get_if<EmpiricalMode>(&mode)) {
    if (!(e->c > 0.0) || !std::isfinite(e->c)) throw InvalidArgument("empirical constant must be positive");
    return e->c;
  }
  const auto& th = std::get<TheoreticalMode>(mode);
  return theoretical_constant(th.tau, th.c0, th.C_alpha, kernel_w_max(l, T)).c0_tau;
}

LepskiiResult lepskii_select(const SnapshotSequence& snapshots, int t, int l, double alpha_n, const ConstantMode& mode,
                             const LepskiiOptions& options, KernelBank* bank) {
  const int T = snapshots.T();
  const int n = snapshots.n();
  if (!(alpha_n > 0.0)) throw InvalidArgument("alpha_n must be positive");
  if (l < 0) throw InvalidArgument("kernel order must be nonnegative");
  if (t < 0 || t >= T) throw OutOfRange("time index " + std::to_string(t) + " outside [0, T)");
  KernelBank local_bank;
  KernelBank& kb = bank ? *bank : local_bank;

  LepskiiResult result;
  LepskiiTrace& trace = result.trace;
  trace.t = t;
  trace.constant = lepskii_constant(mode, l, T);
  trace.mode = std::holds_alternative<EmpiricalMode>(mode) ? "empirical" : "theoretical";

  const int r_max = resolve_r_max(options, T);
  std::vector<int> accepted;
  std::vector<Matrix> estimates;
  Matrix diff(n, n);
  for (int r = 0; r <= r_max; ++r) {
    const WindowAssignment window = assign_window(t, r, T);
    const DiscreteKernel* kernel = try_kernel(kb, window, l);
    if (!kernel) continue;
    trace.candidates.push_back(r);
    Matrix current = kernel_smooth(snapshots.A, window, *kernel);
    bool ok = true;
    // Largest rho first: its threshold is the tightest, so failures surface early.
    for (auto k = accepted.size(); k-- > 0;) {
      LepskiiTest test;
      test.r = r;
      test.rho = accepted[k];
      diff.noalias() = current - estimates[k];
      test.statistic = spectral_norm(diff, options.norm);
      test.threshold = trace.constant * threshold_scale(n, alpha_n, test.rho);
      test.pass = test.statistic <= test.threshold;
      trace.tests.push_back(test);
      if (!test.pass) {
        ok = false;
        break;
      }
    }
    if (!ok) break;
    accepted.push_back(r);
    estimates.push_back(std::move(current));
  }
  if (accepted.empty()) throw NumericalError("no usable window at t = " + std::to_string(t));

  trace.r_hat = accepted.back();
  const WindowAssignment chosen = assign_window(t, trace.r_hat, T);
  result.estimate.t = t;
  result.estimate.r = trace.r_hat;
  result.estimate.l = l;
  result.estimate.window = chosen.window;
  result.estimate.values = std::move(estimates.back());
  return result;
}

double calibrate_empirical_constant(std::span<const SnapshotSequence> pilots, std::span<const int> times, int l,
                                    double alpha_n, double quantile, const LepskiiOptions& options) {
  if (pilots.empty() || times.empty()) throw InvalidArgument("calibration needs at least one pilot and one time");
  if (!(quantile > 0.0 && quantile <= 1.0)) throw InvalidArgument("quantile must lie in (0, 1]");
  if (!(alpha_n > 0.0)) throw InvalidArgument("alpha_n must be positive");
  KernelBank bank;
  std::vector<double> sample;
  for (const SnapshotSequence& pilot : pilots) {
    const int T = pilot.T();
    const int n = pilot.n();
    const int r_max = resolve_r_max(options, T);
    for (int t : times) {
      std::vector<int> rs;
      std::vector<Matrix> estimates;
      Matrix diff(n, n);
      double worst = 0.0;
      for (int r = 0; r <= r_max; ++r) {
        const WindowAssignment window = assign_window(t, r, T);
        const DiscreteKernel* kernel = try_kernel(bank, window, l);
        if (!kernel) continue;
        Matrix current = kernel_smooth(pilot.A, window, *kernel);
        for (std::size_t k = 0; k < rs.size(); ++k) {
          diff.noalias() = current - estimates[k];
          const double stat = spectral_norm(diff, options.norm);
          worst = std::max(worst, stat / threshold_scale(n, alpha_n, rs[k]));
        }
        rs.push_back(r);
        estimates.push_back(std::move(current));
      }
      sample.push_back(worst);
    }
  }
  const double c = quantile_of(std::move(sample), quantile);
  if (!(c > 0.0)) throw NumericalError("calibration produced a nonpositive constant");
  return c;
}

}  // namespace dsbm
