#include "dsbm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dsbm/error.hpp"
#include "dsbm/rng.hpp"

namespace dsbm {

namespace {

constexpr int kRitzCheckEvery = 5;
constexpr int kFirstRitzCheck = 10;
constexpr std::uint64_t kLanczosStartSeed = 0x5eed1a2c05ULL;

double dense_norm(const Eigen::MatrixXd& M) {
  const Eigen::VectorXd values = symmetric_eigenvalues(M);
  return std::max(std::abs(values(0)), std::abs(values(values.size() - 1)));
}

void orthogonalize(Eigen::Ref<Eigen::VectorXd> w, const Eigen::MatrixXd& basis, Eigen::Index cols) {
  // Two passes of classical Gram-Schmidt keep the basis orthogonal to working precision.
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd coeffs = basis.leftCols(cols).transpose() * w;
    w.noalias() -= basis.leftCols(cols) * coeffs;
  }
}

Eigen::VectorXd random_unit(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform01(rng) - 0.5;
  return v.normalized();
}

/// Number of eigenvalues of the m x m tridiagonal (a, b) strictly below x.
int sturm_count(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Eigen::Index m, double x, double tiny) {
  int count = 0;
  double d = 1.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double off = k > 0 ? b(k - 1) * b(k - 1) / d : 0.0;
    d = a(k) - x - off;
    if (std::abs(d) < tiny) d = -tiny;
    if (d < 0.0) ++count;
  }
  return count;
}

double sturm_tiny(double scale) { return std::numeric_limits<double>::min() * 1e10 + 1e-300 * scale; }

/// k-th smallest eigenvalue (0-based) of the tridiagonal by bisection on [lo, hi].
double bisect_eigenvalue(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Eigen::Index m, int k, double lo,
                         double hi, double scale) {
  const double tiny = sturm_tiny(scale);
  while (hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * std::max({std::abs(lo), std::abs(hi), scale})) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(a, b, m, mid, tiny) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Smallest (lowest = true) or largest eigenvalue of the leading m x m
/// tridiagonal. `previous` is the same extreme for a smaller m, if known;
/// by interlacing the new extreme lies beyond it, which gives a tight bracket.
double tridiagonal_extreme(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Eigen::Index m, bool lowest,
                           double scale, const double* previous) {
  double glo = 0.0;
  double ghi = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = (i > 0 ? std::abs(b(i - 1)) : 0.0) + (i + 1 < m ? std::abs(b(i)) : 0.0);
    glo = i == 0 ? a(i) - r : std::min(glo, a(i) - r);
    ghi = i == 0 ? a(i) + r : std::max(ghi, a(i) + r);
  }
  const int k = lowest ? 0 : static_cast<int>(m - 1);
  if (!previous) return bisect_eigenvalue(a, b, m, k, glo, ghi, scale);

  const double tiny = sturm_tiny(scale);
  const double nudge = 8.0 * std::numeric_limits<double>::epsilon() * scale;
  double lo = glo;
  double hi = ghi;
  if (lowest) {
    const double inner = *previous + nudge;
    if (inner < ghi && sturm_count(a, b, m, inner, tiny) >= 1) hi = inner;
    for (double delta = 1e-8 * scale; *previous - delta > glo; delta *= 16.0) {
      if (sturm_count(a, b, m, *previous - delta, tiny) == 0) {
        lo = *previous - delta;
        break;
      }
    }
  } else {
    const double inner = *previous - nudge;
    if (inner > glo && sturm_count(a, b, m, inner, tiny) <= k) lo = inner;
    for (double delta = 1e-8 * scale; *previous + delta < ghi; delta *= 16.0) {
      if (sturm_count(a, b, m, *previous + delta, tiny) > k) {
        hi = *previous + delta;
        break;
      }
    }
  }
  return bisect_eigenvalue(a, b, m, k, lo, hi, scale);
}

/// |last component| of the unit eigenvector for an extreme eigenvalue theta,
/// by two steps of inverse iteration. Shifting theta slightly outside the
/// spectrum makes T - shift definite, so elimination without pivoting is stable.
double last_component(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Eigen::Index m, double theta,
                      bool lowest, double scale) {
  const double shift = theta + (lowest ? -1.0 : 1.0) * 1e-10 * scale;
  Eigen::VectorXd diag(m);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(m);
  for (int step = 0; step < 2; ++step) {
    // Forward elimination then back substitution (Thomas algorithm).
    diag(0) = a(0) - shift;
    for (Eigen::Index k = 1; k < m; ++k) {
      const double f = b(k - 1) / diag(k - 1);
      diag(k) = a(k) - shift - f * b(k - 1);
      x(k) -= f * x(k - 1);
    }
    x(m - 1) /= diag(m - 1);
    for (Eigen::Index k = m - 1; k-- > 0;) x(k) = (x(k) - b(k) * x(k + 1)) / diag(k);
    x.normalize();
  }
  return std::abs(x(m - 1));
}

double lanczos_norm(const Eigen::MatrixXd& M, const SpectralNormOptions& options) {
  const Eigen::Index n = M.rows();
  const Eigen::Index cap = options.max_iter > 0 ? std::min<Eigen::Index>(options.max_iter, n) : n;

  // Reused across calls: a fresh n x n basis per call costs page faults.
  thread_local Eigen::MatrixXd V;
  if (V.rows() != n || V.cols() < cap + 1) V.resize(n, cap + 1);
  Eigen::VectorXd alpha(cap);
  Eigen::VectorXd beta(cap);
  Rng rng(kLanczosStartSeed);
  V.col(0) = random_unit(n, rng);

  Eigen::VectorXd w(n);
  double scale = 0.0;
  double prev_lo = 0.0;
  double prev_hi = 0.0;
  bool have_prev = false;
  double prev_res = 0.0;
  Eigen::Index prev_check = 0;
  Eigen::Index next_check = std::min<Eigen::Index>(kFirstRitzCheck, cap);
  for (Eigen::Index j = 0; j < cap; ++j) {
    w.noalias() = M * V.col(j);
    alpha(j) = V.col(j).dot(w);
    orthogonalize(w, V, j + 1);
    beta(j) = w.norm();
    scale = std::max({scale, std::abs(alpha(j)), beta(j)});
    if (scale == 0.0) return 0.0;

    const bool exhausted = j + 1 == n;
    const bool breakdown = beta(j) <= 1e-13 * scale;
    if (exhausted || breakdown || j + 1 >= next_check) {
      const Eigen::Index m = j + 1;
      const double lo = tridiagonal_extreme(alpha, beta, m, true, scale, have_prev ? &prev_lo : nullptr);
      const double hi = tridiagonal_extreme(alpha, beta, m, false, scale, have_prev ? &prev_hi : nullptr);
      prev_lo = lo;
      prev_hi = hi;
      have_prev = true;
      const double norm = std::max(std::abs(lo), std::abs(hi));
      if (exhausted) return norm;
      // Residual of a Ritz pair is beta_j times the last component of its vector.
      const double res_lo = beta(j) * last_component(alpha, beta, m, lo, true, scale);
      const double res_hi = beta(j) * last_component(alpha, beta, m, hi, false, scale);
      const double res = std::max(res_lo, res_hi) / std::max(norm, 1e-300);
      if (res <= options.tol) return norm;
      // Residuals decay roughly geometrically; aim the next check at the
      // predicted convergence step.
      Eigen::Index step = kRitzCheckEvery;
      if (prev_check > 0 && res < prev_res) {
        const double rate = std::log(prev_res / res) / static_cast<double>(m - prev_check);
        const double needed = std::log(res / options.tol) / rate;
        step = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::ceil(needed)), 2, 4 * kRitzCheckEvery);
      }
      prev_res = res;
      prev_check = m;
      next_check = std::min(m + step, cap);
    }
    if (j + 1 == cap) break;
    if (breakdown) {
      // Invariant subspace found; continue from a fresh direction orthogonal to it.
      Eigen::VectorXd fresh = random_unit(n, rng);
      orthogonalize(fresh, V, j + 1);
      beta(j) = 0.0;
      V.col(j + 1) = fresh.normalized();
    } else {
      V.col(j + 1) = w / beta(j);
    }
  }
  throw NoConvergence("Lanczos did not reach relative tolerance " + std::to_string(options.tol) + " within " +
                      std::to_string(cap) + " steps");
}

}  // namespace

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NoConvergence("symmetric eigensolver did not converge");
  return es.eigenvalues();
}

double spectral_norm(const Eigen::MatrixXd& M, const SpectralNormOptions& options) {
  if (M.rows() != M.cols()) throw InvalidArgument("spectral_norm requires a square matrix");
  if (M.size() == 0) return 0.0;
  if (!M.allFinite()) throw InvalidArgument("spectral_norm requires finite entries");
  NormMethod method = options.method;
  if (method == NormMethod::Auto) {
    method = M.rows() <= options.dense_cutoff ? NormMethod::Dense : NormMethod::Lanczos;
  }
  if (method == NormMethod::Dense || M.rows() <= 2) return dense_norm(M);
  return lanczos_norm(M, options);
}

}  // namespace dsbm
