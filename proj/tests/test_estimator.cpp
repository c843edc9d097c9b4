#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "dsbm/error.hpp"
#include "dsbm/estimator.hpp"
#include "dsbm/rng.hpp"
#include "support.hpp"

namespace dsbm {
namespace {

SnapshotSequence random_sequence(int n, int T, std::uint64_t seed, double p = 0.3) {
  return sample_adjacency(ProbabilityTensor(static_cast<std::size_t>(T), Matrix::Constant(n, n, p)), 10.0, seed);
}

TEST(AssignWindow, Examples) {
  // 1-based t = 5, 1, 10 of a horizon T = 10.
  auto w = assign_window(4, 2, 10);
  EXPECT_EQ(w.window, WindowType::Interior);
  EXPECT_EQ(w.offsets, (std::vector<int>{-2, -1, 0, 1, 2}));
  w = assign_window(0, 2, 10);
  EXPECT_EQ(w.window, WindowType::LeftBoundary);
  EXPECT_EQ(w.offsets, (std::vector<int>{0, 1, 2}));
  w = assign_window(9, 2, 10);
  EXPECT_EQ(w.window, WindowType::RightBoundary);
  EXPECT_EQ(w.offsets, (std::vector<int>{-2, -1, 0}));
}

TEST(AssignWindow, PartitionAndOffsetsInRange) {
  for (int T = 1; T <= 15; ++T) {
    for (int r = 0; r <= T / 2; ++r) {
      for (int t = 0; t < T; ++t) {
        const auto w = assign_window(t, r, T);
        const bool left = t < r, right = t >= T - r;
        EXPECT_FALSE(left && right);
        const WindowType expected =
            left ? WindowType::LeftBoundary : (right ? WindowType::RightBoundary : WindowType::Interior);
        EXPECT_EQ(w.window, expected);
        for (int o : w.offsets) {
          EXPECT_GE(t + o, 0);
          EXPECT_LT(t + o, T);
        }
      }
    }
  }
}

TEST(AssignWindow, Errors) {
  EXPECT_THROW(assign_window(2, 6, 10), WindowTooLarge);
  EXPECT_THROW(assign_window(10, 1, 10), OutOfRange);
}

TEST(Estimate, ZeroHalfWidthIsSnapshot) {
  const auto S = random_sequence(12, 6, 1);
  for (int t = 0; t < 6; ++t) EXPECT_EQ(estimate_probability(S, t, 0, 3).values, S.A[static_cast<std::size_t>(t)]);
}

TEST(Estimate, OrderZeroInteriorIsWindowMean) {
  const auto S = random_sequence(10, 11, 2);
  for (int r = 1; r <= 5; ++r) {
    Matrix mean = Matrix::Zero(10, 10);
    for (int i = -r; i <= r; ++i) mean += S.A[static_cast<std::size_t>(5 + i)];
    mean /= 2 * r + 1;
    EXPECT_LT((estimate_probability(S, 5, r, 0).values - mean).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Estimate, MatchesDirectWeightedSum) {
  const auto S = random_sequence(9, 20, 3);
  for (int t : {0, 3, 10, 18, 19}) {
    for (int r : {1, 3, 6}) {
      const auto w = assign_window(t, r, 20);
      const DiscreteKernel k = build_kernel(w.window, r, 2 <= r ? 2 : 1);
      Matrix direct = Matrix::Zero(9, 9);
      for (int o : w.offsets) direct += k.weight(o) * S.A[static_cast<std::size_t>(t + o)];
      direct /= static_cast<double>(w.offsets.size());
      const auto est = estimate_probability(S, t, r, k.l);
      EXPECT_EQ(est.window, w.window);
      EXPECT_LT((est.values - direct).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Estimate, ConstantPConcentrates) {
  const int n = 50, T = 41, r = 20;
  const auto S = sample_adjacency(ProbabilityTensor(T, Matrix::Constant(n, n, 0.5)), 0.0, 17);
  const Matrix est = estimate_probability(S, 20, r, 0).values;
  const double bound = 3 * std::sqrt(0.25 / T);
  ASSERT_NEAR(bound, 0.234, 1e-3);
  int outside = 0;
  double worst = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      outside += std::abs(est(i, j) - 0.5) > bound;
      worst = std::max(worst, std::abs(est(i, j) - 0.5));
    }
  }
  // 1225 pairs, each outside 3 sd with probability 0.0027.
  EXPECT_LE(outside, 12);
  EXPECT_LT(worst, 5 * std::sqrt(0.25 / T));
}

TEST(EstimateProperty, LinearSymmetricAndReproducesConstants) {
  const auto S = random_sequence(15, 16, 5);
  SnapshotSequence scaled = S;
  for (Matrix& A : scaled.A) A *= 2.5;
  SnapshotSequence same = S;
  for (Matrix& A : same.A) A = S.A[3];
  for (int t : {0, 7, 15}) {
    for (int r : {2, 5, 8}) {
      for (int l : {0, 1, 2}) {
        const Matrix a = estimate_probability(S, t, r, l).values;
        EXPECT_LT((estimate_probability(scaled, t, r, l).values - 2.5 * a).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_EQ(a, a.transpose());
        EXPECT_EQ(estimate_probability(same, t, r, l).values, S.A[3]);
      }
    }
  }
}

TEST(Estimate, ClippedView) {
  EstimatedMatrix e;
  e.values = Matrix(1, 3);
  e.values << -0.2, 0.5, 1.4;
  const Matrix c = e.clipped();
  EXPECT_EQ(c(0, 0), 0.0);
  EXPECT_EQ(c(0, 1), 0.5);
  EXPECT_EQ(c(0, 2), 1.0);
}

TEST(TheoreticalConstant, TermExamples) {
  const ConstantTerms c = theoretical_constant(1.0, 1.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(c.c_tau4, 56.0);
  const double a = 2 * std::sqrt(1 + std::log(14.0));
  const double b = 8 * (1 + std::log(14.0)) / 3;
  ASSERT_GT(b, a);
  EXPECT_NEAR(c.c_tau1, b, 1e-12);
  EXPECT_NEAR(c.c_tau1, 9.70, 5e-3);
  // c_tau2 = max(sqrt(2 (tau + 1) / c0), (tau + 1) / (3 c0)) = 2.
  EXPECT_DOUBLE_EQ(c.c_tau2, 2.0);
  // c_tau3 = max(3 (W c_tau2 + 1), e^{3W} + 1) = max(9, e^3 + 1).
  EXPECT_DOUBLE_EQ(c.c_tau3, std::exp(3.0) + 1.0);
  const double expected =
      4 * (1 * (1 + c.c_tau1) + 32 * (24 * 1 * c.c_tau2 + 4 * std::exp(1.0) * c.c_tau3 + 40 * c.c_tau4 + 96));
  EXPECT_NEAR(c.c0_tau, expected, 1e-9 * expected);
}

TEST(TheoreticalConstant, IncreasingInTau) {
  double prev = 0;
  for (double tau : {0.5, 1.0, 2.0, 4.0}) {
    const double c = theoretical_constant(tau, 1.0, 1.5, 2.0).c0_tau;
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(TheoreticalConstant, OverflowAndValidation) {
  EXPECT_THROW(theoretical_constant(1.0, 1.0, 1.0, 300.0), ConstantOverflow);
  EXPECT_THROW(theoretical_constant(0.0, 1.0, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(theoretical_constant(1.0, 1.0, 0.5, 1.0), InvalidArgument);
  EXPECT_THROW(theoretical_constant(1.0, 1.0, 1.0, 0.5), InvalidArgument);
}

TEST(KernelWMax, CoversAllUsableKernels) {
  double expected = 0;
  for (int r = 1; r <= 10; ++r) {
    for (WindowType w : {WindowType::Interior, WindowType::LeftBoundary, WindowType::RightBoundary}) {
      try {
        expected = std::max(expected, build_kernel(w, r, 2).w_max());
      } catch (const SingularMomentSystem&) {
      }
    }
  }
  EXPECT_DOUBLE_EQ(kernel_w_max(2, 20), std::max(expected, 1.0));
}

TEST(OracleWindow, Examples) {
  DsbmParams p;
  p.n = 4;
  p.T = 64;
  p.beta = 1e6;
  p.s = 0;
  EXPECT_GE(oracle_window(p, 4), 32);

  p.n = 100;
  p.T = 100;
  p.beta = 1;
  EXPECT_EQ(oracle_window(p, 50), 4);

  p.s = 100;
  EXPECT_EQ(oracle_window(p, 100), 0);
}

TEST(ErrorDecomposition, ExactEstimateIsZero) {
  const ProbabilityTensor P(5, Matrix::Constant(6, 6, 0.3));
  EstimatedMatrix e;
  e.t = 2;
  e.r = 0;
  e.values = P[2];
  const auto d = error_decomposition(e, P);
  EXPECT_EQ(d.total, 0.0);
  EXPECT_EQ(d.variance_part, 0.0);
  EXPECT_EQ(d.bias_part, 0.0);
}

TEST(ErrorDecomposition, ConstantPHasZeroBias) {
  const ProbabilityTensor P(30, Matrix::Constant(20, 20, 0.4));
  const auto S = sample_adjacency(P, 0.4, 3);
  const auto E = P;   // diagonal 0.4 matches the snapshots' diagonal
  for (int t : {0, 10, 29}) {
    for (int r : {2, 4, 15}) {
      for (int l : {0, 1, 2}) {
        const auto d = error_decomposition(estimate_probability(S, t, r, l), E);
        EXPECT_EQ(d.bias_part, 0.0);
        EXPECT_LE(d.total, d.variance_part + d.bias_part + 1e-12);
      }
    }
  }
}

TEST(ErrorDecomposition, TriangleOnSinusoid) {
  Matrix base(2, 2), amp(2, 2);
  base << 0.5, 0.1, 0.1, 0.4;
  amp << 0.2, 0.05, 0.05, 0.2;
  const auto spec = ConnectivitySpec::affine_sinusoid(base, amp);
  DsbmParams p;
  p.n = 40;
  p.K = 2;
  p.T = 40;
  const auto m = simulate_memberships(p, std::nullopt, 1);
  const auto P = probability_tensor(m, spec);
  const auto S = sample_adjacency(P, 10.0, 2);
  const auto E = expected_adjacency(P, 10.0);
  for (int r : {0, 2, 5, 10, 20}) {
    const auto d = error_decomposition(estimate_probability(S, 20, r, 1), E);
    EXPECT_LE(d.total, d.variance_part + d.bias_part + 1e-10);
    EXPECT_GE(d.total + 1e-10, std::abs(d.variance_part - d.bias_part));
  }
}

TEST(ErrorDecomposition, BiasGrowsAndVarianceShrinksWithR) {
  // Monte Carlo means over 100 replicates on a sinusoidal B.
  Matrix base(2, 2), amp(2, 2);
  base << 0.5, 0.15, 0.15, 0.45;
  amp << 0.3, 0.1, 0.1, 0.3;
  const auto spec = ConnectivitySpec::affine_sinusoid(base, amp, 1.0, 1.0);
  DsbmParams p;
  p.n = 40;
  p.K = 2;
  p.T = 60;
  const auto m = simulate_memberships(p, std::nullopt, 1);
  const auto P = probability_tensor(m, spec);
  const auto E = expected_adjacency(P, 0.0);
  const std::vector<int> grid = {1, 3, 9, 27};
  std::vector<double> bias(grid.size(), 0), var(grid.size(), 0);
  for (int rep = 0; rep < 100; ++rep) {
    const auto S = sample_adjacency(P, 0.0, derive_seed(5, static_cast<std::uint64_t>(rep)));
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto d = error_decomposition(estimate_probability(S, 29, grid[g], 0), E);
      bias[g] += d.bias_part / 100;
      var[g] += d.variance_part / 100;
    }
  }
  for (std::size_t g = 1; g < grid.size(); ++g) {
    EXPECT_GE(bias[g], bias[g - 1] - 1e-12);
    EXPECT_LT(var[g], var[g - 1]);
  }
}

TEST(EstimateProperty, VarianceShrinksLikeInverseRootR) {
  const int n = 60, T = 40;
  const ProbabilityTensor P(T, Matrix::Constant(n, n, 0.3));
  double e1 = 0, e16 = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto S = sample_adjacency(P, 0.3, derive_seed(8, static_cast<std::uint64_t>(rep)));
    e1 += error_decomposition(estimate_probability(S, 20, 1, 0), P).total;
    e16 += error_decomposition(estimate_probability(S, 20, 16, 0), P).total;
  }
  EXPECT_LT(e16, e1);
  EXPECT_LT(e16 / e1, 0.5);
}

TEST(PluginDensity, MeanOffDiagonal) {
  SnapshotSequence S;
  S.diag_value = 10;
  Matrix A = Matrix::Zero(3, 3);
  A(0, 1) = A(1, 0) = 1;
  A.diagonal().setConstant(10);
  S.A = {A, Matrix(Matrix::Ones(3, 3))};
  // Off-diagonal densities 1/3 and 1.
  EXPECT_NEAR(plugin_density(S), (1.0 / 3 + 1.0) / 2, 1e-15);
}

}  // namespace
}  // namespace dsbm
