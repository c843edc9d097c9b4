#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "dsbm/error.hpp"
#include "dsbm/estimator.hpp"
#include "dsbm/rng.hpp"

namespace dsbm {
namespace {

SnapshotSequence constant_sequence(int n, int T, double p, std::uint64_t seed) {
  return sample_adjacency(ProbabilityTensor(static_cast<std::size_t>(T), Matrix::Constant(n, n, p)), 0.0, seed);
}

double dense_norm(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

TEST(Lepskii, SingleSnapshotSelectsZero) {
  const auto S = constant_sequence(10, 1, 0.4, 1);
  const auto res = lepskii_select(S, 0, 1, 1.0, EmpiricalMode{1.0});
  EXPECT_EQ(res.trace.r_hat, 0);
  EXPECT_EQ(res.estimate.values, S.A[0]);
  EXPECT_TRUE(res.trace.tests.empty());
}

TEST(Lepskii, HugeConstantSelectsLargestWindow) {
  const auto S = constant_sequence(12, 21, 0.3, 2);
  for (int t : {0, 10, 20}) {
    for (int l : {0, 1, 2}) {
      const auto res = lepskii_select(S, t, l, 1.0, EmpiricalMode{1e6});
      EXPECT_EQ(res.trace.r_hat, 10) << "t=" << t << " l=" << l;
      EXPECT_EQ(res.estimate.r, 10);
      EXPECT_TRUE(std::all_of(res.trace.tests.begin(), res.trace.tests.end(), [](auto& x) { return x.pass; }));
    }
  }
}

TEST(Lepskii, TinyConstantStopsEarly) {
  const auto S = constant_sequence(20, 21, 0.3, 3);
  const auto res = lepskii_select(S, 10, 0, 1.0, EmpiricalMode{1e-6});
  EXPECT_EQ(res.trace.r_hat, 0);
  ASSERT_EQ(res.trace.tests.size(), 1u);
  EXPECT_FALSE(res.trace.tests[0].pass);
}

TEST(Lepskii, TraceMatchesIndependentRecomputation) {
  const int n = 25, T = 17;
  const auto S = constant_sequence(n, T, 0.35, 4);
  const double c = 0.2, alpha = 0.7;
  const auto res = lepskii_select(S, 8, 1, alpha, EmpiricalMode{c});
  ASSERT_FALSE(res.trace.tests.empty());
  for (const LepskiiTest& test : res.trace.tests) {
    const Matrix a = estimate_probability(S, 8, test.r, 1).values;
    const Matrix b = estimate_probability(S, 8, test.rho, 1).values;
    EXPECT_NEAR(test.statistic, dense_norm(a - b), 1e-8);
    EXPECT_NEAR(test.threshold, 4 * c * std::sqrt(n * alpha / std::max(test.rho, 1)), 1e-12);
    EXPECT_EQ(test.pass, test.statistic <= test.threshold);
  }
}

TEST(Lepskii, PrefixSemantics) {
  // r_hat is accepted against every smaller candidate; the next candidate fails one test.
  const int T = 31;
  Matrix base = Matrix::Constant(30, 30, 0.2);
  ProbabilityTensor P;
  for (int t = 0; t < T; ++t) {
    Matrix M = base;
    M.topLeftCorner(15, 15).array() += 0.6 * t / T;
    P.push_back(M);
  }
  const auto S = sample_adjacency(P, 0.0, 5);
  for (double c : {0.05, 0.1, 0.2, 0.4}) {
    const auto res = lepskii_select(S, 15, 0, 1.0, EmpiricalMode{c});
    const int r_hat = res.trace.r_hat;
    for (const LepskiiTest& test : res.trace.tests) {
      if (test.r <= r_hat) {
        EXPECT_TRUE(test.pass);
      }
    }
    if (r_hat < T / 2) {
      ASSERT_FALSE(res.trace.tests.empty());
      EXPECT_EQ(res.trace.tests.back().r, r_hat + 1);
      EXPECT_FALSE(res.trace.tests.back().pass);
    }
  }
}

TEST(Lepskii, CandidatesSkipUnsolvableWindows) {
  const auto S = constant_sequence(8, 20, 0.3, 6);
  // Left boundary at t = 0 with l = 2 needs r >= 2.
  const auto res = lepskii_select(S, 0, 2, 1.0, EmpiricalMode{1e6});
  ASSERT_FALSE(res.trace.candidates.empty());
  EXPECT_EQ(res.trace.candidates.front(), 0);
  EXPECT_EQ(std::count(res.trace.candidates.begin(), res.trace.candidates.end(), 1), 0);
}

TEST(Lepskii, RMaxCapsSearch) {
  const auto S = constant_sequence(8, 20, 0.3, 7);
  LepskiiOptions opt;
  opt.r_max = 3;
  EXPECT_EQ(lepskii_select(S, 10, 0, 1.0, EmpiricalMode{1e6}, opt).trace.r_hat, 3);
}

TEST(Lepskii, TheoreticalConstant) {
  const TheoreticalMode mode{1.0, 1.0, 2.0};
  const double expected = theoretical_constant(1.0, 1.0, 2.0, kernel_w_max(1, 20)).c0_tau;
  EXPECT_DOUBLE_EQ(lepskii_constant(mode, 1, 20), expected);
  const auto S = constant_sequence(8, 20, 0.3, 8);
  const auto res = lepskii_select(S, 10, 1, 1.0, mode);
  EXPECT_EQ(res.trace.mode, "theoretical");
  EXPECT_DOUBLE_EQ(res.trace.constant, expected);
  // The theoretical constant is large enough that nothing is ever rejected here.
  EXPECT_EQ(res.trace.r_hat, 10);
}

TEST(Lepskii, Validation) {
  const auto S = constant_sequence(8, 10, 0.3, 9);
  EXPECT_THROW(lepskii_select(S, 10, 1, 1.0, EmpiricalMode{1.0}), OutOfRange);
  EXPECT_THROW(lepskii_select(S, 0, 1, 0.0, EmpiricalMode{1.0}), InvalidArgument);
  EXPECT_THROW(lepskii_select(S, 0, 1, 1.0, EmpiricalMode{-1.0}), InvalidArgument);
}

TEST(Calibration, MatchesIndependentOracle) {
  const int n = 16, T = 12, l = 1;
  const double alpha = 0.8, q = 0.9;
  std::vector<SnapshotSequence> pilots;
  for (int i = 0; i < 4; ++i) pilots.push_back(constant_sequence(n, T, 0.3, derive_seed(10, i)));
  const std::vector<int> times = {0, 5, 11};

  std::vector<double> sample;
  for (const auto& S : pilots) {
    for (int t : times) {
      std::vector<std::pair<int, Matrix>> est;
      for (int r = 0; r <= T / 2; ++r) {
        try {
          est.emplace_back(r, estimate_probability(S, t, r, l).values);
        } catch (const SingularMomentSystem&) {
        }
      }
      double worst = 0;
      for (std::size_t a = 0; a < est.size(); ++a) {
        for (std::size_t b = 0; b < a; ++b) {
          const double scale = 4 * std::sqrt(n * alpha / std::max(est[b].first, 1));
          worst = std::max(worst, dense_norm(est[a].second - est[b].second) / scale);
        }
      }
      sample.push_back(worst);
    }
  }
  std::sort(sample.begin(), sample.end());
  const double pos = q * (sample.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double oracle = sample[lo] + (pos - lo) * (sample[std::min(lo + 1, sample.size() - 1)] - sample[lo]);

  const double c = calibrate_empirical_constant(pilots, times, l, alpha, q);
  EXPECT_NEAR(c, oracle, 1e-8 * oracle);
  EXPECT_DOUBLE_EQ(calibrate_empirical_constant(pilots, times, l, alpha, q), c);

  // At the max quantile every calibration test passes.
  const double c_max = calibrate_empirical_constant(pilots, times, l, alpha, 1.0);
  for (const auto& S : pilots) {
    for (int t : times) EXPECT_EQ(lepskii_select(S, t, l, alpha, EmpiricalMode{c_max * (1 + 1e-9)}).trace.r_hat, T / 2);
  }
}

TEST(Calibration, Validation) {
  std::vector<SnapshotSequence> none;
  const std::vector<int> times = {0};
  EXPECT_THROW(calibrate_empirical_constant(none, times, 0, 1.0, 0.9), InvalidArgument);
  std::vector<SnapshotSequence> one = {constant_sequence(6, 6, 0.3, 1)};
  EXPECT_THROW(calibrate_empirical_constant(one, times, 0, 1.0, 0.0), InvalidArgument);
}

}  // namespace
}  // namespace dsbm
