#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "dsbm/linalg.hpp"
#include "support.hpp"

namespace dsbm {
namespace {

double dense_oracle(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

TEST(SpectralNorm, Diagonal) {
  Matrix M = Vector(Eigen::Vector3d(1, -3, 2)).asDiagonal();
  EXPECT_NEAR(spectral_norm(M), 3.0, 1e-12);
}

TEST(SpectralNorm, AllOnes) { EXPECT_NEAR(spectral_norm(Matrix::Ones(4, 4)), 4.0, 1e-12); }

TEST(SpectralNorm, Random8x8MatchesDenseOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix M = test::random_symmetric(8, s);
    EXPECT_NEAR(spectral_norm(M), dense_oracle(M), 1e-8 * dense_oracle(M));
  }
}

TEST(SpectralNorm, LanczosMatchesDenseOracle) {
  SpectralNormOptions lanczos;
  lanczos.method = NormMethod::Lanczos;
  for (int n : {20, 60, 150, 260}) {
    for (std::uint64_t s = 0; s < 3; ++s) {
      const Matrix M = test::random_symmetric(n, 100 + s);
      const double ref = dense_oracle(M);
      EXPECT_NEAR(spectral_norm(M, lanczos), ref, 1e-8 * ref) << "n=" << n;
    }
  }
}

TEST(SpectralNorm, LanczosOnLowRankPlusNoise) {
  // Block structure plus symmetric Bernoulli-like noise, as in estimation differences.
  const int n = 200;
  Matrix M = 0.05 * test::random_symmetric(n, 7);
  M.topLeftCorner(100, 100).array() += 0.3;
  const double ref = dense_oracle(M);
  EXPECT_NEAR(spectral_norm(M), ref, 1e-8 * ref);
  // Negative dominant end.
  EXPECT_NEAR(spectral_norm(-M), ref, 1e-8 * ref);
}

TEST(SpectralNorm, ZeroAndTinyMatrices) {
  EXPECT_EQ(spectral_norm(Matrix::Zero(5, 5)), 0.0);
  EXPECT_EQ(spectral_norm(Matrix::Zero(300, 300)), 0.0);
  EXPECT_NEAR(spectral_norm(Matrix::Constant(1, 1, -2.5)), 2.5, 1e-15);
}

TEST(SymmetricEigenvalues, AscendingAndComplete) {
  const Matrix M = test::random_symmetric(12, 3);
  const Vector ev = symmetric_eigenvalues(M);
  ASSERT_EQ(ev.size(), 12);
  for (int i = 1; i < 12; ++i) EXPECT_LE(ev(i - 1), ev(i));
  EXPECT_NEAR(ev.sum(), M.trace(), 1e-10);
}

TEST(EigenvaluePerturbation, WeylBoundOnRandomInstances) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Matrix M = test::random_symmetric(10, s);
    const Matrix E = 0.1 * test::random_symmetric(10, 1000 + s);
    const Vector a = symmetric_eigenvalues(M);
    const Vector b = symmetric_eigenvalues(M + E);
    const double bound = spectral_norm(E);
    for (int i = 0; i < 10; ++i) EXPECT_LE(std::abs(a(i) - b(i)), bound + 1e-12);
  }
}

}  // namespace
}  // namespace dsbm
