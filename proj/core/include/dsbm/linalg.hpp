#pragma once

#include <Eigen/Dense>

namespace dsbm {

enum class NormMethod { Auto, Dense, Lanczos };

struct SpectralNormOptions {
  double tol = 1e-8;        ///< relative tolerance on the returned norm
  int dense_cutoff = 128;   ///< Auto uses the dense solver for n <= dense_cutoff
  int max_iter = 0;         ///< Lanczos step cap; 0 means n
  NormMethod method = NormMethod::Auto;
};

/// max |lambda_i(M)| of a symmetric matrix.
///
/// The dense route is a full symmetric eigenvalue solve. The Lanczos route
/// keeps a fully reorthogonalised Krylov basis and stops once the Ritz pairs
/// at both ends of the spectrum have residual below tol * norm. Throws
/// NoConvergence if neither route converges.
double spectral_norm(const Eigen::MatrixXd& M, const SpectralNormOptions& options = {});

/// All eigenvalues of a symmetric matrix in ascending order.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& M);

}  // namespace dsbm
