// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "netcode/engine.hpp"
#include "netcode/flowmodel.hpp"
#include "netcode/netgraph.hpp"
#include "netcode/types.hpp"

namespace netcode {

/// Conditional-mean estimate E[x | z]. Posterior-weighted support average for
/// discrete inputs, M^H (I + M M^H)^{-1} z for Gaussian inputs.
CVector conditional_mean(const CMatrix& M, const InputDistribution& dist, const CVector& z);

/// Error matrix of the conditional-mean estimator, E[(x - xhat)(x - xhat)^H].
struct MmseMatrix {
  CMatrix E;
  Method method = Method::Quadrature;
  std::size_t count = 0;
  /// Standard errors of the real and imaginary parts (zero for quadrature).
  RMatrix se_re;
  RMatrix se_im;

  bool is_hermitian(double tol = 1e-10) const;
  double min_eigenvalue() const;
  /// Smallest eigenvalue of cov - E; non-negative when the estimator beats
  /// the prior mean.
  double prior_gap(const CMatrix& cov) const;
};

MmseMatrix mmse_matrix(const CMatrix& M, const InputDistribution& dist, const EngineSpec& spec);

/// || M E[x|z] - (z + score(z)) ||.
double score_identity_residual(const CMatrix& M, const InputDistribution& dist, const CVector& z);
double score_identity_residual(const SystemMatrices& sys, const InputDistribution& dist,
                               const CVector& z);

/// M^{-1} (z + score(z)) evaluated through the factored inverse
/// B_c^{-1} G_c^{-1} A_c^{-1}; falls back to solving with M when a factor is
/// not square. Throws SingularSystemMatrix when M is not square or has a
/// condition estimate of 1e10 or more.
CVector invert_flow_estimate(const CompactFactors& factors, const InputDistribution& dist,
                             const CVector& z);

/// Monte-Carlo moments used to check the estimator: the orthogonality matrix
/// E[(x - xhat) z^H] and the bias E[xhat] - E[x], with batch-means errors.
struct EstimatorMoments {
  CMatrix orthogonality;
  RMatrix orthogonality_se_re;
  RMatrix orthogonality_se_im;
  CVector bias;
  Eigen::VectorXd bias_se_re;
  Eigen::VectorXd bias_se_im;
  std::size_t samples = 0;

  /// Every real and imaginary part within `k` standard errors of zero.
  bool orthogonal_within(double k) const;
  bool unbiased_within(double k) const;
};

EstimatorMoments estimator_moments(const CMatrix& M, const InputDistribution& dist,
                                   const EngineSpec& spec);

}  // namespace netcode
