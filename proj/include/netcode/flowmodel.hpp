// SPDX-License-Identifier: Apache-2.0
#pragma once

// Probabilistic model of z = M x + n with n ~ CN(0, I):
//   p(z | x) = pi^{-n_out} exp(-||z - M x||^2).
// Densities are handled in the log domain; an output density whose log falls
// below kLogDensityFloor raises DensityUnderflow instead of returning zero.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "netcode/types.hpp"

namespace netcode {

inline constexpr double kLogDensityFloor = -700.0;

enum class InputKind { Discrete, Gaussian };

class InputDistribution {
 public:
  /// Finite support; probabilities must be non-negative and sum to one.
  static InputDistribution discrete(std::vector<CVector> support, std::vector<double> probs);
  /// x ~ CN(0, I_dim).
  static InputDistribution gaussian(std::size_t dim);
  static InputDistribution point_mass(CVector x0);
  /// Independent equiprobable {+1, -1} per component.
  static InputDistribution bpsk(std::size_t dim);
  /// Independent equiprobable (+-1 +-i)/sqrt(2) per component.
  static InputDistribution qpsk(std::size_t dim);

  InputKind kind() const { return kind_; }
  bool is_gaussian() const { return kind_ == InputKind::Gaussian; }
  std::size_t dimension() const { return dim_; }
  const std::vector<CVector>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }

  CVector mean() const;
  CMatrix covariance() const;
  /// Shannon entropy in nats; discrete inputs only.
  double entropy() const;

  /// Index of the support point selected by a uniform draw u in (0, 1).
  std::size_t pick(double u) const;

 private:
  InputDistribution() = default;

  InputKind kind_ = InputKind::Discrete;
  std::size_t dim_ = 0;
  std::vector<CVector> support_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

/// Unit-variance circularly-symmetric complex Gaussian noise.
struct NoiseModel {
  std::size_t dimension = 0;

  double log_density(const CVector& n) const;
};

double log_conditional_density(const CMatrix& M, const CVector& x, const CVector& z);
double conditional_density(const CMatrix& M, const CVector& x, const CVector& z);

/// log p(z). Discrete inputs use log-sum-exp over the support; Gaussian inputs
/// use the closed form with covariance I + M M^H.
double log_output_density(const CMatrix& M, const InputDistribution& dist, const CVector& z);
double output_density(const CMatrix& M, const InputDistribution& dist, const CVector& z);

/// Gradient of log p(z) in conjugate coordinates: entry k is
/// (d/dRe z_k + i d/dIm z_k) log p(z) / 2.
CVector output_score(const CMatrix& M, const InputDistribution& dist, const CVector& z);

struct Draw {
  CVector x;
  CVector noise;
};

/// Draw number `index` of the stream keyed by `seed`; independent of any other
/// draw, which is what makes batches worker-count invariant.
Draw draw_sample(const InputDistribution& dist, const NoiseModel& noise, std::uint64_t seed,
                 std::uint64_t index);

struct SampleBatch {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  CMatrix x;  // n_in x count
  CMatrix z;  // n_out x count
};

SampleBatch sample(const CMatrix& M, const InputDistribution& dist, const NoiseModel& noise,
                   std::uint64_t seed, std::size_t count, std::size_t workers = 1);

}  // namespace netcode
