// SPDX-License-Identifier: Apache-2.0
#pragma once

// Expectations over the joint law of (x, z) for z = M x + n.
//
// Quadrature integrates the noise on a tensor Gauss-Hermite grid and sums the
// input exactly. Monte-Carlo draws keyed samples and reports batch-means
// standard errors over a fixed number of contiguous batches. Both reduce in a
// fixed order, so results do not depend on the worker count.

#include <cstddef>
#include <cstdint>

#include "netcode/flowmodel.hpp"
#include "netcode/types.hpp"

namespace netcode {

enum class Method { Quadrature, MonteCarlo };

const char* to_string(Method method);

struct EngineSpec {
  Method method = Method::Quadrature;
  /// Gauss-Hermite nodes per real dimension; 0 selects the default.
  std::size_t nodes = 0;
  std::size_t samples = 100000;
  std::uint64_t seed = 42;
  std::size_t workers = 1;
};

inline constexpr std::size_t kBatchCount = 32;
inline constexpr std::size_t kMinMonteCarloSamples = 1000;

struct ChannelStatistics {
  double mi = 0.0;  // nats
  double mi_se = 0.0;
  CMatrix mmse;     // empty unless requested
  RMatrix mmse_se_re;
  RMatrix mmse_se_im;
  Method method = Method::Quadrature;
  std::size_t count = 0;  // quadrature nodes (times support points) or samples
};

/// I(x; z) in nats and, if requested, E = E[(x - xhat)(x - xhat)^H].
/// Throws CostGuardViolation for quadrature with more than three outputs or
/// Monte-Carlo with fewer than kMinMonteCarloSamples samples.
ChannelStatistics channel_statistics(const CMatrix& M, const InputDistribution& dist,
                                     const EngineSpec& spec, bool with_mmse = true);

/// log det(I + M M^H).
double gaussian_mutual_information(const CMatrix& M);
/// (I + M^H M)^{-1}.
CMatrix gaussian_mmse(const CMatrix& M);

}  // namespace netcode
