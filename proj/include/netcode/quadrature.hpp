// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "netcode/types.hpp"

namespace netcode {

/// Gauss-Hermite rule for the weight exp(-t^2) on the real line.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussHermiteRule gauss_hermite(std::size_t n);

/// Tensor-product rule for expectations over n ~ CN(0, I_dim). Each complex
/// component contributes two real dimensions of variance 1/2 each, which is
/// exactly the Gauss-Hermite weight. Weights are normalized to sum to one.
struct ComplexNoiseGrid {
  Eigen::MatrixXcd points;  // dim x count, one node per column
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Nodes whose product weight is below `prune` are dropped; the dropped mass
/// is below 1e-13 for every default rule.
ComplexNoiseGrid complex_noise_grid(std::size_t dim, std::size_t nodes_per_real_dim,
                                    double prune = 1e-18);

/// 300 nodes per real dimension for one output, 24 for two, 10 for three.
std::size_t default_quadrature_nodes(std::size_t n_out);

inline constexpr std::size_t kMaxQuadratureOutputs = 3;

}  // namespace netcode
