// SPDX-License-Identifier: Apache-2.0
#include "netcode/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "netcode/errors.hpp"

namespace netcode {

namespace {

// Orthonormal Hermite recurrence at t; returns (p_n, p_{n-1}).
std::pair<double, double> hermite_pair(std::size_t n, double t) {
  double p1 = std::pow(kPi, -0.25);
  double p2 = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    const double p3 = p2;
    p2 = p1;
    p1 = t * std::sqrt(2.0 / static_cast<double>(j)) * p2 -
         std::sqrt(static_cast<double>(j - 1) / static_cast<double>(j)) * p3;
  }
  return {p1, p2};
}

}  // namespace

GaussHermiteRule gauss_hermite(std::size_t n) {
  if (n == 0) throw InvalidArgument("gauss_hermite: need at least one node");

  // Golub-Welsch for starting values, then Newton on the orthonormal
  // polynomial so that tiny tail weights keep full relative precision.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    const double off = std::sqrt(static_cast<double>(k) / 2.0);
    jacobi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = off;
    jacobi(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);

  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = solver.eigenvalues()(static_cast<Eigen::Index>(i));
    double derivative = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      const auto [pn, pn1] = hermite_pair(n, t);
      derivative = std::sqrt(2.0 * static_cast<double>(n)) * pn1;
      const double step = pn / derivative;
      t -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(t))) break;
    }
    const auto [pn, pn1] = hermite_pair(n, t);
    derivative = std::sqrt(2.0 * static_cast<double>(n)) * pn1;
    rule.nodes[i] = t;
    rule.weights[i] = 2.0 / (derivative * derivative);
  }
  // Symmetrize: the rule is exactly even.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const std::size_t j = n - 1 - i;
    const double t = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -t;
    rule.nodes[j] = t;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

ComplexNoiseGrid complex_noise_grid(std::size_t dim, std::size_t nodes_per_real_dim,
                                    double prune) {
  if (dim == 0) throw InvalidArgument("complex_noise_grid: dimension must be positive");
  const GaussHermiteRule rule = gauss_hermite(nodes_per_real_dim);
  const std::size_t m = nodes_per_real_dim;
  const std::size_t real_dims = 2 * dim;
  // Normalized to unit mass per dimension, so the tensor weights sum to one
  // up to the pruned tail.
  double mass = 0.0;
  for (double w : rule.weights) mass += w;
  std::vector<double> unit_weights(m);
  for (std::size_t i = 0; i < m; ++i) unit_weights[i] = rule.weights[i] / mass;

  std::size_t total = 1;
  for (std::size_t d = 0; d < real_dims; ++d) {
    if (total > (std::size_t{1} << 40) / m) throw CostGuardViolation("quadrature grid too large");
    total *= m;
  }

  std::vector<std::size_t> kept;
  std::vector<double> kept_weights;
  std::vector<std::size_t> digits(real_dims, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    double w = 1.0;
    std::size_t rest = flat;
    for (std::size_t d = 0; d < real_dims; ++d) {
      digits[d] = rest % m;
      rest /= m;
      w *= unit_weights[digits[d]];
    }
    if (w >= prune) {
      kept.push_back(flat);
      kept_weights.push_back(w);
    }
  }

  ComplexNoiseGrid grid;
  grid.points.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(kept.size()));
  grid.weights = std::move(kept_weights);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    std::size_t rest = kept[k];
    for (std::size_t c = 0; c < dim; ++c) {
      const double re = rule.nodes[rest % m];
      rest /= m;
      const double im = rule.nodes[rest % m];
      rest /= m;
      grid.points(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = cplx(re, im);
    }
  }
  return grid;
}

std::size_t default_quadrature_nodes(std::size_t n_out) {
  switch (n_out) {
    case 1:
      return 300;
    case 2:
      return 24;
    case 3:
      return 10;
    default:
      throw CostGuardViolation("quadrature is limited to at most 3 outputs");
  }
}

}  // namespace netcode
