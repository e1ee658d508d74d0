// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "netcode/infogradients.hpp"
#include "netcode/netgraph.hpp"
#include "netcode/philox.hpp"
#include "netcode/scenarios.hpp"

namespace netcode::testing {

inline ChannelFactors relay_factors(std::uint64_t seed, std::uint64_t draw = 0) {
  const NetworkTopology topo = relay_topology();
  const SystemMatrices sys =
      build_system_matrices(topo, relay_coefficients(random_assignment(seed, draw)), 2, 2);
  return ChannelFactors::from(compact_form(sys, topo));
}

inline CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                             bool complex = true) {
  SampleStream s(seed, 0);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = complex ? s.complex_normal() : cplx(s.normal(), 0.0);
  return m;
}

inline double max_rel(const CMatrix& a, const CMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

inline CMatrix scalar(double v) {
  CMatrix m(1, 1);
  m(0, 0) = v;
  return m;
}

struct RandomNetwork {
  NetworkTopology topology;
  CodingCoefficients coefficients;
  std::size_t inputs;
  std::size_t outputs;
};

/// Random DAG with at most `max_edges` edges, listed in shuffled order, one
/// source (the first vertex in rank order) and one sink (the last), with
/// every allowed coefficient drawn inside the unit disk.
inline RandomNetwork random_network(std::uint64_t seed, std::size_t max_edges = 12) {
  SampleStream s(seed, 0);
  auto below = [&](std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(s.uniform() * static_cast<double>(n)));
  };
  const std::size_t n_vertices = 3 + below(5);
  std::vector<std::string> rank_order;
  for (std::size_t v = 0; v < n_vertices; ++v) rank_order.push_back("u" + std::to_string(v));
  std::vector<std::string> vertices = rank_order;
  for (std::size_t i = vertices.size(); i > 1; --i) std::swap(vertices[i - 1], vertices[below(i)]);

  std::vector<Edge> edges;
  const std::size_t n_edges = 2 + below(max_edges - 1);
  for (std::size_t k = 0; k < n_edges; ++k) {
    std::size_t a = below(n_vertices), b = below(n_vertices);
    if (a == b) b = (a + 1) % n_vertices;
    if (a > b) std::swap(a, b);
    edges.push_back({"e" + std::to_string(k), rank_order[a], rank_order[b]});
  }
  for (std::size_t i = edges.size(); i > 1; --i) std::swap(edges[i - 1], edges[below(i)]);

  const std::size_t inputs = 1 + below(2);
  const std::size_t outputs = 1 + below(2);
  NetworkTopology topo(vertices, edges, {rank_order.front()}, {rank_order.back()});
  auto coeff = [&] {
    const double r = std::sqrt(s.uniform());
    const double t = 2.0 * kPi * s.uniform();
    return std::polar(r, t);
  };
  CodingCoefficients c;
  for (const auto& e : topo.edges()) {
    if (topo.is_source(e.tail))
      for (std::size_t i = 0; i < inputs; ++i) c.alpha[{i, e.name}] = coeff();
    if (topo.is_sink(e.head))
      for (std::size_t o = 0; o < outputs; ++o) c.gamma[{o, e.name}] = coeff();
    for (const auto& next : topo.edges())
      if (e.head == next.tail) c.beta[{e.name, next.name}] = coeff();
  }
  return {std::move(topo), std::move(c), inputs, outputs};
}

}  // namespace netcode::testing
