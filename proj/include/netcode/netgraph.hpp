// SPDX-License-Identifier: Apache-2.0
#pragma once

// Directed network model and the algebraic transfer matrices built from it.
//
// Column-vector convention throughout: the flow on the edges is
//   y = B x + F y,
// so the edge flows are G B x with G = (I - F)^{-1}, and the sinks observe
// A G B x. Entry F(e', e) is the coefficient beta(e, e') with which edge e
// feeds edge e' (head(e) == tail(e')).

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netcode/types.hpp"

namespace netcode {

struct Edge {
  std::string name;
  std::string tail;
  std::string head;
};

/// Immutable directed network. Edges are stored in topological order of their
/// tail vertices (ties keep insertion order) so that F is strictly lower
/// triangular for acyclic graphs. Cyclic graphs keep insertion order.
class NetworkTopology {
 public:
  NetworkTopology(std::vector<std::string> vertices, std::vector<Edge> edges,
                  std::vector<std::string> sources, std::vector<std::string> sinks);

  const std::vector<std::string>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::string>& sources() const { return sources_; }
  const std::vector<std::string>& sinks() const { return sinks_; }
  std::size_t edge_count() const { return edges_.size(); }
  bool is_acyclic() const { return acyclic_; }

  std::optional<std::size_t> find_edge(const std::string& name) const;
  /// Throws UnknownEdge.
  std::size_t edge_index(const std::string& name) const;

  bool is_source(const std::string& vertex) const;
  bool is_sink(const std::string& vertex) const;
  /// True when head(upstream) == tail(downstream).
  bool feeds(std::size_t upstream, std::size_t downstream) const;

  /// Edge indices leaving a source vertex, ascending.
  std::vector<std::size_t> source_outgoing_edges() const;
  /// Edge indices entering a sink vertex, ascending.
  std::vector<std::size_t> sink_incoming_edges() const;

 private:
  std::vector<std::string> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::string> sources_;
  std::vector<std::string> sinks_;
  std::map<std::string, std::size_t> edge_lookup_;
  bool acyclic_ = true;
};

/// Local coding coefficients keyed by edge name (stable under edge removal).
/// Inputs and outputs are 0-based.
struct CodingCoefficients {
  std::map<std::pair<std::size_t, std::string>, cplx> alpha;        // (input, edge)
  std::map<std::pair<std::string, std::string>, cplx> beta;         // (edge, next edge)
  std::map<std::pair<std::size_t, std::string>, cplx> gamma;        // (output, edge)
};

struct SystemMatrices {
  CMatrix B;  // |E| x n_in
  CMatrix F;  // |E| x |E|
  CMatrix G;  // |E| x |E|, (I - F)^{-1}
  CMatrix A;  // n_out x |E|
  CMatrix M;  // n_out x n_in, always the product A G B

  std::size_t inputs() const { return static_cast<std::size_t>(B.cols()); }
  std::size_t outputs() const { return static_cast<std::size_t>(A.rows()); }
};

enum class CyclePolicy {
  RequireAcyclic,
  /// Accept cycles when the spectral radius of F is below one.
  AllowConvergent,
};

/// Throws CyclicTopologyError, SingularIFError, SparsityViolation, UnknownEdge.
SystemMatrices build_system_matrices(const NetworkTopology& topology,
                                     const CodingCoefficients& coeffs, std::size_t n_in,
                                     std::size_t n_out,
                                     CyclePolicy policy = CyclePolicy::RequireAcyclic);

/// Rows / columns of the compact factors, by edge name.
struct EdgeFrame {
  std::vector<std::string> sink_edges;    // columns of A_c, rows of G_c
  std::vector<std::string> source_edges;  // columns of G_c, rows of B_c
};

/// Restriction of the full factors to sink-incoming and source-outgoing
/// edges; A_c G_c B_c == M.
struct CompactFactors {
  CMatrix A;
  CMatrix G;
  CMatrix B;
  EdgeFrame frame;
  /// Set when the compact G is the whole G, in which case G^{-1} = I - F.
  std::optional<CMatrix> topology_inverse;

  CMatrix system() const { return A * G * B; }
};

CompactFactors compact_form(const SystemMatrices& sys, const NetworkTopology& topology);

/// Compact factors laid out on a caller-chosen frame; edges of the frame that
/// are absent from the topology give zero rows and columns. Used to compare a
/// network before and after losing edges.
CompactFactors compact_form(const SystemMatrices& sys, const NetworkTopology& topology,
                            const EdgeFrame& frame);

/// Deletes an edge and every coefficient that references it.
std::pair<NetworkTopology, CodingCoefficients> remove_edge(const NetworkTopology& topology,
                                                           const CodingCoefficients& coeffs,
                                                           const std::string& edge);

/// True if F is strictly lower triangular, hence F^|E| = 0.
bool is_structurally_nilpotent(const CMatrix& F);

/// Sum_{k < |E|} F^k; equals G for acyclic topologies.
CMatrix neumann_sum(const CMatrix& F);

double spectral_radius(const CMatrix& F);

}  // namespace netcode
