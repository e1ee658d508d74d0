// SPDX-License-Identifier: Apache-2.0
#include "netcode/netgraph.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "netcode/errors.hpp"

namespace netcode {

namespace {

constexpr double kMaxConditionIF = 1e12;

Eigen::Index as_index(std::size_t i) { return static_cast<Eigen::Index>(i); }

bool contains(const std::vector<std::string>& list, const std::string& value) {
  return std::find(list.begin(), list.end(), value) != list.end();
}

// Kahn's algorithm, always releasing the earliest-inserted ready vertex.
// Returns nullopt when the graph has a cycle.
std::optional<std::vector<std::size_t>> topological_rank(const std::vector<std::string>& vertices,
                                                         const std::vector<Edge>& edges) {
  std::map<std::string, std::size_t> id;
  for (std::size_t v = 0; v < vertices.size(); ++v) id[vertices[v]] = v;
  std::vector<std::vector<std::size_t>> out(vertices.size());
  std::vector<std::size_t> indegree(vertices.size(), 0);
  for (const auto& e : edges) {
    out[id[e.tail]].push_back(id[e.head]);
    ++indegree[id[e.head]];
  }
  std::set<std::size_t> ready;
  for (std::size_t v = 0; v < vertices.size(); ++v)
    if (indegree[v] == 0) ready.insert(v);
  std::vector<std::size_t> rank(vertices.size(), 0);
  std::size_t next = 0;
  while (!ready.empty()) {
    const std::size_t v = *ready.begin();
    ready.erase(ready.begin());
    rank[v] = next++;
    for (std::size_t w : out[v])
      if (--indegree[w] == 0) ready.insert(w);
  }
  if (next != vertices.size()) return std::nullopt;
  return rank;
}

}  // namespace

NetworkTopology::NetworkTopology(std::vector<std::string> vertices, std::vector<Edge> edges,
                                 std::vector<std::string> sources,
                                 std::vector<std::string> sinks)
    : vertices_(std::move(vertices)), sources_(std::move(sources)), sinks_(std::move(sinks)) {
  std::set<std::string> seen;
  for (const auto& v : vertices_)
    if (!seen.insert(v).second) throw InvalidArgument("duplicate vertex '" + v + "'");
  for (const auto& s : sources_)
    if (!seen.count(s)) throw InvalidArgument("source '" + s + "' is not a vertex");
  for (const auto& s : sinks_)
    if (!seen.count(s)) throw InvalidArgument("sink '" + s + "' is not a vertex");

  std::set<std::string> edge_names;
  for (const auto& e : edges) {
    if (!seen.count(e.tail) || !seen.count(e.head))
      throw InvalidArgument("edge '" + e.name + "' has an endpoint outside the vertex list");
    if (!edge_names.insert(e.name).second)
      throw InvalidArgument("duplicate edge '" + e.name + "'");
  }

  const auto rank = topological_rank(vertices_, edges);
  acyclic_ = rank.has_value();
  if (acyclic_) {
    std::map<std::string, std::size_t> vertex_id;
    for (std::size_t v = 0; v < vertices_.size(); ++v) vertex_id[vertices_[v]] = v;
    std::stable_sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
      return (*rank)[vertex_id[a.tail]] < (*rank)[vertex_id[b.tail]];
    });
  }
  edges_ = std::move(edges);
  for (std::size_t i = 0; i < edges_.size(); ++i) edge_lookup_[edges_[i].name] = i;
}

std::optional<std::size_t> NetworkTopology::find_edge(const std::string& name) const {
  const auto it = edge_lookup_.find(name);
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t NetworkTopology::edge_index(const std::string& name) const {
  const auto idx = find_edge(name);
  if (!idx) throw UnknownEdge("unknown edge '" + name + "'");
  return *idx;
}

bool NetworkTopology::is_source(const std::string& vertex) const {
  return contains(sources_, vertex);
}

bool NetworkTopology::is_sink(const std::string& vertex) const { return contains(sinks_, vertex); }

bool NetworkTopology::feeds(std::size_t upstream, std::size_t downstream) const {
  return edges_.at(upstream).head == edges_.at(downstream).tail;
}

std::vector<std::size_t> NetworkTopology::source_outgoing_edges() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges_.size(); ++i)
    if (is_source(edges_[i].tail)) out.push_back(i);
  return out;
}

std::vector<std::size_t> NetworkTopology::sink_incoming_edges() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges_.size(); ++i)
    if (is_sink(edges_[i].head)) out.push_back(i);
  return out;
}

SystemMatrices build_system_matrices(const NetworkTopology& topology,
                                     const CodingCoefficients& coeffs, std::size_t n_in,
                                     std::size_t n_out, CyclePolicy policy) {
  const auto n_edges = as_index(topology.edge_count());
  SystemMatrices sys;
  sys.B = CMatrix::Zero(n_edges, as_index(n_in));
  sys.F = CMatrix::Zero(n_edges, n_edges);
  sys.A = CMatrix::Zero(as_index(n_out), n_edges);

  for (const auto& [key, value] : coeffs.alpha) {
    const auto& [input, edge_name] = key;
    const std::size_t e = topology.edge_index(edge_name);
    if (input >= n_in)
      throw DimensionMismatch("alpha references input " + std::to_string(input + 1) + " but only " +
                              std::to_string(n_in) + " inputs exist");
    if (!topology.is_source(topology.edges()[e].tail))
      throw SparsityViolation("alpha on edge '" + edge_name + "', which does not leave a source");
    sys.B(as_index(e), as_index(input)) = value;
  }
  for (const auto& [key, value] : coeffs.beta) {
    const std::size_t from = topology.edge_index(key.first);
    const std::size_t to = topology.edge_index(key.second);
    if (!topology.feeds(from, to))
      throw SparsityViolation("beta(" + key.first + ", " + key.second +
                              "): head of the first edge is not the tail of the second");
    sys.F(as_index(to), as_index(from)) = value;
  }
  for (const auto& [key, value] : coeffs.gamma) {
    const auto& [output, edge_name] = key;
    const std::size_t e = topology.edge_index(edge_name);
    if (output >= n_out)
      throw DimensionMismatch("gamma references output " + std::to_string(output + 1) +
                              " but only " + std::to_string(n_out) + " outputs exist");
    if (!topology.is_sink(topology.edges()[e].head))
      throw SparsityViolation("gamma on edge '" + edge_name + "', which does not enter a sink");
    sys.A(as_index(output), as_index(e)) = value;
  }

  const CMatrix identity = CMatrix::Identity(n_edges, n_edges);
  const CMatrix i_minus_f = identity - sys.F;
  if (n_edges > 0) {
    Eigen::JacobiSVD<CMatrix> svd(i_minus_f);
    const auto& sv = svd.singularValues();
    const double smallest = sv(sv.size() - 1);
    if (!(smallest > 0.0) || sv(0) / smallest > kMaxConditionIF)
      throw SingularIFError("I - F is numerically singular");
  }

  if (topology.is_acyclic()) {
    sys.G = i_minus_f.triangularView<Eigen::UnitLower>().solve(identity);
  } else {
    if (policy == CyclePolicy::RequireAcyclic)
      throw CyclicTopologyError("topology has a directed cycle");
    const double rho = spectral_radius(sys.F);
    if (!(rho < 1.0))
      throw CyclicTopologyError("cyclic topology with spectral radius " + std::to_string(rho) +
                                " >= 1");
    sys.G = i_minus_f.partialPivLu().solve(identity);
  }
  sys.M = sys.A * sys.G * sys.B;
  return sys;
}

CompactFactors compact_form(const SystemMatrices& sys, const NetworkTopology& topology) {
  EdgeFrame frame;
  for (std::size_t e : topology.sink_incoming_edges())
    frame.sink_edges.push_back(topology.edges()[e].name);
  for (std::size_t e : topology.source_outgoing_edges())
    frame.source_edges.push_back(topology.edges()[e].name);
  return compact_form(sys, topology, frame);
}

CompactFactors compact_form(const SystemMatrices& sys, const NetworkTopology& topology,
                            const EdgeFrame& frame) {
  if (static_cast<std::size_t>(sys.G.rows()) != topology.edge_count())
    throw DimensionMismatch("system matrices were not built from this topology");
  const auto rows = as_index(frame.sink_edges.size());
  const auto cols = as_index(frame.source_edges.size());

  std::vector<std::optional<std::size_t>> sink_idx;
  std::vector<std::optional<std::size_t>> source_idx;
  for (const auto& name : frame.sink_edges) sink_idx.push_back(topology.find_edge(name));
  for (const auto& name : frame.source_edges) source_idx.push_back(topology.find_edge(name));

  CompactFactors out;
  out.frame = frame;
  out.A = CMatrix::Zero(sys.A.rows(), rows);
  out.G = CMatrix::Zero(rows, cols);
  out.B = CMatrix::Zero(cols, sys.B.cols());
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!sink_idx[static_cast<std::size_t>(i)]) continue;
    out.A.col(i) = sys.A.col(as_index(*sink_idx[static_cast<std::size_t>(i)]));
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (!source_idx[static_cast<std::size_t>(j)]) continue;
    out.B.row(j) = sys.B.row(as_index(*source_idx[static_cast<std::size_t>(j)]));
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto& r = sink_idx[static_cast<std::size_t>(i)];
      const auto& c = source_idx[static_cast<std::size_t>(j)];
      if (r && c) out.G(i, j) = sys.G(as_index(*r), as_index(*c));
    }
  }

  const auto covers_all_in_order = [&](const std::vector<std::optional<std::size_t>>& idx) {
    if (idx.size() != topology.edge_count()) return false;
    for (std::size_t k = 0; k < idx.size(); ++k)
      if (!idx[k] || *idx[k] != k) return false;
    return true;
  };
  if (covers_all_in_order(sink_idx) && covers_all_in_order(source_idx))
    out.topology_inverse = CMatrix::Identity(sys.F.rows(), sys.F.cols()) - sys.F;
  return out;
}

std::pair<NetworkTopology, CodingCoefficients> remove_edge(const NetworkTopology& topology,
                                                           const CodingCoefficients& coeffs,
                                                           const std::string& edge) {
  topology.edge_index(edge);
  std::vector<Edge> edges;
  for (const auto& e : topology.edges())
    if (e.name != edge) edges.push_back(e);
  NetworkTopology reduced(topology.vertices(), std::move(edges), topology.sources(),
                          topology.sinks());

  CodingCoefficients kept;
  for (const auto& [key, value] : coeffs.alpha)
    if (key.second != edge) kept.alpha.emplace(key, value);
  for (const auto& [key, value] : coeffs.beta)
    if (key.first != edge && key.second != edge) kept.beta.emplace(key, value);
  for (const auto& [key, value] : coeffs.gamma)
    if (key.second != edge) kept.gamma.emplace(key, value);
  return {std::move(reduced), std::move(kept)};
}

bool is_structurally_nilpotent(const CMatrix& F) {
  for (Eigen::Index c = 0; c < F.cols(); ++c)
    for (Eigen::Index r = 0; r <= std::min(c, F.rows() - 1); ++r)
      if (F(r, c) != cplx(0.0, 0.0)) return false;
  return true;
}

CMatrix neumann_sum(const CMatrix& F) {
  CMatrix sum = CMatrix::Identity(F.rows(), F.cols());
  CMatrix power = CMatrix::Identity(F.rows(), F.cols());
  for (Eigen::Index k = 1; k < F.rows(); ++k) {
    power = power * F;
    sum += power;
  }
  return sum;
}

double spectral_radius(const CMatrix& F) {
  if (F.size() == 0) return 0.0;
  Eigen::ComplexEigenSolver<CMatrix> solver(F, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace netcode
