// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "netcode/errors.hpp"
#include "netcode/netgraph.hpp"
#include "support.hpp"

using namespace netcode;
using namespace netcode::testing;

namespace {

NetworkTopology chain() {
  return NetworkTopology({"s", "m", "t"}, {{"x", "s", "m"}, {"y", "m", "t"}}, {"s"}, {"t"});
}

}  // namespace

TEST(Topology, EdgesFollowTopologicalOrder) {
  // Listed out of order on purpose.
  NetworkTopology topo({"a", "b", "c"}, {{"late", "b", "c"}, {"early", "a", "b"}}, {"a"}, {"c"});
  EXPECT_TRUE(topo.is_acyclic());
  EXPECT_EQ(topo.edges()[0].name, "early");
  EXPECT_EQ(topo.edge_index("late"), 1u);
  EXPECT_TRUE(topo.feeds(0, 1));
  EXPECT_FALSE(topo.feeds(1, 0));
}

TEST(Topology, RejectsMalformedInput) {
  EXPECT_THROW(NetworkTopology({"a", "a"}, {}, {}, {}), InvalidArgument);
  EXPECT_THROW(NetworkTopology({"a"}, {{"e", "a", "zz"}}, {}, {}), InvalidArgument);
  EXPECT_THROW(NetworkTopology({"a", "b"}, {{"e", "a", "b"}, {"e", "b", "a"}}, {}, {}),
               InvalidArgument);
  EXPECT_THROW(chain().edge_index("nope"), UnknownEdge);
}

TEST(SystemMatrices, RelayNetworkMatchesHandExpansion) {
  const auto values = random_assignment(5, 0);
  auto v = [&](Symbol s) { return values.at(s); };
  const NetworkTopology topo = relay_topology();
  const SystemMatrices sys = build_system_matrices(topo, relay_coefficients(values), 2, 2);
  CMatrix expected(2, 2);
  const double g11 = v(Symbol::B14), g21 = v(Symbol::B13) * v(Symbol::B35), g22 = v(Symbol::B25);
  for (int o = 0; o < 2; ++o) {
    const double c4 = o == 0 ? v(Symbol::G41) : v(Symbol::G42);
    const double c5 = o == 0 ? v(Symbol::G51) : v(Symbol::G52);
    for (int i = 0; i < 2; ++i) {
      const double a1 = i == 0 ? v(Symbol::A11) : v(Symbol::A12);
      const double a2 = i == 0 ? v(Symbol::A21) : v(Symbol::A22);
      expected(o, i) = c4 * g11 * a1 + c5 * (g21 * a1 + g22 * a2);
    }
  }
  EXPECT_LT((sys.M - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_TRUE(is_structurally_nilpotent(sys.F));

  const CompactFactors c = compact_form(sys, topo);
  EXPECT_EQ(c.frame.sink_edges, (std::vector<std::string>{"e4", "e5"}));
  EXPECT_EQ(c.frame.source_edges, (std::vector<std::string>{"e1", "e2"}));
  EXPECT_NEAR(c.G(0, 1).real(), 0.0, 0.0);
  EXPECT_NEAR(c.G(1, 0).real(), g21, 1e-15);
  EXPECT_LT((c.system() - sys.M).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SystemMatrices, RandomDagsNeumannAndCompactAgree) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto net = random_network(seed);
    const SystemMatrices sys =
        build_system_matrices(net.topology, net.coefficients, net.inputs, net.outputs);
    ASSERT_TRUE(is_structurally_nilpotent(sys.F)) << seed;
    const double scale = std::max(1.0, sys.G.cwiseAbs().maxCoeff());
    EXPECT_LT((sys.G - neumann_sum(sys.F)).cwiseAbs().maxCoeff() / scale, 1e-12) << seed;
    EXPECT_LT((sys.A * sys.G * sys.B - sys.M).cwiseAbs().maxCoeff(), 1e-12) << seed;
    const CompactFactors c = compact_form(sys, net.topology);
    EXPECT_LT((c.system() - sys.M).cwiseAbs().maxCoeff(), 1e-12) << seed;
  }
}

TEST(SystemMatrices, SparsityIsEnforced) {
  CodingCoefficients c;
  c.beta[{"y", "x"}] = 1.0;  // y does not feed x
  EXPECT_THROW(build_system_matrices(chain(), c, 1, 1), SparsityViolation);
  CodingCoefficients d;
  d.alpha[{0, "y"}] = 1.0;  // y does not leave the source
  EXPECT_THROW(build_system_matrices(chain(), d, 1, 1), SparsityViolation);
  CodingCoefficients e;
  e.gamma[{0, "x"}] = 1.0;  // x does not enter the sink
  EXPECT_THROW(build_system_matrices(chain(), e, 1, 1), SparsityViolation);
  CodingCoefficients f;
  f.alpha[{3, "x"}] = 1.0;
  EXPECT_THROW(build_system_matrices(chain(), f, 1, 1), DimensionMismatch);
  CodingCoefficients g;
  g.beta[{"x", "zz"}] = 1.0;
  EXPECT_THROW(build_system_matrices(chain(), g, 1, 1), UnknownEdge);
}

TEST(SystemMatrices, CyclesNeedConvergentGain) {
  NetworkTopology loop({"s", "a", "b", "t"},
                       {{"in", "s", "a"}, {"ab", "a", "b"}, {"ba", "b", "a"}, {"out", "b", "t"}},
                       {"s"}, {"t"});
  EXPECT_FALSE(loop.is_acyclic());
  CodingCoefficients c;
  c.alpha[{0, "in"}] = 1.0;
  c.beta[{"in", "ab"}] = 1.0;
  c.beta[{"ab", "ba"}] = 0.5;
  c.beta[{"ba", "ab"}] = 0.5;
  c.beta[{"ab", "out"}] = 1.0;
  c.gamma[{0, "out"}] = 1.0;
  EXPECT_THROW(build_system_matrices(loop, c, 1, 1), CyclicTopologyError);
  const SystemMatrices sys = build_system_matrices(loop, c, 1, 1, CyclePolicy::AllowConvergent);
  // Geometric series of the 0.25 loop gain.
  EXPECT_NEAR(sys.M(0, 0).real(), 1.0 / 0.75, 1e-12);

  c.beta[{"ab", "ba"}] = 1.0;
  c.beta[{"ba", "ab"}] = 1.0;
  EXPECT_THROW(build_system_matrices(loop, c, 1, 1, CyclePolicy::AllowConvergent), Error);
}

TEST(SystemMatrices, RemoveEdgeDropsItsCoefficients) {
  const NetworkTopology topo = relay_topology();
  const auto coeffs = relay_coefficients(uniform_assignment(1.0));
  const auto [reduced, reduced_coeffs] = remove_edge(topo, coeffs, "e3");
  EXPECT_EQ(reduced.edge_count(), 4u);
  EXPECT_FALSE(reduced_coeffs.beta.count({"e1", "e3"}));
  EXPECT_FALSE(reduced_coeffs.beta.count({"e3", "e5"}));
  const SystemMatrices sys = build_system_matrices(reduced, reduced_coeffs, 2, 2);
  const CompactFactors c = compact_form(sys, reduced);
  EXPECT_EQ(c.G(1, 0), cplx(0.0));
  EXPECT_THROW(remove_edge(topo, coeffs, "e9"), UnknownEdge);
}

TEST(SystemMatrices, FixedFrameKeepsShapeAfterEdgeLoss) {
  const NetworkTopology topo = relay_topology();
  const auto coeffs = relay_coefficients(uniform_assignment(1.0));
  const CompactFactors before = compact_form(build_system_matrices(topo, coeffs, 2, 2), topo);
  auto [reduced, rc] = remove_edge(topo, coeffs, "e2");
  std::tie(reduced, rc) = remove_edge(reduced, rc, "e5");
  const CompactFactors after =
      compact_form(build_system_matrices(reduced, rc, 2, 2), reduced, before.frame);
  EXPECT_EQ(after.A.cols(), 2);
  EXPECT_EQ(after.B.rows(), 2);
  EXPECT_EQ(after.A.col(1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(after.B.row(1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SystemMatrices, CompactFormOfChainIsScalar) {
  const NetworkTopology topo = chain();
  CodingCoefficients c;
  c.alpha[{0, "x"}] = 2.0;
  c.beta[{"x", "y"}] = 3.0;
  c.gamma[{0, "y"}] = 5.0;
  const SystemMatrices sys = build_system_matrices(topo, c, 1, 1);
  EXPECT_EQ(sys.M(0, 0), cplx(30.0));
  const CompactFactors f = compact_form(sys, topo);
  EXPECT_EQ(f.G(0, 0), cplx(3.0));
  EXPECT_FALSE(f.topology_inverse.has_value());
}

TEST(SystemMatrices, TopologyInverseKeptWhenFrameCoversEveryEdge) {
  NetworkTopology direct({"s", "t"}, {{"p", "s", "t"}, {"q", "s", "t"}}, {"s"}, {"t"});
  CodingCoefficients c;
  c.alpha[{0, "p"}] = 1.0;
  c.alpha[{1, "q"}] = 2.0;
  c.gamma[{0, "p"}] = 1.0;
  c.gamma[{1, "q"}] = 1.0;
  const CompactFactors f = compact_form(build_system_matrices(direct, c, 2, 2), direct);
  ASSERT_TRUE(f.topology_inverse.has_value());
  EXPECT_LT((*f.topology_inverse * f.G - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
}
