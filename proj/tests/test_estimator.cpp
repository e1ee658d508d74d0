// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "netcode/engine.hpp"
#include "netcode/errors.hpp"
#include "netcode/estimator.hpp"
#include "support.hpp"

using namespace netcode;
using namespace netcode::testing;

namespace {

// Complex-noise BPSK with M = sqrt(snr), computed independently with scipy
// adaptive quadrature of the one-dimensional real integral.
struct BpskReference {
  double snr;
  double mi;
  double mmse;
};
constexpr BpskReference kBpsk[] = {
    {0.25, 0.20134547158480504, 0.6498865953248691},
    {1.0, 0.5000721360668448, 0.23101822192929544},
    {4.0, 0.6865358194619882, 0.007176257218156956},
};

}  // namespace

TEST(ConditionalMean, BpskIsHyperbolicTangent) {
  for (double m : {0.3, 1.0, 2.5}) {
    for (double re : {-1.5, -0.2, 0.0, 0.7, 2.0}) {
      CVector z(1);
      z(0) = cplx(re, 0.4);
      const CVector xhat = conditional_mean(scalar(m), InputDistribution::bpsk(1), z);
      EXPECT_NEAR(xhat(0).real(), std::tanh(2.0 * m * re), 1e-14);
      EXPECT_NEAR(xhat(0).imag(), 0.0, 1e-15);
    }
  }
}

TEST(ConditionalMean, GaussianIsLinear) {
  const CMatrix M = random_matrix(2, 3, 2);
  const CVector z = random_matrix(2, 1, 3);
  const CVector expected = M.adjoint() * (CMatrix::Identity(2, 2) + M * M.adjoint()).inverse() * z;
  EXPECT_LT((conditional_mean(M, InputDistribution::gaussian(3), z) - expected).norm(), 1e-13);
}

TEST(ChannelStatistics, BpskMatchesIndependentReference) {
  for (const auto& ref : kBpsk) {
    const auto s = channel_statistics(scalar(std::sqrt(ref.snr)), InputDistribution::bpsk(1),
                                      EngineSpec{}, true);
    EXPECT_NEAR(s.mi / ref.mi, 1.0, 1e-6) << ref.snr;
    EXPECT_NEAR(s.mmse(0, 0).real() / ref.mmse, 1.0, 1e-6) << ref.snr;
  }
}

TEST(ChannelStatistics, GaussianQuadratureMatchesClosedForms) {
  const CMatrix M = random_matrix(2, 2, 7);
  const auto s = channel_statistics(M, InputDistribution::gaussian(2), EngineSpec{}, true);
  EXPECT_NEAR(s.mi, gaussian_mutual_information(M), 1e-9);
  EXPECT_LT((s.mmse - gaussian_mmse(M)).cwiseAbs().maxCoeff(), 1e-9);
  const CMatrix S = CMatrix::Identity(2, 2) + M * M.adjoint();
  EXPECT_NEAR(gaussian_mutual_information(M), std::log(S.determinant().real()), 1e-12);
}

TEST(ChannelStatistics, DeterministicInputCarriesNoInformation) {
  CVector x0(2);
  x0 << cplx(1, 2), cplx(-0.5, 0);
  const auto s = channel_statistics(random_matrix(2, 2, 1), InputDistribution::point_mass(x0),
                                    EngineSpec{}, true);
  EXPECT_NEAR(s.mi, 0.0, 1e-15);
  EXPECT_LT(s.mmse.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ChannelStatistics, MonteCarloConvergesToQuadrature) {
  const CMatrix M = random_matrix(2, 2, 40);
  const auto dist = InputDistribution::qpsk(2);
  const auto q = channel_statistics(M, dist, EngineSpec{}, true);
  EngineSpec mc;
  mc.method = Method::MonteCarlo;
  mc.samples = 100000;
  const auto m = channel_statistics(M, dist, mc, true);
  EXPECT_GT(m.mi_se, 0.0);
  EXPECT_LT(std::abs(m.mi - q.mi), 5 * m.mi_se);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) {
      EXPECT_LT(std::abs(m.mmse(i, j).real() - q.mmse(i, j).real()), 5 * m.mmse_se_re(i, j) + 1e-12);
      EXPECT_LT(std::abs(m.mmse(i, j).imag() - q.mmse(i, j).imag()), 5 * m.mmse_se_im(i, j) + 1e-12);
    }
}

TEST(ChannelStatistics, MonteCarloIndependentOfWorkers) {
  const CMatrix M = random_matrix(2, 2, 41);
  EngineSpec mc;
  mc.method = Method::MonteCarlo;
  mc.samples = 20000;
  const auto one = channel_statistics(M, InputDistribution::qpsk(2), mc, true);
  mc.workers = 8;
  const auto eight = channel_statistics(M, InputDistribution::qpsk(2), mc, true);
  EXPECT_EQ(one.mi, eight.mi);
  EXPECT_TRUE(one.mmse == eight.mmse);
}

TEST(ChannelStatistics, CostGuards) {
  EngineSpec mc;
  mc.method = Method::MonteCarlo;
  mc.samples = 999;
  EXPECT_THROW(channel_statistics(scalar(1.0), InputDistribution::bpsk(1), mc), CostGuardViolation);
  EXPECT_THROW(channel_statistics(random_matrix(4, 1, 1), InputDistribution::bpsk(1), EngineSpec{}),
               CostGuardViolation);
}

TEST(MmseMatrix, InvariantsHold) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CMatrix M = random_matrix(2, 2, 50 + seed);
    for (const auto& dist : {InputDistribution::qpsk(2), InputDistribution::gaussian(2)}) {
      const MmseMatrix E = mmse_matrix(M, dist, EngineSpec{});
      EXPECT_TRUE(E.is_hermitian());
      EXPECT_GE(E.min_eigenvalue(), -1e-12);
      EXPECT_GE(E.prior_gap(dist.covariance()), -1e-12);
    }
  }
}

TEST(ScoreIdentity, ExactForQpskAndGaussian) {
  const NetworkTopology topo = relay_topology();
  const SystemMatrices sys =
      build_system_matrices(topo, relay_coefficients(random_assignment(3, 0)), 2, 2);
  const CMatrix M = sys.M * 3.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const CVector z = random_matrix(2, 1, 1000 + k) * 2.0;
    EXPECT_LT(score_identity_residual(M, InputDistribution::qpsk(2), z), 1e-8);
    EXPECT_LT(score_identity_residual(M, InputDistribution::gaussian(2), z), 1e-12);
  }
  EXPECT_LT(score_identity_residual(sys, InputDistribution::qpsk(2), CVector::Zero(2)), 1e-12);
}

TEST(InvertFlow, RecoversConditionalMean) {
  const NetworkTopology topo = relay_topology();
  const SystemMatrices sys =
      build_system_matrices(topo, relay_coefficients(random_assignment(9, 0)), 2, 2);
  const CompactFactors f = compact_form(sys, topo);
  const auto dist = InputDistribution::qpsk(2);
  for (std::uint64_t k = 0; k < 20; ++k) {
    const CVector z = random_matrix(2, 1, 200 + k) * 0.5;
    EXPECT_LT((invert_flow_estimate(f, dist, z) - conditional_mean(sys.M, dist, z)).norm(), 1e-8);
  }
}

TEST(InvertFlow, RejectsNonInvertibleChannels) {
  CompactFactors f;
  f.A = CMatrix::Identity(2, 2);
  f.G = CMatrix::Identity(2, 2);
  f.B = CMatrix::Ones(2, 2);  // rank one
  EXPECT_THROW(invert_flow_estimate(f, InputDistribution::qpsk(2), CVector::Zero(2)),
               SingularSystemMatrix);
  f.B = CMatrix::Ones(2, 1);
  EXPECT_THROW(invert_flow_estimate(f, InputDistribution::qpsk(1), CVector::Zero(2)),
               SingularSystemMatrix);
}

TEST(EstimatorMoments, OrthogonalityAndTower) {
  EngineSpec mc;
  mc.method = Method::MonteCarlo;
  mc.samples = 100000;
  const CMatrix M = random_matrix(2, 2, 60);
  for (const auto& dist : {InputDistribution::qpsk(2), InputDistribution::gaussian(2)}) {
    const auto m = estimator_moments(M, dist, mc);
    EXPECT_EQ(m.samples, 100000u);
    EXPECT_TRUE(m.orthogonal_within(5.0));
    EXPECT_TRUE(m.unbiased_within(5.0));
  }
}
