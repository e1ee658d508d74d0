// SPDX-License-Identifier: Apache-2.0
#include "netcode/estimator.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "netcode/errors.hpp"
#include "netcode/parallel.hpp"

namespace netcode {

namespace {

constexpr double kMaxConditionM = 1e10;

double condition_number(const CMatrix& X) {
  Eigen::JacobiSVD<CMatrix> svd(X);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return std::numeric_limits<double>::infinity();
  const double smallest = sv(sv.size() - 1);
  return smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
}

bool well_conditioned_square(const CMatrix& X) {
  return X.rows() == X.cols() && X.rows() > 0 && condition_number(X) < kMaxConditionM;
}

bool within(const CMatrix& value, const RMatrix& se_re, const RMatrix& se_im, double k) {
  for (Eigen::Index r = 0; r < value.rows(); ++r) {
    for (Eigen::Index c = 0; c < value.cols(); ++c) {
      if (std::abs(value(r, c).real()) > k * se_re(r, c)) return false;
      if (std::abs(value(r, c).imag()) > k * se_im(r, c)) return false;
    }
  }
  return true;
}

}  // namespace

CVector conditional_mean(const CMatrix& M, const InputDistribution& dist, const CVector& z) {
  if (static_cast<std::size_t>(M.cols()) != dist.dimension() || M.rows() != z.size())
    throw DimensionMismatch("conditional_mean: dimensions do not match");
  if (dist.is_gaussian()) {
    const CMatrix cov = CMatrix::Identity(M.rows(), M.rows()) + M * M.adjoint();
    return M.adjoint() * cov.llt().solve(z);
  }
  // Posterior weights p(x) p(z|x) / p(z) in the log domain.
  const auto& support = dist.support();
  std::vector<double> log_w(support.size());
  double max = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < support.size(); ++b) {
    const double p = dist.probs()[b];
    log_w[b] = p > 0.0 ? std::log(p) + log_conditional_density(M, support[b], z)
                       : -std::numeric_limits<double>::infinity();
    max = std::max(max, log_w[b]);
  }
  double total = 0.0;
  CVector acc = CVector::Zero(M.cols());
  for (std::size_t b = 0; b < support.size(); ++b) {
    const double w = std::exp(log_w[b] - max);
    total += w;
    acc += w * support[b];
  }
  if (!(max + std::log(total) >= kLogDensityFloor))
    throw DensityUnderflow("p(z) underflows; the posterior is undefined");
  return acc / total;
}

bool MmseMatrix::is_hermitian(double tol) const {
  return (E - E.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double MmseMatrix::min_eigenvalue() const {
  const CMatrix sym = 0.5 * (E + E.adjoint());
  return Eigen::SelfAdjointEigenSolver<CMatrix>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double MmseMatrix::prior_gap(const CMatrix& cov) const {
  const CMatrix diff = cov - 0.5 * (E + E.adjoint());
  return Eigen::SelfAdjointEigenSolver<CMatrix>(diff, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

MmseMatrix mmse_matrix(const CMatrix& M, const InputDistribution& dist, const EngineSpec& spec) {
  const ChannelStatistics stats = channel_statistics(M, dist, spec, true);
  MmseMatrix out;
  out.E = stats.mmse;
  out.method = stats.method;
  out.count = stats.count;
  out.se_re = stats.mmse_se_re;
  out.se_im = stats.mmse_se_im;
  return out;
}

double score_identity_residual(const CMatrix& M, const InputDistribution& dist, const CVector& z) {
  const CVector lhs = M * conditional_mean(M, dist, z);
  const CVector rhs = z + output_score(M, dist, z);
  return (lhs - rhs).norm();
}

double score_identity_residual(const SystemMatrices& sys, const InputDistribution& dist,
                               const CVector& z) {
  return score_identity_residual(sys.M, dist, z);
}

CVector invert_flow_estimate(const CompactFactors& factors, const InputDistribution& dist,
                             const CVector& z) {
  const CMatrix M = factors.system();
  if (!well_conditioned_square(M))
    throw SingularSystemMatrix("system matrix is not square and well conditioned");
  const CVector target = z + output_score(M, dist, z);

  if (well_conditioned_square(factors.A) && well_conditioned_square(factors.B) &&
      factors.G.rows() == factors.G.cols()) {
    CVector v = factors.A.partialPivLu().solve(target);
    if (factors.topology_inverse) {
      v = *factors.topology_inverse * v;
    } else {
      if (!well_conditioned_square(factors.G))
        return M.partialPivLu().solve(target);
      v = factors.G.partialPivLu().solve(v);
    }
    return factors.B.partialPivLu().solve(v);
  }
  return M.partialPivLu().solve(target);
}

bool EstimatorMoments::orthogonal_within(double k) const {
  return within(orthogonality, orthogonality_se_re, orthogonality_se_im, k);
}

bool EstimatorMoments::unbiased_within(double k) const {
  return within(CMatrix(bias), RMatrix(bias_se_re), RMatrix(bias_se_im), k);
}

EstimatorMoments estimator_moments(const CMatrix& M, const InputDistribution& dist,
                                   const EngineSpec& spec) {
  if (spec.samples < kMinMonteCarloSamples)
    throw CostGuardViolation("Monte-Carlo needs at least 1000 samples");
  const Eigen::Index n_in = M.cols();
  const Eigen::Index n_out = M.rows();
  const NoiseModel noise{static_cast<std::size_t>(n_out)};
  const std::size_t count = spec.samples;

  struct Batch {
    CMatrix cross;
    CVector xhat;
    CVector x;
  };
  std::vector<Batch> batches(kBatchCount);
  parallel_for(kBatchCount, spec.workers, [&](std::size_t b) {
    Batch& out = batches[b];
    out.cross = CMatrix::Zero(n_in, n_out);
    out.xhat = CVector::Zero(n_in);
    out.x = CVector::Zero(n_in);
    const std::size_t begin = count * b / kBatchCount;
    const std::size_t end = count * (b + 1) / kBatchCount;
    for (std::size_t i = begin; i < end; ++i) {
      const Draw d = draw_sample(dist, noise, spec.seed, i);
      const CVector z = M * d.x + d.noise;
      const CVector xhat = conditional_mean(M, dist, z);
      out.cross.noalias() += (d.x - xhat) * z.adjoint();
      out.xhat += xhat;
      out.x += d.x;
    }
    const double n = static_cast<double>(end - begin);
    out.cross /= n;
    out.xhat /= n;
    out.x /= n;
  });

  // Equal-sized batches (up to one sample), so batch means average directly.
  EstimatorMoments m;
  m.samples = count;
  const double nb = static_cast<double>(kBatchCount);
  m.orthogonality = CMatrix::Zero(n_in, n_out);
  m.bias = CVector::Zero(n_in);
  for (const auto& b : batches) {
    m.orthogonality += b.cross / nb;
    m.bias += (b.xhat - b.x) / nb;
  }
  m.orthogonality_se_re = RMatrix::Zero(n_in, n_out);
  m.orthogonality_se_im = RMatrix::Zero(n_in, n_out);
  m.bias_se_re = Eigen::VectorXd::Zero(n_in);
  m.bias_se_im = Eigen::VectorXd::Zero(n_in);
  for (const auto& b : batches) {
    const CMatrix d = b.cross - m.orthogonality;
    m.orthogonality_se_re += d.real().cwiseAbs2();
    m.orthogonality_se_im += d.imag().cwiseAbs2();
    const CVector e = (b.xhat - b.x) - m.bias;
    m.bias_se_re += e.real().cwiseAbs2();
    m.bias_se_im += e.imag().cwiseAbs2();
  }
  const double scale = 1.0 / (nb * (nb - 1.0));
  m.orthogonality_se_re = (m.orthogonality_se_re * scale).cwiseSqrt();
  m.orthogonality_se_im = (m.orthogonality_se_im * scale).cwiseSqrt();
  m.bias_se_re = (m.bias_se_re * scale).cwiseSqrt();
  m.bias_se_im = (m.bias_se_im * scale).cwiseSqrt();
  return m;
}

}  // namespace netcode
