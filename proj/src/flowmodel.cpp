// SPDX-License-Identifier: Apache-2.0
#include "netcode/flowmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "netcode/errors.hpp"
#include "netcode/parallel.hpp"
#include "netcode/philox.hpp"

namespace netcode {

namespace {

constexpr double kProbabilityTolerance = 1e-12;

void check_dims(const CMatrix& M, const CVector& x, const CVector& z) {
  if (M.cols() != x.size() || M.rows() != z.size())
    throw DimensionMismatch("M is " + std::to_string(M.rows()) + "x" + std::to_string(M.cols()) +
                            ", x has " + std::to_string(x.size()) + " entries, z has " +
                            std::to_string(z.size()));
}

void check_dims(const CMatrix& M, const InputDistribution& dist, const CVector& z) {
  if (static_cast<std::size_t>(M.cols()) != dist.dimension() || M.rows() != z.size())
    throw DimensionMismatch("M is " + std::to_string(M.rows()) + "x" + std::to_string(M.cols()) +
                            ", input dimension " + std::to_string(dist.dimension()) +
                            ", z has " + std::to_string(z.size()) + " entries");
}

// Exponents log p_b - ||z - M x_b||^2 over the support and their maximum.
struct MixtureTerms {
  std::vector<double> exponent;
  double max = -std::numeric_limits<double>::infinity();
};

MixtureTerms mixture_terms(const CMatrix& M, const InputDistribution& dist, const CVector& z) {
  const auto& support = dist.support();
  if (support.empty()) throw EmptySupport("input distribution has no support points");
  MixtureTerms t;
  t.exponent.resize(support.size());
  for (std::size_t b = 0; b < support.size(); ++b) {
    const double p = dist.probs()[b];
    t.exponent[b] = p > 0.0 ? std::log(p) - (z - M * support[b]).squaredNorm()
                            : -std::numeric_limits<double>::infinity();
    t.max = std::max(t.max, t.exponent[b]);
  }
  return t;
}

CMatrix gaussian_output_covariance(const CMatrix& M) {
  return CMatrix::Identity(M.rows(), M.rows()) + M * M.adjoint();
}

}  // namespace

InputDistribution InputDistribution::discrete(std::vector<CVector> support,
                                              std::vector<double> probs) {
  if (support.empty()) throw EmptySupport("input distribution has no support points");
  if (support.size() != probs.size())
    throw InvalidArgument("support and probability lists differ in length");
  const auto dim = support.front().size();
  if (dim == 0) throw InvalidArgument("support vectors must be non-empty");
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i].size() != dim)
      throw DimensionMismatch("support vectors do not share one dimension");
    if (!(probs[i] >= 0.0)) throw InvalidArgument("negative probability");
    total += probs[i];
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance)
    throw InvalidArgument("probabilities sum to " + std::to_string(total) + ", not 1");

  InputDistribution d;
  d.kind_ = InputKind::Discrete;
  d.dim_ = static_cast<std::size_t>(dim);
  d.support_ = std::move(support);
  d.probs_ = std::move(probs);
  d.cumulative_.resize(d.probs_.size());
  std::partial_sum(d.probs_.begin(), d.probs_.end(), d.cumulative_.begin());
  return d;
}

InputDistribution InputDistribution::gaussian(std::size_t dim) {
  if (dim == 0) throw InvalidArgument("Gaussian input needs a positive dimension");
  InputDistribution d;
  d.kind_ = InputKind::Gaussian;
  d.dim_ = dim;
  return d;
}

InputDistribution InputDistribution::point_mass(CVector x0) {
  return discrete({std::move(x0)}, {1.0});
}

namespace {

InputDistribution product_constellation(const std::vector<cplx>& symbols, std::size_t dim) {
  if (dim == 0) throw InvalidArgument("constellation needs a positive dimension");
  std::size_t count = 1;
  for (std::size_t k = 0; k < dim; ++k) count *= symbols.size();
  std::vector<CVector> support;
  support.reserve(count);
  for (std::size_t flat = 0; flat < count; ++flat) {
    CVector x(static_cast<Eigen::Index>(dim));
    std::size_t rest = flat;
    // First component varies slowest.
    for (std::size_t k = dim; k-- > 0;) {
      x(static_cast<Eigen::Index>(k)) = symbols[rest % symbols.size()];
      rest /= symbols.size();
    }
    support.push_back(std::move(x));
  }
  std::vector<double> probs(count, 1.0 / static_cast<double>(count));
  return InputDistribution::discrete(std::move(support), std::move(probs));
}

}  // namespace

InputDistribution InputDistribution::bpsk(std::size_t dim) {
  return product_constellation({cplx(1.0, 0.0), cplx(-1.0, 0.0)}, dim);
}

InputDistribution InputDistribution::qpsk(std::size_t dim) {
  const double a = std::sqrt(0.5);
  return product_constellation({cplx(a, a), cplx(-a, a), cplx(-a, -a), cplx(a, -a)}, dim);
}

CVector InputDistribution::mean() const {
  CVector mu = CVector::Zero(static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < support_.size(); ++i) mu += probs_[i] * support_[i];
  return mu;
}

CMatrix InputDistribution::covariance() const {
  const auto n = static_cast<Eigen::Index>(dim_);
  if (is_gaussian()) return CMatrix::Identity(n, n);
  const CVector mu = mean();
  CMatrix cov = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < support_.size(); ++i) {
    const CVector d = support_[i] - mu;
    cov += probs_[i] * d * d.adjoint();
  }
  return cov;
}

double InputDistribution::entropy() const {
  if (is_gaussian()) throw InvalidArgument("entropy is defined for discrete inputs only");
  double h = 0.0;
  for (double p : probs_)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

std::size_t InputDistribution::pick(double u) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) return cumulative_.size() - 1;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

double NoiseModel::log_density(const CVector& n) const {
  if (static_cast<std::size_t>(n.size()) != dimension)
    throw DimensionMismatch("noise vector has the wrong dimension");
  return -static_cast<double>(dimension) * std::log(kPi) - n.squaredNorm();
}

double log_conditional_density(const CMatrix& M, const CVector& x, const CVector& z) {
  check_dims(M, x, z);
  return -static_cast<double>(z.size()) * std::log(kPi) - (z - M * x).squaredNorm();
}

double conditional_density(const CMatrix& M, const CVector& x, const CVector& z) {
  return std::exp(log_conditional_density(M, x, z));
}

double log_output_density(const CMatrix& M, const InputDistribution& dist, const CVector& z) {
  check_dims(M, dist, z);
  const double n = static_cast<double>(z.size());
  double log_p = 0.0;
  if (dist.is_gaussian()) {
    const Eigen::LLT<CMatrix> chol(gaussian_output_covariance(M));
    const CVector w = chol.matrixL().solve(z);
    const double log_det = 2.0 * chol.matrixL().toDenseMatrix().diagonal().real().array().log().sum();
    log_p = -n * std::log(kPi) - log_det - w.squaredNorm();
  } else {
    const MixtureTerms t = mixture_terms(M, dist, z);
    double sum = 0.0;
    for (double e : t.exponent) sum += std::exp(e - t.max);
    log_p = -n * std::log(kPi) + t.max + std::log(sum);
  }
  if (!(log_p >= kLogDensityFloor))
    throw DensityUnderflow("log p(z) = " + std::to_string(log_p) + " is below the floor");
  return log_p;
}

double output_density(const CMatrix& M, const InputDistribution& dist, const CVector& z) {
  return std::exp(log_output_density(M, dist, z));
}

CVector output_score(const CMatrix& M, const InputDistribution& dist, const CVector& z) {
  check_dims(M, dist, z);
  if (dist.is_gaussian()) return -gaussian_output_covariance(M).llt().solve(z);

  // grad p(z) / p(z), with grad p(z | x) = -p(z | x) (z - M x).
  const MixtureTerms t = mixture_terms(M, dist, z);
  const double n = static_cast<double>(z.size());
  double sum = 0.0;
  CVector grad = CVector::Zero(z.size());
  for (std::size_t b = 0; b < t.exponent.size(); ++b) {
    const double w = std::exp(t.exponent[b] - t.max);
    if (w == 0.0) continue;
    sum += w;
    grad -= w * (z - M * dist.support()[b]);
  }
  if (!(-n * std::log(kPi) + t.max + std::log(sum) >= kLogDensityFloor))
    throw DensityUnderflow("log p(z) is below the floor");
  return grad / sum;
}

Draw draw_sample(const InputDistribution& dist, const NoiseModel& noise, std::uint64_t seed,
                 std::uint64_t index) {
  SampleStream stream(seed, index);
  Draw d;
  if (dist.is_gaussian()) {
    d.x.resize(static_cast<Eigen::Index>(dist.dimension()));
    for (Eigen::Index k = 0; k < d.x.size(); ++k) d.x(k) = stream.complex_normal();
  } else {
    d.x = dist.support()[dist.pick(stream.uniform())];
  }
  d.noise.resize(static_cast<Eigen::Index>(noise.dimension));
  for (Eigen::Index k = 0; k < d.noise.size(); ++k) d.noise(k) = stream.complex_normal();
  return d;
}

SampleBatch sample(const CMatrix& M, const InputDistribution& dist, const NoiseModel& noise,
                   std::uint64_t seed, std::size_t count, std::size_t workers) {
  if (count == 0) throw InvalidArgument("sample count must be at least 1");
  if (static_cast<std::size_t>(M.cols()) != dist.dimension() ||
      static_cast<std::size_t>(M.rows()) != noise.dimension)
    throw DimensionMismatch("system matrix does not match input or noise dimension");

  SampleBatch batch;
  batch.seed = seed;
  batch.count = count;
  batch.x.resize(M.cols(), static_cast<Eigen::Index>(count));
  batch.z.resize(M.rows(), static_cast<Eigen::Index>(count));
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t end = std::min(count, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      const Draw d = draw_sample(dist, noise, seed, i);
      const auto col = static_cast<Eigen::Index>(i);
      batch.x.col(col) = d.x;
      batch.z.col(col) = M * d.x + d.noise;
    }
  });
  return batch;
}

}  // namespace netcode
