// SPDX-License-Identifier: Apache-2.0
#include "netcode/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "netcode/errors.hpp"
#include "netcode/parallel.hpp"
#include "netcode/philox.hpp"
#include "netcode/quadrature.hpp"

namespace netcode {

namespace {

const ComplexNoiseGrid& cached_grid(std::size_t dim, std::size_t nodes) {
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<ComplexNoiseGrid>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{dim, nodes}];
  if (!slot) slot = std::make_unique<ComplexNoiseGrid>(complex_noise_grid(dim, nodes));
  return *slot;
}

// Running sums for one chunk of nodes or one Monte-Carlo batch.
struct Partial {
  double weight = 0.0;
  double mi = 0.0;
  CMatrix mmse;
};

// Kernel for discrete inputs: for a given true support point a and noise n,
// returns log p(z|x_a)/p(z) and, optionally, the posterior mean or the
// posterior's divergence from the prior.
class DiscreteKernel {
 public:
  DiscreteKernel(const CMatrix& M, const InputDistribution& dist)
      : support_(dist.support()),
        n_out_(static_cast<std::size_t>(M.rows())),
        k_(dist.support().size()) {
    log_p_.resize(k_);
    for (std::size_t b = 0; b < k_; ++b) {
      const double p = dist.probs()[b];
      log_p_[b] = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }
    shift_.resize(k_ * k_ * 2 * n_out_);
    shift_norm_.resize(k_ * k_);
    for (std::size_t a = 0; a < k_; ++a) {
      for (std::size_t b = 0; b < k_; ++b) {
        const CVector d = M * (support_[a] - support_[b]);
        double* out = &shift_[(a * k_ + b) * 2 * n_out_];
        for (std::size_t c = 0; c < n_out_; ++c) {
          out[2 * c] = d(static_cast<Eigen::Index>(c)).real();
          out[2 * c + 1] = d(static_cast<Eigen::Index>(c)).imag();
        }
        shift_norm_[a * k_ + b] = d.squaredNorm();
      }
    }
    exponent_.resize(k_);
    raw_.resize(k_);
  }

  // noise: 2 * n_out interleaved real / imaginary parts.
  double information_density(std::size_t a, const double* noise) {
    double max = -std::numeric_limits<double>::infinity();
    const double* d = &shift_[a * k_ * 2 * n_out_];
    for (std::size_t b = 0; b < k_; ++b, d += 2 * n_out_) {
      double dot = 0.0;
      for (std::size_t c = 0; c < 2 * n_out_; ++c) dot += noise[c] * d[c];
      const double e = log_p_[b] - 2.0 * dot - shift_norm_[a * k_ + b];
      exponent_[b] = e;
      raw_[b] = e;
      max = std::max(max, e);
    }
    max_ = max;
    sum_ = 0.0;
    for (std::size_t b = 0; b < k_; ++b) {
      exponent_[b] = std::exp(exponent_[b] - max);
      sum_ += exponent_[b];
    }
    return -(max + std::log(sum_));
  }

  // Posterior mean for the state left by the last information_density call.
  void posterior_mean(CVector& out) const {
    out.setZero();
    for (std::size_t b = 0; b < k_; ++b)
      if (exponent_[b] != 0.0) out += exponent_[b] * support_[b];
    out /= sum_;
  }

  // KL(p(x|z) || p(x)) for the state left by the last information_density
  // call. Its mean over z is I(x; z), the conditional expectation of the
  // information density given z.
  double posterior_divergence() const {
    const double log_sum = std::log(sum_);
    double kl = 0.0;
    for (std::size_t b = 0; b < k_; ++b) {
      if (exponent_[b] == 0.0) continue;
      const double log_post = raw_[b] - max_ - log_sum;
      kl += exponent_[b] / sum_ * (log_post - log_p_[b]);
    }
    return kl;
  }

 private:
  const std::vector<CVector>& support_;
  std::size_t n_out_;
  std::size_t k_;
  std::vector<double> log_p_;
  std::vector<double> shift_;
  std::vector<double> shift_norm_;
  std::vector<double> exponent_;
  std::vector<double> raw_;
  double max_ = 0.0;
  double sum_ = 0.0;
};

void check_guards(const CMatrix& M, const InputDistribution& dist, const EngineSpec& spec) {
  if (static_cast<std::size_t>(M.cols()) != dist.dimension())
    throw DimensionMismatch("system matrix has " + std::to_string(M.cols()) +
                            " columns but the input has dimension " +
                            std::to_string(dist.dimension()));
  if (M.rows() == 0) throw DimensionMismatch("system matrix has no outputs");
  if (spec.method == Method::Quadrature &&
      static_cast<std::size_t>(M.rows()) > kMaxQuadratureOutputs)
    throw CostGuardViolation("quadrature is limited to at most 3 outputs; use Monte-Carlo");
  if (spec.method == Method::MonteCarlo && spec.samples < kMinMonteCarloSamples)
    throw CostGuardViolation("Monte-Carlo needs at least 1000 samples");
}

std::size_t grid_nodes(const CMatrix& M, const EngineSpec& spec) {
  return spec.nodes != 0 ? spec.nodes : default_quadrature_nodes(static_cast<std::size_t>(M.rows()));
}

// Combines partials in index order. For Monte-Carlo every partial is one
// batch; the spread of batch means gives the standard error.
ChannelStatistics combine(const std::vector<Partial>& parts, bool with_mmse, bool batches,
                          Eigen::Index n_in) {
  ChannelStatistics s;
  double total_weight = 0.0;
  CMatrix mmse = CMatrix::Zero(n_in, n_in);
  for (const auto& p : parts) {
    total_weight += p.weight;
    s.mi += p.mi;
    if (with_mmse) mmse += p.mmse;
  }
  s.mi /= total_weight;
  mmse /= total_weight;
  s.mmse_se_re = RMatrix::Zero(n_in, n_in);
  s.mmse_se_im = RMatrix::Zero(n_in, n_in);
  if (batches && parts.size() > 1) {
    const double b = static_cast<double>(parts.size());
    double var = 0.0;
    RMatrix var_re = RMatrix::Zero(n_in, n_in);
    RMatrix var_im = RMatrix::Zero(n_in, n_in);
    for (const auto& p : parts) {
      const double dm = p.mi / p.weight - s.mi;
      var += dm * dm;
      if (with_mmse) {
        const CMatrix de = p.mmse / p.weight - mmse;
        var_re += de.real().cwiseAbs2();
        var_im += de.imag().cwiseAbs2();
      }
    }
    const double scale = 1.0 / (b * (b - 1.0));
    s.mi_se = std::sqrt(var * scale);
    s.mmse_se_re = (var_re * scale).cwiseSqrt();
    s.mmse_se_im = (var_im * scale).cwiseSqrt();
  }
  if (with_mmse) s.mmse = mmse;
  return s;
}

ChannelStatistics discrete_quadrature(const CMatrix& M, const InputDistribution& dist,
                                      const EngineSpec& spec, bool with_mmse) {
  const auto n_out = static_cast<std::size_t>(M.rows());
  const ComplexNoiseGrid& grid = cached_grid(n_out, grid_nodes(M, spec));
  const std::size_t nodes = grid.size();
  const Eigen::Index n_in = M.cols();
  const auto& support = dist.support();
  const auto& probs = dist.probs();

  std::vector<Partial> parts(kBatchCount);
  parallel_for(kBatchCount, spec.workers, [&](std::size_t chunk) {
    DiscreteKernel kernel(M, dist);
    Partial& part = parts[chunk];
    part.mmse = CMatrix::Zero(n_in, n_in);
    CVector xhat(n_in);
    std::vector<double> noise(2 * n_out);
    const std::size_t begin = nodes * chunk / kBatchCount;
    const std::size_t end = nodes * (chunk + 1) / kBatchCount;
    for (std::size_t k = begin; k < end; ++k) {
      const double w = grid.weights[k];
      for (std::size_t c = 0; c < n_out; ++c) {
        const cplx v = grid.points(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k));
        noise[2 * c] = v.real();
        noise[2 * c + 1] = v.imag();
      }
      for (std::size_t a = 0; a < support.size(); ++a) {
        if (probs[a] == 0.0) continue;
        const double wa = w * probs[a];
        part.mi += wa * kernel.information_density(a, noise.data());
        if (with_mmse) {
          kernel.posterior_mean(xhat);
          const CVector err = support[a] - xhat;
          part.mmse.noalias() += wa * err * err.adjoint();
        }
      }
      part.weight += w;
    }
  });
  ChannelStatistics s = combine(parts, with_mmse, false, n_in);
  s.method = Method::Quadrature;
  s.count = nodes;
  return s;
}

ChannelStatistics discrete_monte_carlo(const CMatrix& M, const InputDistribution& dist,
                                       const EngineSpec& spec, bool with_mmse) {
  const auto n_out = static_cast<std::size_t>(M.rows());
  const Eigen::Index n_in = M.cols();
  const auto& support = dist.support();
  const std::size_t count = spec.samples;

  std::vector<Partial> parts(kBatchCount);
  parallel_for(kBatchCount, spec.workers, [&](std::size_t batch) {
    DiscreteKernel kernel(M, dist);
    Partial& part = parts[batch];
    part.mmse = CMatrix::Zero(n_in, n_in);
    CVector xhat(n_in);
    std::vector<double> noise(2 * n_out);
    const std::size_t begin = count * batch / kBatchCount;
    const std::size_t end = count * (batch + 1) / kBatchCount;
    for (std::size_t i = begin; i < end; ++i) {
      // Same draw order as draw_sample: input selector, then noise.
      SampleStream stream(spec.seed, i);
      const std::size_t a = dist.pick(stream.uniform());
      for (std::size_t c = 0; c < n_out; ++c) {
        const cplx v = stream.complex_normal();
        noise[2 * c] = v.real();
        noise[2 * c + 1] = v.imag();
      }
      // Rao-Blackwellized over x given z: same mean, smaller variance.
      kernel.information_density(a, noise.data());
      part.mi += kernel.posterior_divergence();
      if (with_mmse) {
        kernel.posterior_mean(xhat);
        const CVector err = support[a] - xhat;
        part.mmse.noalias() += err * err.adjoint();
      }
    }
    part.weight = static_cast<double>(end - begin);
  });
  ChannelStatistics s = combine(parts, with_mmse, true, n_in);
  s.method = Method::MonteCarlo;
  s.count = count;
  return s;
}

ChannelStatistics gaussian_quadrature(const CMatrix& M, const EngineSpec& spec, bool with_mmse) {
  // z ~ CN(0, S) with S = I + M M^H; integrate over z = L w, w ~ CN(0, I).
  const auto n_out = static_cast<std::size_t>(M.rows());
  const Eigen::Index n_in = M.cols();
  const CMatrix cov = CMatrix::Identity(M.rows(), M.rows()) + M * M.adjoint();
  const Eigen::LLT<CMatrix> chol(cov);
  const CMatrix L = chol.matrixL();
  const double log_det = 2.0 * L.diagonal().real().array().log().sum();
  const CMatrix gain = M.adjoint() * chol.solve(CMatrix::Identity(M.rows(), M.rows()));
  const ComplexNoiseGrid& grid = cached_grid(n_out, grid_nodes(M, spec));
  const double n = static_cast<double>(n_out);

  std::vector<Partial> parts(kBatchCount);
  parallel_for(kBatchCount, spec.workers, [&](std::size_t chunk) {
    Partial& part = parts[chunk];
    part.mmse = CMatrix::Zero(n_in, n_in);
    const std::size_t begin = grid.size() * chunk / kBatchCount;
    const std::size_t end = grid.size() * (chunk + 1) / kBatchCount;
    for (std::size_t k = begin; k < end; ++k) {
      const double w = grid.weights[k];
      const CVector unit = grid.points.col(static_cast<Eigen::Index>(k));
      const CVector z = L * unit;
      const double log_pz = -n * std::log(kPi) - log_det - unit.squaredNorm();
      part.mi += w * (-n * std::log(kPi * std::exp(1.0)) - log_pz);
      if (with_mmse) {
        const CVector xhat = gain * z;
        part.mmse.noalias() -= w * xhat * xhat.adjoint();
      }
      part.weight += w;
    }
  });
  ChannelStatistics s = combine(parts, with_mmse, false, n_in);
  if (with_mmse) s.mmse += CMatrix::Identity(n_in, n_in);
  s.method = Method::Quadrature;
  s.count = grid.size();
  return s;
}

ChannelStatistics gaussian_monte_carlo(const CMatrix& M, const EngineSpec& spec,
                                       bool with_mmse) {
  const Eigen::Index n_out = M.rows();
  const Eigen::Index n_in = M.cols();
  const CMatrix cov = CMatrix::Identity(n_out, n_out) + M * M.adjoint();
  const Eigen::LLT<CMatrix> chol(cov);
  const double log_det = 2.0 * CMatrix(chol.matrixL()).diagonal().real().array().log().sum();
  const CMatrix precision = chol.solve(CMatrix::Identity(n_out, n_out));
  const CMatrix gain = M.adjoint() * precision;
  const std::size_t count = spec.samples;

  std::vector<Partial> parts(kBatchCount);
  parallel_for(kBatchCount, spec.workers, [&](std::size_t batch) {
    Partial& part = parts[batch];
    part.mmse = CMatrix::Zero(n_in, n_in);
    CVector x(n_in);
    CVector noise(n_out);
    const std::size_t begin = count * batch / kBatchCount;
    const std::size_t end = count * (batch + 1) / kBatchCount;
    for (std::size_t i = begin; i < end; ++i) {
      SampleStream stream(spec.seed, i);
      for (Eigen::Index k = 0; k < n_in; ++k) x(k) = stream.complex_normal();
      for (Eigen::Index k = 0; k < n_out; ++k) noise(k) = stream.complex_normal();
      const CVector z = M * x + noise;
      // log p(z|x) - log p(z)
      part.mi += -noise.squaredNorm() + log_det + (z.adjoint() * precision * z)(0).real();
      if (with_mmse) {
        const CVector err = x - gain * z;
        part.mmse.noalias() += err * err.adjoint();
      }
    }
    part.weight = static_cast<double>(end - begin);
  });
  ChannelStatistics s = combine(parts, with_mmse, true, n_in);
  s.method = Method::MonteCarlo;
  s.count = count;
  return s;
}

}  // namespace

const char* to_string(Method method) {
  return method == Method::Quadrature ? "quadrature" : "mc";
}

ChannelStatistics channel_statistics(const CMatrix& M, const InputDistribution& dist,
                                     const EngineSpec& spec, bool with_mmse) {
  check_guards(M, dist, spec);
  if (dist.is_gaussian()) {
    return spec.method == Method::Quadrature ? gaussian_quadrature(M, spec, with_mmse)
                                             : gaussian_monte_carlo(M, spec, with_mmse);
  }
  return spec.method == Method::Quadrature ? discrete_quadrature(M, dist, spec, with_mmse)
                                           : discrete_monte_carlo(M, dist, spec, with_mmse);
}

double gaussian_mutual_information(const CMatrix& M) {
  const CMatrix cov = CMatrix::Identity(M.rows(), M.rows()) + M * M.adjoint();
  const Eigen::LLT<CMatrix> chol(cov);
  return 2.0 * CMatrix(chol.matrixL()).diagonal().real().array().log().sum();
}

CMatrix gaussian_mmse(const CMatrix& M) {
  const CMatrix info = CMatrix::Identity(M.cols(), M.cols()) + M.adjoint() * M;
  return info.llt().solve(CMatrix::Identity(M.cols(), M.cols()));
}

}  // namespace netcode
