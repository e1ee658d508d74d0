// SPDX-License-Identifier: Apache-2.0
#include "netcode/infogradients.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "netcode/errors.hpp"
#include "netcode/parallel.hpp"

namespace netcode {

namespace {

void require_mmse_shape(const CMatrix& B, const CMatrix& E) {
  if (E.rows() != B.cols() || E.cols() != B.cols())
    throw DimensionMismatch("error matrix is " + std::to_string(E.rows()) + "x" +
                            std::to_string(E.cols()) + " but B has " +
                            std::to_string(B.cols()) + " columns");
}

void require_chain(const ChannelFactors& f) {
  if (f.A.cols() != f.G.rows() || f.G.cols() != f.B.rows())
    throw DimensionMismatch("A, G and B do not chain");
}

using InformationOf = std::function<double(const CMatrix&, std::uint64_t seed)>;

OracleGradient finite_difference(const CMatrix& X, const InformationOf& information,
                                 const OracleSpec& spec) {
  if (!(spec.step >= 1e-5 && spec.step <= 1e-2))
    throw InvalidArgument("finite-difference step must lie in [1e-5, 1e-2]");

  const Eigen::Index rows = X.rows();
  const Eigen::Index cols = X.cols();
  const std::size_t entries = static_cast<std::size_t>(X.size());
  const std::size_t levels = spec.richardson ? 2 : 1;
  // job = ((level * entries + entry) * 2 + part) * 2 + side
  const std::size_t jobs = levels * entries * 4;
  std::vector<double> values(jobs, 0.0);
  const bool shared_seed = spec.engine.method == Method::Quadrature || spec.common_random_numbers;

  parallel_for(jobs, spec.engine.workers, [&](std::size_t job) {
    const std::size_t side = job % 2;
    const std::size_t part = (job / 2) % 2;
    const std::size_t entry = (job / 4) % entries;
    const std::size_t level = job / (4 * entries);
    const double h = level == 0 ? spec.step : 0.5 * spec.step;
    CMatrix perturbed = X;
    const Eigen::Index r = static_cast<Eigen::Index>(entry) % rows;
    const Eigen::Index c = static_cast<Eigen::Index>(entry) / rows;
    const cplx delta = part == 0 ? cplx(h, 0.0) : cplx(0.0, h);
    perturbed(r, c) += side == 0 ? delta : -delta;
    const std::uint64_t seed = shared_seed ? spec.engine.seed : spec.engine.seed + 1 + job;
    values[job] = information(perturbed, seed);
  });

  auto derivative = [&](std::size_t level) {
    const double h = level == 0 ? spec.step : 0.5 * spec.step;
    CMatrix g(rows, cols);
    for (std::size_t entry = 0; entry < entries; ++entry) {
      const std::size_t base = (level * entries + entry) * 4;
      const double d_re = (values[base + 0] - values[base + 1]) / (2.0 * h);
      const double d_im = (values[base + 2] - values[base + 3]) / (2.0 * h);
      g(static_cast<Eigen::Index>(entry) % rows, static_cast<Eigen::Index>(entry) / rows) =
          cplx(d_re, d_im) / kGradientCalibration;
    }
    return g;
  };

  OracleGradient out;
  out.gradient = derivative(0);
  out.evaluations = jobs;
  if (spec.richardson) out.richardson_gap = (out.gradient - derivative(1)).cwiseAbs().maxCoeff();

  return out;
}

}  // namespace

const char* to_string(Units units) { return units == Units::Bits ? "bits" : "nats"; }

const char* to_string(Factor factor) {
  switch (factor) {
    case Factor::A:
      return "A";
    case Factor::G:
      return "G";
    case Factor::B:
      return "B";
  }
  return "?";
}

const char* to_string(Cut cut) {
  switch (cut) {
    case Cut::Source:
      return "source";
    case Cut::Mid:
      return "mid";
    case Cut::Full:
      return "full";
  }
  return "?";
}

MutualInformationValue mutual_information(const CMatrix& M, const InputDistribution& dist,
                                          const EngineSpec& spec) {
  MutualInformationValue v;
  if (dist.is_gaussian() && spec.method == Method::Quadrature) {
    if (static_cast<std::size_t>(M.cols()) != dist.dimension())
      throw DimensionMismatch("system matrix does not match the input dimension");
    v.nats = gaussian_mutual_information(M);
    v.method = Method::Quadrature;
    return v;
  }
  const ChannelStatistics s = channel_statistics(M, dist, spec, false);
  v.nats = s.mi;
  v.se = s.mi_se;
  v.method = s.method;
  v.count = s.count;
  return v;
}

const CMatrix& ChannelFactors::get(Factor f) const {
  switch (f) {
    case Factor::A:
      return A;
    case Factor::G:
      return G;
    case Factor::B:
      return B;
  }
  return B;
}

CMatrix& ChannelFactors::get(Factor f) {
  return const_cast<CMatrix&>(static_cast<const ChannelFactors&>(*this).get(f));
}

ChannelFactors ChannelFactors::from(const CompactFactors& compact) {
  return {compact.A, compact.G, compact.B, MatrixForm::Compact};
}

ChannelFactors ChannelFactors::from(const SystemMatrices& sys) {
  return {sys.A, sys.G, sys.B, MatrixForm::Full};
}

CMatrix grad_mi_decoding(const ChannelFactors& f, const CMatrix& E) {
  require_chain(f);
  require_mmse_shape(f.B, E);
  return f.system() * E * f.B.adjoint() * f.G.adjoint();
}

CMatrix grad_mi_topology(const ChannelFactors& f, const CMatrix& E) {
  require_chain(f);
  require_mmse_shape(f.B, E);
  return f.A.adjoint() * f.system() * E * f.B.adjoint();
}

CMatrix grad_mi_precoding(const ChannelFactors& f, const CMatrix& E) {
  require_chain(f);
  require_mmse_shape(f.B, E);
  return f.G.adjoint() * f.A.adjoint() * f.system() * E;
}

CMatrix closed_form_gradient(const ChannelFactors& f, Factor target, const CMatrix& E) {
  switch (target) {
    case Factor::A:
      return grad_mi_decoding(f, E);
    case Factor::G:
      return grad_mi_topology(f, E);
    case Factor::B:
      return grad_mi_precoding(f, E);
  }
  throw InvalidArgument("unknown factor");
}

CMatrix grad_mi_cut(Cut cut, Factor which, const CMatrix& B, const CMatrix& G,
                    const CMatrix& E_cut) {
  require_mmse_shape(B, E_cut);
  switch (cut) {
    case Cut::Source:
      if (which != Factor::B)
        throw InvalidArgument("the source cut only has a precoding gradient");
      return B * E_cut;
    case Cut::Mid:
      if (G.cols() != B.rows()) throw DimensionMismatch("G and B do not chain");
      if (which == Factor::B) return G.adjoint() * G * B * E_cut;
      if (which == Factor::G) return G * B * E_cut * B.adjoint();
      throw InvalidArgument("the mid cut has no decoding matrix");
    case Cut::Full:
      throw InvalidArgument("use closed_form_gradient for the full network");
  }
  throw InvalidArgument("unknown cut");
}

CMatrix cut_channel(Cut cut, const ChannelFactors& f) {
  switch (cut) {
    case Cut::Source:
      return f.B;
    case Cut::Mid:
      return f.G * f.B;
    case Cut::Full:
      return f.system();
  }
  throw InvalidArgument("unknown cut");
}

namespace {

InformationOf information_for(Cut cut, const ChannelFactors& f, const InputDistribution& dist,
                              Factor target, const OracleSpec& spec) {
  if (cut == Cut::Source && target != Factor::B)
    throw InvalidArgument("the source cut only depends on B");
  if (cut == Cut::Mid && target == Factor::A)
    throw InvalidArgument("the mid cut does not depend on A");
  return [cut, f, &dist, target, engine = spec.engine](const CMatrix& X, std::uint64_t seed) {
    ChannelFactors moved = f;
    moved.get(target) = X;
    EngineSpec e = engine;
    e.seed = seed;
    e.workers = 1;
    return mutual_information(cut_channel(cut, moved), dist, e).nats;
  };
}

}  // namespace

OracleGradient grad_oracle(const ChannelFactors& f, const InputDistribution& dist, Factor target,
                           const OracleSpec& spec) {
  return grad_oracle_cut(Cut::Full, f, dist, target, spec);
}

OracleGradient grad_oracle_cut(Cut cut, const ChannelFactors& f, const InputDistribution& dist,
                               Factor target, const OracleSpec& spec) {
  require_chain(f);
  const CMatrix& X = f.get(target);
  if (!X.allFinite()) throw InvalidArgument("target matrix has non-finite entries");
  const InformationOf information = information_for(cut, f, dist, target, spec);
  OracleGradient out = finite_difference(X, information, spec);

  if (spec.engine.method == Method::MonteCarlo && !spec.common_random_numbers) {
    // Independent seeds: the central difference inherits sqrt(2) SE / (2h).
    EngineSpec probe = spec.engine;
    probe.workers = 1;
    const double se = mutual_information(cut_channel(cut, f), dist, probe).se;
    const double fd_noise = std::sqrt(2.0) * se / (2.0 * spec.step) / kGradientCalibration;
    const double scale = out.gradient.cwiseAbs().maxCoeff();
    if (fd_noise > 1e-2 * std::max(scale, 1e-12))
      throw StepTooSmall("Monte-Carlo noise " + std::to_string(fd_noise) +
                         " exceeds 1% of the gradient scale at step " +
                         std::to_string(spec.step) + "; enable common random numbers");
  }
  return out;
}

CMatrix gaussian_logdet_gradient(const ChannelFactors& f, Factor target) {
  require_chain(f);
  const CMatrix M = f.system();
  const CMatrix cov = CMatrix::Identity(M.rows(), M.rows()) + M * M.adjoint();
  const CMatrix grad_m = cov.llt().solve(M);
  switch (target) {
    case Factor::A:
      return grad_m * (f.G * f.B).adjoint();
    case Factor::G:
      return f.A.adjoint() * grad_m * f.B.adjoint();
    case Factor::B:
      return (f.A * f.G).adjoint() * grad_m;
  }
  throw InvalidArgument("unknown factor");
}

RMatrix GradientComparison::abs_error() const {
  if (closed_form.rows() != oracle.rows() || closed_form.cols() != oracle.cols())
    throw DimensionMismatch("closed form and oracle differ in shape");
  return (closed_form - oracle).cwiseAbs();
}

RMatrix GradientComparison::rel_error() const {
  const RMatrix denom = oracle.cwiseAbs().cwiseMax(kRelativeFloor);
  return abs_error().cwiseQuotient(denom);
}

double GradientComparison::max_abs_error() const {
  return closed_form.size() == 0 ? 0.0 : abs_error().maxCoeff();
}

double GradientComparison::max_rel_error() const {
  return closed_form.size() == 0 ? 0.0 : rel_error().maxCoeff();
}

std::pair<Eigen::Index, Eigen::Index> GradientComparison::worst_entry() const {
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  if (closed_form.size() > 0) rel_error().maxCoeff(&r, &c);
  return {r, c};
}

bool GradientComparison::pass() const {
  return closed_form.allFinite() && oracle.allFinite() && max_rel_error() <= rel_tol;
}

bool GradientReport::pass() const {
  return std::all_of(targets.begin(), targets.end(),
                     [](const auto& t) { return t.second.pass(); });
}

GradientReport verify_gradients(const ChannelFactors& f, const InputDistribution& dist,
                                const VerifySpec& spec) {
  require_chain(f);
  GradientReport report;
  const CMatrix M = f.system();
  const ChannelStatistics stats = channel_statistics(M, dist, spec.oracle.engine, true);
  report.mi.nats = stats.mi;
  report.mi.se = stats.mi_se;
  report.mi.method = stats.method;
  report.mi.count = stats.count;
  report.mmse.E = stats.mmse;
  report.mmse.method = stats.method;
  report.mmse.count = stats.count;
  report.mmse.se_re = stats.mmse_se_re;
  report.mmse.se_im = stats.mmse_se_im;

  for (Factor target : spec.targets) {
    GradientComparison cmp;
    cmp.label = to_string(target);
    cmp.rel_tol = spec.rel_tol;
    cmp.closed_form = closed_form_gradient(f, target, report.mmse.E);
    const OracleGradient oracle = grad_oracle(f, dist, target, spec.oracle);
    cmp.oracle = oracle.gradient;
    cmp.richardson_gap = oracle.richardson_gap;
    report.targets.emplace_back(target, std::move(cmp));
  }
  return report;
}

}  // namespace netcode
