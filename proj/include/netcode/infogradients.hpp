// SPDX-License-Identifier: Apache-2.0
#pragma once

// Mutual information of z = A G B x + n and its gradients with respect to
// the decoding (A), topology (G) and precoding (B) matrices.
//
// Gradient convention. For a complex matrix X, grad_X I is the derivative with
// respect to conj(X) (Wirtinger). Along any real perturbation X + t D,
//   dI/dt = kGradientCalibration * Re Tr(D^H grad_X I).
// The constant is re-derived in the test suite from the scalar relation
// dI/dsnr = mmse(snr) and from the Gaussian log-det gradient.

#include <cstddef>
#include <string>
#include <vector>

#include "netcode/engine.hpp"
#include "netcode/estimator.hpp"
#include "netcode/flowmodel.hpp"
#include "netcode/netgraph.hpp"
#include "netcode/types.hpp"

namespace netcode {

inline constexpr double kGradientCalibration = 2.0;
inline constexpr double kLn2 = 0.69314718055994530942;

enum class Units { Nats, Bits };
const char* to_string(Units units);

struct MutualInformationValue {
  double nats = 0.0;
  double se = 0.0;  // nats; zero for quadrature and closed forms
  Method method = Method::Quadrature;
  std::size_t count = 0;

  double bits() const { return nats / kLn2; }
  double in(Units units) const { return units == Units::Bits ? bits() : nats; }
};

MutualInformationValue mutual_information(const CMatrix& M, const InputDistribution& dist,
                                          const EngineSpec& spec);

enum class MatrixForm { Compact, Full };
enum class Factor { A, G, B };
const char* to_string(Factor factor);

/// The three factors of the system matrix, either the compact restriction or
/// the full edge-indexed matrices.
struct ChannelFactors {
  CMatrix A;
  CMatrix G;
  CMatrix B;
  MatrixForm form = MatrixForm::Compact;

  CMatrix system() const { return A * G * B; }
  const CMatrix& get(Factor f) const;
  CMatrix& get(Factor f);

  static ChannelFactors from(const CompactFactors& compact);
  static ChannelFactors from(const SystemMatrices& sys);
};

/// Closed forms. Each throws DimensionMismatch when E does not match B.
CMatrix grad_mi_decoding(const ChannelFactors& f, const CMatrix& E);   // M E B^H G^H
CMatrix grad_mi_topology(const ChannelFactors& f, const CMatrix& E);   // A^H M E B^H
CMatrix grad_mi_precoding(const ChannelFactors& f, const CMatrix& E);  // G^H A^H M E
CMatrix closed_form_gradient(const ChannelFactors& f, Factor target, const CMatrix& E);

/// Network cuts: the source cut observes y = B x + n, the mid cut observes
/// r = G B x + n.
enum class Cut { Source, Mid, Full };
const char* to_string(Cut cut);

/// Source cut: grad_B = B E. Mid cut: grad_B = G^H G B E and
/// grad_G = G B E B^H. The source cut has no G gradient (InvalidArgument).
CMatrix grad_mi_cut(Cut cut, Factor which, const CMatrix& B, const CMatrix& G,
                    const CMatrix& E_cut);

/// Effective channel matrix of a cut: B, G B or A G B.
CMatrix cut_channel(Cut cut, const ChannelFactors& f);

struct OracleSpec {
  EngineSpec engine;
  double step = 1e-3;
  /// Also evaluate at step / 2 and report the difference.
  bool richardson = true;
  /// Reuse the Monte-Carlo seed for the +h and -h evaluations.
  bool common_random_numbers = true;
};

struct OracleGradient {
  CMatrix gradient;
  /// Max entrywise |D(h) - D(h/2)|, zero when the check is disabled.
  double richardson_gap = 0.0;
  std::size_t evaluations = 0;
};

/// Central differences of I over the real and imaginary part of every entry
/// of `target`, combined as (dI/dRe + i dI/dIm) / kGradientCalibration.
/// Throws InvalidArgument for a step outside [1e-5, 1e-2] and StepTooSmall
/// when Monte-Carlo noise without common random numbers swamps the step.
OracleGradient grad_oracle(const ChannelFactors& f, const InputDistribution& dist, Factor target,
                           const OracleSpec& spec);
OracleGradient grad_oracle_cut(Cut cut, const ChannelFactors& f, const InputDistribution& dist,
                               Factor target, const OracleSpec& spec);

/// Analytic gradient of log det(I + M M^H) through M = A G B; an oracle for
/// Gaussian inputs that involves no estimation error matrix.
CMatrix gaussian_logdet_gradient(const ChannelFactors& f, Factor target);

struct GradientComparison {
  std::string label;
  CMatrix closed_form;
  CMatrix oracle;
  double rel_tol = 1e-3;
  double richardson_gap = 0.0;

  /// |closed - oracle| / max(|oracle|, kRelativeFloor), entrywise.
  RMatrix abs_error() const;
  RMatrix rel_error() const;
  double max_abs_error() const;
  double max_rel_error() const;
  /// Location of the largest relative error.
  std::pair<Eigen::Index, Eigen::Index> worst_entry() const;
  bool pass() const;

  static constexpr double kRelativeFloor = 1e-9;
};

struct GradientReport {
  MutualInformationValue mi;
  MmseMatrix mmse;
  std::vector<std::pair<Factor, GradientComparison>> targets;
  double calibration = kGradientCalibration;

  bool pass() const;
};

struct VerifySpec {
  OracleSpec oracle;
  double rel_tol = 1e-3;
  std::vector<Factor> targets{Factor::A, Factor::G, Factor::B};
};

GradientReport verify_gradients(const ChannelFactors& f, const InputDistribution& dist,
                                const VerifySpec& spec);

}  // namespace netcode
