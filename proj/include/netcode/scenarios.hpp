// SPDX-License-Identifier: Apache-2.0
#pragma once

// Worked scenarios on the four-node, five-edge example network:
//
//   v1 -e1-> v2, v1 -e2-> v3, v2 -e3-> v3, v2 -e4-> v4, v3 -e5-> v4
//
// with source v1 (two inputs) and sink v4 (two outputs). Its compact factors
// are
//   A_c = [g41 g51; g42 g52]           (columns e4, e5)
//   G_c = [b14 0; b13*b35 b25]         (rows e4, e5; columns e1, e2)
//   B_c = [a11 a12; a21 a22]           (rows e1, e2; columns inputs 1, 2)
// where gXo is the decoding coefficient of edge eX into output o and bXY the
// coding coefficient from eX into eY. The precoding symbol aRC sits at row R,
// column C of B_c, so it is the coefficient of input C on the R-th source edge.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netcode/engine.hpp"
#include "netcode/flowmodel.hpp"
#include "netcode/infogradients.hpp"
#include "netcode/netgraph.hpp"
#include "netcode/types.hpp"

namespace netcode {

enum class Symbol : std::uint8_t { G41, G42, G51, G52, B14, B13, B35, B25, A11, A12, A21, A22 };
inline constexpr std::size_t kSymbolCount = 12;

const char* to_string(Symbol s);
std::optional<Symbol> symbol_from_string(const std::string& name);

using SymbolAssignment = std::map<Symbol, double>;

NetworkTopology relay_topology();
/// Throws MissingCoefficient if a symbol is unassigned.
CodingCoefficients relay_coefficients(const SymbolAssignment& values);
/// Every symbol set to `value`.
SymbolAssignment uniform_assignment(double value);
/// Independent uniform draws on [-1, 1] from the keyed stream (seed, draw).
SymbolAssignment random_assignment(std::uint64_t seed, std::uint64_t draw);

/// One monomial of psi_11: a product of symbols times a single entry of E.
struct Monomial {
  std::array<std::uint8_t, kSymbolCount> power{};
  std::uint8_t e_row = 0;
  std::uint8_t e_col = 0;

  auto operator<=>(const Monomial&) const = default;
  std::string to_string() const;
};

/// Polynomial with integer coefficients; terms are kept in canonical order.
using Polynomial = std::map<Monomial, long>;

enum class PsiVariant { Full, NoE3, NoE2E5 };
const char* to_string(PsiVariant v);

/// Term list of psi_11 exactly as printed for each variant.
const Polynomial& printed_psi11(PsiVariant variant);
/// Monomial count per variant (24, 16, 8).
std::size_t psi11_term_count(PsiVariant variant);

/// Symbols that vanish when the variant's edges are lost.
std::vector<Symbol> removed_symbols(PsiVariant variant);

/// Drops every term containing one of `zeroed`.
Polynomial zero_symbols(const Polynomial& p, const std::vector<Symbol>& zeroed);

/// Entry (1,1) of A_c^T A_c G_c B_c E B_c^T expanded symbolically, with
/// `zeroed` symbols set to zero.
Polynomial derived_psi11(const std::vector<Symbol>& zeroed = {});

/// Evaluates a polynomial; E is 2x2. Throws MissingCoefficient.
cplx evaluate(const Polynomial& p, const SymbolAssignment& values, const CMatrix& E);

/// Printed psi_11 of the chosen variant.
cplx psi11(PsiVariant variant, const SymbolAssignment& values, const CMatrix& E);

/// Entry (1,1) of A_c^H A_c G_c B_c E B_c^H built through the network model.
cplx psi11_matrix_form(const SymbolAssignment& values, const CMatrix& E);

/// Terms present on only one side of a printed-versus-derived comparison.
struct TermDifference {
  PsiVariant variant = PsiVariant::Full;
  std::vector<Monomial> printed_only;
  std::vector<Monomial> derived_only;

  bool empty() const { return printed_only.empty() && derived_only.empty(); }
};

TermDifference compare_terms(PsiVariant variant);

struct Psi11Draw {
  std::uint64_t draw = 0;
  cplx printed;
  cplx matrix;
  /// Printed polynomial with the located erratum terms replaced.
  cplx corrected;

  double printed_error() const { return std::abs(printed - matrix); }
  double corrected_error() const { return std::abs(corrected - matrix); }
};

struct Psi11Report {
  TermDifference erratum;
  std::vector<Psi11Draw> draws;
  double tolerance = 1e-10;

  double max_printed_error() const;
  double max_corrected_error() const;
  /// Printed form agrees outright, or every disagreement is accounted for by
  /// the located erratum terms and the corrected form agrees.
  bool pass() const;
};

/// Real coefficient draws; E is drawn as a generic real 2x2 matrix per draw
/// unless `fixed_e` is given.
Psi11Report psi11_matches_matrix_form(std::uint64_t seed, std::size_t draws,
                                      const std::optional<CMatrix>& fixed_e = std::nullopt);

/// Printed variant equals the full printed expansion with the removed edges'
/// coefficients zeroed, as a set of monomials.
bool variant_consistent(PsiVariant variant);

struct CutSpec {
  EngineSpec engine;
  bool with_oracle = true;
  OracleSpec oracle;
  double rel_tol = 1e-3;
};

struct CutRecord {
  Cut cut = Cut::Full;
  CMatrix channel;
  MutualInformationValue mi;
  MmseMatrix mmse;
  /// Closed forms paired with finite-difference oracles (oracle empty when
  /// disabled).
  std::vector<std::pair<Factor, GradientComparison>> gradients;

  bool pass() const;
};

/// Applicable gradients: B for the source cut; B and G for the mid cut; A, G
/// and B for the full network.
CutRecord cut_analysis(Cut cut, const ChannelFactors& f, const InputDistribution& dist,
                       const CutSpec& spec);

struct AscentSpec {
  EngineSpec engine;
  double step = 0.5;
  std::size_t iterations = 200;
  double budget = 1.0;
  /// Halve the step up to this many times when I would decrease.
  std::size_t max_halvings = 30;
};

struct AscentPoint {
  CMatrix B;
  double mi = 0.0;  // nats
};

struct AscentTrajectory {
  std::vector<AscentPoint> points;
  bool aborted = false;
  std::string reason;
};

/// Gradient ascent on B with the precoding gradient, rescaling B to Frobenius
/// norm `budget` after every step. A zero iterate is replaced by the scaled
/// leading identity block.
AscentTrajectory precoder_ascent(const ChannelFactors& f, const InputDistribution& dist,
                                 const AscentSpec& spec);

}  // namespace netcode
