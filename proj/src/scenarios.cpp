// SPDX-License-Identifier: Apache-2.0
#include "netcode/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "netcode/errors.hpp"
#include "netcode/philox.hpp"

namespace netcode {

namespace {

constexpr std::array<const char*, kSymbolCount> kSymbolNames = {
    "g41", "g42", "g51", "g52", "b14", "b13", "b35", "b25", "a11", "a12", "a21", "a22"};

// Printed expansions, one group per entry of E, transcribed term by term.
constexpr const char* kPrintedFull =
    "E11: g41^2 b14 a11^2 + g41 g51 b13 b35 a11^2 + g41 g51 b25 a21 a11 + g42^2 b14 a11^2"
    "   + g42 g52 b13 b35 a11^2 + g41 g52 b25 a21 a11;"
    "E12: g41^2 b14 a11 a12 + g41 g51 b13 b35 a11 a12 + g41 g51 b25 a21 a12"
    "   + g42^2 b14 a11 a12 + g42 g52 b13 b35 a11 a12 + g42 g52 b25 a21 a12;"
    "E21: g41^2 b14 a11 a12 + g41 g51 b13 b35 a12 a11 + g41 g51 b25 a22 a11"
    "   + g42^2 b14 a11 a12 + g42 g52 b13 b35 a11 a12 + g42 g52 b25 a22 a11;"
    "E22: g41^2 b14 a12^2 + g41 g51 b13 b35 a12^2 + g41 g51 b25 a22 a12 + g42^2 b14 a12^2"
    "   + g42 g52 b13 b35 a12^2 + g42 g52 b25 a22 a12";

constexpr const char* kPrintedNoE3 =
    "E11: g41^2 b14 a11^2 + g41 g51 b25 a21 a11 + g42^2 b14 a11^2 + g41 g52 b25 a21 a11;"
    "E12: g41^2 b14 a11 a12 + g41 g51 b25 a21 a12 + g42^2 b14 a11 a12 + g42 g52 b25 a21 a12;"
    "E21: g41^2 b14 a11 a12 + g41 g51 b25 a22 a11 + g42^2 b14 a11 a12 + g42 g52 b25 a22 a11;"
    "E22: g41^2 b14 a12^2 + g41 g51 b25 a22 a12 + g42^2 b14 a12^2 + g42 g52 b25 a22 a12";

constexpr const char* kPrintedNoE2E5 =
    "E11: g41^2 b14 a11^2 + g42^2 b14 a11^2;"
    "E12: g41^2 b14 a11 a12 + g42^2 b14 a11 a12;"
    "E21: g41^2 b14 a11 a12 + g42^2 b14 a11 a12;"
    "E22: g41^2 b14 a12^2 + g42^2 b14 a12^2";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

Polynomial parse_expansion(const std::string& text) {
  Polynomial poly;
  for (const auto& group : split(text, ';')) {
    const auto colon = group.find(':');
    const std::string head = trim(group.substr(0, colon));
    if (head.size() != 3 || head[0] != 'E') throw InvalidArgument("bad group '" + head + "'");
    Monomial base;
    base.e_row = static_cast<std::uint8_t>(head[1] - '1');
    base.e_col = static_cast<std::uint8_t>(head[2] - '1');
    for (const auto& term : split(group.substr(colon + 1), '+')) {
      Monomial m = base;
      std::istringstream factors(term);
      std::string factor;
      while (factors >> factor) {
        const auto caret = factor.find('^');
        const auto sym = symbol_from_string(factor.substr(0, caret));
        if (!sym) throw InvalidArgument("unknown symbol '" + factor + "'");
        const int power = caret == std::string::npos ? 1 : std::stoi(factor.substr(caret + 1));
        m.power[static_cast<std::size_t>(*sym)] += static_cast<std::uint8_t>(power);
      }
      poly[m] += 1;
    }
  }
  return poly;
}

// Polynomials without an E factor, used for the symbolic matrix product.
struct Plain {
  std::map<std::array<std::uint8_t, kSymbolCount>, long> terms;
};

Plain symbol(Symbol s) {
  Plain p;
  std::array<std::uint8_t, kSymbolCount> power{};
  power[static_cast<std::size_t>(s)] = 1;
  p.terms[power] = 1;
  return p;
}

Plain operator*(const Plain& a, const Plain& b) {
  Plain out;
  for (const auto& [pa, ca] : a.terms) {
    for (const auto& [pb, cb] : b.terms) {
      std::array<std::uint8_t, kSymbolCount> power{};
      for (std::size_t k = 0; k < kSymbolCount; ++k)
        power[k] = static_cast<std::uint8_t>(pa[k] + pb[k]);
      out.terms[power] += ca * cb;
    }
  }
  return out;
}

Plain operator+(Plain a, const Plain& b) {
  for (const auto& [p, c] : b.terms) a.terms[p] += c;
  return a;
}

using PlainMatrix = std::array<std::array<Plain, 2>, 2>;

PlainMatrix multiply(const PlainMatrix& x, const PlainMatrix& y) {
  PlainMatrix out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
  return out;
}

PlainMatrix transpose(const PlainMatrix& x) {
  PlainMatrix out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out[i][j] = x[j][i];
  return out;
}

double value_of(const SymbolAssignment& values, Symbol s) {
  const auto it = values.find(s);
  if (it == values.end())
    throw MissingCoefficient(std::string("coefficient ") + to_string(s) + " is not assigned");
  return it->second;
}

bool contains_any(const Monomial& m, const std::vector<Symbol>& zeroed) {
  return std::any_of(zeroed.begin(), zeroed.end(),
                     [&](Symbol s) { return m.power[static_cast<std::size_t>(s)] > 0; });
}

}  // namespace

const char* to_string(Symbol s) { return kSymbolNames[static_cast<std::size_t>(s)]; }

std::optional<Symbol> symbol_from_string(const std::string& name) {
  for (std::size_t k = 0; k < kSymbolCount; ++k)
    if (name == kSymbolNames[k]) return static_cast<Symbol>(k);
  return std::nullopt;
}

NetworkTopology relay_topology() {
  return NetworkTopology({"v1", "v2", "v3", "v4"},
                         {{"e1", "v1", "v2"},
                          {"e2", "v1", "v3"},
                          {"e3", "v2", "v3"},
                          {"e4", "v2", "v4"},
                          {"e5", "v3", "v4"}},
                         {"v1"}, {"v4"});
}

CodingCoefficients relay_coefficients(const SymbolAssignment& values) {
  auto v = [&](Symbol s) { return cplx(value_of(values, s), 0.0); };
  CodingCoefficients c;
  c.gamma[{0, "e4"}] = v(Symbol::G41);
  c.gamma[{1, "e4"}] = v(Symbol::G42);
  c.gamma[{0, "e5"}] = v(Symbol::G51);
  c.gamma[{1, "e5"}] = v(Symbol::G52);
  c.beta[{"e1", "e4"}] = v(Symbol::B14);
  c.beta[{"e1", "e3"}] = v(Symbol::B13);
  c.beta[{"e3", "e5"}] = v(Symbol::B35);
  c.beta[{"e2", "e5"}] = v(Symbol::B25);
  c.alpha[{0, "e1"}] = v(Symbol::A11);
  c.alpha[{1, "e1"}] = v(Symbol::A12);
  c.alpha[{0, "e2"}] = v(Symbol::A21);
  c.alpha[{1, "e2"}] = v(Symbol::A22);
  return c;
}

SymbolAssignment uniform_assignment(double value) {
  SymbolAssignment a;
  for (std::size_t k = 0; k < kSymbolCount; ++k) a[static_cast<Symbol>(k)] = value;
  return a;
}

SymbolAssignment random_assignment(std::uint64_t seed, std::uint64_t draw) {
  SampleStream stream(seed, draw);
  SymbolAssignment a;
  for (std::size_t k = 0; k < kSymbolCount; ++k)
    a[static_cast<Symbol>(k)] = 2.0 * stream.uniform() - 1.0;
  return a;
}

std::string Monomial::to_string() const {
  std::ostringstream out;
  out << 'E' << int(e_row) + 1 << int(e_col) + 1;
  for (std::size_t k = 0; k < kSymbolCount; ++k) {
    if (power[k] == 0) continue;
    out << ' ' << kSymbolNames[k];
    if (power[k] > 1) out << '^' << int(power[k]);
  }
  return out.str();
}

const char* to_string(PsiVariant v) {
  switch (v) {
    case PsiVariant::Full:
      return "full";
    case PsiVariant::NoE3:
      return "no-e3";
    case PsiVariant::NoE2E5:
      return "no-e2e5";
  }
  return "?";
}

const Polynomial& printed_psi11(PsiVariant variant) {
  static const Polynomial full = parse_expansion(kPrintedFull);
  static const Polynomial no_e3 = parse_expansion(kPrintedNoE3);
  static const Polynomial no_e2e5 = parse_expansion(kPrintedNoE2E5);
  switch (variant) {
    case PsiVariant::Full:
      return full;
    case PsiVariant::NoE3:
      return no_e3;
    case PsiVariant::NoE2E5:
      return no_e2e5;
  }
  return full;
}

std::size_t psi11_term_count(PsiVariant variant) {
  std::size_t n = 0;
  for (const auto& [m, c] : printed_psi11(variant)) n += static_cast<std::size_t>(c);
  return n;
}

std::vector<Symbol> removed_symbols(PsiVariant variant) {
  switch (variant) {
    case PsiVariant::Full:
      return {};
    case PsiVariant::NoE3:
      return {Symbol::B13, Symbol::B35};
    case PsiVariant::NoE2E5:
      return {Symbol::B25, Symbol::B35, Symbol::G51, Symbol::G52};
  }
  return {};
}

Polynomial zero_symbols(const Polynomial& p, const std::vector<Symbol>& zeroed) {
  Polynomial out;
  for (const auto& [m, c] : p)
    if (!contains_any(m, zeroed)) out.emplace(m, c);
  return out;
}

Polynomial derived_psi11(const std::vector<Symbol>& zeroed) {
  PlainMatrix A{{{symbol(Symbol::G41), symbol(Symbol::G51)},
                 {symbol(Symbol::G42), symbol(Symbol::G52)}}};
  PlainMatrix G{{{symbol(Symbol::B14), Plain{}},
                 {symbol(Symbol::B13) * symbol(Symbol::B35), symbol(Symbol::B25)}}};
  PlainMatrix B{{{symbol(Symbol::A11), symbol(Symbol::A12)},
                 {symbol(Symbol::A21), symbol(Symbol::A22)}}};
  const PlainMatrix left = multiply(multiply(multiply(transpose(A), A), G), B);
  const PlainMatrix right = transpose(B);

  // psi_11 = sum_{l,m} left(0,l) E(l,m) right(m,0)
  Polynomial out;
  for (std::uint8_t l = 0; l < 2; ++l) {
    for (std::uint8_t m = 0; m < 2; ++m) {
      const Plain coeff = left[0][l] * right[m][0];
      for (const auto& [power, c] : coeff.terms) {
        if (c == 0) continue;
        Monomial mono;
        mono.power = power;
        mono.e_row = l;
        mono.e_col = m;
        out[mono] += c;
      }
    }
  }
  return zero_symbols(out, zeroed);
}

cplx evaluate(const Polynomial& p, const SymbolAssignment& values, const CMatrix& E) {
  if (E.rows() != 2 || E.cols() != 2) throw DimensionMismatch("psi_11 needs a 2x2 error matrix");
  cplx sum = 0.0;
  for (const auto& [m, c] : p) {
    double product = static_cast<double>(c);
    for (std::size_t k = 0; k < kSymbolCount; ++k)
      for (int j = 0; j < m.power[k]; ++j) product *= value_of(values, static_cast<Symbol>(k));
    sum += product * E(m.e_row, m.e_col);
  }
  return sum;
}

cplx psi11(PsiVariant variant, const SymbolAssignment& values, const CMatrix& E) {
  return evaluate(printed_psi11(variant), values, E);
}

cplx psi11_matrix_form(const SymbolAssignment& values, const CMatrix& E) {
  const NetworkTopology topology = relay_topology();
  const SystemMatrices sys = build_system_matrices(topology, relay_coefficients(values), 2, 2);
  const CompactFactors c = compact_form(sys, topology);
  const CMatrix grad = c.A.adjoint() * c.A * c.G * c.B * E * c.B.adjoint();
  return grad(0, 0);
}

TermDifference compare_terms(PsiVariant variant) {
  const Polynomial& printed = printed_psi11(variant);
  const Polynomial derived = derived_psi11(removed_symbols(variant));
  TermDifference diff;
  diff.variant = variant;
  for (const auto& [m, c] : printed) {
    const auto it = derived.find(m);
    const long other = it == derived.end() ? 0 : it->second;
    for (long k = other; k < c; ++k) diff.printed_only.push_back(m);
  }
  for (const auto& [m, c] : derived) {
    const auto it = printed.find(m);
    const long other = it == printed.end() ? 0 : it->second;
    for (long k = other; k < c; ++k) diff.derived_only.push_back(m);
  }
  return diff;
}

double Psi11Report::max_printed_error() const {
  double e = 0.0;
  for (const auto& d : draws) e = std::max(e, d.printed_error());
  return e;
}

double Psi11Report::max_corrected_error() const {
  double e = 0.0;
  for (const auto& d : draws) e = std::max(e, d.corrected_error());
  return e;
}

bool Psi11Report::pass() const {
  if (max_printed_error() <= tolerance) return true;
  return !erratum.empty() && max_corrected_error() <= tolerance;
}

Psi11Report psi11_matches_matrix_form(std::uint64_t seed, std::size_t draws,
                                      const std::optional<CMatrix>& fixed_e) {
  Psi11Report report;
  report.erratum = compare_terms(PsiVariant::Full);
  Polynomial printed_only;
  Polynomial derived_only;
  for (const auto& m : report.erratum.printed_only) printed_only[m] += 1;
  for (const auto& m : report.erratum.derived_only) derived_only[m] += 1;

  for (std::size_t k = 0; k < draws; ++k) {
    const SymbolAssignment values = random_assignment(seed, k);
    CMatrix E(2, 2);
    if (fixed_e) {
      E = *fixed_e;
    } else {
      SampleStream stream(seed ^ 0x9E3779B97F4A7C15ull, k);
      for (int i = 0; i < 4; ++i) E(i / 2, i % 2) = 2.0 * stream.uniform() - 1.0;
    }
    Psi11Draw d;
    d.draw = k;
    d.printed = psi11(PsiVariant::Full, values, E);
    d.matrix = psi11_matrix_form(values, E);
    d.corrected = d.printed - evaluate(printed_only, values, E) + evaluate(derived_only, values, E);
    report.draws.push_back(d);
  }
  return report;
}

bool variant_consistent(PsiVariant variant) {
  return zero_symbols(printed_psi11(PsiVariant::Full), removed_symbols(variant)) ==
         printed_psi11(variant);
}

bool CutRecord::pass() const {
  return std::all_of(gradients.begin(), gradients.end(), [](const auto& g) {
    return g.second.oracle.size() == 0 ? g.second.closed_form.allFinite() : g.second.pass();
  });
}

CutRecord cut_analysis(Cut cut, const ChannelFactors& f, const InputDistribution& dist,
                       const CutSpec& spec) {
  CutRecord record;
  record.cut = cut;
  record.channel = cut_channel(cut, f);
  const ChannelStatistics stats = channel_statistics(record.channel, dist, spec.engine, true);
  record.mi.nats = stats.mi;
  record.mi.se = stats.mi_se;
  record.mi.method = stats.method;
  record.mi.count = stats.count;
  record.mmse.E = stats.mmse;
  record.mmse.method = stats.method;
  record.mmse.count = stats.count;
  record.mmse.se_re = stats.mmse_se_re;
  record.mmse.se_im = stats.mmse_se_im;

  std::vector<Factor> targets;
  switch (cut) {
    case Cut::Source:
      targets = {Factor::B};
      break;
    case Cut::Mid:
      targets = {Factor::G, Factor::B};
      break;
    case Cut::Full:
      targets = {Factor::A, Factor::G, Factor::B};
      break;
  }
  OracleSpec oracle = spec.oracle;
  oracle.engine = spec.engine;
  for (Factor target : targets) {
    GradientComparison cmp;
    cmp.label = std::string(to_string(cut)) + ":" + to_string(target);
    cmp.rel_tol = spec.rel_tol;
    cmp.closed_form = cut == Cut::Full ? closed_form_gradient(f, target, record.mmse.E)
                                       : grad_mi_cut(cut, target, f.B, f.G, record.mmse.E);
    if (spec.with_oracle) {
      const OracleGradient o = grad_oracle_cut(cut, f, dist, target, oracle);
      cmp.oracle = o.gradient;
      cmp.richardson_gap = o.richardson_gap;
    }
    record.gradients.emplace_back(target, std::move(cmp));
  }
  return record;
}

AscentTrajectory precoder_ascent(const ChannelFactors& f, const InputDistribution& dist,
                                 const AscentSpec& spec) {
  if (!(spec.step >= 0.0)) throw InvalidArgument("ascent step must be non-negative");
  if (!(spec.budget > 0.0)) throw InvalidArgument("norm budget must be positive");

  auto information = [&](const CMatrix& B) {
    ChannelFactors moved = f;
    moved.B = B;
    return mutual_information(moved.system(), dist, spec.engine).nats;
  };
  auto project = [&](const CMatrix& B) -> CMatrix {
    const double norm = B.norm();
    if (norm > 0.0) return B * (spec.budget / norm);
    CMatrix seed = CMatrix::Identity(B.rows(), B.cols());
    return seed * (spec.budget / seed.norm());
  };

  AscentTrajectory out;
  ChannelFactors current = f;
  double mi = information(current.B);
  out.points.push_back({current.B, mi});
  for (std::size_t it = 0; it < spec.iterations; ++it) {
    if (spec.step == 0.0) {
      out.points.push_back(out.points.back());
      continue;
    }
    CMatrix grad;
    if (dist.is_gaussian() && spec.engine.method == Method::Quadrature) {
      grad = grad_mi_precoding(current, gaussian_mmse(current.system()));
    } else {
      grad = grad_mi_precoding(current,
                               channel_statistics(current.system(), dist, spec.engine, true).mmse);
    }
    if (!grad.allFinite()) {
      out.aborted = true;
      out.reason = "non-finite gradient at iteration " + std::to_string(it);
      return out;
    }
    double step = spec.step;
    CMatrix candidate = project(current.B + step * grad);
    double candidate_mi = information(candidate);
    for (std::size_t h = 0; h < spec.max_halvings && candidate_mi < mi; ++h) {
      step *= 0.5;
      candidate = project(current.B + step * grad);
      candidate_mi = information(candidate);
    }
    if (candidate_mi < mi) {
      candidate = current.B;
      candidate_mi = mi;
    }
    current.B = candidate;
    mi = candidate_mi;
    out.points.push_back({current.B, mi});
  }
  return out;
}

}  // namespace netcode
