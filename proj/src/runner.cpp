// SPDX-License-Identifier: Apache-2.0
#include "netcode/runner.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "netcode/errors.hpp"
#include "netcode/estimator.hpp"
#include "netcode/flowmodel.hpp"
#include "netcode/infogradients.hpp"
#include "netcode/scenarios.hpp"

namespace netcode {

namespace {

constexpr std::array<double, 3> kAnchorSnr = {0.25, 1.0, 4.0};
constexpr std::size_t kScoreDraws = 100;

std::string number(double v) {
  if (v == 0.0) v = 0.0;  // no "-0" in goldens
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Verdict verdict(bool ok) { return ok ? Verdict::Pass : Verdict::Fail; }

void add_matrix_rows(Report& report, const std::string& suite, const std::string& check_id,
                     const std::string& target, const GradientComparison& cmp) {
  const bool have_oracle = cmp.oracle.size() > 0;
  const RMatrix abs_err = have_oracle ? cmp.abs_error() : RMatrix();
  const RMatrix rel_err = have_oracle ? cmp.rel_error() : RMatrix();
  for (Eigen::Index i = 0; i < cmp.closed_form.rows(); ++i) {
    for (Eigen::Index j = 0; j < cmp.closed_form.cols(); ++j) {
      CheckRow row;
      row.suite = suite;
      row.check_id = check_id;
      row.target = target;
      row.row = static_cast<std::size_t>(i);
      row.col = static_cast<std::size_t>(j);
      row.closed_form = cmp.closed_form(i, j);
      if (have_oracle) {
        row.oracle = cmp.oracle(i, j);
        row.abs_err = abs_err(i, j);
        row.rel_err = rel_err(i, j);
        row.verdict = verdict(std::isfinite(row.closed_form.real()) &&
                              std::isfinite(row.closed_form.imag()) &&
                              rel_err(i, j) <= cmp.rel_tol);
      } else {
        row.verdict = verdict(std::isfinite(std::abs(row.closed_form)));
      }
      report.rows.push_back(row);
    }
  }
}

void add_scalar(Report& report, const std::string& suite, const std::string& check_id,
                const std::string& target, double value, std::optional<double> oracle,
                Verdict v) {
  CheckRow row;
  row.suite = suite;
  row.check_id = check_id;
  row.target = target;
  row.closed_form = value;
  if (oracle) {
    row.oracle = *oracle;
    row.abs_err = std::abs(value - *oracle);
    row.rel_err = *row.abs_err / std::max(std::abs(*oracle), GradientComparison::kRelativeFloor);
  }
  row.verdict = v;
  report.rows.push_back(row);
}

VerifySpec verify_spec(const RunConfig& cfg) {
  VerifySpec spec;
  spec.oracle.engine = cfg.engine;
  spec.oracle.step = cfg.step;
  spec.oracle.richardson = cfg.richardson;
  spec.rel_tol = cfg.gradient_tolerance();
  return spec;
}

void gradient_suite(Report& report, const std::string& suite, const RunConfig& cfg) {
  const ChannelFactors f = cfg.factors();
  const GradientReport g = verify_gradients(f, cfg.input, verify_spec(cfg));
  report.information.emplace_back("I(x;z)", g.mi.nats);
  for (const auto& [factor, cmp] : g.targets)
    add_matrix_rows(report, suite, std::string("grad_") + to_string(factor), to_string(factor),
                    cmp);
  add_scalar(report, "mmse", "hermitian", "E", (g.mmse.E - g.mmse.E.adjoint()).cwiseAbs().maxCoeff(),
             std::nullopt, verdict(g.mmse.is_hermitian()));
  add_scalar(report, "mmse", "min_eigenvalue", "E", g.mmse.min_eigenvalue(), std::nullopt,
             verdict(g.mmse.min_eigenvalue() >= -1e-10));
}

// dI/dsnr of the scalar BPSK channel against its MMSE.
void anchor_suite(Report& report) {
  EngineSpec quad;
  const auto dist = InputDistribution::bpsk(1);
  const double h = 1e-3;
  for (std::size_t k = 0; k < kAnchorSnr.size(); ++k) {
    const double snr = kAnchorSnr[k];
    auto channel = [](double s) {
      CMatrix M(1, 1);
      M(0, 0) = std::sqrt(s);
      return M;
    };
    const double mmse = channel_statistics(channel(snr), dist, quad, true).mmse(0, 0).real();
    const double up = channel_statistics(channel(snr + h), dist, quad, false).mi;
    const double down = channel_statistics(channel(snr - h), dist, quad, false).mi;
    const double slope = (up - down) / (2.0 * h);
    const double rel = std::abs(slope - mmse) / std::max(mmse, GradientComparison::kRelativeFloor);
    add_scalar(report, "i_mmse", "snr_" + number(snr), "dI/dsnr", slope, mmse,
               verdict(rel <= 1e-3));
  }
}

void score_suite(Report& report, const RunConfig& cfg) {
  const CMatrix M = cfg.system().M;
  const NoiseModel noise{cfg.outputs};
  double worst = 0.0;
  for (std::size_t k = 0; k < kScoreDraws; ++k) {
    const Draw d = draw_sample(cfg.input, noise, cfg.engine.seed, k);
    const CVector z = M * d.x + d.noise;
    worst = std::max(worst, score_identity_residual(M, cfg.input, z));
  }
  add_scalar(report, "score", "max_residual", "M xhat - z - score", worst, std::nullopt,
             verdict(worst < cfg.score_tol));
}

Report run_verify(const RunConfig& cfg) {
  Report report;
  gradient_suite(report, "gradient", cfg);
  score_suite(report, cfg);
  anchor_suite(report);
  return report;
}

Report run_gradients(const RunConfig& cfg) {
  Report report;
  gradient_suite(report, "gradients", cfg);
  return report;
}

Report run_cuts(const RunConfig& cfg) {
  Report report;
  const ChannelFactors f = cfg.factors();
  CutSpec spec;
  spec.engine = cfg.engine;
  spec.oracle = verify_spec(cfg).oracle;
  spec.rel_tol = cfg.gradient_tolerance();
  for (Cut cut : {Cut::Source, Cut::Mid, Cut::Full}) {
    const CutRecord record = cut_analysis(cut, f, cfg.input, spec);
    const std::string name = to_string(cut);
    report.information.emplace_back("I at " + name + " cut", record.mi.nats);
    add_scalar(report, "cuts", name + "_mi", "I", record.mi.nats, std::nullopt,
               verdict(std::isfinite(record.mi.nats)));
    for (const auto& [factor, cmp] : record.gradients)
      add_matrix_rows(report, "cuts", name + "_grad_" + to_string(factor), to_string(factor),
                      cmp);
  }
  return report;
}

Report run_example1(const RunConfig& cfg) {
  Report report;
  const std::array<std::pair<PsiVariant, std::size_t>, 3> counts = {
      {{PsiVariant::Full, 24}, {PsiVariant::NoE3, 16}, {PsiVariant::NoE2E5, 8}}};
  for (const auto& [variant, expected] : counts) {
    const auto n = static_cast<double>(psi11_term_count(variant));
    add_scalar(report, "example1", "term_count", to_string(variant), n,
               static_cast<double>(expected), verdict(n == static_cast<double>(expected)));
  }
  for (PsiVariant variant : {PsiVariant::NoE3, PsiVariant::NoE2E5}) {
    const bool ok = variant_consistent(variant);
    add_scalar(report, "example1", "variant_zeroing", to_string(variant), ok ? 1.0 : 0.0, 1.0,
               verdict(ok));
  }

  const Psi11Report psi = [&] {
    auto r = psi11_matches_matrix_form(cfg.example1_seed, cfg.example1_draws);
    r.tolerance = cfg.psi11_abs;
    return r;
  }();
  for (const auto& m : psi.erratum.printed_only)
    report.notes.push_back("printed psi11 term not in the matrix form: " + m.to_string());
  for (const auto& m : psi.erratum.derived_only)
    report.notes.push_back("matrix-form psi11 term missing from the print: " + m.to_string());

  const bool explained = !psi.erratum.empty();
  for (const auto& d : psi.draws) {
    const std::string id = "draw_" + std::to_string(d.draw);
    Verdict printed_verdict = Verdict::Pass;
    if (d.printed_error() > psi.tolerance)
      printed_verdict =
          explained && d.corrected_error() <= psi.tolerance ? Verdict::Erratum : Verdict::Fail;
    CheckRow printed;
    printed.suite = "example1";
    printed.check_id = id;
    printed.target = "printed";
    printed.closed_form = d.printed;
    printed.oracle = d.matrix;
    printed.abs_err = d.printed_error();
    printed.rel_err = d.printed_error() /
                      std::max(std::abs(d.matrix), GradientComparison::kRelativeFloor);
    printed.verdict = printed_verdict;
    report.rows.push_back(printed);

    CheckRow corrected = printed;
    corrected.target = "corrected";
    corrected.closed_form = d.corrected;
    corrected.abs_err = d.corrected_error();
    corrected.rel_err = d.corrected_error() /
                        std::max(std::abs(d.matrix), GradientComparison::kRelativeFloor);
    corrected.verdict = verdict(d.corrected_error() <= psi.tolerance);
    report.rows.push_back(corrected);
  }
  return report;
}

Report run_ascent(const RunConfig& cfg) {
  Report report;
  AscentSpec spec;
  spec.engine = cfg.engine;
  spec.step = cfg.ascent_step;
  spec.iterations = cfg.ascent_iterations;
  spec.budget = cfg.ascent_budget;
  const AscentTrajectory t = precoder_ascent(cfg.factors(), cfg.input, spec);
  for (std::size_t k = 0; k < t.points.size(); ++k) {
    const bool monotone = k == 0 || t.points[k].mi >= t.points[k - 1].mi - 1e-12;
    add_scalar(report, "ascent", "iter_" + std::to_string(k), "I", t.points[k].mi, std::nullopt,
               verdict(monotone));
  }
  if (t.aborted) {
    add_scalar(report, "ascent", "aborted", "I", t.points.back().mi, std::nullopt, Verdict::Fail);
    report.notes.push_back(t.reason);
  }
  report.information.emplace_back("I(x;z) at start", t.points.front().mi);
  report.information.emplace_back("I(x;z) at end", t.points.back().mi);
  return report;
}

}  // namespace

const char* to_string(Command c) {
  switch (c) {
    case Command::Verify:
      return "verify";
    case Command::Gradients:
      return "gradients";
    case Command::Cuts:
      return "cuts";
    case Command::Example1:
      return "example1";
    case Command::OptimizePrecoder:
      return "optimize-precoder";
  }
  return "?";
}

std::optional<Command> command_from_string(const std::string& name) {
  for (Command c : {Command::Verify, Command::Gradients, Command::Cuts, Command::Example1,
                    Command::OptimizePrecoder})
    if (name == to_string(c)) return c;
  return std::nullopt;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::Erratum:
      return "erratum";
  }
  return "?";
}

bool Report::pass() const { return failures() == 0; }

std::size_t Report::failures() const {
  return static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [](const CheckRow& r) { return r.verdict == Verdict::Fail; }));
}

void apply(const Overrides& o, RunConfig& cfg) {
  if (o.seed) {
    cfg.engine.seed = *o.seed;
    if (cfg.random_coefficients) {
      cfg.coefficient_seed = *o.seed;
      cfg.coefficients = random_coefficients(cfg.topology, cfg.inputs, cfg.outputs, *o.seed,
                                             cfg.coefficient_draw);
    }
  }
  if (o.samples) cfg.engine.samples = *o.samples;
  if (o.nodes) cfg.engine.nodes = *o.nodes;
  if (o.method) cfg.engine.method = *o.method;
  if (o.units) cfg.units = *o.units;
  if (o.out) cfg.output_dir = *o.out;
  if (o.tolerance) {
    cfg.gradient_rel = *o.tolerance;
    cfg.gradient_rel_mc = *o.tolerance;
  }
  if (o.workers) cfg.engine.workers = *o.workers;
}

std::string config_digest(const std::string& text, const Overrides& o) {
  // Worker count and output location do not change results, so they are left
  // out of the digest.
  std::ostringstream canonical;
  canonical << text << '\0';
  if (o.seed) canonical << "seed=" << *o.seed << ';';
  if (o.samples) canonical << "samples=" << *o.samples << ';';
  if (o.nodes) canonical << "nodes=" << *o.nodes << ';';
  if (o.method) canonical << "method=" << to_string(*o.method) << ';';
  if (o.units) canonical << "units=" << to_string(*o.units) << ';';
  if (o.tolerance) canonical << "tolerance=" << number(*o.tolerance) << ';';

  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical.str()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

Report run(const RunConfig& cfg, Command command) {
  Report report;
  switch (command) {
    case Command::Verify:
      report = run_verify(cfg);
      break;
    case Command::Gradients:
      report = run_gradients(cfg);
      break;
    case Command::Cuts:
      report = run_cuts(cfg);
      break;
    case Command::Example1:
      report = run_example1(cfg);
      break;
    case Command::OptimizePrecoder:
      report = run_ascent(cfg);
      break;
  }
  report.command = command;
  report.units = cfg.units;
  return report;
}

std::string format_csv(const Report& report) {
  std::ostringstream out;
  out << "suite,check_id,target,entry_row,entry_col,closed_form_re,closed_form_im,"
         "oracle_re,oracle_im,abs_err,rel_err,pass\n";
  auto opt = [](const std::optional<double>& v) { return v ? number(*v) : std::string(); };
  for (const auto& r : report.rows) {
    out << r.suite << ',' << r.check_id << ',' << r.target << ','
        << (r.row ? std::to_string(*r.row + 1) : "") << ','
        << (r.col ? std::to_string(*r.col + 1) : "") << ',' << number(r.closed_form.real())
        << ',' << number(r.closed_form.imag()) << ','
        << (r.oracle ? number(r.oracle->real()) : "") << ','
        << (r.oracle ? number(r.oracle->imag()) : "") << ',' << opt(r.abs_err) << ','
        << opt(r.rel_err) << ',' << to_string(r.verdict) << '\n';
  }
  return out.str();
}

std::string format_text(const Report& report) {
  std::ostringstream out;
  out << "netcode " << kVersion << '\n';
  out << "command: " << to_string(report.command) << '\n';
  out << "config digest: fnv1a64:" << report.config_digest << '\n';
  out << "units: " << to_string(report.units) << " (CSV values are in nats)\n\n";
  for (const auto& [label, nats] : report.information) {
    const double v = report.units == Units::Bits ? nats / kLn2 : nats;
    out << label << " = " << number(v) << ' ' << to_string(report.units) << '\n';
  }
  if (!report.information.empty()) out << '\n';

  // Per-suite summary in first-appearance order.
  std::vector<std::string> suites;
  for (const auto& r : report.rows)
    if (std::find(suites.begin(), suites.end(), r.suite) == suites.end())
      suites.push_back(r.suite);
  for (const auto& s : suites) {
    std::size_t total = 0, failed = 0, errata = 0;
    double worst = 0.0;
    for (const auto& r : report.rows) {
      if (r.suite != s) continue;
      ++total;
      failed += r.verdict == Verdict::Fail;
      errata += r.verdict == Verdict::Erratum;
      if (r.rel_err && r.verdict != Verdict::Erratum) worst = std::max(worst, *r.rel_err);
    }
    out << "suite " << s << ": " << total << " checks, " << failed << " failed";
    if (errata) out << ", " << errata << " explained by erratum";
    out << ", max rel_err " << number(worst) << '\n';
  }
  for (const auto& r : report.rows) {
    if (r.verdict != Verdict::Fail) continue;
    out << "FAILED " << r.suite << '/' << r.check_id << '/' << r.target;
    if (r.row) out << " (" << *r.row + 1 << ',' << *r.col + 1 << ')';
    if (r.rel_err) out << " rel_err " << number(*r.rel_err);
    out << '\n';
  }
  for (const auto& n : report.notes) out << "note: " << n << '\n';
  out << "\nresult: " << (report.pass() ? "PASS" : "FAIL") << '\n';
  return out.str();
}

void write_outputs(const Report& report, const std::string& dir, double runtime_seconds) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  {
    std::ofstream csv(base / (std::string(to_string(report.command)) + ".csv"), std::ios::binary);
    csv << format_csv(report);
  }
  std::ofstream text(base / "report.txt", std::ios::binary);
  text << format_text(report) << "---\nruntime_seconds: " << number(runtime_seconds) << '\n';
}

}  // namespace netcode
