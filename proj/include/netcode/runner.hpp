// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command orchestration and report emission.
//
// CSV schema, one row per check, values in nats, numbers printed with %.17g:
//   suite,check_id,target,entry_row,entry_col,closed_form_re,closed_form_im,
//   oracle_re,oracle_im,abs_err,rel_err,pass
// entry_row/entry_col are 1-based and empty for scalar checks; oracle and
// error columns are empty when a check has no oracle. pass is one of
// "pass", "fail" or "erratum" (a disagreement fully explained by a located
// erratum in a printed formula).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netcode/config.hpp"
#include "netcode/types.hpp"

namespace netcode {

inline constexpr const char* kVersion = "0.1.0";

enum class Command { Verify, Gradients, Cuts, Example1, OptimizePrecoder };
const char* to_string(Command c);
std::optional<Command> command_from_string(const std::string& name);

enum class Verdict { Pass, Fail, Erratum };
const char* to_string(Verdict v);

struct CheckRow {
  std::string suite;
  std::string check_id;
  std::string target;
  std::optional<std::size_t> row;  // 0-based internally
  std::optional<std::size_t> col;
  cplx closed_form;
  std::optional<cplx> oracle;
  std::optional<double> abs_err;
  std::optional<double> rel_err;
  Verdict verdict = Verdict::Pass;
};

struct Report {
  Command command = Command::Verify;
  std::string config_digest;
  std::vector<CheckRow> rows;
  /// Free-form lines for the text report, such as located errata.
  std::vector<std::string> notes;
  /// Headline quantities in nats, shown in the configured units.
  std::vector<std::pair<std::string, double>> information;
  Units units = Units::Bits;

  bool pass() const;
  std::size_t failures() const;
};

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::uint64_t> seed;  // engine seed, and coefficient seed when random
  std::optional<std::size_t> samples;
  std::optional<std::size_t> nodes;
  std::optional<Method> method;
  std::optional<Units> units;
  std::optional<std::string> out;
  std::optional<double> tolerance;
  std::optional<std::size_t> workers;
};

void apply(const Overrides& o, RunConfig& cfg);

/// 64-bit FNV-1a of the config text followed by the canonical override list.
std::string config_digest(const std::string& text, const Overrides& o);

/// Runs a command. Computational errors propagate.
Report run(const RunConfig& cfg, Command command);

std::string format_csv(const Report& report);
/// Deterministic body; no timings.
std::string format_text(const Report& report);

/// Writes <dir>/<command>.csv and <dir>/report.txt, the latter followed by a
/// runtime trailer.
void write_outputs(const Report& report, const std::string& dir, double runtime_seconds);

enum ExitCode : int { kExitPass = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitCompute = 3 };

}  // namespace netcode
