// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "netcode/errors.hpp"
#include "netcode/runner.hpp"

int main(int argc, char** argv) {
  using namespace netcode;

  CLI::App app{"Information-gradient verification for linear network codes"};
  std::string command_name;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples, nodes, workers;
  std::optional<std::string> method, units, out;
  std::optional<double> tolerance;

  app.add_option("command", command_name,
                 "verify | gradients | cuts | example1 | optimize-precoder")
      ->required()
      ->check(CLI::IsMember({"verify", "gradients", "cuts", "example1", "optimize-precoder"}));
  app.add_option("--config", config_path, "configuration file")->required();
  app.add_option("--seed", seed, "engine seed; also redraws random coefficients");
  app.add_option("--samples", samples, "Monte-Carlo sample count");
  app.add_option("--nodes", nodes, "quadrature nodes per real dimension");
  app.add_option("--method", method, "density engine")->check(CLI::IsMember({"mc", "quadrature"}));
  app.add_option("--units", units, "report units")->check(CLI::IsMember({"bits", "nats"}));
  app.add_option("--out", out, "output directory");
  app.add_option("--tolerance", tolerance, "relative gradient tolerance");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  Overrides o;
  o.seed = seed;
  o.samples = samples;
  o.nodes = nodes;
  o.workers = workers;
  o.out = out;
  o.tolerance = tolerance;
  if (method) o.method = *method == "mc" ? Method::MonteCarlo : Method::Quadrature;
  if (units) o.units = *units == "bits" ? Units::Bits : Units::Nats;

  RunConfig cfg;
  std::string text;
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ValidationError("--config", "cannot open '" + config_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
    cfg = parse_config(text);
    apply(o, cfg);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const auto start = std::chrono::steady_clock::now();
  Report report;
  try {
    report = run(cfg, *command_from_string(command_name));
  } catch (const Error& e) {
    std::cerr << "computation failed: " << e.what() << '\n';
    return kExitCompute;
  }
  report.config_digest = config_digest(text, o);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    write_outputs(report, cfg.output_dir, seconds);
  } catch (const std::exception& e) {
    std::cerr << "cannot write outputs: " << e.what() << '\n';
    return kExitCompute;
  }
  std::cout << format_text(report);
  return report.pass() ? kExitPass : kExitCheckFailed;
}
