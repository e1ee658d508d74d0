// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration. The grammar is YAML with a fixed key set; any key not
// listed below is rejected. Inputs and outputs are numbered from 1.
//
//   topology:
//     vertices: [v1, v2, ...]
//     edges: [{name: e1, tail: v1, head: v2}, ...]
//     sources: [v1]
//     sinks: [v4]
//   dimensions: {inputs: 2, outputs: 2}
//   coefficients:
//     mode: random | explicit
//     seed: 42                      # random only
//     distribution: uniform | normal | complex-normal
//     alpha: [{input: 1, edge: e1, value: 0.5}, ...]        # explicit only
//     beta:  [{from: e1, to: e4, value: [0.1, -0.2]}, ...]  # [re, im] or real
//     gamma: [{output: 1, edge: e4, value: 1.0}, ...]
//   input:
//     kind: bpsk | qpsk | gaussian | point | explicit
//     point: [[re, im], ...]                 # kind: point
//     support: [[[re, im], ...], ...]        # kind: explicit
//     probabilities: [0.5, 0.5]              # kind: explicit
//   engine: {method: quadrature | mc, nodes: 0, samples: 100000, seed: 42, workers: 1}
//   gradient: {form: compact | full, step: 1e-3, richardson: true}
//   tolerances: {gradient_rel: 1e-3, gradient_rel_mc: 1e-2, psi11_abs: 1e-10, score: 1e-8}
//   example1: {draws: 100, seed: 7}
//   ascent: {step: 0.5, iterations: 200, budget: 1.0}
//   output: {dir: out, units: bits | nats}

#include <cstdint>
#include <string>
#include <vector>

#include "netcode/engine.hpp"
#include "netcode/flowmodel.hpp"
#include "netcode/infogradients.hpp"
#include "netcode/netgraph.hpp"

namespace netcode {

enum class CoefficientDraw { Uniform, Normal, ComplexNormal };

struct RunConfig {
  NetworkTopology topology{{}, {}, {}, {}};
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  CodingCoefficients coefficients;
  InputDistribution input = InputDistribution::point_mass(CVector::Zero(1));
  std::string input_label;

  EngineSpec engine;
  MatrixForm form = MatrixForm::Compact;
  double step = 1e-3;
  bool richardson = true;

  double gradient_rel = 1e-3;
  double gradient_rel_mc = 1e-2;
  double psi11_abs = 1e-10;
  double score_tol = 1e-8;

  std::size_t example1_draws = 100;
  std::uint64_t example1_seed = 7;

  double ascent_step = 0.5;
  std::size_t ascent_iterations = 200;
  double ascent_budget = 1.0;

  std::string output_dir = "out";
  Units units = Units::Bits;

  /// Kept so a command-line seed can redraw random coefficients.
  bool random_coefficients = false;
  std::uint64_t coefficient_seed = 0;
  CoefficientDraw coefficient_draw = CoefficientDraw::Uniform;

  SystemMatrices system() const;
  ChannelFactors factors() const;
  /// Relative gradient tolerance for the configured engine.
  double gradient_tolerance() const {
    return engine.method == Method::MonteCarlo ? gradient_rel_mc : gradient_rel;
  }
};

/// Throws ParseError (1-based line and column) for malformed text, including
/// an empty document, and ValidationError naming the offending key otherwise.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// One draw per structurally allowed coefficient, in edge order: alpha for
/// every (source edge, input), beta for every adjacent pair, gamma for every
/// (sink edge, output).
CodingCoefficients random_coefficients(const NetworkTopology& topology, std::size_t inputs,
                                       std::size_t outputs, std::uint64_t seed,
                                       CoefficientDraw draw);

}  // namespace netcode
