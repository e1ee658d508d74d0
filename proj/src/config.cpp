// SPDX-License-Identifier: Apache-2.0
#include "netcode/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "netcode/errors.hpp"
#include "netcode/philox.hpp"

namespace netcode {

namespace {

void check_keys(const YAML::Node& node, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ValidationError(path, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ValidationError(path.empty() ? key : path + "." + key, "unknown key");
  }
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ValidationError(path, "expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError(path, "cannot convert '" + node.Scalar() + "'");
  }
}

template <typename T>
T optional(const YAML::Node& parent, const std::string& path, const std::string& key,
           T fallback) {
  const auto node = parent[key];
  if (!node) return fallback;
  return scalar<T>(node, join(path, key));
}

YAML::Node required(const YAML::Node& parent, const std::string& path, const std::string& key) {
  const auto node = parent[key];
  if (!node) throw ValidationError(join(path, key), "missing");
  return node;
}

std::vector<std::string> string_list(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw ValidationError(path, "expected a list");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < node.size(); ++i)
    out.push_back(scalar<std::string>(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

cplx complex_value(const YAML::Node& node, const std::string& path) {
  if (node.IsScalar()) return {scalar<double>(node, path), 0.0};
  if (node.IsSequence() && node.size() == 2)
    return {scalar<double>(node[0], path + "[0]"), scalar<double>(node[1], path + "[1]")};
  throw ValidationError(path, "expected a number or [re, im]");
}

CVector complex_vector(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw ValidationError(path, "expected a list");
  CVector v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = complex_value(node[i], path + "[" + std::to_string(i) + "]");
  return v;
}

std::size_t positive_index(const YAML::Node& node, const std::string& path, std::size_t limit) {
  const auto k = scalar<long long>(node, path);
  if (k < 1 || static_cast<std::size_t>(k) > limit)
    throw ValidationError(path, "index " + std::to_string(k) + " outside 1.." +
                                    std::to_string(limit));
  return static_cast<std::size_t>(k - 1);
}

const Edge& edge_ref(const NetworkTopology& topo, const YAML::Node& node,
                     const std::string& path) {
  const auto name = scalar<std::string>(node, path);
  const auto idx = topo.find_edge(name);
  if (!idx) throw ValidationError(path, "unknown edge '" + name + "'");
  return topo.edges()[*idx];
}

NetworkTopology parse_topology(const YAML::Node& node) {
  const std::string path = "topology";
  check_keys(node, path, {"vertices", "edges", "sources", "sinks"});
  auto vertices = string_list(required(node, path, "vertices"), "topology.vertices");
  const std::set<std::string> vertex_set(vertices.begin(), vertices.end());
  if (vertex_set.size() != vertices.size())
    throw ValidationError("topology.vertices", "duplicate vertex");

  const auto edges_node = required(node, path, "edges");
  if (!edges_node.IsSequence()) throw ValidationError("topology.edges", "expected a list");
  std::vector<Edge> edges;
  std::set<std::string> names;
  for (std::size_t i = 0; i < edges_node.size(); ++i) {
    const std::string p = "topology.edges[" + std::to_string(i) + "]";
    const auto& e = edges_node[i];
    check_keys(e, p, {"name", "tail", "head"});
    Edge edge{scalar<std::string>(required(e, p, "name"), p + ".name"),
              scalar<std::string>(required(e, p, "tail"), p + ".tail"),
              scalar<std::string>(required(e, p, "head"), p + ".head")};
    if (!names.insert(edge.name).second)
      throw ValidationError(p + ".name", "duplicate edge '" + edge.name + "'");
    if (!vertex_set.count(edge.tail))
      throw ValidationError(p + ".tail", "unknown vertex '" + edge.tail + "'");
    if (!vertex_set.count(edge.head))
      throw ValidationError(p + ".head", "unknown vertex '" + edge.head + "'");
    edges.push_back(edge);
  }
  auto sources = string_list(required(node, path, "sources"), "topology.sources");
  auto sinks = string_list(required(node, path, "sinks"), "topology.sinks");
  for (const auto& s : sources)
    if (!vertex_set.count(s)) throw ValidationError("topology.sources", "unknown vertex '" + s + "'");
  for (const auto& s : sinks)
    if (!vertex_set.count(s)) throw ValidationError("topology.sinks", "unknown vertex '" + s + "'");
  return NetworkTopology(std::move(vertices), std::move(edges), std::move(sources),
                         std::move(sinks));
}

CoefficientDraw parse_draw(const std::string& name, const std::string& path) {
  if (name == "uniform") return CoefficientDraw::Uniform;
  if (name == "normal") return CoefficientDraw::Normal;
  if (name == "complex-normal") return CoefficientDraw::ComplexNormal;
  throw ValidationError(path, "unknown distribution '" + name + "'");
}

void parse_explicit_coefficients(const YAML::Node& node, RunConfig& cfg) {
  const auto& topo = cfg.topology;
  if (const auto list = node["alpha"]) {
    if (!list.IsSequence()) throw ValidationError("coefficients.alpha", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string p = "coefficients.alpha[" + std::to_string(i) + "]";
      check_keys(list[i], p, {"input", "edge", "value"});
      const auto input = positive_index(required(list[i], p, "input"), p + ".input", cfg.inputs);
      const Edge& e = edge_ref(topo, required(list[i], p, "edge"), p + ".edge");
      if (!topo.is_source(e.tail))
        throw ValidationError(p + ".edge", "edge '" + e.name + "' does not leave a source");
      cfg.coefficients.alpha[{input, e.name}] =
          complex_value(required(list[i], p, "value"), p + ".value");
    }
  }
  if (const auto list = node["beta"]) {
    if (!list.IsSequence()) throw ValidationError("coefficients.beta", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string p = "coefficients.beta[" + std::to_string(i) + "]";
      check_keys(list[i], p, {"from", "to", "value"});
      const Edge& from = edge_ref(topo, required(list[i], p, "from"), p + ".from");
      const Edge& to = edge_ref(topo, required(list[i], p, "to"), p + ".to");
      if (from.head != to.tail)
        throw ValidationError(p, "edges '" + from.name + "' and '" + to.name + "' are not adjacent");
      cfg.coefficients.beta[{from.name, to.name}] =
          complex_value(required(list[i], p, "value"), p + ".value");
    }
  }
  if (const auto list = node["gamma"]) {
    if (!list.IsSequence()) throw ValidationError("coefficients.gamma", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string p = "coefficients.gamma[" + std::to_string(i) + "]";
      check_keys(list[i], p, {"output", "edge", "value"});
      const auto output =
          positive_index(required(list[i], p, "output"), p + ".output", cfg.outputs);
      const Edge& e = edge_ref(topo, required(list[i], p, "edge"), p + ".edge");
      if (!topo.is_sink(e.head))
        throw ValidationError(p + ".edge", "edge '" + e.name + "' does not enter a sink");
      cfg.coefficients.gamma[{output, e.name}] =
          complex_value(required(list[i], p, "value"), p + ".value");
    }
  }
}

void parse_coefficients(const YAML::Node& node, RunConfig& cfg) {
  const std::string path = "coefficients";
  check_keys(node, path, {"mode", "seed", "distribution", "alpha", "beta", "gamma"});
  const auto mode = scalar<std::string>(required(node, path, "mode"), "coefficients.mode");
  if (mode == "random") {
    for (const char* key : {"alpha", "beta", "gamma"})
      if (node[key]) throw ValidationError(join(path, key), "not allowed with mode random");
    cfg.random_coefficients = true;
    cfg.coefficient_seed = optional<std::uint64_t>(node, path, "seed", 0);
    cfg.coefficient_draw =
        parse_draw(optional<std::string>(node, path, "distribution", "uniform"),
                   "coefficients.distribution");
    cfg.coefficients = random_coefficients(cfg.topology, cfg.inputs, cfg.outputs,
                                           cfg.coefficient_seed, cfg.coefficient_draw);
  } else if (mode == "explicit") {
    for (const char* key : {"seed", "distribution"})
      if (node[key]) throw ValidationError(join(path, key), "not allowed with mode explicit");
    parse_explicit_coefficients(node, cfg);
  } else {
    throw ValidationError("coefficients.mode", "unknown mode '" + mode + "'");
  }
}

void parse_input(const YAML::Node& node, RunConfig& cfg) {
  const std::string path = "input";
  check_keys(node, path, {"kind", "point", "support", "probabilities"});
  const auto kind = scalar<std::string>(required(node, path, "kind"), "input.kind");
  auto reject = [&](std::initializer_list<const char*> keys) {
    for (const char* key : keys)
      if (node[key]) throw ValidationError(join(path, key), "not allowed for kind " + kind);
  };
  cfg.input_label = kind;
  if (kind == "bpsk") {
    reject({"point", "support", "probabilities"});
    cfg.input = InputDistribution::bpsk(cfg.inputs);
  } else if (kind == "qpsk") {
    reject({"point", "support", "probabilities"});
    cfg.input = InputDistribution::qpsk(cfg.inputs);
  } else if (kind == "gaussian") {
    reject({"point", "support", "probabilities"});
    cfg.input = InputDistribution::gaussian(cfg.inputs);
  } else if (kind == "point") {
    reject({"support", "probabilities"});
    CVector x = complex_vector(required(node, path, "point"), "input.point");
    if (static_cast<std::size_t>(x.size()) != cfg.inputs)
      throw ValidationError("input.point", "length differs from dimensions.inputs");
    cfg.input = InputDistribution::point_mass(std::move(x));
  } else if (kind == "explicit") {
    reject({"point"});
    const auto support_node = required(node, path, "support");
    if (!support_node.IsSequence()) throw ValidationError("input.support", "expected a list");
    std::vector<CVector> support;
    for (std::size_t i = 0; i < support_node.size(); ++i) {
      const std::string p = "input.support[" + std::to_string(i) + "]";
      support.push_back(complex_vector(support_node[i], p));
      if (static_cast<std::size_t>(support.back().size()) != cfg.inputs)
        throw ValidationError(p, "length differs from dimensions.inputs");
    }
    const auto probs_node = required(node, path, "probabilities");
    if (!probs_node.IsSequence() || probs_node.size() != support.size())
      throw ValidationError("input.probabilities", "expected one probability per support point");
    std::vector<double> probs;
    for (std::size_t i = 0; i < probs_node.size(); ++i)
      probs.push_back(
          scalar<double>(probs_node[i], "input.probabilities[" + std::to_string(i) + "]"));
    try {
      cfg.input = InputDistribution::discrete(std::move(support), std::move(probs));
    } catch (const Error& e) {
      throw ValidationError("input.probabilities", e.what());
    }
  } else {
    throw ValidationError("input.kind", "unknown kind '" + kind + "'");
  }
}

void parse_engine(const YAML::Node& node, RunConfig& cfg) {
  const std::string path = "engine";
  check_keys(node, path, {"method", "nodes", "samples", "seed", "workers"});
  const auto method = optional<std::string>(node, path, "method", "quadrature");
  if (method == "quadrature")
    cfg.engine.method = Method::Quadrature;
  else if (method == "mc")
    cfg.engine.method = Method::MonteCarlo;
  else
    throw ValidationError("engine.method", "unknown method '" + method + "'");
  cfg.engine.nodes = optional<std::size_t>(node, path, "nodes", cfg.engine.nodes);
  cfg.engine.samples = optional<std::size_t>(node, path, "samples", cfg.engine.samples);
  cfg.engine.seed = optional<std::uint64_t>(node, path, "seed", cfg.engine.seed);
  cfg.engine.workers = optional<std::size_t>(node, path, "workers", cfg.engine.workers);
  if (cfg.engine.workers == 0) throw ValidationError("engine.workers", "must be at least 1");
}

double positive(const YAML::Node& parent, const std::string& path, const std::string& key,
                double fallback) {
  const double v = optional<double>(parent, path, key, fallback);
  if (!(v > 0.0)) throw ValidationError(join(path, key), "must be positive");
  return v;
}

RunConfig parse_root(const YAML::Node& root) {
  if (!root.IsMap()) throw ValidationError("", "top level must be a mapping");
  check_keys(root, "", {"topology", "dimensions", "coefficients", "input", "engine", "gradient",
                        "tolerances", "example1", "ascent", "output"});
  RunConfig cfg;
  cfg.topology = parse_topology(required(root, "", "topology"));

  const auto dims = required(root, "", "dimensions");
  check_keys(dims, "dimensions", {"inputs", "outputs"});
  cfg.inputs = scalar<std::size_t>(required(dims, "dimensions", "inputs"), "dimensions.inputs");
  cfg.outputs = scalar<std::size_t>(required(dims, "dimensions", "outputs"), "dimensions.outputs");
  if (cfg.inputs == 0) throw ValidationError("dimensions.inputs", "must be at least 1");
  if (cfg.outputs == 0) throw ValidationError("dimensions.outputs", "must be at least 1");

  parse_coefficients(required(root, "", "coefficients"), cfg);
  parse_input(required(root, "", "input"), cfg);
  if (const auto n = root["engine"]) parse_engine(n, cfg);

  if (const auto n = root["gradient"]) {
    check_keys(n, "gradient", {"form", "step", "richardson"});
    const auto form = optional<std::string>(n, "gradient", "form", "compact");
    if (form == "compact")
      cfg.form = MatrixForm::Compact;
    else if (form == "full")
      cfg.form = MatrixForm::Full;
    else
      throw ValidationError("gradient.form", "unknown form '" + form + "'");
    cfg.step = positive(n, "gradient", "step", cfg.step);
    cfg.richardson = optional<bool>(n, "gradient", "richardson", cfg.richardson);
  }
  if (const auto n = root["tolerances"]) {
    check_keys(n, "tolerances", {"gradient_rel", "gradient_rel_mc", "psi11_abs", "score"});
    cfg.gradient_rel = positive(n, "tolerances", "gradient_rel", cfg.gradient_rel);
    cfg.gradient_rel_mc = positive(n, "tolerances", "gradient_rel_mc", cfg.gradient_rel_mc);
    cfg.psi11_abs = positive(n, "tolerances", "psi11_abs", cfg.psi11_abs);
    cfg.score_tol = positive(n, "tolerances", "score", cfg.score_tol);
  }
  if (const auto n = root["example1"]) {
    check_keys(n, "example1", {"draws", "seed"});
    cfg.example1_draws = optional<std::size_t>(n, "example1", "draws", cfg.example1_draws);
    cfg.example1_seed = optional<std::uint64_t>(n, "example1", "seed", cfg.example1_seed);
  }
  if (const auto n = root["ascent"]) {
    check_keys(n, "ascent", {"step", "iterations", "budget"});
    cfg.ascent_step = optional<double>(n, "ascent", "step", cfg.ascent_step);
    if (!(cfg.ascent_step >= 0.0)) throw ValidationError("ascent.step", "must be non-negative");
    cfg.ascent_iterations = optional<std::size_t>(n, "ascent", "iterations", cfg.ascent_iterations);
    cfg.ascent_budget = positive(n, "ascent", "budget", cfg.ascent_budget);
  }
  if (const auto n = root["output"]) {
    check_keys(n, "output", {"dir", "units"});
    cfg.output_dir = optional<std::string>(n, "output", "dir", cfg.output_dir);
    const auto units = optional<std::string>(n, "output", "units", "bits");
    if (units == "bits")
      cfg.units = Units::Bits;
    else if (units == "nats")
      cfg.units = Units::Nats;
    else
      throw ValidationError("output.units", "unknown units '" + units + "'");
  }
  return cfg;
}

}  // namespace

SystemMatrices RunConfig::system() const {
  return build_system_matrices(topology, coefficients, inputs, outputs);
}

ChannelFactors RunConfig::factors() const {
  const SystemMatrices sys = system();
  if (form == MatrixForm::Full) return ChannelFactors::from(sys);
  return ChannelFactors::from(compact_form(sys, topology));
}

CodingCoefficients random_coefficients(const NetworkTopology& topology, std::size_t inputs,
                                       std::size_t outputs, std::uint64_t seed,
                                       CoefficientDraw draw) {
  SampleStream stream(seed, 0);
  auto next = [&]() -> cplx {
    switch (draw) {
      case CoefficientDraw::Uniform:
        return {2.0 * stream.uniform() - 1.0, 0.0};
      case CoefficientDraw::Normal:
        return {stream.normal(), 0.0};
      case CoefficientDraw::ComplexNormal:
        return stream.complex_normal();
    }
    return 0.0;
  };
  CodingCoefficients c;
  const auto& edges = topology.edges();
  for (const auto& e : edges)
    if (topology.is_source(e.tail))
      for (std::size_t i = 0; i < inputs; ++i) c.alpha[{i, e.name}] = next();
  for (const auto& e : edges)
    for (const auto& next_edge : edges)
      if (e.head == next_edge.tail) c.beta[{e.name, next_edge.name}] = next();
  for (const auto& e : edges)
    if (topology.is_sink(e.head))
      for (std::size_t o = 0; o < outputs; ++o) c.gamma[{o, e.name}] = next();
  return c;
}

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line) + 1,
                     static_cast<std::size_t>(e.mark.column) + 1);
  }
  if (root.IsNull()) throw ParseError("empty configuration", 1, 1);
  return parse_root(root);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("--config", "cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace netcode
