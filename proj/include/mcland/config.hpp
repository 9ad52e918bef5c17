// Copyright 2026 The mcland Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment configuration: one JSON document with instance, hyper, solver,
// certify, scan and concentration blocks. Unknown keys are rejected so a
// misspelled parameter cannot silently fall back to a default.

#ifndef MCLAND_CONFIG_HPP_
#define MCLAND_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mcland/certify.hpp"
#include "mcland/concentration.hpp"
#include "mcland/instance.hpp"
#include "mcland/solvers.hpp"

namespace mcland {

// Carries the dotted path of the offending field, e.g. "instance.d".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& msg)
      : std::runtime_error(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct HyperOverrides {
  std::optional<double> alpha;
  std::optional<double> lambda;
  std::optional<double> tau;
};

struct ScanBlock {
  int n_starts = 1;
  std::uint64_t base_seed = 0;
  bool repolish = true;
};

struct ConcentrationBlock {
  std::vector<ConcentrationKind> kinds;
  int d = 200;
  int r = 2;
  std::vector<double> p_grid;
  double sigma = 0.0;
  int trials = 50;
  std::uint64_t seed = 0;
};

// Unset global_rel: 1e-3 for single solves, 1e-2 for scans, raised to twice
// the noise floor on noisy instances.
struct CertifyBlock {
  double stationary_rel = 1e-6;
  std::optional<double> tau;
  std::optional<double> global_rel;
};

struct ExperimentConfig {
  std::optional<InstanceSpec> instance;
  HyperOverrides hyper;
  std::optional<SolverConfig> solver;
  CertifyBlock certify;
  std::optional<ScanBlock> scan;
  std::optional<ConcentrationBlock> concentration;
  std::optional<std::string> output;
};

namespace detail {

class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const nlohmann::json* raw(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::optional<double> number(const std::string& key) {
    const auto* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ConfigError(field(key), "expected a number");
    return v->get<double>();
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    const auto* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) {
      throw ConfigError(field(key), "expected an integer");
    }
    return v->get<std::int64_t>();
  }

  std::optional<std::uint64_t> seed(const std::string& key) {
    const auto* v = raw(key);
    if (!v) return std::nullopt;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
      return static_cast<std::uint64_t>(v->get<std::int64_t>());
    }
    throw ConfigError(field(key), "expected a non-negative integer");
  }

  std::optional<bool> boolean(const std::string& key) {
    const auto* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) throw ConfigError(field(key), "expected true/false");
    return v->get<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    const auto* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(field(key), "expected a string");
    return v->get<std::string>();
  }

  template <typename T>
  T require(std::optional<T> v, const std::string& key) const {
    if (!v) throw ConfigError(field(key), "required field is missing");
    return *v;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline int to_int(std::int64_t v, const std::string& field) {
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(field, "out of range");
  return static_cast<int>(v);
}

template <typename Fn>
void check(const std::string& field, Fn&& validate) {
  try {
    validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

inline InstanceSpec parse_instance(const nlohmann::json& j) {
  ObjectReader rd(j, "instance");
  InstanceSpec s;
  s.d = to_int(rd.require(rd.integer("d"), "d"), "instance.d");
  s.r = to_int(rd.require(rd.integer("r"), "r"), "instance.r");
  s.p = rd.require(rd.number("p"), "p");
  s.seed = rd.require(rd.seed("seed"), "seed");
  s.scale = rd.number("scale").value_or(1.0);
  s.sigma = rd.number("sigma").value_or(0.0);
  s.include_diagonal = rd.boolean("include_diagonal").value_or(true);
  rd.finish();
  check("instance", [&] { s.validate(); });
  return s;
}

inline HyperOverrides parse_hyper(const nlohmann::json& j) {
  ObjectReader rd(j, "hyper");
  HyperOverrides h;
  h.alpha = rd.number("alpha");
  h.lambda = rd.number("lambda");
  h.tau = rd.number("tau");
  rd.finish();
  if (h.alpha && !(*h.alpha > 0.0)) throw ConfigError("hyper.alpha", "must be > 0");
  if (h.lambda && !(*h.lambda >= 0.0)) throw ConfigError("hyper.lambda", "must be >= 0");
  if (h.tau && !(*h.tau >= 0.0)) throw ConfigError("hyper.tau", "must be >= 0");
  return h;
}

inline SolverConfig parse_solver(const nlohmann::json& j) {
  ObjectReader rd(j, "solver");
  SolverConfig s;
  if (auto m = rd.string("method")) {
    const auto parsed = parse_method(*m);
    if (!parsed) {
      throw ConfigError("solver.method", "expected GD, SGD or PerturbedGD");
    }
    s.method = *parsed;
  }
  if (auto v = rd.integer("max_iters")) s.max_iters = to_int(*v, "solver.max_iters");
  s.grad_tol = rd.number("grad_tol");
  s.seed = rd.seed("seed").value_or(0);
  if (const auto* a = rd.raw("armijo")) {
    ObjectReader ar(*a, "solver.armijo");
    if (auto v = ar.number("c1")) s.armijo.c1 = *v;
    if (auto v = ar.number("backtrack")) s.armijo.backtrack = *v;
    s.armijo.step0 = ar.number("step0");
    ar.finish();
  }
  if (const auto* g = rd.raw("sgd")) {
    ObjectReader sr(*g, "solver.sgd");
    if (auto v = sr.integer("batch")) {
      if (*v < 1) throw ConfigError("solver.sgd.batch", "must be >= 1");
      s.sgd.batch = static_cast<std::size_t>(*v);
    }
    s.sgd.base = sr.number("base");
    if (auto v = sr.number("decay")) s.sgd.decay = *v;
    if (auto v = sr.integer("trace_every")) {
      if (*v < 1) throw ConfigError("solver.sgd.trace_every", "must be >= 1");
      s.sgd.trace_every = static_cast<std::size_t>(*v);
    }
    sr.finish();
  }
  if (const auto* p = rd.raw("perturb")) {
    ObjectReader pr(*p, "solver.perturb");
    s.perturb.radius = pr.number("radius");
    s.perturb.trigger_grad_norm = pr.number("trigger_grad_norm");
    if (auto v = pr.integer("cooldown_iters")) {
      s.perturb.cooldown_iters = to_int(*v, "solver.perturb.cooldown_iters");
    }
    if (auto v = pr.number("escape_fdrop")) s.perturb.escape_fdrop = *v;
    if (auto v = pr.integer("max_perturbations")) {
      s.perturb.max_perturbations =
          to_int(*v, "solver.perturb.max_perturbations");
    }
    pr.finish();
  }
  rd.finish();
  check("solver", [&] { s.validate(); });
  return s;
}

inline CertifyBlock parse_certify(const nlohmann::json& j) {
  ObjectReader rd(j, "certify");
  CertifyBlock t;
  if (auto v = rd.number("stationary_rel")) t.stationary_rel = *v;
  t.tau = rd.number("tau");
  t.global_rel = rd.number("global_rel");
  rd.finish();
  if (!(t.stationary_rel > 0.0)) {
    throw ConfigError("certify.stationary_rel", "must be > 0");
  }
  if (t.global_rel && !(*t.global_rel > 0.0)) {
    throw ConfigError("certify.global_rel", "must be > 0");
  }
  if (t.tau && !(*t.tau >= 0.0)) throw ConfigError("certify.tau", "must be >= 0");
  return t;
}

inline ScanBlock parse_scan(const nlohmann::json& j) {
  ObjectReader rd(j, "scan");
  ScanBlock s;
  s.n_starts = to_int(rd.require(rd.integer("n_starts"), "n_starts"),
                      "scan.n_starts");
  s.base_seed = rd.require(rd.seed("base_seed"), "base_seed");
  s.repolish = rd.boolean("repolish").value_or(true);
  rd.finish();
  if (s.n_starts < 1) throw ConfigError("scan.n_starts", "must be >= 1");
  return s;
}

inline ConcentrationBlock parse_concentration(const nlohmann::json& j) {
  ObjectReader rd(j, "concentration");
  ConcentrationBlock c;
  const auto* kinds = rd.raw("kinds");
  if (!kinds) throw ConfigError("concentration.kinds", "required field is missing");
  if (!kinds->is_array() || kinds->empty()) {
    throw ConfigError("concentration.kinds", "expected a non-empty array");
  }
  for (const auto& k : *kinds) {
    const auto parsed = k.is_string() ? parse_kind(k.get<std::string>())
                                      : std::nullopt;
    if (!parsed) {
      throw ConfigError("concentration.kinds",
                        "expected InnerProduct, CubicTerm, Spectral, "
                        "NoiseInner or NoiseSpectral");
    }
    c.kinds.push_back(*parsed);
  }
  c.d = to_int(rd.require(rd.integer("d"), "d"), "concentration.d");
  if (auto v = rd.integer("r")) c.r = to_int(*v, "concentration.r");
  const auto* grid = rd.raw("p_grid");
  if (!grid) throw ConfigError("concentration.p_grid", "required field is missing");
  if (!grid->is_array() || grid->empty()) {
    throw ConfigError("concentration.p_grid", "expected a non-empty array");
  }
  for (const auto& p : *grid) {
    if (!p.is_number()) throw ConfigError("concentration.p_grid", "expected numbers");
    c.p_grid.push_back(p.get<double>());
  }
  c.sigma = rd.number("sigma").value_or(0.0);
  if (auto v = rd.integer("trials")) c.trials = to_int(*v, "concentration.trials");
  c.seed = rd.require(rd.seed("seed"), "seed");
  rd.finish();
  for (double p : c.p_grid) {
    ConcentrationTrial t{c.kinds.front(), c.d, c.r, p, c.sigma, c.trials, c.seed};
    check("concentration", [&] { t.validate(); });
  }
  return c;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  detail::ObjectReader rd(j, "");
  ExperimentConfig cfg;
  if (const auto* v = rd.raw("instance")) cfg.instance = detail::parse_instance(*v);
  if (const auto* v = rd.raw("hyper")) cfg.hyper = detail::parse_hyper(*v);
  if (const auto* v = rd.raw("solver")) cfg.solver = detail::parse_solver(*v);
  if (const auto* v = rd.raw("certify")) cfg.certify = detail::parse_certify(*v);
  if (const auto* v = rd.raw("scan")) cfg.scan = detail::parse_scan(*v);
  if (const auto* v = rd.raw("concentration")) {
    cfg.concentration = detail::parse_concentration(*v);
  }
  cfg.output = rd.string("output");
  rd.finish();
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// Explicit overrides win; anything absent comes from the instance.
inline CertTolerances resolve_tolerances(const CertifyBlock& c,
                                         const Observation& obs,
                                         const GroundTruth& gt,
                                         double default_global_rel) {
  CertTolerances t;
  t.stationary_rel = c.stationary_rel;
  t.tau = c.tau;
  t.global_rel = c.global_rel
                     ? *c.global_rel
                     : noise_adjusted_global_rel(obs, gt, default_global_rel);
  return t;
}

inline HyperParams resolve_hyper(const HyperOverrides& o, const GroundTruth& gt,
                                 double p) {
  HyperParams h = p > 0.0 ? default_hyperparams(gt, p) : HyperParams{};
  if (o.alpha) h.alpha = *o.alpha;
  if (o.lambda) {
    h.lambda = *o.lambda;
  } else if (o.alpha && p > 0.0) {
    h.lambda = gt.mu * gt.mu * gt.r() * p / (h.alpha * h.alpha);
  }
  if (o.tau) h.tau = *o.tau;
  return h;
}

}  // namespace mcland

#endif  // MCLAND_CONFIG_HPP_
