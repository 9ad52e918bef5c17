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

// The gen / solve / scan / conc experiments behind the command-line tool.
// Each command is a pure function of its configuration: CSV bodies are
// byte-identical across reruns and thread counts.

#ifndef MCLAND_EXPERIMENT_HPP_
#define MCLAND_EXPERIMENT_HPP_

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mcland/certify.hpp"
#include "mcland/concentration.hpp"
#include "mcland/config.hpp"
#include "mcland/csv.hpp"
#include "mcland/instance.hpp"
#include "mcland/solvers.hpp"

namespace mcland {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUnclean = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInternal = 3;

inline const std::vector<std::string> kTraceColumns = {
    "iter", "f", "data_term", "reg_term", "grad_norm", "step",
    "cum_entry_grads"};
inline const std::vector<std::string> kScanColumns = {
    "start_seed", "status",   "f_final",        "grad_norm",
    "lambda_min", "recovery_fro", "procrustes", "incoherence_ok",
    "sigma_min_ok", "classification"};
inline const std::vector<std::string> kConcentrationColumns = {
    "kind", "d", "r", "p", "nu", "sigma", "trial", "deviation",
    "predicted_scale"};

struct CommandContext {
  std::filesystem::path out_dir = ".";
  int threads = 1;
  bool assert_clean = false;
  std::ostream* log = nullptr;
};

namespace detail {

inline std::ofstream open_output(const CommandContext& ctx,
                                 const std::string& name) {
  std::filesystem::create_directories(ctx.out_dir);
  const auto path = ctx.out_dir / name;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

inline std::string stem(const ExperimentConfig& cfg, const char* fallback) {
  return cfg.output.value_or(fallback);
}

template <typename T>
const T& need(const std::optional<T>& block, const char* name) {
  if (!block) throw ConfigError(name, "required block is missing");
  return *block;
}

inline std::string describe(const CertReport& c) {
  std::string s = "classification=" + std::string(to_string(c.classification)) +
                  " f=" + csv::fmt(c.f) + " grad_norm=" + csv::fmt(c.grad_norm) +
                  " lambda_min=" + csv::fmt(c.lambda_min) +
                  " tau=" + csv::fmt(c.tau_used);
  if (c.recovery_fro) s += " recovery_fro=" + csv::fmt(*c.recovery_fro);
  if (c.recovery_rel) s += " recovery_rel=" + csv::fmt(*c.recovery_rel);
  if (c.procrustes_residual) s += " procrustes=" + csv::fmt(*c.procrustes_residual);
  if (c.incoherence_ok) s += " incoherence_ok=" + csv::fmt(*c.incoherence_ok);
  if (c.sigma_min_ok) s += " sigma_min_ok=" + csv::fmt(*c.sigma_min_ok);
  if (c.rank1_norm_ok) s += " rank1_norm_ok=" + csv::fmt(*c.rank1_norm_ok);
  return s;
}

}  // namespace detail

inline void write_trace_csv(std::ostream& os, const SolveResult& res) {
  csv::Writer w(os);
  w.row(kTraceColumns);
  for (const auto& t : res.trace) {
    w.row({csv::fmt(t.iter), csv::fmt(t.f), csv::fmt(t.data_term),
           csv::fmt(t.reg_term), csv::fmt(t.grad_norm), csv::fmt(t.step),
           csv::fmt(t.cum_entry_grads)});
  }
}

inline void write_scan_csv(std::ostream& os, const ScanSummary& sum) {
  csv::Writer w(os);
  w.row(kScanColumns);
  for (const auto& s : sum.starts) {
    w.row({csv::fmt(s.start_seed),
           s.solver_failed ? std::string("SolverError")
                           : std::string(to_string(s.status)),
           csv::fmt(s.cert.f), csv::fmt(s.cert.grad_norm),
           csv::fmt(s.cert.lambda_min), csv::fmt(s.cert.recovery_fro),
           csv::fmt(s.cert.procrustes_residual),
           csv::fmt(s.cert.incoherence_ok), csv::fmt(s.cert.sigma_min_ok),
           std::string(to_string(s.cert.classification))});
  }
}

inline std::string summary_line(const ScanSummary& sum) {
  std::string s = "n_starts=" + std::to_string(sum.n_starts);
  for (auto c : kAllClassifications) {
    s += " " + std::string(to_string(c)) + "=" + std::to_string(sum.count(c));
  }
  s += " worst_recovery_fro=" + csv::fmt(sum.worst_recovery_fro);
  return s;
}

// Writes the instance record and reports mu, kappa, alpha, lambda, tau.
inline int cmd_gen(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const InstanceSpec& spec = detail::need(cfg.instance, "instance");
  const Instance inst = generate_instance(spec);
  const HyperParams h = resolve_hyper(cfg.hyper, inst.truth, spec.p);
  auto os = detail::open_output(ctx, detail::stem(cfg, "instance") + ".json");
  os << to_json(spec).dump(2) << '\n';
  if (ctx.log) {
    *ctx.log << "mu=" << csv::fmt(inst.truth.mu)
             << " kappa=" << csv::fmt(inst.truth.kappa)
             << " alpha=" << csv::fmt(h.alpha)
             << " lambda=" << csv::fmt(h.lambda) << " tau=" << csv::fmt(h.tau)
             << " observed_pairs=" << inst.obs.mask.size() << '\n';
  }
  return kExitOk;
}

// One solve from random_init; writes the trace and certifies the endpoint.
// A stalled line search is a result, reported through the status field.
inline int cmd_solve(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const InstanceSpec& spec = detail::need(cfg.instance, "instance");
  const SolverConfig& sc = detail::need(cfg.solver, "solver");
  const Instance inst = generate_instance(spec);
  const HyperParams h = resolve_hyper(cfg.hyper, inst.truth, spec.p);
  const ObjectiveConfig ocfg(inst.obs, h);
  const FactorMatrix x0 = random_init(spec.d, spec.r, inst.obs,
                                      derive_seed(sc.seed, "solve.init"));
  const SolveResult res = solve(ocfg, sc, x0);
  {
    auto os = detail::open_output(ctx, detail::stem(cfg, "trace") + ".csv");
    write_trace_csv(os, res);
  }
  const CertReport rep =
      certify_point(res.x_final, ocfg, &inst.truth,
                    resolve_tolerances(cfg.certify, inst.obs, inst.truth, 1e-3));
  if (ctx.log) {
    *ctx.log << "status=" << to_string(res.status)
             << " iterations=" << (res.trace.empty() ? 0 : res.trace.back().iter)
             << ' ' << detail::describe(rep) << '\n';
  }
  return kExitOk;
}

inline int cmd_scan(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const InstanceSpec& spec = detail::need(cfg.instance, "instance");
  const SolverConfig& sc = detail::need(cfg.solver, "solver");
  const ScanBlock& sb = detail::need(cfg.scan, "scan");
  const Instance inst = generate_instance(spec);
  const HyperParams h = resolve_hyper(cfg.hyper, inst.truth, spec.p);
  ScanOptions opts;
  opts.tols = resolve_tolerances(cfg.certify, inst.obs, inst.truth, 1e-2);
  opts.threads = ctx.threads;
  opts.repolish = sb.repolish;
  const ScanSummary sum = landscape_scan(inst.truth, inst.obs, h, sc,
                                         sb.n_starts, sb.base_seed, opts);
  {
    auto os = detail::open_output(ctx, detail::stem(cfg, "scan") + ".csv");
    write_scan_csv(os, sum);
  }
  if (ctx.log) *ctx.log << summary_line(sum) << '\n';
  if (ctx.assert_clean && sum.count(Classification::kSpuriousLocalMin) > 0) {
    return kExitUnclean;
  }
  return kExitOk;
}

struct ConcentrationSweep {
  ConcentrationKind kind;
  std::vector<TrialResult> grid;
  ScalingFit fit;
};

// Grid point g of kind k uses seed derive_seed(seed, "conc.grid", g); the
// kind separates substreams inside run_concentration.
inline std::vector<ConcentrationSweep> run_sweeps(const ConcentrationBlock& cb,
                                                  int threads) {
  std::vector<ConcentrationSweep> out;
  for (auto kind : cb.kinds) {
    ConcentrationSweep sw{kind, {}, {}};
    std::vector<std::pair<double, double>> points;
    for (std::size_t g = 0; g < cb.p_grid.size(); ++g) {
      ConcentrationTrial t{kind,        cb.d,     cb.r,
                           cb.p_grid[g], cb.sigma, cb.trials,
                           derive_seed(cb.seed, "conc.grid", g)};
      sw.grid.push_back(run_concentration(t, threads));
      points.emplace_back(cb.p_grid[g] * cb.d, sw.grid.back().median_normalized);
    }
    sw.fit = fit_scaling(points);
    out.push_back(std::move(sw));
  }
  return out;
}

inline void write_concentration_csv(std::ostream& os,
                                    const std::vector<ConcentrationSweep>& sweeps) {
  csv::Writer w(os);
  w.row(kConcentrationColumns);
  for (const auto& sw : sweeps) {
    for (const auto& tr : sw.grid) {
      for (const auto& s : tr.samples) {
        w.row({std::string(to_string(sw.kind)), csv::fmt(tr.config.d),
               csv::fmt(tr.config.r), csv::fmt(tr.config.p), csv::fmt(s.nu),
               csv::fmt(tr.config.sigma), csv::fmt(s.trial),
               csv::fmt(s.deviation), csv::fmt(s.predicted_scale)});
      }
    }
  }
}

inline int cmd_conc(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const ConcentrationBlock& cb = detail::need(cfg.concentration, "concentration");
  const auto sweeps = run_sweeps(cb, ctx.threads);
  {
    auto os = detail::open_output(ctx, detail::stem(cfg, "concentration") + ".csv");
    write_concentration_csv(os, sweeps);
  }
  if (ctx.log) {
    for (const auto& sw : sweeps) {
      *ctx.log << "kind=" << to_string(sw.kind)
               << " fit=" << to_string(sw.fit.status);
      if (sw.fit.status == FitStatus::kOk) {
        *ctx.log << " slope=" << csv::fmt(sw.fit.slope)
                 << " r2=" << csv::fmt(sw.fit.r2);
      } else {
        *ctx.log << " warning: no slope reported";
      }
      *ctx.log << '\n';
    }
  }
  return kExitOk;
}

}  // namespace mcland

#endif  // MCLAND_EXPERIMENT_HPP_
