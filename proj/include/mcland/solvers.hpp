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

// First-order solvers for the completion objective: gradient descent with
// Armijo backtracking, minibatch SGD over observed pairs, and perturbed
// gradient descent for leaving strict saddles.

#ifndef MCLAND_SOLVERS_HPP_
#define MCLAND_SOLVERS_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mcland/instance.hpp"
#include "mcland/linalg.hpp"
#include "mcland/objective.hpp"
#include "mcland/rng.hpp"
#include "mcland/spectrum.hpp"

namespace mcland {

enum class Method { kGD, kSGD, kPerturbedGD };
enum class SolveStatus { kGradTolReached, kMaxIters, kLineSearchStalled };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kGD: return "GD";
    case Method::kSGD: return "SGD";
    case Method::kPerturbedGD: return "PerturbedGD";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  if (s == "GD") return Method::kGD;
  if (s == "SGD") return Method::kSGD;
  if (s == "PerturbedGD") return Method::kPerturbedGD;
  return std::nullopt;
}

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kGradTolReached: return "GradTolReached";
    case SolveStatus::kMaxIters: return "MaxIters";
    case SolveStatus::kLineSearchStalled: return "LineSearchStalled";
  }
  return "?";
}

struct ArmijoParams {
  double c1 = 1e-4;
  double backtrack = 0.5;
  // Unset: 1 / ||Hess f(X0)|| estimate.
  std::optional<double> step0;
};

struct SgdParams {
  std::size_t batch = 1;
  // Step size base / (1 + decay * iter). Unset base: see detail::sgd_base.
  std::optional<double> base;
  double decay = 1e-3;
  // Iterations between full objective evaluations recorded in the trace.
  // Unset: one epoch, |Omega| / batch.
  std::optional<std::size_t> trace_every;
};

struct PerturbParams {
  // Unset: 10 * grad_tol for both.
  std::optional<double> radius;
  std::optional<double> trigger_grad_norm;
  int cooldown_iters = 100;
  // A perturbation counts as escaped once f has dropped below its
  // pre-perturbation value by escape_fdrop * (1 + |f|).
  double escape_fdrop = 1e-6;
  int max_perturbations = 1000;
};

struct SolverConfig {
  Method method = Method::kGD;
  int max_iters = 20000;
  // Unset: 1e-8 * (1 + f(X0)).
  std::optional<double> grad_tol;
  ArmijoParams armijo;
  SgdParams sgd;
  PerturbParams perturb;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_iters < 0) throw std::invalid_argument("solver.max_iters must be >= 0");
    if (grad_tol && !(*grad_tol > 0.0)) {
      throw std::invalid_argument("solver.grad_tol must be > 0");
    }
    if (!(armijo.c1 > 0.0 && armijo.c1 < 1.0)) {
      throw std::invalid_argument("solver.armijo.c1 must lie in (0, 1)");
    }
    if (!(armijo.backtrack > 0.0 && armijo.backtrack < 1.0)) {
      throw std::invalid_argument("solver.armijo.backtrack must lie in (0, 1)");
    }
    if (armijo.step0 && !(*armijo.step0 > 0.0)) {
      throw std::invalid_argument("solver.armijo.step0 must be > 0");
    }
    if (sgd.batch < 1) throw std::invalid_argument("solver.sgd.batch must be >= 1");
    if (sgd.base && !(*sgd.base > 0.0)) {
      throw std::invalid_argument("solver.sgd.base must be > 0");
    }
    if (!(sgd.decay >= 0.0)) {
      throw std::invalid_argument("solver.sgd.decay must be >= 0");
    }
    if (perturb.radius && !(*perturb.radius > 0.0)) {
      throw std::invalid_argument("solver.perturb.radius must be > 0");
    }
    if (perturb.trigger_grad_norm && !(*perturb.trigger_grad_norm > 0.0)) {
      throw std::invalid_argument("solver.perturb.trigger_grad_norm must be > 0");
    }
    if (perturb.cooldown_iters < 0) {
      throw std::invalid_argument("solver.perturb.cooldown_iters must be >= 0");
    }
  }
};

struct TraceRecord {
  int iter = 0;
  double f = 0.0;
  double data_term = 0.0;
  double reg_term = 0.0;
  double grad_norm = 0.0;
  // Step length taken from this iterate; 0 on the final record.
  double step = 0.0;
  // Per-entry gradient evaluations spent before this record.
  std::uint64_t cum_entry_grads = 0;
};

struct SolveResult {
  FactorMatrix x_final;
  SolveStatus status = SolveStatus::kMaxIters;
  std::vector<TraceRecord> trace;
  double grad_tol = 0.0;
  // Iterations at which a perturbation was applied (perturbed GD only).
  std::vector<int> perturb_iters;
};

inline constexpr double kMinStep = 1e-16;

// Gaussian entries with variance s^2 / (d r), so E ||X||_F^2 = s^2. With
// observed diagonal s^2 = sum_{(i,i) in Omega} M_ii / p estimates tr M;
// otherwise s^2 = sqrt(||P_Omega(M)||_F^2 / p) estimates ||M||_F.
inline double init_scale_sq(const Observation& obs) {
  const auto& mask = obs.mask;
  const double p = obs.p();
  if (!(p > 0.0) || mask.size() == 0) return 1.0;
  double diag = 0.0;
  bool have_diag = false;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask.pair_row(k) == mask.pair_col(k)) {
      diag += obs.values[k];
      have_diag = true;
    }
  }
  double s2 = have_diag ? diag / p : std::sqrt(obs.fro_norm_sq() / p);
  if (!(s2 > 0.0) || !std::isfinite(s2)) s2 = std::sqrt(obs.fro_norm_sq() / p);
  if (!(s2 > 0.0) || !std::isfinite(s2)) s2 = 1.0;
  return s2;
}

inline FactorMatrix random_init(int d, int r, const Observation& obs,
                                std::uint64_t seed) {
  if (r < 1 || d < 1) throw DimensionError("random_init: need d, r >= 1");
  const double s2 = init_scale_sq(obs);
  Rng rng = make_rng(seed, "init");
  return gaussian_matrix(d, r, std::sqrt(s2 / (static_cast<double>(d) * r)),
                         rng);
}

namespace detail {

inline TraceRecord make_record(int iter, const EvalBreakdown& e, double gn,
                               double step, std::uint64_t cum) {
  return {iter, e.total, e.data_term, e.reg_term, gn, step, cum};
}

inline double initial_step(const FactorMatrix& x, const ObjectiveConfig& cfg,
                           const std::optional<double>& given) {
  if (given) return *given;
  const double h = hessian_norm_estimate(x, cfg);
  return h > 0.0 ? 1.0 / h : 1.0;
}

// 1 / (||H|| + 8 (|Omega| / batch) s^2 / d): the second term bounds the
// curvature of one rescaled minibatch term when rows carry about s^2 / d.
inline double sgd_base(const FactorMatrix& x, const ObjectiveConfig& cfg,
                       std::size_t batch) {
  const double h = hessian_norm_estimate(x, cfg);
  const double per_row = init_scale_sq(cfg.obs()) /
                         static_cast<double>(x.rows());
  const double scaled = static_cast<double>(cfg.mask().size()) /
                        static_cast<double>(batch);
  return 1.0 / (h + 8.0 * scaled * per_row);
}

struct ArmijoOutcome {
  bool accepted = false;
  double step = 0.0;
  FactorMatrix x;
  EvalBreakdown eval;
};

inline ArmijoOutcome armijo_step(const FactorMatrix& x, const FactorMatrix& g,
                                 double f, double trial,
                                 const ObjectiveConfig& cfg,
                                 const ArmijoParams& ap) {
  const double gn2 = g.squaredNorm();
  ArmijoOutcome out;
  for (double t = trial; t >= kMinStep; t *= ap.backtrack) {
    FactorMatrix xn = x - t * g;
    EvalBreakdown en = objective(xn, cfg);
    if (std::isfinite(en.total) && en.total <= f - ap.c1 * t * gn2) {
      out.accepted = true;
      out.step = t;
      out.x = std::move(xn);
      out.eval = en;
      return out;
    }
  }
  return out;
}

// Shared loop for plain and perturbed gradient descent.
inline SolveResult descend(const ObjectiveConfig& cfg, const SolverConfig& sc,
                           const FactorMatrix& x0, bool perturbed) {
  sc.validate();
  SolveResult res;
  FactorMatrix x = x0;
  EvalBreakdown e = objective(x, cfg);
  FactorMatrix g = gradient(x, cfg);
  std::uint64_t cum = cfg.mask().size();
  const double tol = sc.grad_tol.value_or(1e-8 * (1.0 + std::abs(e.total)));
  res.grad_tol = tol;
  double trial = initial_step(x, cfg, sc.armijo.step0);

  const double radius = sc.perturb.radius.value_or(10.0 * tol);
  const double trigger = sc.perturb.trigger_grad_norm.value_or(10.0 * tol);
  Rng rng = make_rng(sc.seed, "perturb");
  bool perturbed_once = false;
  int last_perturb = 0;
  double f_at_perturb = 0.0;

  for (int it = 0;; ++it) {
    const double gn = g.norm();
    bool perturb_now = false;
    if (perturbed) {
      const bool escaped =
          perturbed_once &&
          f_at_perturb - e.total >
              sc.perturb.escape_fdrop * (1.0 + std::abs(f_at_perturb));
      const bool cooled = it - last_perturb >= sc.perturb.cooldown_iters;
      const bool budget =
          static_cast<int>(res.perturb_iters.size()) <
          sc.perturb.max_perturbations;
      if (gn <= tol) {
        if (budget && (!perturbed_once || escaped)) {
          perturb_now = true;
        } else if (!perturbed_once || cooled) {
          res.trace.push_back(make_record(it, e, gn, 0.0, cum));
          res.status = SolveStatus::kGradTolReached;
          break;
        }
      } else if (gn <= trigger && budget &&
                 (!perturbed_once || (escaped && cooled))) {
        perturb_now = true;
      }
    } else if (gn <= tol) {
      res.trace.push_back(make_record(it, e, gn, 0.0, cum));
      res.status = SolveStatus::kGradTolReached;
      break;
    }
    if (it >= sc.max_iters) {
      res.trace.push_back(make_record(it, e, gn, 0.0, cum));
      res.status = SolveStatus::kMaxIters;
      break;
    }
    if (perturb_now) {
      f_at_perturb = e.total;
      perturbed_once = true;
      last_perturb = it;
      res.perturb_iters.push_back(it);
      x += uniform_ball(x.rows(), x.cols(), radius, rng);
      e = objective(x, cfg);
      g = gradient(x, cfg);
      cum += cfg.mask().size();
      continue;
    }
    if (gn == 0.0) {
      // Exact stationary point inside a perturbation window.
      res.trace.push_back(make_record(it, e, gn, 0.0, cum));
      continue;
    }
    ArmijoOutcome step = armijo_step(x, g, e.total, trial, cfg, sc.armijo);
    if (!step.accepted) {
      res.trace.push_back(make_record(it, e, gn, 0.0, cum));
      res.status = SolveStatus::kLineSearchStalled;
      break;
    }
    res.trace.push_back(make_record(it, e, gn, step.step, cum));
    x = std::move(step.x);
    e = step.eval;
    g = gradient(x, cfg);
    cum += cfg.mask().size();
    trial = step.step / sc.armijo.backtrack;
  }
  res.x_final = std::move(x);
  return res;
}

}  // namespace detail

// Armijo backtracking on -grad f; each line search starts from the last
// accepted step enlarged by 1 / backtrack.
inline SolveResult gradient_descent(const ObjectiveConfig& cfg,
                                    const SolverConfig& sc,
                                    const FactorMatrix& x0) {
  return detail::descend(cfg, sc, x0, /*perturbed=*/false);
}

// Gradient descent that adds a uniform Frobenius-ball perturbation whenever
// the gradient is small and the previous perturbation (if any) led to a
// decrease of f. Stops once a perturbation at a small-gradient point fails
// to decrease f within the cooldown window.
inline SolveResult perturbed_gd(const ObjectiveConfig& cfg,
                                const SolverConfig& sc,
                                const FactorMatrix& x0) {
  return detail::descend(cfg, sc, x0, /*perturbed=*/true);
}

// Minibatch SGD: `batch` ordered pairs sampled uniformly with replacement
// per step, regularizer gradient added exactly.
inline SolveResult sgd(const ObjectiveConfig& cfg, const SolverConfig& sc,
                       const FactorMatrix& x0) {
  sc.validate();
  const auto& mask = cfg.mask();
  if (mask.size() == 0) throw std::invalid_argument("sgd: empty mask");
  SolveResult res;
  FactorMatrix x = x0;
  EvalBreakdown e = objective(x, cfg);
  double gn = gradient(x, cfg).norm();
  const double tol = sc.grad_tol.value_or(1e-8 * (1.0 + std::abs(e.total)));
  res.grad_tol = tol;
  const double base =
      sc.sgd.base ? *sc.sgd.base : detail::sgd_base(x, cfg, sc.sgd.batch);
  const std::size_t every = sc.sgd.trace_every.value_or(
      std::max<std::size_t>(1, mask.size() / sc.sgd.batch));
  Rng rng = make_rng(sc.seed, "sgd");
  std::uniform_int_distribution<std::size_t> pick(0, mask.size() - 1);
  std::vector<std::size_t> batch(sc.sgd.batch);
  std::uint64_t cum = 0;

  double step = base;
  for (int it = 0;; ++it) {
    const bool checkpoint = it % static_cast<int>(every) == 0;
    if (checkpoint && it > 0) {
      e = objective(x, cfg);
      gn = gradient(x, cfg).norm();
    }
    if (checkpoint && gn <= tol) {
      res.trace.push_back(detail::make_record(it, e, gn, 0.0, cum));
      res.status = SolveStatus::kGradTolReached;
      break;
    }
    if (it >= sc.max_iters) {
      e = objective(x, cfg);
      gn = gradient(x, cfg).norm();
      res.trace.push_back(detail::make_record(it, e, gn, 0.0, cum));
      res.status = SolveStatus::kMaxIters;
      break;
    }
    step = base / (1.0 + sc.sgd.decay * it);
    if (checkpoint) res.trace.push_back(detail::make_record(it, e, gn, step, cum));
    for (auto& k : batch) k = pick(rng);
    FactorMatrix g = stochastic_data_gradient(x, cfg, batch);
    if (cfg.lambda() != 0.0) g += cfg.lambda() * reg_gradient(x, cfg.alpha());
    x -= step * g;
    cum += batch.size();
    if (!x.allFinite()) {
      throw std::runtime_error("sgd: iterate diverged; reduce solver.sgd.base");
    }
  }
  res.x_final = std::move(x);
  return res;
}

inline SolveResult solve(const ObjectiveConfig& cfg, const SolverConfig& sc,
                         const FactorMatrix& x0) {
  switch (sc.method) {
    case Method::kGD: return gradient_descent(cfg, sc, x0);
    case Method::kSGD: return sgd(cfg, sc, x0);
    case Method::kPerturbedGD: return perturbed_gd(cfg, sc, x0);
  }
  throw std::logic_error("solve: unknown method");
}

}  // namespace mcland

#endif  // MCLAND_SOLVERS_HPP_
