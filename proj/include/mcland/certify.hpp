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

// Certification of candidate points against first- and (relaxed)
// second-order optimality, recovery metrics, the row-norm and singular-value
// certificates, and the multi-start landscape scan.

#ifndef MCLAND_CERTIFY_HPP_
#define MCLAND_CERTIFY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "mcland/instance.hpp"
#include "mcland/linalg.hpp"
#include "mcland/objective.hpp"
#include "mcland/parallel.hpp"
#include "mcland/rng.hpp"
#include "mcland/solvers.hpp"
#include "mcland/spectrum.hpp"

namespace mcland {

enum class Classification {
  kGlobalMin,
  kStrictSaddle,
  kSpuriousLocalMin,
  kNotStationary,
  // Passes both optimality tests but no ground truth was available.
  kSecondOrderPoint,
};

inline constexpr std::array<Classification, 5> kAllClassifications = {
    Classification::kGlobalMin, Classification::kStrictSaddle,
    Classification::kSpuriousLocalMin, Classification::kNotStationary,
    Classification::kSecondOrderPoint};

inline std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::kGlobalMin: return "GlobalMin";
    case Classification::kStrictSaddle: return "StrictSaddle";
    case Classification::kSpuriousLocalMin: return "SpuriousLocalMin";
    case Classification::kNotStationary: return "NotStationary";
    case Classification::kSecondOrderPoint: return "SecondOrderPoint";
  }
  return "?";
}

struct RecoveryError {
  double gram_fro = 0.0;
  double procrustes_residual = 0.0;
};

// ||X X^T - Z Z^T||_F without forming d x d products: with [X Z] = Q R,
// X X^T - Z Z^T = Q (R_X R_X^T - R_Z R_Z^T) Q^T and Q has orthonormal
// columns, so the norm is that of a 2r x 2r matrix.
inline double gram_distance(const Eigen::Ref<const FactorMatrix>& x,
                            const Eigen::Ref<const FactorMatrix>& z) {
  if (x.rows() != z.rows()) {
    throw DimensionError("gram_distance: X and Z differ in row count");
  }
  const Eigen::Index d = x.rows();
  const Eigen::Index k = x.cols() + z.cols();
  if (d == 0) return 0.0;
  DenseMatrix stacked(d, k);
  stacked << x, z;
  Eigen::HouseholderQR<DenseMatrix> qr(stacked);
  const Eigen::Index m = std::min(d, k);
  const DenseMatrix r =
      qr.matrixQR().topRows(m).template triangularView<Eigen::Upper>();
  const DenseMatrix rx = r.leftCols(x.cols());
  const DenseMatrix rz = r.rightCols(z.cols());
  return (rx * rx.transpose() - rz * rz.transpose()).norm();
}

inline RecoveryError recovery_error(const Eigen::Ref<const FactorMatrix>& x,
                                    const GroundTruth& gt) {
  if (x.rows() != gt.z.rows() || x.cols() != gt.z.cols()) {
    throw DimensionError("recovery_error: X and Z differ in shape");
  }
  return {gram_distance(x, gt.z), procrustes_align(x, gt.z).residual};
}

// ||Z Z^T||_F = ||Z^T Z||_F.
inline double gram_norm(const Eigen::Ref<const FactorMatrix>& z) {
  return (z.transpose() * z).norm();
}

// Row-norm bound satisfied by first-order stationary points:
// max_i ||X_i|| <= 4 max{alpha, mu sqrt(r p / lambda)}.
inline double incoherence_bound(const ObjectiveConfig& cfg,
                                const GroundTruth& gt) {
  const double lambda = cfg.lambda();
  if (!(lambda > 0.0)) return std::numeric_limits<double>::infinity();
  const double second =
      gt.mu * std::sqrt(gt.r() * cfg.obs().p() / lambda);
  return 4.0 * std::max(cfg.alpha(), second);
}

inline bool incoherence_certificate(const Eigen::Ref<const FactorMatrix>& x,
                                    const ObjectiveConfig& cfg,
                                    const GroundTruth& gt) {
  return max_row_norm(x) <= incoherence_bound(cfg, gt);
}

// Noise floor for recovery: ||P_Omega(M - Z Z^T)|| / (p ||Z Z^T||_F). Local
// minima of a noisy instance are only expected within a constant multiple
// of this relative Gram error. Zero for noiseless observations.
inline double noise_floor_rel(const Observation& obs, const GroundTruth& gt) {
  if (obs.d() != gt.d()) {
    throw DimensionError("noise_floor_rel: observation and Z differ in d");
  }
  const double p = obs.p();
  const double ref = gram_norm(gt.z);
  if (!(p > 0.0) || !(ref > 0.0)) return 0.0;
  DenseMatrix resid = DenseMatrix::Zero(obs.d(), obs.d());
  const auto& mask = obs.mask;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const int i = mask.pair_row(k);
    const int j = mask.pair_col(k);
    resid(i, j) = obs.values[k] - gt.z.row(i).dot(gt.z.row(j));
  }
  return spectral_norm_dense(resid) / (p * ref);
}

// max(base, factor * noise_floor_rel): the GlobalMin tolerance for noisy
// instances.
inline double noise_adjusted_global_rel(const Observation& obs,
                                        const GroundTruth& gt, double base,
                                        double factor = 2.0) {
  return std::max(base, factor * noise_floor_rel(obs, gt));
}

struct NormCertificates {
  // Only for r = 1: ||x||^2 >= ||z||^2 / 4.
  std::optional<bool> rank1_norm_ok;
  // sigma_min(X) >= sigma_min(Z) / 4.
  bool sigma_min_ok = false;
};

inline NormCertificates norm_certificates(
    const Eigen::Ref<const FactorMatrix>& x, const GroundTruth& gt) {
  NormCertificates c;
  if (gt.r() == 1 && x.cols() == 1) {
    c.rank1_norm_ok = x.squaredNorm() >= 0.25 * gt.z.squaredNorm();
  }
  c.sigma_min_ok = singular_extremes(x).sigma_min >= 0.25 * gt.sigma_min;
  return c;
}

struct CertTolerances {
  // Stationary when ||grad f|| <= stationary_rel * (1 + |f|).
  double stationary_rel = 1e-6;
  // Unset: hyper.tau with ground truth, else 1e-4 * ||H|| estimate.
  std::optional<double> tau;
  // GlobalMin requires ||X X^T - Z Z^T||_F <= global_rel ||Z Z^T||_F.
  double global_rel = 1e-3;
};

struct CertReport {
  double f = 0.0;
  double grad_norm = 0.0;
  double stationary_tol = 0.0;
  double lambda_min = 0.0;
  bool eig_exact = false;
  double tau_used = 0.0;
  Classification classification = Classification::kNotStationary;
  std::optional<double> recovery_fro;
  std::optional<double> recovery_rel;
  std::optional<double> procrustes_residual;
  std::optional<bool> incoherence_ok;
  std::optional<bool> sigma_min_ok;
  std::optional<bool> rank1_norm_ok;
};

// Depends only on X and the instance. `gt` may be null.
inline CertReport certify_point(const Eigen::Ref<const FactorMatrix>& x,
                                const ObjectiveConfig& cfg,
                                const GroundTruth* gt,
                                const CertTolerances& tols = {}) {
  if (!(tols.stationary_rel > 0.0) || !(tols.global_rel > 0.0) ||
      (tols.tau && !(*tols.tau >= 0.0))) {
    throw std::invalid_argument("certify_point: tolerances must be positive");
  }
  CertReport rep;
  rep.f = objective(x, cfg).total;
  rep.grad_norm = gradient(x, cfg).norm();
  rep.stationary_tol = tols.stationary_rel * (1.0 + std::abs(rep.f));

  const double norm = hessian_norm_estimate(x, cfg);
  const MinEigResult eig = min_hessian_eig(x, cfg, default_eig_tol(norm));
  rep.lambda_min = eig.lambda_min;
  rep.eig_exact = eig.exact;
  const double h_norm = std::max(norm, eig.norm_estimate);
  rep.tau_used = tols.tau ? *tols.tau
                 : gt     ? cfg.hyper().tau
                          : 1e-4 * h_norm;

  if (gt) {
    const RecoveryError re = recovery_error(x, *gt);
    rep.recovery_fro = re.gram_fro;
    const double ref = gram_norm(gt->z);
    rep.recovery_rel = ref > 0.0 ? re.gram_fro / ref : re.gram_fro;
    rep.procrustes_residual = re.procrustes_residual;
    rep.incoherence_ok = incoherence_certificate(x, cfg, *gt);
    const NormCertificates nc = norm_certificates(x, *gt);
    rep.sigma_min_ok = nc.sigma_min_ok;
    rep.rank1_norm_ok = nc.rank1_norm_ok;
  }

  const bool stationary = rep.grad_norm <= rep.stationary_tol;
  const bool second_order = rep.lambda_min >= -rep.tau_used;
  if (!stationary) {
    rep.classification = Classification::kNotStationary;
  } else if (!second_order) {
    rep.classification = Classification::kStrictSaddle;
  } else if (!gt) {
    rep.classification = Classification::kSecondOrderPoint;
  } else if (*rep.recovery_rel <= tols.global_rel) {
    rep.classification = Classification::kGlobalMin;
  } else {
    rep.classification = Classification::kSpuriousLocalMin;
  }
  return rep;
}

struct StartRecord {
  std::uint64_t start_seed = 0;
  SolveStatus status = SolveStatus::kMaxIters;
  bool solver_failed = false;
  int iterations = 0;
  int perturbations = 0;
  bool repolished = false;
  CertReport cert;
  FactorMatrix x_final;
};

struct ScanSummary {
  int n_starts = 0;
  std::array<int, kAllClassifications.size()> counts{};
  // Worst recovery_fro among stationary endpoints; NaN when there are none.
  double worst_recovery_fro = std::numeric_limits<double>::quiet_NaN();
  std::vector<StartRecord> starts;

  int count(Classification c) const {
    return counts[static_cast<std::size_t>(c)];
  }
};

struct ScanOptions {
  CertTolerances tols{.global_rel = 1e-2};
  int threads = 1;
  // Re-run tighter GD on apparent spurious minima before reporting them.
  bool repolish = true;
  bool keep_points = false;
  // Factor rank when no ground truth is supplied.
  int rank = 0;
};

namespace detail {

inline StartRecord run_start(const GroundTruth* gt, const ObjectiveConfig& cfg,
                             const SolverConfig& scfg, std::uint64_t seed,
                             const ScanOptions& opts) {
  StartRecord rec;
  rec.start_seed = seed;
  const int d = cfg.mask().dim();
  const int r = gt ? gt->r() : opts.rank;
  try {
    SolverConfig sc = scfg;
    sc.seed = derive_seed(seed, "solver");
    const FactorMatrix x0 = random_init(d, r, cfg.obs(), seed);
    SolveResult res = solve(cfg, sc, x0);
    rec.status = res.status;
    rec.iterations = res.trace.empty() ? 0 : res.trace.back().iter;
    rec.perturbations = static_cast<int>(res.perturb_iters.size());
    rec.cert = certify_point(res.x_final, cfg, gt, opts.tols);
    if (opts.repolish &&
        rec.cert.classification == Classification::kSpuriousLocalMin) {
      SolverConfig polish = sc;
      polish.method = Method::kGD;
      polish.grad_tol = res.grad_tol / 10.0;
      res = gradient_descent(cfg, polish, res.x_final);
      rec.repolished = true;
      rec.status = res.status;
      rec.cert = certify_point(res.x_final, cfg, gt, opts.tols);
    }
    if (opts.keep_points) rec.x_final = std::move(res.x_final);
  } catch (const std::exception&) {
    rec.solver_failed = true;
    rec.cert = CertReport{};
    rec.cert.classification = Classification::kNotStationary;
    rec.cert.f = std::numeric_limits<double>::quiet_NaN();
    rec.cert.grad_norm = std::numeric_limits<double>::quiet_NaN();
    rec.cert.lambda_min = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

}  // namespace detail

inline std::uint64_t start_seed(std::uint64_t base_seed, int index) {
  return derive_seed(base_seed, "scan.start", static_cast<std::uint64_t>(index));
}

// Solve from n_starts random initializations and certify each endpoint.
// Start k uses seed start_seed(base_seed, k), so results do not depend on
// thread count or execution order. `gt` may be null.
inline ScanSummary landscape_scan(const GroundTruth* gt, const Observation& obs,
                                  const HyperParams& hyper,
                                  const SolverConfig& scfg, int n_starts,
                                  std::uint64_t base_seed,
                                  const ScanOptions& opts = {}) {
  if (n_starts < 1) throw std::invalid_argument("scan.n_starts must be >= 1");
  scfg.validate();
  if (!gt && opts.rank < 1) {
    throw std::invalid_argument("landscape_scan: rank required without Z");
  }
  const ObjectiveConfig cfg(obs, hyper);
  ScanSummary sum;
  sum.n_starts = n_starts;
  sum.starts.resize(static_cast<std::size_t>(n_starts));
  parallel_for(sum.starts.size(), opts.threads, [&](std::size_t k) {
    sum.starts[k] = detail::run_start(gt, cfg, scfg,
                                      start_seed(base_seed, static_cast<int>(k)),
                                      opts);
  });
  for (const auto& s : sum.starts) {
    ++sum.counts[static_cast<std::size_t>(s.cert.classification)];
    const bool stationary =
        s.cert.classification != Classification::kNotStationary;
    if (stationary && s.cert.recovery_fro) {
      if (std::isnan(sum.worst_recovery_fro) ||
          *s.cert.recovery_fro > sum.worst_recovery_fro) {
        sum.worst_recovery_fro = *s.cert.recovery_fro;
      }
    }
  }
  return sum;
}

inline ScanSummary landscape_scan(const GroundTruth& gt, const Observation& obs,
                                  const HyperParams& hyper,
                                  const SolverConfig& scfg, int n_starts,
                                  std::uint64_t base_seed,
                                  const ScanOptions& opts = {}) {
  return landscape_scan(&gt, obs, hyper, scfg, n_starts, base_seed, opts);
}

}  // namespace mcland

#endif  // MCLAND_CERTIFY_HPP_
