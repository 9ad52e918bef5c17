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

// Problem instances: incoherent ground-truth factors, symmetric Bernoulli
// masks, (noisy) observations, and the default regularizer settings derived
// from the instance parameters.

#ifndef MCLAND_INSTANCE_HPP_
#define MCLAND_INSTANCE_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mcland/linalg.hpp"
#include "mcland/rng.hpp"

namespace mcland {

// Smallest mu with ||Z_i|| <= mu / sqrt(d) * ||Z||_F for every row.
inline double incoherence(const Eigen::Ref<const FactorMatrix>& z) {
  const double fro = z.norm();
  if (fro == 0.0) return 0.0;
  return std::sqrt(static_cast<double>(z.rows())) * max_row_norm(z) / fro;
}

struct GroundTruth {
  FactorMatrix z;
  double mu = 0.0;
  double kappa = 0.0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;

  int d() const { return static_cast<int>(z.rows()); }
  int r() const { return static_cast<int>(z.cols()); }

  // Computes mu and kappa from Z. Throws if Z is rank deficient.
  static GroundTruth from_factor(FactorMatrix z) {
    require_factor(z, "GroundTruth");
    if (z.cols() < 1) throw DimensionError("GroundTruth: r must be >= 1");
    GroundTruth gt;
    const auto sv = singular_extremes(z);
    if (!(sv.sigma_min > 0.0)) {
      throw std::domain_error("GroundTruth: sigma_min(Z) is zero");
    }
    gt.mu = incoherence(z);
    gt.sigma_max = sv.sigma_max;
    gt.sigma_min = sv.sigma_min;
    gt.kappa = sv.sigma_max / sv.sigma_min;
    gt.z = std::move(z);
    return gt;
  }

  DenseMatrix gram() const { return z * z.transpose(); }
};

inline constexpr int kFactorRetries = 10;

// Z with iid N(0, scale^2 / d) entries. A singular draw is retried with a
// perturbed seed.
inline GroundTruth sample_factor(int d, int r, double scale,
                                 std::uint64_t seed) {
  if (r < 1 || r > d) {
    throw DimensionError("sample_factor: need 1 <= r <= d");
  }
  if (!(scale > 0.0)) {
    throw std::invalid_argument("sample_factor: scale must be positive");
  }
  const double stddev = scale / std::sqrt(static_cast<double>(d));
  for (int attempt = 0; attempt <= kFactorRetries; ++attempt) {
    Rng rng = make_rng(seed, "factor", static_cast<std::uint64_t>(attempt));
    FactorMatrix z = gaussian_matrix(d, r, stddev, rng);
    if (singular_extremes(z).sigma_min > 0.0) {
      return GroundTruth::from_factor(std::move(z));
    }
  }
  throw std::runtime_error("sample_factor: degenerate factor after retries");
}

// Each unordered pair {i, j}, i < j, is observed (in both orders) with
// probability p; diagonal entries likewise when include_diagonal is set.
inline ObservationMask sample_mask(int d, double p, bool include_diagonal,
                                   std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("sample_mask: p must lie in [0, 1]");
  }
  Rng rng = make_rng(seed, "mask");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < d; ++i) {
    for (int j = include_diagonal ? i : i + 1; j < d; ++j) {
      // u < p so that p = 0 and p = 1 are exact.
      if (u(rng) < p) pairs.emplace_back(i, j);
    }
  }
  return ObservationMask::from_unordered(d, p, std::move(pairs));
}

// Revealed entries of M = Z Z^T + N on the mask, aligned with the mask's
// pair order.
struct Observation {
  ObservationMask mask;
  std::vector<double> values;
  double sigma = 0.0;

  double p() const { return mask.p(); }
  int d() const { return mask.dim(); }

  double value(int i, int j) const {
    const auto k = mask.index_of(i, j);
    if (k < 0) throw std::out_of_range("Observation: pair not observed");
    return values[static_cast<std::size_t>(k)];
  }

  // P_Omega(M) as a dense matrix.
  DenseMatrix dense() const {
    DenseMatrix m = DenseMatrix::Zero(d(), d());
    for (std::size_t k = 0; k < mask.size(); ++k) {
      m(mask.pair_row(k), mask.pair_col(k)) = values[k];
    }
    return m;
  }

  double fro_norm_sq() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }
};

// Observation of an explicit symmetric matrix on a mask (no noise).
inline Observation observe_matrix(const Eigen::Ref<const DenseMatrix>& m,
                                  ObservationMask mask) {
  if (m.rows() != mask.dim() || m.cols() != mask.dim()) {
    throw DimensionError("observe_matrix: shape does not match mask");
  }
  Observation obs;
  obs.values.resize(mask.size());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    obs.values[k] = m(mask.pair_row(k), mask.pair_col(k));
  }
  obs.mask = std::move(mask);
  return obs;
}

// Noise is symmetric: one N(0, sigma^2) draw per observed unordered pair,
// taken in CSR order of the upper triangle. For a fixed seed the noise
// matrix is sigma times a fixed standard Gaussian pattern.
inline Observation observe(const GroundTruth& gt, const ObservationMask& mask,
                           double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) {
    throw std::invalid_argument("observe: sigma must be non-negative");
  }
  if (mask.dim() != gt.d()) {
    throw DimensionError("observe: mask dimension does not match Z");
  }
  Observation obs;
  obs.mask = mask;
  obs.sigma = sigma;
  obs.values.assign(mask.size(), 0.0);
  Rng rng = make_rng(seed, "noise");
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const int i = mask.pair_row(k);
    const int j = mask.pair_col(k);
    if (i > j) continue;
    const double noise = sigma > 0.0 ? sigma * n(rng) : 0.0;
    const double v = gt.z.row(i).dot(gt.z.row(j)) + noise;
    obs.values[k] = v;
    if (i != j) {
      obs.values[static_cast<std::size_t>(mask.index_of(j, i))] = v;
    }
  }
  return obs;
}

struct HyperParams {
  double alpha = 1.0;
  double lambda = 0.0;
  double tau = 0.0;

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("hyper.alpha must be > 0");
    if (!(lambda >= 0.0)) {
      throw std::invalid_argument("hyper.lambda must be >= 0");
    }
    if (!(tau >= 0.0)) throw std::invalid_argument("hyper.tau must be >= 0");
  }
};

// Rank-1: alpha = 10 mu / sqrt(d), lambda = mu^2 p / alpha^2.
// Rank-r: alpha = 4 mu kappa r / sqrt(d), lambda = mu^2 r p / alpha^2.
// tau = 0.01 p sigma_min(Z). lambda takes the lower bound with equality.
inline HyperParams default_hyperparams(const GroundTruth& gt, double p,
                                       bool rank_one) {
  if (!(p > 0.0)) {
    throw std::invalid_argument("default_hyperparams: p must be positive");
  }
  const double sqrt_d = std::sqrt(static_cast<double>(gt.d()));
  const double r = static_cast<double>(gt.r());
  HyperParams h;
  if (rank_one) {
    h.alpha = 10.0 * gt.mu / sqrt_d;
    h.lambda = gt.mu * gt.mu * p / (h.alpha * h.alpha);
  } else {
    h.alpha = 4.0 * gt.mu * gt.kappa * r / sqrt_d;
    h.lambda = gt.mu * gt.mu * r * p / (h.alpha * h.alpha);
  }
  h.tau = 0.01 * p * gt.sigma_min;
  return h;
}

inline HyperParams default_hyperparams(const GroundTruth& gt, double p) {
  return default_hyperparams(gt, p, gt.r() == 1);
}

// Everything needed to regenerate an instance bit-exactly. Masks and values
// are never stored.
struct InstanceSpec {
  int d = 0;
  int r = 0;
  std::uint64_t seed = 0;
  double scale = 1.0;
  double p = 1.0;
  double sigma = 0.0;
  bool include_diagonal = true;

  void validate() const {
    if (d < 1) throw std::invalid_argument("instance.d must be >= 1");
    if (r < 1 || r > d) {
      throw std::invalid_argument("instance.r must satisfy 1 <= r <= d");
    }
    if (!(scale > 0.0)) throw std::invalid_argument("instance.scale must be > 0");
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("instance.p must lie in [0, 1]");
    }
    if (!(sigma >= 0.0)) throw std::invalid_argument("instance.sigma must be >= 0");
  }
};

inline nlohmann::ordered_json to_json(const InstanceSpec& s) {
  nlohmann::ordered_json j;
  j["d"] = s.d;
  j["r"] = s.r;
  j["seed"] = s.seed;
  j["scale"] = s.scale;
  j["p"] = s.p;
  j["sigma"] = s.sigma;
  j["include_diagonal"] = s.include_diagonal;
  return j;
}

struct Instance {
  InstanceSpec spec;
  GroundTruth truth;
  Observation obs;
};

inline Instance generate_instance(const InstanceSpec& spec) {
  spec.validate();
  Instance inst;
  inst.spec = spec;
  inst.truth = sample_factor(spec.d, spec.r, spec.scale,
                             derive_seed(spec.seed, "instance.factor"));
  const ObservationMask mask =
      sample_mask(spec.d, spec.p, spec.include_diagonal,
                  derive_seed(spec.seed, "instance.mask"));
  inst.obs = observe(inst.truth, mask, spec.sigma,
                     derive_seed(spec.seed, "instance.noise"));
  return inst;
}

}  // namespace mcland

#endif  // MCLAND_INSTANCE_HPP_
