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

// Monte Carlo measurement of how sampled low-rank quantities deviate from
// their expectations under a symmetric Bernoulli mask, next to the
// functional form of the corresponding high-probability bounds.

#ifndef MCLAND_CONCENTRATION_HPP_
#define MCLAND_CONCENTRATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcland/instance.hpp"
#include "mcland/linalg.hpp"
#include "mcland/parallel.hpp"
#include "mcland/rng.hpp"

namespace mcland {

enum class ConcentrationKind {
  // |<P(W), P(Z)> - p <W, Z>| for rank-r W, Z.
  kInnerProduct,
  // ||P(X X^T) X - p X X^T X||_F.
  kCubicTerm,
  // ||P(W) - p W||.
  kSpectral,
  // |<P(N), P(W)>| for Gaussian N.
  kNoiseInner,
  // ||P(N)||.
  kNoiseSpectral,
};

inline std::string_view to_string(ConcentrationKind k) {
  switch (k) {
    case ConcentrationKind::kInnerProduct: return "InnerProduct";
    case ConcentrationKind::kCubicTerm: return "CubicTerm";
    case ConcentrationKind::kSpectral: return "Spectral";
    case ConcentrationKind::kNoiseInner: return "NoiseInner";
    case ConcentrationKind::kNoiseSpectral: return "NoiseSpectral";
  }
  return "?";
}

inline std::optional<ConcentrationKind> parse_kind(std::string_view s) {
  for (auto k : {ConcentrationKind::kInnerProduct, ConcentrationKind::kCubicTerm,
                 ConcentrationKind::kSpectral, ConcentrationKind::kNoiseInner,
                 ConcentrationKind::kNoiseSpectral}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline bool is_noise_kind(ConcentrationKind k) {
  return k == ConcentrationKind::kNoiseInner ||
         k == ConcentrationKind::kNoiseSpectral;
}

// Deviations given the mask indicator. The (delta - p) weighting makes every
// noiseless deviation exactly zero at p = 1.

inline double inner_product_deviation(const DenseMatrix& delta, double p,
                                      const DenseMatrix& w,
                                      const DenseMatrix& z) {
  return std::abs(((delta.array() - p) * w.array() * z.array()).sum());
}

inline double cubic_deviation(const DenseMatrix& delta, double p,
                              const FactorMatrix& x) {
  const DenseMatrix weighted =
      ((delta.array() - p) * (x * x.transpose()).array()).matrix();
  return (weighted * x).norm();
}

inline double spectral_deviation(const DenseMatrix& delta, double p,
                                 const DenseMatrix& w) {
  return spectral_norm_dense(((delta.array() - p) * w.array()).matrix());
}

inline double noise_inner_deviation(const DenseMatrix& delta,
                                    const DenseMatrix& noise,
                                    const DenseMatrix& w) {
  return std::abs((delta.array() * noise.array() * w.array()).sum());
}

inline double noise_spectral_deviation(const DenseMatrix& delta,
                                       const DenseMatrix& noise) {
  return spectral_norm_dense((delta.array() * noise.array()).matrix());
}

struct ConcentrationTrial {
  ConcentrationKind kind = ConcentrationKind::kSpectral;
  int d = 100;
  int r = 2;
  double p = 0.5;
  // Noise kinds only.
  double sigma = 0.0;
  int trials = 50;
  std::uint64_t seed = 0;

  void validate() const {
    if (d < 2) throw std::invalid_argument("concentration.d must be >= 2");
    if (r < 1 || r > d) {
      throw std::invalid_argument("concentration.r must satisfy 1 <= r <= d");
    }
    if (!(p > 0.0 && p <= 1.0)) {
      throw std::invalid_argument("concentration.p must lie in (0, 1]");
    }
    if (!(sigma >= 0.0)) {
      throw std::invalid_argument("concentration.sigma must be >= 0");
    }
    if (trials < 1) throw std::invalid_argument("concentration.trials must be >= 1");
  }
};

struct TrialSample {
  int trial = 0;
  double deviation = 0.0;
  double predicted_scale = 0.0;
  // Measured row-incoherence of the sampled low-rank input.
  double nu = 0.0;
};

struct TrialResult {
  ConcentrationTrial config;
  std::vector<TrialSample> samples;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
  double median_predicted = 0.0;
  // Median of deviation / (predicted_scale * sqrt(pd)): scales as
  // (pd)^(-1/2) exactly when the deviation tracks the bound's form.
  double median_normalized = 0.0;
};

// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

namespace detail {

// Product of two Gaussian d x r factors, normalized to unit Frobenius norm.
inline DenseMatrix random_low_rank(int d, int r, Rng& rng) {
  const DenseMatrix a = gaussian_matrix(d, r, 1.0, rng);
  const DenseMatrix b = gaussian_matrix(d, r, 1.0, rng);
  DenseMatrix w = a * b.transpose();
  const double n = w.norm();
  return n > 0.0 ? DenseMatrix(w / n) : w;
}

// Symmetric Gaussian matrix, one N(0, sigma^2) draw per unordered pair.
inline DenseMatrix symmetric_noise(int d, double sigma, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  DenseMatrix m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) m(i, j) = m(j, i) = sigma * n(rng);
  }
  return m;
}

// d |W|_inf / ||W||_F.
inline double entry_incoherence(const DenseMatrix& w) {
  const double f = w.norm();
  return f > 0.0 ? static_cast<double>(w.rows()) * w.cwiseAbs().maxCoeff() / f
                 : 0.0;
}

inline TrialSample run_one(const ConcentrationTrial& t, int index) {
  Rng rng = make_rng(t.seed, to_string(t.kind), static_cast<std::uint64_t>(index));
  const DenseMatrix delta =
      sample_mask(t.d, t.p, true, rng()).indicator();
  const double d = t.d;
  const double r = t.r;
  const double log_d = std::log(d);
  const double pd = t.p * d;
  TrialSample s;
  s.trial = index;
  switch (t.kind) {
    case ConcentrationKind::kInnerProduct: {
      const DenseMatrix w = random_low_rank(t.d, t.r, rng);
      const DenseMatrix z = random_low_rank(t.d, t.r, rng);
      s.deviation = inner_product_deviation(delta, t.p, w, z);
      s.nu = std::max(entry_incoherence(w), entry_incoherence(z));
      s.predicted_scale =
          std::sqrt(t.p * d * r * w.cwiseAbs().maxCoeff() *
                    z.cwiseAbs().maxCoeff() * w.norm() * z.norm() * log_d);
      break;
    }
    case ConcentrationKind::kCubicTerm: {
      const FactorMatrix x = gaussian_matrix(t.d, t.r, 1.0 / std::sqrt(d), rng);
      s.deviation = cubic_deviation(delta, t.p, x);
      const double fro = x.norm();
      s.nu = fro > 0.0 ? std::sqrt(d) * max_row_norm(x) / fro : 0.0;
      s.predicted_scale =
          t.p * std::sqrt(std::pow(s.nu, 6) * r / pd) * fro * fro * fro;
      break;
    }
    case ConcentrationKind::kSpectral: {
      const DenseMatrix w = random_low_rank(t.d, t.r, rng);
      s.deviation = spectral_deviation(delta, t.p, w);
      s.nu = entry_incoherence(w);
      s.predicted_scale = t.p * w.norm() * s.nu * std::sqrt(log_d / pd);
      break;
    }
    case ConcentrationKind::kNoiseInner: {
      const DenseMatrix w = random_low_rank(t.d, t.r, rng);
      const DenseMatrix n = symmetric_noise(t.d, t.sigma, rng);
      s.deviation = noise_inner_deviation(delta, n, w);
      s.nu = entry_incoherence(w);
      s.predicted_scale =
          std::sqrt(t.p * d * d * r * t.sigma * t.sigma *
                    w.cwiseAbs().maxCoeff() * w.norm() * log_d);
      break;
    }
    case ConcentrationKind::kNoiseSpectral: {
      const DenseMatrix n = symmetric_noise(t.d, t.sigma, rng);
      s.deviation = noise_spectral_deviation(delta, n);
      s.nu = 0.0;
      s.predicted_scale = t.p * t.sigma * d * std::sqrt(log_d / pd);
      break;
    }
  }
  return s;
}

}  // namespace detail

// Fresh inputs and a fresh mask per trial; trial i draws from substream
// (seed, kind, i).
inline TrialResult run_concentration(const ConcentrationTrial& trial,
                                     int threads = 1) {
  trial.validate();
  TrialResult res;
  res.config = trial;
  res.samples.resize(static_cast<std::size_t>(trial.trials));
  parallel_for(res.samples.size(), threads, [&](std::size_t i) {
    res.samples[i] = detail::run_one(trial, static_cast<int>(i));
  });
  std::vector<double> dev;
  std::vector<double> pred;
  std::vector<double> norm;
  const double sqrt_pd = std::sqrt(trial.p * trial.d);
  for (const auto& s : res.samples) {
    dev.push_back(s.deviation);
    pred.push_back(s.predicted_scale);
    norm.push_back(s.predicted_scale > 0.0
                       ? s.deviation / (s.predicted_scale * sqrt_pd)
                       : 0.0);
  }
  std::sort(dev.begin(), dev.end());
  res.q25 = quantile_sorted(dev, 0.25);
  res.median = quantile_sorted(dev, 0.5);
  res.q75 = quantile_sorted(dev, 0.75);
  res.max = dev.back();
  res.median_predicted = median_of(pred);
  res.median_normalized = median_of(norm);
  return res;
}

enum class FitStatus { kOk, kDegenerate, kInsufficientGrid };

inline std::string_view to_string(FitStatus s) {
  switch (s) {
    case FitStatus::kOk: return "ok";
    case FitStatus::kDegenerate: return "degenerate";
    case FitStatus::kInsufficientGrid: return "insufficient_grid";
  }
  return "?";
}

struct ScalingFit {
  FitStatus status = FitStatus::kDegenerate;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least-squares slope of log(deviation) against log(pd). Needs at least 4
// points spanning a factor of 8 in pd and positive, non-constant
// deviations.
inline ScalingFit fit_scaling(
    const std::vector<std::pair<double, double>>& points) {
  ScalingFit fit;
  if (points.size() < 4) {
    fit.status = FitStatus::kInsufficientGrid;
    return fit;
  }
  double lo = points.front().first;
  double hi = lo;
  for (const auto& [x, y] : points) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!(lo > 0.0) || hi / lo < 8.0) {
    fit.status = FitStatus::kInsufficientGrid;
    return fit;
  }
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& [x, y] : points) {
    if (!(y > 0.0) || !std::isfinite(y)) {
      fit.status = FitStatus::kDegenerate;
      return fit;
    }
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (syy <= 1e-24 * (1.0 + my * my)) {
    fit.status = FitStatus::kDegenerate;
    return fit;
  }
  fit.status = FitStatus::kOk;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += e * e;
  }
  fit.r2 = 1.0 - ss_res / syy;
  return fit;
}

}  // namespace mcland

#endif  // MCLAND_CONCENTRATION_HPP_
