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

#include <algorithm>
#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "mcland/instance.hpp"
#include "test_util.hpp"

namespace mcland {
namespace {

TEST(Incoherence, UniformRowsAreMinimallyCoherent) {
  const auto gt = GroundTruth::from_factor(FactorMatrix::Constant(4, 1, 0.5));
  EXPECT_NEAR(gt.mu, 1.0, 1e-15);
  EXPECT_NEAR(gt.kappa, 1.0, 1e-15);
}

TEST(Incoherence, SpikeIsMaximallyCoherent) {
  FactorMatrix z = FactorMatrix::Zero(4, 1);
  z(0, 0) = 1.0;
  EXPECT_NEAR(GroundTruth::from_factor(z).mu, 2.0, 1e-15);
}

TEST(GroundTruth, RejectsRankDeficientFactor) {
  EXPECT_THROW(GroundTruth::from_factor(FactorMatrix::Zero(4, 2)),
               std::domain_error);
}

TEST(SampleFactor, MedianIncoherenceAtDeskScale) {
  std::vector<double> mus;
  for (int seed = 0; seed < 200; ++seed) {
    mus.push_back(sample_factor(100, 2, 1.0, seed).mu);
  }
  std::nth_element(mus.begin(), mus.begin() + 100, mus.end());
  EXPECT_GE(mus[100], 1.5);
  EXPECT_LE(mus[100], 4.5);
}

TEST(SampleFactor, StoredParametersMatchRecomputation) {
  for (int seed = 0; seed < 10; ++seed) {
    const auto gt = sample_factor(30, 3, 2.0, seed);
    const auto again = GroundTruth::from_factor(gt.z);
    EXPECT_EQ(gt.mu, again.mu);
    EXPECT_EQ(gt.kappa, again.kappa);
    EXPECT_GE(gt.mu, 1.0);
    EXPECT_GE(gt.kappa, 1.0);
  }
}

TEST(SampleFactor, DeterministicAndValidated) {
  EXPECT_EQ(sample_factor(20, 2, 1.0, 7).z, sample_factor(20, 2, 1.0, 7).z);
  EXPECT_NE(sample_factor(20, 2, 1.0, 7).z, sample_factor(20, 2, 1.0, 8).z);
  EXPECT_THROW(sample_factor(3, 4, 1.0, 0), DimensionError);
  EXPECT_THROW(sample_factor(3, 1, 0.0, 0), std::invalid_argument);
}

TEST(SampleMask, FullAndEmpty) {
  const auto full = sample_mask(6, 1.0, true, 1);
  EXPECT_EQ(full.size(), 36u);
  EXPECT_EQ(full, ObservationMask::full(6));
  const auto no_diag = sample_mask(6, 1.0, false, 1);
  EXPECT_EQ(no_diag.size(), 30u);
  EXPECT_EQ(sample_mask(6, 0.0, true, 1).size(), 0u);
}

TEST(SampleMask, PairCountWithinBinomialBounds) {
  const int d = 200;
  const double p = 0.1;
  for (bool diag : {true, false}) {
    const double n = d * (d - 1) / 2.0 + (diag ? d : 0);
    const double mean = p * n;
    const double sd = std::sqrt(n * p * (1 - p));
    for (int seed = 0; seed < 100; ++seed) {
      const auto mask = sample_mask(d, p, diag, seed);
      EXPECT_LE(std::abs(mask.unordered_count() - mean), 4 * sd);
      if (!diag) EXPECT_EQ(mask.diagonal_count(), 0u);
    }
  }
}

TEST(SampleMask, SymmetricForEverySeed) {
  for (int seed = 0; seed < 20; ++seed) {
    const auto mask = sample_mask(25, 0.3, seed % 2 == 0, seed);
    for (std::size_t k = 0; k < mask.size(); ++k) {
      EXPECT_TRUE(mask.contains(mask.pair_col(k), mask.pair_row(k)));
    }
    EXPECT_EQ(mask, sample_mask(25, 0.3, seed % 2 == 0, seed));
  }
}

TEST(Observe, NoiselessFullObservationIsGram) {
  const auto gt = sample_factor(12, 2, 1.0, 3);
  const auto obs = observe(gt, ObservationMask::full(12), 0.0, 5);
  EXPECT_LE((obs.dense() - gt.z * gt.z.transpose()).cwiseAbs().maxCoeff(),
            1e-15);
  const auto gt1 = sample_factor(12, 1, 1.0, 3);
  const auto obs1 = observe(gt1, ObservationMask::full(12), 0.0, 5);
  EXPECT_EQ(obs1.dense(), DenseMatrix(gt1.z * gt1.z.transpose()));
}

TEST(Observe, SymmetricAndDeterministic) {
  const auto gt = sample_factor(30, 2, 1.0, 4);
  const auto mask = sample_mask(30, 0.4, true, 9);
  const auto obs = observe(gt, mask, 0.3, 11);
  for (std::size_t k = 0; k < mask.size(); ++k) {
    EXPECT_EQ(obs.values[k], obs.value(mask.pair_col(k), mask.pair_row(k)));
  }
  EXPECT_EQ(obs.values, observe(gt, mask, 0.3, 11).values);
  EXPECT_NE(obs.values, observe(gt, mask, 0.3, 12).values);
}

TEST(Observe, NoiseVariance) {
  const int d = 200;
  const double sigma = 0.1;
  const auto gt = sample_factor(d, 2, 1.0, 5);
  const auto obs = observe(gt, ObservationMask::full(d), sigma, 13);
  const DenseMatrix noise = obs.dense() - gt.z * gt.z.transpose();
  double sum = 0.0;
  double sum_sq = 0.0;
  int n = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      sum += noise(i, j);
      sum_sq += noise(i, j) * noise(i, j);
      ++n;
    }
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  EXPECT_NEAR(var, sigma * sigma, 0.1 * sigma * sigma);
}

TEST(Observe, NoiselessValuesBoundedByRowNorms) {
  for (int seed = 0; seed < 10; ++seed) {
    const auto gt = sample_factor(40, 3, 1.5, seed);
    const auto obs = observe(gt, sample_mask(40, 0.5, true, seed), 0.0, seed);
    const double bound = std::pow(max_row_norm(gt.z), 2);
    for (double v : obs.values) EXPECT_LE(std::abs(v), bound * (1 + 1e-14));
  }
}

TEST(Observe, RejectsNegativeSigma) {
  const auto gt = sample_factor(5, 1, 1.0, 1);
  EXPECT_THROW(observe(gt, ObservationMask::full(5), -1.0, 0),
               std::invalid_argument);
}

TEST(DefaultHyperParams, RankOneThreshold) {
  const auto gt = GroundTruth::from_factor(FactorMatrix::Constant(100, 1, 0.1));
  ASSERT_NEAR(gt.mu, 1.0, 1e-12);
  const auto h = default_hyperparams(gt, 0.5, true);
  EXPECT_NEAR(h.alpha, 1.0, 1e-12);
  EXPECT_NEAR(h.lambda, 0.5, 1e-12);
  EXPECT_NEAR(h.tau, 0.01 * 0.5 * gt.sigma_min, 1e-15);
}

TEST(DefaultHyperParams, RankRThreshold) {
  FactorMatrix z(100, 2);
  for (int i = 0; i < 100; ++i) {
    z(i, 0) = 0.1;
    z(i, 1) = i % 2 == 0 ? 0.1 : -0.1;
  }
  const auto gt = GroundTruth::from_factor(z);
  ASSERT_NEAR(gt.mu, 1.0, 1e-12);
  ASSERT_NEAR(gt.kappa, 1.0, 1e-12);
  const auto h = default_hyperparams(gt, 0.3, false);
  EXPECT_NEAR(h.alpha, 0.8, 1e-12);
  EXPECT_NEAR(h.lambda, 1.0 * 2 * 0.3 / 0.64, 1e-12);
}

TEST(InstanceSpec, RecordHasExactlyTheRegenerationFields) {
  InstanceSpec s{.d = 10, .r = 2, .seed = 3, .scale = 1.0, .p = 0.5,
                 .sigma = 0.0, .include_diagonal = true};
  const auto j = to_json(s);
  std::vector<std::string> keys;
  for (const auto& [k, _] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"d", "r", "seed", "scale", "p",
                                            "sigma", "include_diagonal"}));
  const auto a = generate_instance(s);
  const auto b = generate_instance(s);
  EXPECT_EQ(a.truth.z, b.truth.z);
  EXPECT_EQ(a.obs.values, b.obs.values);
  EXPECT_EQ(a.obs.mask, b.obs.mask);
}

}  // namespace
}  // namespace mcland
