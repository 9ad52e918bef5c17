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

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "mcland/objective.hpp"
#include "mcland/spectrum.hpp"
#include "test_util.hpp"

namespace mcland {
namespace {

using testing::brute_force_objective;
using testing::fd_gradient;
using testing::fd_hessian;
using testing::fd_second_directional;
using testing::randn;
using testing::random_mask;
using testing::random_orthonormal;

struct RandomProblem {
  GroundTruth gt;
  Observation obs;
  HyperParams hyper;
  FactorMatrix x;
};

// Random instance whose regularizer is active on roughly half of the rows
// of the random point X.
RandomProblem make_problem(int d, int r, std::mt19937_64& gen,
                           double sigma = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomProblem pb;
  pb.gt = GroundTruth::from_factor(randn(d, r, gen, 1.0 / std::sqrt(d)));
  const auto mask = random_mask(d, 0.2 + 0.8 * u(gen), gen, u(gen) < 0.7);
  pb.obs = observe(pb.gt, mask, sigma, gen());
  pb.x = randn(d, r, gen, 1.0 / std::sqrt(d));
  std::vector<double> norms(d);
  for (int i = 0; i < d; ++i) norms[i] = pb.x.row(i).norm();
  std::nth_element(norms.begin(), norms.begin() + d / 2, norms.end());
  pb.hyper.alpha = norms[d / 2];
  pb.hyper.lambda = 5.0 * u(gen);
  return pb;
}

TEST(RegRow, InactiveBelowThreshold) {
  for (double t : {0.0, 0.3, 0.99, 1.0}) {
    const auto rr = reg_row(t, 1.0);
    EXPECT_EQ(rr.value, 0.0);
    EXPECT_EQ(rr.d1, 0.0);
    EXPECT_EQ(rr.d2, 0.0);
  }
}

TEST(RegRow, OneAboveThreshold) {
  const auto rr = reg_row(2.5, 1.5);
  EXPECT_DOUBLE_EQ(rr.value, 1.0);
  EXPECT_DOUBLE_EQ(rr.d1, 4.0);
  EXPECT_DOUBLE_EQ(rr.d2, 12.0);
}

TEST(RegRow, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const double alpha = 0.1 + u(gen);
    const double t = alpha + 0.01 + 2.0 * u(gen);
    const auto rr = reg_row(t, alpha);
    const double d1 =
        (reg_row(t + h, alpha).value - reg_row(t - h, alpha).value) / (2 * h);
    const double d2 =
        (reg_row(t + h, alpha).d1 - reg_row(t - h, alpha).d1) / (2 * h);
    EXPECT_LE(std::abs(d1 - rr.d1), 1e-6 * std::abs(rr.d1));
    EXPECT_LE(std::abs(d2 - rr.d2), 1e-6 * std::abs(rr.d2));
  }
}

TEST(Regularizer, ZeroWhenAllRowsBelowAlpha) {
  std::mt19937_64 gen(22);
  const FactorMatrix x = randn(10, 2, gen, 0.1);
  EXPECT_EQ(regularizer(x, max_row_norm(x) + 1e-9), 0.0);
  EXPECT_EQ(reg_gradient(x, max_row_norm(x) + 1e-9), FactorMatrix::Zero(10, 2));
}

TEST(Regularizer, SingleActiveRow) {
  FactorMatrix x = FactorMatrix::Zero(5, 2);
  x(3, 0) = 0.6 * 1.7;
  x(3, 1) = 0.8 * 1.7;  // norm 1.7 = alpha + 1
  EXPECT_NEAR(regularizer(x, 0.7), 1.0, 1e-14);
}

TEST(Regularizer, RotationInvariant) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 20; ++trial) {
    const FactorMatrix x = randn(12, 3, gen);
    const DenseMatrix q = random_orthonormal(3, gen);
    const double a = regularizer(x, 0.8);
    EXPECT_NEAR(regularizer(x * q, 0.8), a, 1e-12 * (1 + a));
  }
}

TEST(RegGradient, SingleRowCubicExponent) {
  FactorMatrix x = FactorMatrix::Zero(3, 2);
  x(0, 0) = 2.0;
  const FactorMatrix g = reg_gradient(x, 1.0);
  EXPECT_NEAR(g(0, 0), 4.0, 1e-14);
  EXPECT_EQ(g(0, 1), 0.0);
  // Finite-difference oracle on R confirms 4 (t - alpha)^3 / t * X_i.
  const FactorMatrix fd = fd_gradient(
      [](const Eigen::MatrixXd& y) { return regularizer(y, 1.0); }, x, 1e-5);
  EXPECT_NEAR(fd(0, 0), 4.0, 1e-8);
  EXPECT_NEAR(fd(0, 1), 0.0, 1e-8);
}

TEST(RegGradient, MatchesFiniteDifferencesAndPointsOutward) {
  std::mt19937_64 gen(24);
  for (int trial = 0; trial < 20; ++trial) {
    const FactorMatrix x = randn(10, 3, gen);
    const double alpha = 0.5 + 0.1 * trial;
    const FactorMatrix g = reg_gradient(x, alpha);
    const FactorMatrix fd = fd_gradient(
        [&](const Eigen::MatrixXd& y) { return regularizer(y, alpha); }, x,
        1e-5);
    EXPECT_LE((g - fd).norm(), 1e-6 * (1 + g.norm()));
    for (int i = 0; i < 10; ++i) EXPECT_GE(g.row(i).dot(x.row(i)), 0.0);
  }
}

TEST(Objective, ZeroAtGroundTruth) {
  const auto gt = sample_factor(20, 2, 1.0, 31);
  const auto obs = observe(gt, sample_mask(20, 0.5, true, 1), 0.0, 2);
  const ObjectiveConfig cfg(obs, {max_row_norm(gt.z), 3.0, 0.0});
  const auto e = objective(gt.z, cfg);
  EXPECT_NEAR(e.total, 0.0, 1e-28);
  EXPECT_EQ(e.reg_term, 0.0);
  EXPECT_LE(gradient(gt.z, cfg).norm(), 1e-14);
}

TEST(Objective, AtOriginIsHalfObservedEnergy) {
  const auto gt = sample_factor(15, 3, 1.0, 32);
  const auto obs = observe(gt, sample_mask(15, 0.6, true, 3), 0.1, 4);
  const ObjectiveConfig cfg(obs, {0.5, 2.0, 0.0});
  const double expect = 0.5 * obs.dense().squaredNorm();
  EXPECT_NEAR(objective(FactorMatrix::Zero(15, 3), cfg).total, expect,
              1e-14 * expect);
}

TEST(Objective, MatchesBruteForce) {
  std::mt19937_64 gen(33);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pb = make_problem(8, 2, gen, 0.05);
    const ObjectiveConfig cfg(pb.obs, pb.hyper);
    const auto e = objective(pb.x, cfg);
    const double oracle =
        brute_force_objective(pb.x, pb.obs.mask.indicator(), pb.obs.dense(),
                              pb.hyper.alpha, pb.hyper.lambda);
    EXPECT_LE(std::abs(e.total - oracle), 1e-12 * (1 + std::abs(oracle)));
    EXPECT_LE(std::abs(e.total - (e.data_term + pb.hyper.lambda * e.reg_term)),
              1e-12 * std::abs(e.total));
  }
}

TEST(Objective, RejectsShapeMismatch) {
  const auto gt = sample_factor(6, 1, 1.0, 1);
  const auto obs = observe(gt, ObservationMask::full(6), 0.0, 0);
  const ObjectiveConfig cfg(obs, {1.0, 0.0, 0.0});
  EXPECT_THROW(objective(FactorMatrix::Zero(5, 1), cfg), DimensionError);
  EXPECT_THROW(gradient(FactorMatrix::Zero(7, 1), cfg), DimensionError);
  EXPECT_THROW(hessian_vecprod(FactorMatrix::Zero(6, 1),
                               FactorMatrix::Zero(6, 2), cfg),
               DimensionError);
  EXPECT_THROW(ObjectiveConfig(obs, {0.0, 1.0, 0.0}), std::invalid_argument);
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 gen(34);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pb = make_problem(6 + trial % 10, 1 + trial % 3, gen, 0.02);
    const ObjectiveConfig cfg(pb.obs, pb.hyper);
    const FactorMatrix g = gradient(pb.x, cfg);
    const FactorMatrix fd = fd_gradient(
        [&](const Eigen::MatrixXd& y) { return objective(y, cfg).total; },
        pb.x, 1e-5);
    EXPECT_LE((g - fd).norm() / (1 + g.norm()), 1e-6) << "trial " << trial;
  }
}

TEST(Gradient, FullObservationRankOneIsEigenResidual) {
  std::mt19937_64 gen(35);
  const int d = 10;
  const DenseMatrix a = randn(d, d, gen);
  const DenseMatrix m = (a + a.transpose()) / 2;
  const auto obs = observe_matrix(m, ObservationMask::full(d));
  const ObjectiveConfig cfg(obs, {1.0, 0.0, 0.0});
  for (int trial = 0; trial < 10; ++trial) {
    const FactorMatrix x = randn(d, 1, gen);
    const FactorMatrix expected = -2.0 * (m * x - x.squaredNorm() * x);
    EXPECT_LE((gradient(x, cfg) - expected).norm(), 1e-12 * (1 + expected.norm()));
  }
  // Eigenvector scaled so that ||x||^2 is its eigenvalue is stationary.
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m);
  for (int k = 0; k < d; ++k) {
    const double ev = es.eigenvalues()(k);
    if (ev <= 0) continue;
    const FactorMatrix x = std::sqrt(ev) * es.eigenvectors().col(k);
    EXPECT_LE(gradient(x, cfg).norm(), 1e-12);
    EXPECT_LE((m * x - x.squaredNorm() * x).norm(), 1e-8);
  }
}

TEST(Objective, InactiveRegularizerMatchesUnregularized) {
  std::mt19937_64 gen(36);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pb = make_problem(10, 2, gen);
    HyperParams h = pb.hyper;
    h.alpha = max_row_norm(pb.x) * 1.01;
    HyperParams plain = h;
    plain.lambda = 0.0;
    const ObjectiveConfig reg(pb.obs, h);
    const ObjectiveConfig unreg(pb.obs, plain);
    const FactorMatrix v = randn(10, 2, gen);
    EXPECT_EQ(objective(pb.x, reg).total, objective(pb.x, unreg).total);
    EXPECT_EQ(gradient(pb.x, reg), gradient(pb.x, unreg));
    EXPECT_EQ(hessian_vecprod(pb.x, v, reg), hessian_vecprod(pb.x, v, unreg));
    EXPECT_EQ(hessian_quadratic(pb.x, v, reg), hessian_quadratic(pb.x, v, unreg));
  }
}

TEST(Objective, QuarticScalingWithoutData) {
  std::mt19937_64 gen(37);
  const int d = 9;
  const auto obs = observe_matrix(DenseMatrix::Zero(d, d), random_mask(d, 0.5, gen));
  const ObjectiveConfig cfg(obs, {1.0, 0.0, 0.0});
  const FactorMatrix x = randn(d, 2, gen);
  const double f1 = objective(x, cfg).total;
  for (double t : {2.0, 3.0}) {
    EXPECT_NEAR(objective(t * x, cfg).total, std::pow(t, 4) * f1,
                1e-12 * std::pow(t, 4) * f1);
  }
}

TEST(StochasticGradient, ExhaustiveBatchEqualsFullGradient) {
  std::mt19937_64 gen(38);
  const auto pb = make_problem(12, 2, gen, 0.1);
  const ObjectiveConfig cfg(pb.obs, pb.hyper);
  std::vector<std::size_t> all(pb.obs.mask.size());
  std::iota(all.begin(), all.end(), 0);
  const FactorMatrix est = stochastic_data_gradient(pb.x, cfg, all) +
                           cfg.lambda() * reg_gradient(pb.x, cfg.alpha());
  EXPECT_LE((est - gradient(pb.x, cfg)).norm(), 1e-12 * (1 + est.norm()));
}

TEST(HessianQuadratic, ZeroDirection) {
  std::mt19937_64 gen(39);
  const auto pb = make_problem(8, 2, gen);
  const ObjectiveConfig cfg(pb.obs, pb.hyper);
  EXPECT_EQ(hessian_quadratic(pb.x, FactorMatrix::Zero(8, 2), cfg), 0.0);
}

TEST(HessianQuadratic, MatchesSecondDifferences) {
  std::mt19937_64 gen(40);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pb = make_problem(6 + trial % 8, 1 + trial % 3, gen, 0.02);
    const ObjectiveConfig cfg(pb.obs, pb.hyper);
    const FactorMatrix v = randn(pb.x.rows(), pb.x.cols(), gen);
    const double q = hessian_quadratic(pb.x, v, cfg);
    const double fd = fd_second_directional(
        [&](const Eigen::MatrixXd& y) { return objective(y, cfg).total; }, pb.x,
        v, 1e-4);
    EXPECT_LE(std::abs(q - fd), 1e-4 * std::max(1.0, std::abs(q)));
  }
}

TEST(HessianQuadratic, RankOneFullObservationAtTruth) {
  std::mt19937_64 gen(41);
  FactorMatrix z = randn(7, 1, gen);
  z /= z.norm();
  const auto obs = observe_matrix(z * z.transpose(), ObservationMask::full(7));
  const ObjectiveConfig cfg(obs, {1.0, 0.0, 0.0});
  EXPECT_NEAR(hessian_quadratic(z, z, cfg), 4.0, 1e-12);
}

TEST(HessianVecprod, AgreesWithQuadraticFormAndIsSelfAdjoint) {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pb = make_problem(5 + trial % 10, 1 + trial % 3, gen, 0.05);
    const ObjectiveConfig cfg(pb.obs, pb.hyper);
    const FactorMatrix v = randn(pb.x.rows(), pb.x.cols(), gen);
    const FactorMatrix w = randn(pb.x.rows(), pb.x.cols(), gen);
    const FactorMatrix hv = hessian_vecprod(pb.x, v, cfg);
    const FactorMatrix hw = hessian_vecprod(pb.x, w, cfg);
    const double q = hessian_quadratic(pb.x, v, cfg);
    EXPECT_LE(std::abs((v.array() * hv.array()).sum() - q),
              1e-10 * std::max(1.0, std::abs(q)));
    const double wv = (w.array() * hv.array()).sum();
    const double vw = (v.array() * hw.array()).sum();
    EXPECT_LE(std::abs(wv - vw), 1e-10 * std::max(1.0, std::abs(wv)));
  }
}

TEST(HessianVecprod, DenseAssemblyMatchesFiniteDifferenceHessian) {
  std::mt19937_64 gen(43);
  for (int trial = 0; trial < 5; ++trial) {
    const auto pb = make_problem(6, 2, gen, 0.05);
    const ObjectiveConfig cfg(pb.obs, pb.hyper);
    const DenseMatrix h = assemble_hessian(pb.x, cfg);
    ASSERT_EQ(h.rows(), 12);
    const DenseMatrix fd = fd_hessian(
        [&](const Eigen::MatrixXd& y) { return objective(y, cfg).total; }, pb.x,
        1e-4);
    EXPECT_LE((h - fd).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_LE((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

}  // namespace
}  // namespace mcland
