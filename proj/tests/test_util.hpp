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

// Test-only helpers: random generators and oracles that never call into
// the code paths they are used to check.

#ifndef MCLAND_TESTS_TEST_UTIL_HPP_
#define MCLAND_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mcland/instance.hpp"
#include "mcland/linalg.hpp"

namespace mcland::testing {

inline Eigen::MatrixXd randn(Eigen::Index rows, Eigen::Index cols,
                             std::mt19937_64& gen, double stddev = 1.0) {
  std::normal_distribution<double> n(0.0, stddev);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return m;
}

// Haar-ish random orthogonal matrix (reflections included).
inline Eigen::MatrixXd random_orthonormal(int r, std::mt19937_64& gen) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(randn(r, r, gen));
  Eigen::MatrixXd q = qr.householderQ();
  return q;
}

// Bernoulli symmetric mask built directly (independent of sample_mask).
inline ObservationMask random_mask(int d, double p, std::mt19937_64& gen,
                                   bool diagonal = true) {
  std::bernoulli_distribution b(p);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < d; ++i) {
    for (int j = diagonal ? i : i + 1; j < d; ++j) {
      if (b(gen)) pairs.emplace_back(i, j);
    }
  }
  return ObservationMask::from_unordered(d, p, pairs);
}

// Naive double loop over all (i, j) with a dense indicator and dense M:
// 1/2 sum_{ij} 1[(i,j) in Omega] (M_ij - sum_k X_ik X_jk)^2 + lambda R(X).
inline double brute_force_objective(const Eigen::MatrixXd& x,
                                    const Eigen::MatrixXd& indicator,
                                    const Eigen::MatrixXd& m, double alpha,
                                    double lambda) {
  const Eigen::Index d = x.rows();
  double data = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (indicator(i, j) == 0.0) continue;
      double g = 0.0;
      for (Eigen::Index k = 0; k < x.cols(); ++k) g += x(i, k) * x(j, k);
      data += 0.5 * (m(i, j) - g) * (m(i, j) - g);
    }
  }
  double reg = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    double t = 0.0;
    for (Eigen::Index k = 0; k < x.cols(); ++k) t += x(i, k) * x(i, k);
    t = std::sqrt(t);
    if (t >= alpha) reg += std::pow(t - alpha, 4);
  }
  return data + lambda * reg;
}

using ScalarFn = std::function<double(const Eigen::MatrixXd&)>;

// Central-difference gradient, step h.
inline Eigen::MatrixXd fd_gradient(const ScalarFn& f, const Eigen::MatrixXd& x,
                                   double h) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  Eigen::MatrixXd xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double v = x.data()[k];
    xp.data()[k] = v + h;
    const double fp = f(xp);
    xp.data()[k] = v - h;
    const double fm = f(xp);
    xp.data()[k] = v;
    g.data()[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Central second difference of t -> f(X + t V) at 0.
inline double fd_second_directional(const ScalarFn& f, const Eigen::MatrixXd& x,
                                    const Eigen::MatrixXd& v, double h) {
  return (f(x + h * v) - 2.0 * f(x) + f(x - h * v)) / (h * h);
}

// Dense Hessian from second differences of f only (no gradient).
inline Eigen::MatrixXd fd_hessian(const ScalarFn& f, const Eigen::MatrixXd& x,
                                  double h) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd hess(n, n);
  const double f0 = f(x);
  auto shifted = [&](Eigen::Index a, double da, Eigen::Index b, double db) {
    Eigen::MatrixXd y = x;
    y.data()[a] += da;
    y.data()[b] += db;
    return f(y);
  };
  for (Eigen::Index a = 0; a < n; ++a) {
    hess(a, a) = (shifted(a, h, a, 0.0) - 2.0 * f0 + shifted(a, -h, a, 0.0)) /
                 (h * h);
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double v = (shifted(a, h, b, h) - shifted(a, h, b, -h) -
                        shifted(a, -h, b, h) + shifted(a, -h, b, -h)) /
                       (4.0 * h * h);
      hess(a, b) = hess(b, a) = v;
    }
  }
  return hess;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace mcland::testing

#endif  // MCLAND_TESTS_TEST_UTIL_HPP_
