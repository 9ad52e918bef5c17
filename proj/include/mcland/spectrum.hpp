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

// Spectral information about the Hessian operator of the objective at a
// point: norm estimate, smallest eigenvalue (Lanczos, with a shifted power
// iteration alternative), and dense assembly for small problems.

#ifndef MCLAND_SPECTRUM_HPP_
#define MCLAND_SPECTRUM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mcland/linalg.hpp"
#include "mcland/objective.hpp"

namespace mcland {

namespace detail {

inline FactorMatrix as_factor(const Eigen::VectorXd& v, Eigen::Index d,
                              Eigen::Index r) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), d, r);
}

inline Eigen::VectorXd as_vector(const FactorMatrix& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

inline Eigen::VectorXd apply_hessian(const FactorMatrix& x,
                                     const Eigen::VectorXd& v,
                                     const ObjectiveConfig& cfg) {
  return as_vector(hessian_vecprod(x, as_factor(v, x.rows(), x.cols()), cfg));
}

inline constexpr std::uint64_t kSpectrumSeed = 0x5bd1e995a1b2c3d4ULL;

}  // namespace detail

// Dense dr x dr Hessian (column-major vec of X), built column by column from
// hessian_vecprod.
inline DenseMatrix assemble_hessian(const Eigen::Ref<const FactorMatrix>& x,
                                    const ObjectiveConfig& cfg) {
  const FactorMatrix xm = x;
  const Eigen::Index n = xm.size();
  DenseMatrix h(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    e(c) = 1.0;
    h.col(c) = detail::apply_hessian(xm, e, cfg);
    e(c) = 0.0;
  }
  return h;
}

// Estimate of ||Hess f(X)|| (largest |eigenvalue|) by power iteration.
inline double hessian_norm_estimate(const Eigen::Ref<const FactorMatrix>& x,
                                    const ObjectiveConfig& cfg,
                                    int iters = 30) {
  const FactorMatrix xm = x;
  if (xm.size() == 0) return 0.0;
  Eigen::VectorXd v =
      detail::start_vector(xm.size(), detail::kSpectrumSeed).normalized();
  double est = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd w = detail::apply_hessian(xm, v, cfg);
    const double n = w.norm();
    if (n == 0.0) break;
    est = n;
    v = w / n;
  }
  return est;
}

struct MinEigResult {
  double lambda_min = 0.0;
  // Unit Frobenius norm direction with <W, H W> ~ lambda_min.
  FactorMatrix witness;
  // False when the iteration cap was hit before the residual test passed.
  bool exact = false;
  int iterations = 0;
  double residual = 0.0;
  // Largest |Ritz value| seen; a lower bound on ||H||.
  double norm_estimate = 0.0;
};

inline double default_eig_tol(double norm_estimate) {
  return 1e-6 * (1.0 + norm_estimate);
}

// Smallest eigenvalue of the Hessian operator by Lanczos with full
// reorthogonalization. Converged when the Ritz residual beta_m |y_m| <= tol.
inline MinEigResult min_hessian_eig(const Eigen::Ref<const FactorMatrix>& x,
                                    const ObjectiveConfig& cfg, double tol,
                                    int max_steps = 0) {
  if (!(tol > 0.0)) throw std::invalid_argument("min_hessian_eig: tol <= 0");
  const FactorMatrix xm = x;
  const Eigen::Index n = xm.size();
  MinEigResult out;
  if (n == 0) return out;
  const int cap = max_steps > 0
                      ? static_cast<int>(std::min<Eigen::Index>(max_steps, n))
                      : static_cast<int>(std::min<Eigen::Index>(n, 600));

  Eigen::MatrixXd q(n, cap);
  std::vector<double> alpha;
  std::vector<double> beta;
  q.col(0) = detail::start_vector(n, detail::kSpectrumSeed).normalized();

  Eigen::VectorXd y;
  for (int j = 0; j < cap; ++j) {
    Eigen::VectorXd w = detail::apply_hessian(xm, q.col(j), cfg);
    alpha.push_back(q.col(j).dot(w));
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd coeff = q.leftCols(j + 1).transpose() * w;
      w.noalias() -= q.leftCols(j + 1) * coeff;
    }
    const double b = w.norm();
    const int m = j + 1;

    Eigen::VectorXd diag(m);
    Eigen::VectorXd sub(std::max(m - 1, 0));
    for (int k = 0; k < m; ++k) diag(k) = alpha[k];
    for (int k = 0; k + 1 < m; ++k) sub(k) = beta[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const double theta = es.eigenvalues()(0);
    y = es.eigenvectors().col(0);
    out.norm_estimate = std::max(std::abs(es.eigenvalues()(0)),
                                 std::abs(es.eigenvalues()(m - 1)));
    out.lambda_min = theta;
    out.residual = b * std::abs(y(m - 1));
    out.iterations = m;

    const double breakdown = 1e-14 * (1.0 + out.norm_estimate);
    if (out.residual <= tol || b <= breakdown || m == n) {
      out.exact = true;
      break;
    }
    if (j + 1 < cap) {
      beta.push_back(b);
      q.col(j + 1) = w / b;
    }
  }
  Eigen::VectorXd ritz_vec = q.leftCols(out.iterations) * y;
  ritz_vec.normalize();
  out.witness = detail::as_factor(ritz_vec, xm.rows(), xm.cols());
  return out;
}

inline MinEigResult min_hessian_eig(const Eigen::Ref<const FactorMatrix>& x,
                                    const ObjectiveConfig& cfg) {
  return min_hessian_eig(x, cfg,
                         default_eig_tol(hessian_norm_estimate(x, cfg)));
}

// Shifted power iteration: c = ||H|| estimate, then power iteration on
// c I - H. Cap 50 * dr iterations. Slower than Lanczos when the bottom of
// the spectrum is clustered; kept as an independent cross-check.
inline MinEigResult min_hessian_eig_power(
    const Eigen::Ref<const FactorMatrix>& x, const ObjectiveConfig& cfg,
    double tol, int max_iters = 0) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("min_hessian_eig_power: tol <= 0");
  }
  const FactorMatrix xm = x;
  const Eigen::Index n = xm.size();
  MinEigResult out;
  if (n == 0) return out;
  const int cap = max_iters > 0 ? max_iters : static_cast<int>(50 * n);
  // The norm estimate from plain power iteration can undershoot; the
  // margin keeps c I - H positive semidefinite.
  const double norm = hessian_norm_estimate(xm, cfg, 100);
  const double shift = 1.1 * norm + 1e-12;
  out.norm_estimate = norm;

  Eigen::VectorXd v =
      detail::start_vector(n, detail::kSpectrumSeed ^ 0xabcdefULL).normalized();
  for (int it = 0; it < cap; ++it) {
    const Eigen::VectorXd hv = detail::apply_hessian(xm, v, cfg);
    const double theta = v.dot(hv);
    out.lambda_min = theta;
    out.residual = (hv - theta * v).norm();
    out.iterations = it + 1;
    if (out.residual <= tol) {
      out.exact = true;
      break;
    }
    Eigen::VectorXd w = shift * v - hv;
    const double wn = w.norm();
    if (wn == 0.0) {
      out.exact = true;
      break;
    }
    v = w / wn;
  }
  out.witness = detail::as_factor(v, xm.rows(), xm.cols());
  return out;
}

}  // namespace mcland

#endif  // MCLAND_SPECTRUM_HPP_
