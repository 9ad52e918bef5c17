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

// The regularized completion objective
//
//   f(X) = 1/2 sum_{(i,j) in Omega} (M_ij - <X_i, X_j>)^2 + lambda R(X),
//   R(X) = sum_i r(||X_i||),  r(t) = (t - alpha)^4 for t >= alpha, else 0,
//
// with its gradient and two independent second-order routes: the Hessian
// quadratic form and the matrix-free Hessian-vector product.

#ifndef MCLAND_OBJECTIVE_HPP_
#define MCLAND_OBJECTIVE_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcland/instance.hpp"
#include "mcland/linalg.hpp"

namespace mcland {

// Binds hyperparameters to an observation. The observation is held by
// reference and must outlive the config.
class ObjectiveConfig {
 public:
  ObjectiveConfig(const Observation& obs, HyperParams hyper)
      : obs_(&obs), hyper_(hyper) {
    hyper_.validate();
  }

  const Observation& obs() const { return *obs_; }
  const ObservationMask& mask() const { return obs_->mask; }
  const HyperParams& hyper() const { return hyper_; }
  double alpha() const { return hyper_.alpha; }
  double lambda() const { return hyper_.lambda; }

 private:
  const Observation* obs_;
  HyperParams hyper_;
};

struct EvalBreakdown {
  double data_term = 0.0;
  // Unweighted R(X); total = data_term + lambda * reg_term.
  double reg_term = 0.0;
  double total = 0.0;
};

struct RegRow {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// Quartic hinge and its first two derivatives; all three vanish at alpha.
inline RegRow reg_row(double t, double alpha) {
  if (t < alpha) return {};
  const double s = t - alpha;
  const double s2 = s * s;
  return {s2 * s2, 4.0 * s2 * s, 12.0 * s2};
}

inline double regularizer(const Eigen::Ref<const FactorMatrix>& x,
                          double alpha) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    sum += reg_row(x.row(i).norm(), alpha).value;
  }
  return sum;
}

// grad R(X) = Gamma X with Gamma_ii = r'(||X_i||) / ||X_i||.
inline FactorMatrix reg_gradient(const Eigen::Ref<const FactorMatrix>& x,
                                 double alpha) {
  FactorMatrix g = FactorMatrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double t = x.row(i).norm();
    if (t <= alpha || t == 0.0) continue;
    g.row(i) = (reg_row(t, alpha).d1 / t) * x.row(i);
  }
  return g;
}

// Row block of the regularizer Hessian applied to V:
//   r''(t) P_par v + (r'(t) / t) P_perp v,  t = ||X_i||.
inline FactorMatrix reg_hessian_vecprod(const Eigen::Ref<const FactorMatrix>& x,
                                        const Eigen::Ref<const FactorMatrix>& v,
                                        double alpha) {
  FactorMatrix out = FactorMatrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double t = x.row(i).norm();
    if (t <= alpha || t == 0.0) continue;
    const RegRow rr = reg_row(t, alpha);
    const Eigen::RowVectorXd u = x.row(i) / t;
    const double along = u.dot(v.row(i));
    out.row(i) = rr.d2 * along * u + (rr.d1 / t) * (v.row(i) - along * u);
  }
  return out;
}

inline double reg_hessian_quadratic(const Eigen::Ref<const FactorMatrix>& x,
                                    const Eigen::Ref<const FactorMatrix>& v,
                                    double alpha) {
  double q = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double t = x.row(i).norm();
    if (t <= alpha || t == 0.0) continue;
    const RegRow rr = reg_row(t, alpha);
    const double along = x.row(i).dot(v.row(i)) / t;
    const double vv = v.row(i).squaredNorm();
    q += rr.d2 * along * along + (rr.d1 / t) * (vv - along * along);
  }
  return q;
}

namespace detail {

inline void check_shape(const Eigen::Ref<const FactorMatrix>& x,
                        const ObjectiveConfig& cfg, const char* what) {
  if (x.rows() != cfg.mask().dim()) {
    throw DimensionError(std::string(what) + ": X has " +
                         std::to_string(x.rows()) +
                         " rows, observation dimension is " +
                         std::to_string(cfg.mask().dim()));
  }
}

// Residuals e_k = <X_i, X_j> - M_ij over stored pairs. xt is X^T so that
// rows of X are contiguous columns.
inline std::vector<double> residuals(const Eigen::MatrixXd& xt,
                                     const Observation& obs) {
  const auto& mask = obs.mask;
  std::vector<double> e(mask.size());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    e[k] = xt.col(mask.pair_row(k)).dot(xt.col(mask.pair_col(k))) -
           obs.values[k];
  }
  return e;
}

}  // namespace detail

// Only masked Gram entries are formed: O(|Omega| r + d r).
inline EvalBreakdown objective(const Eigen::Ref<const FactorMatrix>& x,
                               const ObjectiveConfig& cfg) {
  detail::check_shape(x, cfg, "objective");
  const Eigen::MatrixXd xt = x.transpose();
  const auto e = detail::residuals(xt, cfg.obs());
  EvalBreakdown b;
  for (double v : e) b.data_term += v * v;
  b.data_term *= 0.5;
  b.reg_term = regularizer(x, cfg.alpha());
  b.total = b.data_term + cfg.lambda() * b.reg_term;
  return b;
}

// 2 P_Omega(X X^T - M) X, the data part of the gradient.
inline FactorMatrix data_gradient(const Eigen::Ref<const FactorMatrix>& x,
                                  const ObjectiveConfig& cfg) {
  detail::check_shape(x, cfg, "gradient");
  const auto& mask = cfg.mask();
  const Eigen::MatrixXd xt = x.transpose();
  const auto e = detail::residuals(xt, cfg.obs());
  Eigen::MatrixXd gt = Eigen::MatrixXd::Zero(xt.rows(), xt.cols());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    gt.col(mask.pair_row(k)) += (2.0 * e[k]) * xt.col(mask.pair_col(k));
  }
  return gt.transpose();
}

// grad f = 2 P_Omega(X X^T - M) X + lambda grad R(X).
inline FactorMatrix gradient(const Eigen::Ref<const FactorMatrix>& x,
                             const ObjectiveConfig& cfg) {
  FactorMatrix g = data_gradient(x, cfg);
  if (cfg.lambda() != 0.0) g += cfg.lambda() * reg_gradient(x, cfg.alpha());
  return g;
}

// Unbiased estimate of the data gradient from a multiset of stored pair
// indices, scaled by |Omega| / batch. Each sampled ordered pair (i, j)
// contributes e_ij X_j to row i and e_ij X_i to row j.
inline FactorMatrix stochastic_data_gradient(
    const Eigen::Ref<const FactorMatrix>& x, const ObjectiveConfig& cfg,
    std::span<const std::size_t> pair_indices) {
  detail::check_shape(x, cfg, "stochastic_data_gradient");
  FactorMatrix g = FactorMatrix::Zero(x.rows(), x.cols());
  if (pair_indices.empty()) return g;
  const auto& mask = cfg.mask();
  const auto& values = cfg.obs().values;
  for (std::size_t k : pair_indices) {
    const int i = mask.pair_row(k);
    const int j = mask.pair_col(k);
    const double e = x.row(i).dot(x.row(j)) - values[k];
    g.row(i) += e * x.row(j);
    g.row(j) += e * x.row(i);
  }
  g *= static_cast<double>(mask.size()) /
       static_cast<double>(pair_indices.size());
  return g;
}

// <V, Hess f(X) V> assembled term by term:
//   ||P_Omega(V X^T + X V^T)||_F^2 - 2 <P_Omega(M - X X^T), V V^T>
//     + lambda <V, Hess R(X) V>.
inline double hessian_quadratic(const Eigen::Ref<const FactorMatrix>& x,
                                const Eigen::Ref<const FactorMatrix>& v,
                                const ObjectiveConfig& cfg) {
  detail::check_shape(x, cfg, "hessian_quadratic");
  if (v.rows() != x.rows() || v.cols() != x.cols()) {
    throw DimensionError("hessian_quadratic: V and X differ in shape");
  }
  const auto& mask = cfg.mask();
  const auto& values = cfg.obs().values;
  double cross = 0.0;
  double curvature = 0.0;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const int i = mask.pair_row(k);
    const int j = mask.pair_col(k);
    const double a = v.row(i).dot(x.row(j)) + x.row(i).dot(v.row(j));
    cross += a * a;
    curvature += (values[k] - x.row(i).dot(x.row(j))) * v.row(i).dot(v.row(j));
  }
  double q = cross - 2.0 * curvature;
  if (cfg.lambda() != 0.0) {
    q += cfg.lambda() * reg_hessian_quadratic(x, v, cfg.alpha());
  }
  return q;
}

// H[V] = 2 P_Omega(V X^T + X V^T) X + 2 P_Omega(X X^T - M) V
//        + lambda Hess R(X)[V].
inline FactorMatrix hessian_vecprod(const Eigen::Ref<const FactorMatrix>& x,
                                    const Eigen::Ref<const FactorMatrix>& v,
                                    const ObjectiveConfig& cfg) {
  detail::check_shape(x, cfg, "hessian_vecprod");
  if (v.rows() != x.rows() || v.cols() != x.cols()) {
    throw DimensionError("hessian_vecprod: V and X differ in shape");
  }
  const auto& mask = cfg.mask();
  const Eigen::MatrixXd xt = x.transpose();
  const Eigen::MatrixXd vt = v.transpose();
  const auto e = detail::residuals(xt, cfg.obs());
  Eigen::MatrixXd ht = Eigen::MatrixXd::Zero(xt.rows(), xt.cols());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const int i = mask.pair_row(k);
    const int j = mask.pair_col(k);
    const double a = vt.col(i).dot(xt.col(j)) + xt.col(i).dot(vt.col(j));
    ht.col(i) += (2.0 * a) * xt.col(j) + (2.0 * e[k]) * vt.col(j);
  }
  FactorMatrix h = ht.transpose();
  if (cfg.lambda() != 0.0) {
    h += cfg.lambda() * reg_hessian_vecprod(x, v, cfg.alpha());
  }
  return h;
}

}  // namespace mcland

#endif  // MCLAND_OBJECTIVE_HPP_
