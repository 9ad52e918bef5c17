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

// Dense primitives shared by every other module: the symmetric observation
// mask, masked projection, norms, extreme singular values and orthogonal
// (Procrustes) alignment.

#ifndef MCLAND_LINALG_HPP_
#define MCLAND_LINALG_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mcland {

// Row-major semantics are irrelevant to callers; Eigen's column-major
// storage is used throughout.
using DenseMatrix = Eigen::MatrixXd;
// A d x r factor (ground truth Z or iterate X).
using FactorMatrix = Eigen::MatrixXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& a,
                           const char* what) {
  if (!a.allFinite()) {
    throw std::invalid_argument(std::string(what) +
                                ": matrix has non-finite entries");
  }
}

inline void require_factor(const Eigen::Ref<const Eigen::MatrixXd>& x,
                           const char* what) {
  if (x.cols() > x.rows()) {
    throw DimensionError(std::string(what) + ": rank exceeds dimension");
  }
  require_finite(x, what);
}

// Symmetric set of observed ordered index pairs. Each unordered pair {i, j}
// is stored in both orders, so sums over the mask follow the ordered-pair
// convention of the objective. Pairs are kept in CSR order (row-major,
// columns ascending); the position of a pair in that order is its index.
class ObservationMask {
 public:
  ObservationMask() = default;

  // `unordered` holds pairs with i <= j; duplicates are rejected.
  static ObservationMask from_unordered(
      int d, double p, std::vector<std::pair<int, int>> unordered) {
    std::vector<std::pair<int, int>> ordered;
    ordered.reserve(2 * unordered.size());
    for (auto [i, j] : unordered) {
      if (i > j) std::swap(i, j);
      ordered.emplace_back(i, j);
      if (i != j) ordered.emplace_back(j, i);
    }
    return from_pairs(d, p, std::move(ordered));
  }

  // Validates range and symmetry of an ordered pair list.
  static ObservationMask from_pairs(int d, double p,
                                    std::vector<std::pair<int, int>> pairs) {
    if (d < 0) throw DimensionError("mask dimension must be non-negative");
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("mask probability must lie in [0, 1]");
    }
    for (const auto& [i, j] : pairs) {
      if (i < 0 || j < 0 || i >= d || j >= d) {
        throw DimensionError("mask index out of range");
      }
    }
    std::sort(pairs.begin(), pairs.end());
    if (std::adjacent_find(pairs.begin(), pairs.end()) != pairs.end()) {
      throw std::invalid_argument("mask contains duplicate pairs");
    }
    ObservationMask m;
    m.d_ = d;
    m.p_ = p;
    m.offsets_.assign(static_cast<std::size_t>(d) + 1, 0);
    m.rows_.reserve(pairs.size());
    m.cols_.reserve(pairs.size());
    for (const auto& [i, j] : pairs) {
      ++m.offsets_[static_cast<std::size_t>(i) + 1];
      m.rows_.push_back(i);
      m.cols_.push_back(j);
    }
    for (int i = 0; i < d; ++i) m.offsets_[i + 1] += m.offsets_[i];
    for (const auto& [i, j] : pairs) {
      if (!m.contains(j, i)) {
        throw std::invalid_argument("mask is not symmetric");
      }
    }
    return m;
  }

  static ObservationMask full(int d, bool include_diagonal = true) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        if (i != j || include_diagonal) pairs.emplace_back(i, j);
      }
    }
    return from_pairs(d, 1.0, std::move(pairs));
  }

  static ObservationMask empty(int d) { return from_pairs(d, 0.0, {}); }

  int dim() const { return d_; }
  double p() const { return p_; }
  // Number of stored ordered pairs, |Omega|.
  std::size_t size() const { return cols_.size(); }

  // Row support S_i = {j : (i, j) observed}, ascending.
  std::span<const int> row(int i) const {
    return {cols_.data() + offsets_[i],
            static_cast<std::size_t>(offsets_[i + 1] - offsets_[i])};
  }
  std::size_t row_begin(int i) const { return offsets_[i]; }
  std::size_t row_end(int i) const { return offsets_[i + 1]; }

  int pair_row(std::size_t k) const { return rows_[k]; }
  int pair_col(std::size_t k) const { return cols_[k]; }

  bool contains(int i, int j) const {
    const auto r = row(i);
    return std::binary_search(r.begin(), r.end(), j);
  }

  // Position of (i, j) in CSR order, or -1.
  std::ptrdiff_t index_of(int i, int j) const {
    const auto r = row(i);
    const auto it = std::lower_bound(r.begin(), r.end(), j);
    if (it == r.end() || *it != j) return -1;
    return static_cast<std::ptrdiff_t>(offsets_[i]) + (it - r.begin());
  }

  std::size_t diagonal_count() const {
    std::size_t n = 0;
    for (std::size_t k = 0; k < size(); ++k) n += rows_[k] == cols_[k];
    return n;
  }

  // Number of distinct unordered pairs {i, j} (diagonal counted once).
  std::size_t unordered_count() const {
    const std::size_t diag = diagonal_count();
    return diag + (size() - diag) / 2;
  }

  // 0/1 indicator matrix of the mask.
  DenseMatrix indicator() const {
    DenseMatrix m = DenseMatrix::Zero(d_, d_);
    for (std::size_t k = 0; k < size(); ++k) m(rows_[k], cols_[k]) = 1.0;
    return m;
  }

  friend bool operator==(const ObservationMask& a, const ObservationMask& b) {
    return a.d_ == b.d_ && a.p_ == b.p_ && a.rows_ == b.rows_ &&
           a.cols_ == b.cols_;
  }

 private:
  int d_ = 0;
  double p_ = 0.0;
  std::vector<std::size_t> offsets_{0};
  std::vector<int> rows_;
  std::vector<int> cols_;
};

// P_Omega(A): A on the mask, zero elsewhere.
inline DenseMatrix project_mask(const Eigen::Ref<const DenseMatrix>& a,
                                const ObservationMask& mask) {
  if (a.rows() != mask.dim() || a.cols() != mask.dim()) {
    throw DimensionError("project_mask: matrix is " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", mask dimension is " +
                         std::to_string(mask.dim()));
  }
  DenseMatrix out = DenseMatrix::Zero(a.rows(), a.cols());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const int i = mask.pair_row(k);
    const int j = mask.pair_col(k);
    out(i, j) = a(i, j);
  }
  return out;
}

struct PowerIterationOptions {
  double rel_tol = 1e-10;
  int max_iters = 10000;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

namespace detail {

// Deterministic pseudo-random start vector (splitmix64 stream).
inline Eigen::VectorXd start_vector(Eigen::Index n, std::uint64_t seed) {
  Eigen::VectorXd v(n);
  std::uint64_t s = seed;
  for (Eigen::Index i = 0; i < n; ++i) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    v(i) = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
  }
  return v;
}

}  // namespace detail

// Largest singular value via power iteration on A^T A. Stops when the
// eigen-residual ||A^T A v - theta v|| falls below rel_tol * theta.
inline double spectral_norm(const Eigen::Ref<const DenseMatrix>& a,
                            const PowerIterationOptions& opts = {}) {
  if (a.size() == 0) return 0.0;
  Eigen::VectorXd v = detail::start_vector(a.cols(), opts.seed);
  v.normalize();
  double theta = 0.0;
  for (int it = 0; it < opts.max_iters; ++it) {
    Eigen::VectorXd w = a.transpose() * (a * v);
    theta = v.dot(w);
    if (theta <= 0.0) {
      // v is (numerically) in the null space; either A = 0 or the start
      // vector was unlucky. A zero matrix is the only practical case.
      if (a.cwiseAbs().maxCoeff() == 0.0) return 0.0;
      v = detail::start_vector(a.cols(), opts.seed + it + 1).normalized();
      continue;
    }
    const double residual = (w - theta * v).norm();
    v = w / w.norm();
    if (residual <= opts.rel_tol * theta) break;
  }
  return std::sqrt(std::max(theta, 0.0));
}

struct MatrixNorms {
  double fro = 0.0;
  double spectral = 0.0;
  double two_to_inf = 0.0;
  double elem_inf = 0.0;
};

inline MatrixNorms matrix_norms(const Eigen::Ref<const DenseMatrix>& a,
                                const PowerIterationOptions& opts = {}) {
  require_finite(a, "matrix_norms");
  MatrixNorms n;
  if (a.size() == 0) return n;
  n.fro = a.norm();
  n.spectral = spectral_norm(a, opts);
  n.two_to_inf = a.rowwise().norm().maxCoeff();
  n.elem_inf = a.cwiseAbs().maxCoeff();
  return n;
}

// Spectral norm from a full symmetric eigendecomposition of A^T A. Used
// where many dense norms are needed and a fixed cost is preferable.
inline double spectral_norm_dense(const Eigen::Ref<const DenseMatrix>& a) {
  if (a.size() == 0) return 0.0;
  const DenseMatrix gram =
      a.rows() >= a.cols() ? DenseMatrix(a.transpose() * a)
                           : DenseMatrix(a * a.transpose());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
}

struct SingularExtremes {
  double sigma_max = 0.0;
  double sigma_min = 0.0;
};

// Extreme singular values of a d x r factor from the r x r Gram matrix.
inline SingularExtremes singular_extremes(
    const Eigen::Ref<const FactorMatrix>& x) {
  if (x.cols() < 1) throw DimensionError("singular_extremes: r must be >= 1");
  const DenseMatrix gram = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(gram, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {std::sqrt(std::max(ev(ev.size() - 1), 0.0)),
          std::sqrt(std::max(ev(0), 0.0))};
}

// Max row l2 norm, ||X||_{2->inf}.
inline double max_row_norm(const Eigen::Ref<const FactorMatrix>& x) {
  if (x.rows() == 0) return 0.0;
  return x.rowwise().norm().maxCoeff();
}

struct ProcrustesResult {
  DenseMatrix rotation;
  double residual = 0.0;
};

// Orthonormal R minimizing ||X - Z R||_F: the polar factor U V^T of
// Z^T X = U S V^T. A full SVD supplies orthonormal completions on the null
// space when Z^T X is rank deficient.
inline ProcrustesResult procrustes_align(
    const Eigen::Ref<const FactorMatrix>& x,
    const Eigen::Ref<const FactorMatrix>& z) {
  if (x.rows() != z.rows() || x.cols() != z.cols()) {
    throw DimensionError("procrustes_align: X and Z differ in shape");
  }
  const DenseMatrix cross = z.transpose() * x;
  Eigen::JacobiSVD<DenseMatrix> svd(cross,
                                    Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesResult out;
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  out.residual = (x - z * out.rotation).norm();
  return out;
}

}  // namespace mcland

#endif  // MCLAND_LINALG_HPP_
