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

// Reproducible random streams. Every consumer derives its own substream from
// (seed, purpose tag, index) so results never depend on execution order.

#ifndef MCLAND_RNG_HPP_
#define MCLAND_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace mcland {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a.
inline constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                           std::string_view tag,
                                           std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ hash_tag(tag)) + splitmix64(index));
}

inline Rng make_rng(std::uint64_t seed, std::string_view tag,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(seed, tag, index));
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                                       double stddev, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = stddev * n(rng);
  }
  return m;
}

// Uniform point in the Frobenius ball of the given radius.
inline Eigen::MatrixXd uniform_ball(Eigen::Index rows, Eigen::Index cols,
                                    double radius, Rng& rng) {
  Eigen::MatrixXd g = gaussian_matrix(rows, cols, 1.0, rng);
  const double n = g.norm();
  if (n == 0.0) return g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double scale =
      radius * std::pow(u(rng), 1.0 / static_cast<double>(g.size())) / n;
  return g * scale;
}

}  // namespace mcland

#endif  // MCLAND_RNG_HPP_
