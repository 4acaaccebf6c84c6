#pragma once

// Independent reference computations shared by the unit tests. Nothing here
// calls into the library's semigroup or projection code.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "juntakit/spaces.hpp"

namespace oracle {

/// e^{A} by scaling and squaring with a degree-20 Taylor polynomial.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.25) {
    scale *= 0.5;
    ++squarings;
  }
  const Eigen::MatrixXd b = a * scale;
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// Generator of a product space with product normalization, built from the
/// factor measures: L = Σ_i (E_i - Id), E_i integrating out coordinate i.
inline Eigen::MatrixXd product_generator(const juntakit::MarkovSpace& space) {
  const auto n = space.size();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) {
    const auto c = space.coordinates(x);
    for (std::size_t i = 0; i < space.dimension(); ++i) {
      const auto mu = space.coordinate_measure(i);
      const auto base = c;
      for (std::size_t v = 0; v < mu.size(); ++v) {
        auto y = base;
        // Cubes label digits by ±1, other products by residues.
        y[i] = space.kind() == juntakit::SpaceKind::BiasedCube ? (v == 0 ? -1 : 1) : static_cast<int>(v);
        l(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(space.index_of(y))) += mu[v];
      }
      l(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)) -= 1.0;
    }
  }
  return l;
}

/// Π_T f on a product space by explicit summation over the fibres.
inline std::vector<double> product_average(const juntakit::MarkovSpace& space, std::span<const double> f,
                                           const std::vector<std::size_t>& T) {
  std::vector<double> out(space.size(), 0.0);
  for (std::size_t x = 0; x < space.size(); ++x) {
    // Enumerate assignments of the coordinates in T.
    std::vector<std::size_t> digit(T.size(), 0);
    while (true) {
      auto y = space.coordinates(x);
      double w = 1.0;
      for (std::size_t a = 0; a < T.size(); ++a) {
        const auto mu = space.coordinate_measure(T[a]);
        y[T[a]] = space.kind() == juntakit::SpaceKind::BiasedCube ? (digit[a] == 0 ? -1 : 1)
                                                                   : static_cast<int>(digit[a]);
        w *= mu[digit[a]];
      }
      out[x] += w * f[space.index_of(y)];
      std::size_t a = 0;
      for (; a < T.size(); ++a) {
        if (++digit[a] < space.coordinate_measure(T[a]).size()) break;
        digit[a] = 0;
      }
      if (a == T.size()) break;
    }
  }
  return out;
}

inline double expectation(const juntakit::MarkovSpace& space, std::span<const double> f) {
  double s = 0.0;
  for (std::size_t x = 0; x < space.size(); ++x) s += space.measure()[x] * f[x];
  return s;
}

/// Swap of positions i and j in a 0/1 vector or permutation.
inline std::vector<int> swapped(std::vector<int> c, std::size_t i, std::size_t j) {
  std::swap(c[i], c[j]);
  return c;
}

inline std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

/// Probabilists' Hermite polynomial He_k.
inline double hermite(std::size_t k, double x) {
  if (k == 0) return 1.0;
  double a = 1.0, b = x;
  for (std::size_t j = 1; j < k; ++j) {
    const double c = x * b - static_cast<double>(j) * a;
    a = b;
    b = c;
  }
  return b;
}

inline double normal_density(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0)); }

}  // namespace oracle
