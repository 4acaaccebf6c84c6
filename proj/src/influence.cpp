#include "juntakit/influence.hpp"

#include <algorithm>
#include <cmath>

#include "juntakit/detail/tensor.hpp"
#include "juntakit/errors.hpp"

namespace juntakit {

namespace {

struct Norms {
  double l1 = 0.0;
  double sup = 0.0;
};

Norms norms_of(std::span<const double> d, std::span<const double> mu) {
  Norms n;
  for (std::size_t x = 0; x < d.size(); ++x) {
    n.l1 += mu[x] * std::abs(d[x]);
    n.sup = std::max(n.sup, std::abs(d[x]));
  }
  return n;
}

bool is_slice(const MarkovSpace& s) { return s.kind() == SpaceKind::Slice; }

void require_transposition_space(const MarkovSpace& space) {
  if (!is_slice(space)) throw StructureError(space.descriptor() + " is not a slice");
}

std::size_t prefix_or_n(const MarkovSpace& space, std::optional<std::size_t> k) {
  const std::size_t n = space.dimension();
  if (!k) return n;
  if (*k < 1 || *k > n) throw DomainError("prefix size k must lie in [1, n]");
  return *k;
}

// Torus difference along +e_i.
std::vector<double> torus_forward(const MarkovSpace& space, const FunctionTable& f, std::size_t i) {
  for (const auto& mv : space.schreier().moves)
    if (mv.coordinate == static_cast<int>(i) && mv.label.front() == '+') {
      std::vector<double> d(f.size());
      for (std::size_t x = 0; x < d.size(); ++x) d[x] = f[mv.image[x]] - f[x];
      return d;
    }
  throw DomainError("coordinate index out of range");
}

}  // namespace

double InfluenceProfile::max_sup_norm() const {
  double m = 0.0;
  for (double s : sup_norms) m = std::max(m, s);
  return m;
}

double coordinate_influence(const MarkovSpace& space, const FunctionTable& f, std::size_t i) {
  require_on_space(space, f);
  const auto li = coordinate_laplacian(f, i);
  return norms_of(li.values(), space.measure()).l1;
}

double generator_influence(const MarkovSpace& space, const FunctionTable& f, std::size_t s) {
  require_on_space(space, f);
  const auto d = move_difference(f, s);
  return norms_of(d.values(), space.measure()).l1;
}

double flip_influence(const MarkovSpace& space, const FunctionTable& f, std::size_t i) {
  require_on_space(space, f);
  if (!space.is_product()) throw StructureError(space.descriptor() + " is not a cube");
  for (auto m : space.shape())
    if (m != 2) throw StructureError(space.descriptor() + " is not a cube");
  if (i >= space.dimension()) throw DomainError("coordinate index out of range");
  const std::size_t bit = std::size_t{1} << i;
  const auto mu = space.measure();
  double acc = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) acc += mu[x] * std::abs(f[x] - f[x ^ bit]);
  return acc;
}

std::size_t transposition_index(std::size_t n, std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  if (i == j || j >= n) throw DomainError("invalid transposition");
  // Moves are listed as (0,1),(0,2),...,(0,n-1),(1,2),...
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

double slice_total_influence(const MarkovSpace& space, const FunctionTable& f,
                             std::optional<std::size_t> k) {
  require_transposition_space(space);
  require_on_space(space, f);
  const std::size_t n = space.dimension();
  const std::size_t kk = prefix_or_n(space, k);
  double acc = 0.0;
  for (std::size_t i = 0; i < kk; ++i)
    for (std::size_t j = i + 1; j < kk; ++j)
      acc += generator_influence(space, f, transposition_index(n, i, j));
  return acc / static_cast<double>(kk);
}

double slice_quadratic_influence(const MarkovSpace& space, const FunctionTable& f,
                                 std::optional<std::size_t> k) {
  require_transposition_space(space);
  require_on_space(space, f);
  const std::size_t n = space.dimension();
  const std::size_t kk = prefix_or_n(space, k);
  const auto mu = space.measure();
  double acc = 0.0;
  for (std::size_t i = 0; i < kk; ++i)
    for (std::size_t j = i + 1; j < kk; ++j) {
      const auto d = move_difference(f, transposition_index(n, i, j));
      for (std::size_t x = 0; x < d.size(); ++x) acc += 0.5 * mu[x] * d[x] * d[x];
    }
  return acc / static_cast<double>(kk);
}

InfluenceProfile influence_profile(const MarkovSpace& space, const FunctionTable& f) {
  require_on_space(space, f);
  InfluenceProfile p;
  p.normalization = space.normalization();
  p.dimension = space.dimension();
  const auto mu = space.measure();
  if (space.is_product()) {
    p.kind = DirectionKind::Coordinate;
    for (std::size_t i = 0; i < space.dimension(); ++i) {
      const auto nm = norms_of(coordinate_laplacian(f, i).values(), mu);
      p.labels.push_back("x" + std::to_string(i + 1));
      p.entries.push_back(nm.l1);
      p.sup_norms.push_back(nm.sup);
    }
  } else if (space.kind() == SpaceKind::Torus) {
    p.kind = DirectionKind::Coordinate;
    for (std::size_t i = 0; i < space.dimension(); ++i) {
      const auto nm = norms_of(torus_forward(space, f, i), mu);
      p.labels.push_back("x" + std::to_string(i + 1));
      p.entries.push_back(nm.l1);
      p.sup_norms.push_back(nm.sup);
    }
  } else {
    p.kind = is_slice(space) ? DirectionKind::Transposition : DirectionKind::Generator;
    const auto& moves = space.schreier().moves;
    for (std::size_t s = 0; s < moves.size(); ++s) {
      const auto nm = norms_of(move_difference(f, s).values(), mu);
      p.labels.push_back(moves[s].label);
      p.entries.push_back(nm.l1);
      p.sup_norms.push_back(nm.sup);
    }
  }
  for (double e : p.entries) p.total += e;
  if (p.kind == DirectionKind::Transposition) p.total /= static_cast<double>(space.dimension());
  return p;
}

}  // namespace juntakit
