#include "juntakit/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "juntakit/detail/tensor.hpp"
#include "juntakit/errors.hpp"

namespace juntakit {

namespace {

std::string fmt_param(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// Product of radices with overflow detection against the budget.
std::size_t checked_volume(std::size_t radix, std::size_t n, std::size_t budget,
                           const std::string& what) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (total > budget / radix) {
      throw CapacityError(what + " exceeds the state budget of " + std::to_string(budget));
    }
    total *= radix;
  }
  if (total > budget) {
    throw CapacityError(what + " exceeds the state budget of " + std::to_string(budget));
  }
  return total;
}

std::size_t factorial(std::size_t n) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

std::size_t colex_rank(std::uint64_t mask) {
  std::size_t rank = 0;
  std::size_t t = 0;
  for (std::size_t pos = 0; mask != 0; ++pos, mask >>= 1) {
    if (mask & 1u) {
      ++t;
      rank += binomial(pos, t);
    }
  }
  return rank;
}

std::size_t lehmer_rank(std::span<const int> perm) {
  const std::size_t n = perm.size();
  std::size_t rank = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t smaller = 0;
    for (std::size_t j = i + 1; j < n; ++j)
      if (perm[j] < perm[i]) ++smaller;
    rank += smaller * factorial(n - 1 - i);
  }
  return rank;
}

std::vector<int> lehmer_unrank(std::size_t rank, std::size_t n) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<int> perm;
  perm.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t f = factorial(n - 1 - i);
    const std::size_t q = rank / f;
    rank %= f;
    perm.push_back(pool[q]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(q));
  }
  return perm;
}

std::vector<std::uint64_t> slice_masks(std::size_t n, std::size_t k) {
  std::vector<std::uint64_t> masks;
  masks.reserve(binomial(n, k));
  // Gosper's hack enumerates weight-k masks in increasing (colex) order.
  std::uint64_t v = (std::uint64_t{1} << k) - 1;
  const std::uint64_t limit = std::uint64_t{1} << n;
  while (v < limit) {
    masks.push_back(v);
    const std::uint64_t t = v | (v - 1);
    v = (t + 1) | (((~t & -~t) - 1) >> (__builtin_ctzll(v) + 1));
  }
  return masks;
}

}  // namespace

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::GraphForm: return "graph";
    case Normalization::ProductForm: return "product";
    case Normalization::RescaledTorus: return "rescaled-torus";
  }
  return "?";
}

std::string to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::BiasedCube: return "cube";
    case SpaceKind::Product: return "product";
    case SpaceKind::Torus: return "torus";
    case SpaceKind::Slice: return "slice";
    case SpaceKind::SymmetricGroup: return "symmetric";
  }
  return "?";
}

MarkovSpace::MarkovSpace(Params params) : p_(std::move(params)) {}

const ProductStructure& MarkovSpace::product() const {
  if (!is_product()) throw StructureError(p_.descriptor + " is not a product space");
  return std::get<ProductStructure>(p_.structure);
}

const SchreierStructure& MarkovSpace::schreier() const {
  if (!is_schreier()) throw StructureError(p_.descriptor + " is not a Schreier space");
  return std::get<SchreierStructure>(p_.structure);
}

std::vector<double> MarkovSpace::coordinate_measure(std::size_t i) const {
  if (!has_coordinates()) throw StructureError(p_.descriptor + " has no coordinate layout");
  if (i >= p_.shape.size()) throw DomainError("coordinate index out of range");
  if (is_product()) return product().factors[i].measure;
  return std::vector<double>(p_.shape[i], 1.0 / static_cast<double>(p_.shape[i]));
}

double MarkovSpace::generator_scale() const noexcept {
  switch (p_.normalization) {
    case Normalization::RescaledTorus: return static_cast<double>(p_.dimension) / 2.0;
    case Normalization::ProductForm: return static_cast<double>(p_.dimension);
    case Normalization::GraphForm: return 1.0;
  }
  return 1.0;
}

std::vector<int> MarkovSpace::coordinates(std::size_t state) const {
  std::vector<int> c;
  switch (p_.kind) {
    case SpaceKind::BiasedCube:
      for (std::size_t i = 0; i < p_.dimension; ++i) c.push_back(((state >> i) & 1u) ? 1 : -1);
      break;
    case SpaceKind::Product:
    case SpaceKind::Torus: {
      std::size_t s = state;
      for (auto m : p_.shape) {
        c.push_back(static_cast<int>(s % m));
        s /= m;
      }
      break;
    }
    case SpaceKind::Slice: {
      // States are ranked in colex order; recover the mask by unranking.
      std::size_t r = state;
      std::uint64_t mask = 0;
      for (std::size_t t = p_.slice_weight; t >= 1; --t) {
        std::size_t pos = t - 1;
        while (binomial(pos + 1, t) <= r) ++pos;
        r -= binomial(pos, t);
        mask |= std::uint64_t{1} << pos;
      }
      for (std::size_t i = 0; i < p_.dimension; ++i) c.push_back(static_cast<int>((mask >> i) & 1u));
      break;
    }
    case SpaceKind::SymmetricGroup:
      c = lehmer_unrank(state, p_.dimension);
      break;
  }
  return c;
}

std::size_t MarkovSpace::index_of(std::span<const int> coords) const {
  switch (p_.kind) {
    case SpaceKind::BiasedCube: {
      std::size_t x = 0;
      for (std::size_t i = 0; i < coords.size(); ++i)
        if (coords[i] > 0) x |= std::size_t{1} << i;
      return x;
    }
    case SpaceKind::Product:
    case SpaceKind::Torus: {
      std::size_t x = 0;
      std::size_t stride = 1;
      for (std::size_t i = 0; i < coords.size(); ++i) {
        x += static_cast<std::size_t>(coords[i]) * stride;
        stride *= p_.shape[i];
      }
      return x;
    }
    case SpaceKind::Slice: {
      std::uint64_t mask = 0;
      for (std::size_t i = 0; i < coords.size(); ++i)
        if (coords[i]) mask |= std::uint64_t{1} << i;
      return colex_rank(mask);
    }
    case SpaceKind::SymmetricGroup:
      return lehmer_rank(coords);
  }
  return 0;
}

std::string MarkovSpace::state_label(std::size_t state) const {
  const auto c = coordinates(state);
  std::ostringstream os;
  if (p_.kind == SpaceKind::Slice) {
    for (int b : c) os << b;
    return os.str();
  }
  os << '(';
  for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << c[i];
  os << ')';
  return os.str();
}

std::vector<std::pair<std::size_t, double>> MarkovSpace::kernel_row(std::size_t x) const {
  std::vector<std::pair<std::size_t, double>> row;
  auto add = [&row](std::size_t y, double w) {
    for (auto& e : row)
      if (e.first == y) {
        e.second += w;
        return;
      }
    row.emplace_back(y, w);
  };
  if (is_product()) {
    const auto& factors = product().factors;
    const double n = static_cast<double>(factors.size());
    const auto strides = detail::strides_of(p_.shape);
    add(x, 1.0);
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const std::size_t m = p_.shape[i];
      const std::size_t xi = (x / strides[i]) % m;
      const std::size_t base = x - xi * strides[i];
      for (std::size_t yi = 0; yi < m; ++yi) {
        add(base + yi * strides[i], factors[i].measure[yi] / n);
      }
      add(x, -1.0 / n);
    }
  } else {
    for (const auto& mv : schreier().moves) add(mv.image[x], mv.weight);
  }
  std::sort(row.begin(), row.end());
  return row;
}

SpacePtr build_biased_cube(std::size_t n, double p, const SpaceConfig& config) {
  if (n < 1) throw DomainError("cube dimension must be at least 1");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("cube bias p must lie in (0,1)");
  const std::size_t total = checked_volume(2, n, config.state_budget, "cube 2^" + std::to_string(n));
  MarkovSpace::Params params;
  params.kind = SpaceKind::BiasedCube;
  params.descriptor = "cube:n=" + std::to_string(n) + ",p=" + fmt_param(p);
  params.normalization = Normalization::ProductForm;
  params.shape.assign(n, 2);
  params.dimension = n;
  params.bias = p;
  ProductStructure ps;
  // Digit 0 encodes x_i = -1 (mass p), digit 1 encodes x_i = +1 (mass 1-p).
  ps.factors.assign(n, ProductFactor{{p, 1.0 - p}});
  std::vector<std::span<const double>> fw;
  for (const auto& f : ps.factors) fw.emplace_back(f.measure);
  params.measure = detail::product_weights(params.shape, fw);
  (void)total;
  params.structure = std::move(ps);
  return std::make_shared<const MarkovSpace>(std::move(params));
}

SpacePtr build_product(std::vector<std::vector<double>> factor_measures, const SpaceConfig& config) {
  if (factor_measures.empty()) throw DomainError("product needs at least one factor");
  MarkovSpace::Params params;
  params.kind = SpaceKind::Product;
  std::ostringstream desc;
  desc << "product:m=";
  std::size_t total = 1;
  ProductStructure ps;
  for (std::size_t i = 0; i < factor_measures.size(); ++i) {
    auto& mu = factor_measures[i];
    if (mu.size() < 2) throw DomainError("product factors need at least two states");
    double s = 0.0;
    for (double w : mu) {
      if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("factor weights must be positive");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw DomainError("factor weights must sum to 1");
    if (total > config.state_budget / mu.size())
      throw CapacityError("product exceeds the state budget of " + std::to_string(config.state_budget));
    total *= mu.size();
    params.shape.push_back(mu.size());
    desc << (i ? "x" : "") << mu.size();
    ps.factors.push_back(ProductFactor{mu});
  }
  params.descriptor = desc.str();
  params.normalization = Normalization::ProductForm;
  params.dimension = factor_measures.size();
  std::vector<std::span<const double>> fw;
  for (const auto& f : ps.factors) fw.emplace_back(f.measure);
  params.measure = detail::product_weights(params.shape, fw);
  params.structure = std::move(ps);
  return std::make_shared<const MarkovSpace>(std::move(params));
}

SpacePtr build_torus(std::size_t n, std::size_t m, const SpaceConfig& config) {
  if (m < 2) throw DomainError("torus modulus m must be at least 2");
  if (n < 1) throw DomainError("torus dimension must be at least 1");
  const std::size_t total =
      checked_volume(m, n, config.state_budget, "torus " + std::to_string(m) + "^" + std::to_string(n));
  MarkovSpace::Params params;
  params.kind = SpaceKind::Torus;
  params.descriptor = "torus:n=" + std::to_string(n) + ",m=" + std::to_string(m);
  params.normalization = Normalization::RescaledTorus;
  params.shape.assign(n, m);
  params.dimension = n;
  params.modulus = m;
  params.measure.assign(total, 1.0 / static_cast<double>(total));
  const auto strides = detail::strides_of(params.shape);
  SchreierStructure ss;
  // For m = 2 the moves +e_i and -e_i coincide and are merged with doubled weight.
  const bool merged = (m == 2);
  const double w = merged ? 1.0 / static_cast<double>(n) : 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (int sign : {+1, -1}) {
      if (merged && sign < 0) continue;
      SchreierMove mv;
      mv.label = std::string(sign > 0 ? "+e" : "-e") + std::to_string(i + 1);
      mv.weight = w;
      mv.coordinate = static_cast<int>(i);
      mv.image.resize(total);
      for (std::size_t x = 0; x < total; ++x) {
        const std::size_t xi = (x / strides[i]) % m;
        const std::size_t yi = (xi + (sign > 0 ? 1 : m - 1)) % m;
        mv.image[x] = static_cast<std::uint32_t>(x - xi * strides[i] + yi * strides[i]);
      }
      ss.moves.push_back(std::move(mv));
    }
  }
  for (std::size_t s = 0; s < ss.moves.size(); ++s) {
    if (merged) {
      ss.moves[s].inverse = s;
    } else {
      ss.moves[s].inverse = (s % 2 == 0) ? s + 1 : s - 1;
    }
  }
  params.structure = std::move(ss);
  return std::make_shared<const MarkovSpace>(std::move(params));
}

SpacePtr build_slice(std::size_t n, std::size_t k, const SpaceConfig& config) {
  if (n < 2 || n > 62) throw DomainError("slice dimension n must lie in [2, 62]");
  if (k < 1 || k > n - 1) throw DomainError("slice weight k must lie in [1, n-1]");
  const std::uint64_t total = binomial(n, k);
  if (total > config.state_budget)
    throw CapacityError("slice C(" + std::to_string(n) + "," + std::to_string(k) +
                        ") exceeds the state budget of " + std::to_string(config.state_budget));
  const auto masks = slice_masks(n, k);
  MarkovSpace::Params params;
  params.kind = SpaceKind::Slice;
  params.descriptor = "slice:n=" + std::to_string(n) + ",k=" + std::to_string(k);
  params.normalization = Normalization::GraphForm;
  params.dimension = n;
  params.slice_weight = k;
  params.measure.assign(masks.size(), 1.0 / static_cast<double>(masks.size()));
  SchreierStructure ss;
  const double w = 1.0 / static_cast<double>(binomial(n, 2));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      SchreierMove mv;
      mv.label = "t" + std::to_string(i + 1) + "," + std::to_string(j + 1);
      mv.weight = w;
      mv.first = static_cast<int>(i);
      mv.second = static_cast<int>(j);
      mv.inverse = ss.moves.size();
      mv.image.resize(masks.size());
      for (std::size_t x = 0; x < masks.size(); ++x) {
        std::uint64_t y = masks[x];
        const bool bi = (y >> i) & 1u;
        const bool bj = (y >> j) & 1u;
        if (bi != bj) y ^= (std::uint64_t{1} << i) | (std::uint64_t{1} << j);
        mv.image[x] = static_cast<std::uint32_t>(colex_rank(y));
      }
      ss.moves.push_back(std::move(mv));
    }
  }
  params.structure = std::move(ss);
  return std::make_shared<const MarkovSpace>(std::move(params));
}

SpacePtr build_symmetric_group(std::size_t n, const SpaceConfig& config) {
  if (n < 2) throw DomainError("symmetric group needs n >= 2");
  if (n > 20 || factorial(n) > config.state_budget)
    throw CapacityError("symmetric group S_" + std::to_string(n) + " exceeds the state budget of " +
                        std::to_string(config.state_budget));
  const std::size_t total = factorial(n);
  MarkovSpace::Params params;
  params.kind = SpaceKind::SymmetricGroup;
  params.descriptor = "symmetric:n=" + std::to_string(n);
  params.normalization = Normalization::GraphForm;
  params.dimension = n;
  params.measure.assign(total, 1.0 / static_cast<double>(total));
  std::vector<std::vector<int>> perms(total);
  for (std::size_t r = 0; r < total; ++r) perms[r] = lehmer_unrank(r, n);
  SchreierStructure ss;
  const double w = 1.0 / static_cast<double>(binomial(n, 2));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      SchreierMove mv;
      mv.label = "t" + std::to_string(i + 1) + "," + std::to_string(j + 1);
      mv.weight = w;
      mv.first = static_cast<int>(i);
      mv.second = static_cast<int>(j);
      mv.inverse = ss.moves.size();
      mv.image.resize(total);
      for (std::size_t x = 0; x < total; ++x) {
        auto y = perms[x];
        std::swap(y[i], y[j]);  // right multiplication x ∘ τ_ij
        mv.image[x] = static_cast<std::uint32_t>(lehmer_rank(y));
      }
      ss.moves.push_back(std::move(mv));
    }
  }
  params.structure = std::move(ss);
  return std::make_shared<const MarkovSpace>(std::move(params));
}

// ---------------------------------------------------------------------------

FunctionTable::FunctionTable(SpacePtr space, std::vector<double> values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw DimensionError("function table without a space");
  if (values_.size() != space_->size())
    throw DimensionError("function table has " + std::to_string(values_.size()) +
                         " values but " + space_->descriptor() + " has " +
                         std::to_string(space_->size()) + " states");
  for (double v : values_)
    if (!std::isfinite(v)) throw DomainError("function values must be finite");
}

FunctionTable FunctionTable::constant(SpacePtr space, double c) {
  const std::size_t n = space->size();
  return FunctionTable(std::move(space), std::vector<double>(n, c));
}

FunctionTable FunctionTable::tabulate(SpacePtr space,
                                      const std::function<double(std::span<const int>)>& fn) {
  std::vector<double> v(space->size());
  for (std::size_t x = 0; x < v.size(); ++x) {
    const auto c = space->coordinates(x);
    v[x] = fn(c);
  }
  return FunctionTable(std::move(space), std::move(v));
}

FunctionTable FunctionTable::operator-(const FunctionTable& other) const {
  require_same_space(*this, other);
  std::vector<double> v(values_);
  for (std::size_t x = 0; x < v.size(); ++x) v[x] -= other.values_[x];
  return FunctionTable(space_, std::move(v));
}

FunctionTable FunctionTable::operator+(const FunctionTable& other) const {
  require_same_space(*this, other);
  std::vector<double> v(values_);
  for (std::size_t x = 0; x < v.size(); ++x) v[x] += other.values_[x];
  return FunctionTable(space_, std::move(v));
}

FunctionTable FunctionTable::scaled(double factor) const {
  std::vector<double> v(values_);
  for (double& a : v) a *= factor;
  return FunctionTable(space_, std::move(v));
}

void require_same_space(const FunctionTable& a, const FunctionTable& b) {
  if (a.space_ptr() != b.space_ptr() && a.space().descriptor() != b.space().descriptor())
    throw DimensionError("functions live on different spaces: " + a.space().descriptor() +
                         " vs " + b.space().descriptor());
}

void require_on_space(const MarkovSpace& space, const FunctionTable& f) {
  if (&f.space() != &space && f.space().descriptor() != space.descriptor())
    throw DimensionError("function lives on " + f.space().descriptor() + ", expected " +
                         space.descriptor());
}

double mean(const FunctionTable& f) {
  const auto mu = f.space().measure();
  double s = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) s += mu[x] * f[x];
  return s;
}

double inner_product(const FunctionTable& f, const FunctionTable& g) {
  require_same_space(f, g);
  const auto mu = f.space().measure();
  double s = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) s += mu[x] * f[x] * g[x];
  return s;
}

double variance(const FunctionTable& f) {
  const double m = mean(f);
  const auto mu = f.space().measure();
  double s = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) s += mu[x] * (f[x] - m) * (f[x] - m);
  return s;
}

FunctionTable move_difference(const FunctionTable& f, std::size_t move) {
  const auto& moves = f.space().schreier().moves;
  if (move >= moves.size()) throw DomainError("unknown generator index " + std::to_string(move));
  const auto& image = moves[move].image;
  std::vector<double> d(f.size());
  for (std::size_t x = 0; x < d.size(); ++x) d[x] = f[image[x]] - f[x];
  return FunctionTable(f.space_ptr(), std::move(d));
}

FunctionTable coordinate_laplacian(const FunctionTable& f, std::size_t i) {
  const auto& space = f.space();
  const auto& ps = space.product();
  if (i >= ps.factors.size()) throw DomainError("coordinate index out of range");
  std::vector<double> avg(f.values().begin(), f.values().end());
  detail::integrate_axis(avg, space.shape(), i, ps.factors[i].measure);
  for (std::size_t x = 0; x < avg.size(); ++x) avg[x] -= f[x];
  return FunctionTable(f.space_ptr(), std::move(avg));
}

DirichletValue dirichlet_energy(const MarkovSpace& space, const FunctionTable& f) {
  require_on_space(space, f);
  const auto mu = space.measure();
  DirichletValue out;
  out.normalization = space.normalization();
  if (space.is_product()) {
    for (std::size_t i = 0; i < space.product().factors.size(); ++i) {
      const auto li = coordinate_laplacian(f, i);
      for (std::size_t x = 0; x < f.size(); ++x) out.energy += mu[x] * li[x] * li[x];
    }
    return out;
  }
  const double scale = space.generator_scale();
  for (const auto& mv : space.schreier().moves) {
    double acc = 0.0;
    for (std::size_t x = 0; x < f.size(); ++x) {
      const double d = f[mv.image[x]] - f[x];
      acc += mu[x] * d * d;
    }
    out.energy += 0.5 * mv.weight * acc;
  }
  out.energy *= scale;
  return out;
}

SpaceDiagnostics diagnose(const MarkovSpace& space) {
  SpaceDiagnostics d;
  const auto mu = space.measure();
  double total = 0.0;
  d.min_weight = std::numeric_limits<double>::infinity();
  for (double w : mu) {
    total += w;
    d.min_weight = std::min(d.min_weight, w);
  }
  d.mass_error = std::abs(total - 1.0);

  if (space.is_product()) {
    // Rank-one factor kernels K_i(x,y) = μ_i(y): check each factor directly.
    for (const auto& f : space.product().factors) {
      const auto& m = f.measure;
      double s = 0.0;
      for (double w : m) s += w;
      d.row_sum_error = std::max(d.row_sum_error, std::abs(s - 1.0));
      for (std::size_t y = 0; y < m.size(); ++y) {
        double inv = 0.0;
        for (std::size_t x = 0; x < m.size(); ++x) inv += m[y] * m[x];
        d.invariance_error = std::max(d.invariance_error, std::abs(inv - m[y]));
        for (std::size_t x = 0; x < m.size(); ++x)
          d.reversibility_error =
              std::max(d.reversibility_error, std::abs(m[y] * m[x] - m[x] * m[y]));
      }
    }
    return d;
  }

  const std::size_t n = space.size();
  std::vector<double> inflow(n, 0.0);
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
  for (std::size_t x = 0; x < n; ++x) {
    rows[x] = space.kernel_row(x);
    double s = 0.0;
    for (auto [y, k] : rows[x]) {
      inflow[y] += k * mu[x];
      s += k;
    }
    d.row_sum_error = std::max(d.row_sum_error, std::abs(s - 1.0));
  }
  for (std::size_t y = 0; y < n; ++y)
    d.invariance_error = std::max(d.invariance_error, std::abs(inflow[y] - mu[y]));
  auto lookup = [&rows](std::size_t x, std::size_t y) {
    for (auto [z, k] : rows[x])
      if (z == y) return k;
    return 0.0;
  };
  for (std::size_t x = 0; x < n; ++x)
    for (auto [y, k] : rows[x])
      d.reversibility_error =
          std::max(d.reversibility_error, std::abs(k * mu[x] - lookup(y, x) * mu[y]));

  const auto& moves = space.schreier().moves;
  for (const auto& mv : moves) {
    const auto& inv = moves.at(mv.inverse);
    for (std::size_t x = 0; x < n; ++x)
      if (inv.image[mv.image[x]] != x) d.generators_symmetric = false;
  }
  return d;
}

}  // namespace juntakit
