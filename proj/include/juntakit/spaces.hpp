#pragma once

// Finite probability spaces carrying a reversible Markov kernel: biased cubes,
// arbitrary finite products, discrete tori, slices of the cube and symmetric
// groups. Spaces are immutable and shared through std::shared_ptr so that
// function tables can refer to the space they live on.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace juntakit {

enum class Normalization { GraphForm, ProductForm, RescaledTorus };
enum class SpaceKind { BiasedCube, Product, Torus, Slice, SymmetricGroup };

std::string to_string(Normalization n);
std::string to_string(SpaceKind k);

/// One factor of a product space. Its kernel is the rank-one projection
/// K_i f = ∫ f dμ_i, so only the measure needs storing.
struct ProductFactor {
  std::vector<double> measure;
};

struct ProductStructure {
  std::vector<ProductFactor> factors;
};

/// A generator s of a Schreier graph: image[x] = x^s, weight = K-mass of the move.
struct SchreierMove {
  std::string label;
  double weight = 0.0;
  std::vector<std::uint32_t> image;
  std::size_t inverse = 0;
  /// Transposition endpoints (0-based) for slices and symmetric groups; -1 otherwise.
  int first = -1;
  int second = -1;
  /// Coordinate moved, for tori; -1 otherwise.
  int coordinate = -1;
};

struct SchreierStructure {
  std::vector<SchreierMove> moves;
};

using SpaceStructure = std::variant<ProductStructure, SchreierStructure>;

struct SpaceConfig {
  std::size_t state_budget = std::size_t{1} << 18;
};

class MarkovSpace {
 public:
  struct Params {
    SpaceKind kind;
    std::string descriptor;
    std::vector<double> measure;
    SpaceStructure structure;
    Normalization normalization;
    std::vector<std::size_t> shape;  // mixed-radix layout; empty when none
    std::size_t dimension = 0;       // n
    std::size_t slice_weight = 0;    // k for slices
    double bias = 0.0;               // p for biased cubes
    std::size_t modulus = 0;         // m for tori
  };

  explicit MarkovSpace(Params params);

  SpaceKind kind() const noexcept { return p_.kind; }
  const std::string& descriptor() const noexcept { return p_.descriptor; }
  std::size_t size() const noexcept { return p_.measure.size(); }
  std::span<const double> measure() const noexcept { return p_.measure; }
  Normalization normalization() const noexcept { return p_.normalization; }
  const SpaceStructure& structure() const noexcept { return p_.structure; }

  bool is_product() const noexcept {
    return std::holds_alternative<ProductStructure>(p_.structure);
  }
  bool is_schreier() const noexcept {
    return std::holds_alternative<SchreierStructure>(p_.structure);
  }
  /// Throws StructureError when the space is not of the requested kind.
  const ProductStructure& product() const;
  const SchreierStructure& schreier() const;

  /// Mixed-radix coordinate layout (products and tori).
  bool has_coordinates() const noexcept { return !p_.shape.empty(); }
  std::span<const std::size_t> shape() const noexcept { return p_.shape; }
  /// Marginal measure of coordinate i (products and tori).
  std::vector<double> coordinate_measure(std::size_t i) const;

  std::size_t dimension() const noexcept { return p_.dimension; }
  std::size_t slice_weight() const noexcept { return p_.slice_weight; }
  double bias() const noexcept { return p_.bias; }
  std::size_t modulus() const noexcept { return p_.modulus; }

  /// Multiplier applied to K - Id to obtain the generator (n/2 for rescaled tori).
  double generator_scale() const noexcept;

  /// Human-readable coordinates of a state: ±1 for cubes, residues for tori and
  /// products, bits for slices, one-line notation (0-based) for permutations.
  std::vector<int> coordinates(std::size_t state) const;
  std::size_t index_of(std::span<const int> coords) const;
  std::string state_label(std::size_t state) const;

  /// Sparse row of the kernel K(x, ·). For products K = Id + L/n (lazy walk).
  std::vector<std::pair<std::size_t, double>> kernel_row(std::size_t state) const;

 private:
  Params p_;
};

using SpacePtr = std::shared_ptr<const MarkovSpace>;

SpacePtr build_biased_cube(std::size_t n, double p, const SpaceConfig& config = {});
SpacePtr build_product(std::vector<std::vector<double>> factor_measures,
                       const SpaceConfig& config = {});
SpacePtr build_torus(std::size_t n, std::size_t m, const SpaceConfig& config = {});
SpacePtr build_slice(std::size_t n, std::size_t k, const SpaceConfig& config = {});
SpacePtr build_symmetric_group(std::size_t n, const SpaceConfig& config = {});

/// Real values indexed by the states of a space.
class FunctionTable {
 public:
  FunctionTable(SpacePtr space, std::vector<double> values);
  static FunctionTable constant(SpacePtr space, double c);
  static FunctionTable tabulate(SpacePtr space,
                                const std::function<double(std::span<const int>)>& fn);

  const SpacePtr& space_ptr() const noexcept { return space_; }
  const MarkovSpace& space() const noexcept { return *space_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& mutable_values() noexcept { return values_; }
  double operator[](std::size_t x) const { return values_[x]; }

  FunctionTable operator-(const FunctionTable& other) const;
  FunctionTable operator+(const FunctionTable& other) const;
  FunctionTable scaled(double factor) const;

 private:
  SpacePtr space_;
  std::vector<double> values_;
};

/// Throws DimensionError unless both tables live on the same space.
void require_same_space(const FunctionTable& a, const FunctionTable& b);
void require_on_space(const MarkovSpace& space, const FunctionTable& f);

double mean(const FunctionTable& f);
double variance(const FunctionTable& f);
double inner_product(const FunctionTable& f, const FunctionTable& g);

struct DirichletValue {
  double energy = 0.0;
  Normalization normalization = Normalization::GraphForm;
};

/// Energy of f in the space's own normalization; equals <f, -Lf>_μ.
DirichletValue dirichlet_energy(const MarkovSpace& space, const FunctionTable& f);

/// f(x^s) - f(x) for a Schreier move.
FunctionTable move_difference(const FunctionTable& f, std::size_t move);
/// L_i f = ∫ f dμ_i - f on a product space.
FunctionTable coordinate_laplacian(const FunctionTable& f, std::size_t i);

struct SpaceDiagnostics {
  double mass_error = 0.0;            // |Σ μ - 1|
  double min_weight = 0.0;
  double invariance_error = 0.0;      // max_y |Σ_x K(x,y)μ(x) - μ(y)|
  double reversibility_error = 0.0;   // max |K(x,y)μ(x) - K(y,x)μ(y)|
  double row_sum_error = 0.0;         // max_x |Σ_y K(x,y) - 1|
  bool generators_symmetric = true;
};

/// Checks the measure/kernel invariants state by state.
SpaceDiagnostics diagnose(const MarkovSpace& space);

std::uint64_t binomial(std::size_t n, std::size_t k);

}  // namespace juntakit
