#pragma once

// Log-concave measures e^{-v} on the line, discretized as reversible
// birth-death chains on a uniform grid, their products, geometric influences,
// boundary measures, gradient inequalities and junta extraction.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "juntakit/junta.hpp"
#include "juntakit/semigroup.hpp"

namespace juntakit {

struct Potential {
  std::string name;
  std::function<double(double)> v;
  std::function<double(double)> dv;
  std::function<double(double)> d2v;
  double kappa = 0.0;      // declared lower bound on v''
  double minimizer = 0.0;  // x* with v'(x*) = 0
  double lo = -1e300;      // domain on which v is defined (tabulated potentials)
  double hi = 1e300;
  bool cusp_at_zero = false;  // check v'' by a second difference with step h near 0
};

Potential gaussian_potential();
/// v = |x|^p, p ≥ 2; v'' near 0 is a symmetric second difference.
Potential boltzmann_potential(double p);
/// v = a x⁴ - b x², so v'' ≥ κ = -2b.
Potential quartic_potential(double a, double b);
/// Rows "x v v' v''" (whitespace or comma separated); v is cubic Hermite.
Potential tabulated_potential(const std::string& path);
/// "gaussian", "boltzmann:p", "quartic:a,b" or "file:<path>".
Potential parse_potential(const std::string& descriptor);

enum class FastPath { GridOnly, ExactGaussianHermite };

struct LineOptions {
  std::size_t nodes = 257;
  double extent = 50.0;  // grid covers v(x) - v(x*) < extent
  std::size_t max_degree = 12;
};

class LineModel {
 public:
  LineModel(Potential potential, const LineOptions& options);

  const Potential& potential() const noexcept { return pot_; }
  double kappa() const noexcept { return pot_.kappa; }
  FastPath fast_path() const noexcept { return fast_; }
  std::size_t max_degree() const noexcept { return opts_.max_degree; }
  std::size_t size() const noexcept { return x_.size(); }
  double spacing() const noexcept { return h_; }
  const std::vector<double>& nodes() const noexcept { return x_; }
  const std::vector<double>& weights() const noexcept { return w_; }
  /// π_e = h e^{-v(x_{j+1/2})}/Z for the edge (j, j+1).
  const std::vector<double>& edge_weights() const noexcept { return pi_; }
  /// Rates j → j+1 and j → j-1 (zero past the ends).
  const std::vector<double>& up_rates() const noexcept { return up_; }
  const std::vector<double>& down_rates() const noexcept { return down_; }
  double normalizer() const noexcept { return z_; }
  double density(double x) const;
  double truncated_mass() const noexcept { return tail_; }

  std::vector<double> apply(std::span<const double> f) const;
  /// Eigenvalues of -L ascending, w-orthonormal eigenvectors.
  const SpectralData& spectrum() const;
  /// Dense e^{tL} on node functions.
  Eigen::MatrixXd evolution_matrix(double t) const;
  /// Dense e^{tQ} for the edge chain with rates a_{e+1} up and b_e down.
  Eigen::MatrixXd edge_evolution_matrix(double t) const;

  double detailed_balance_error() const;
  const LineOptions& options() const noexcept { return opts_; }

 private:
  Potential pot_;
  LineOptions opts_;
  FastPath fast_;
  std::vector<double> x_, w_, pi_, up_, down_;
  double h_ = 0.0, z_ = 0.0, tail_ = 0.0;
  struct Cache;
  std::shared_ptr<Cache> cache_;
  friend const LineModel& refined(const LineModel& model);
};

using LinePtr = std::shared_ptr<const LineModel>;

/// Throws ContractError when v'' < κ at a grid point, ExtentError when the
/// grid misses more than 1e-10 of the mass.
LinePtr build_line_model(Potential potential, const LineOptions& options = {});
LinePtr boltzmann_model(double p, std::size_t nodes, double extent = 50.0);

/// Largest interior error of the grid generator against f'' - v'f' for
/// three test functions (x, sin x, e^{-x²/4}).
double generator_consistency_error(const LineModel& model);

/// e^{tL} f on the grid (GridOnly path, uniformization).
std::vector<double> evolve_line(const LineModel& model, std::span<const double> f, double t);
/// e^{tL} f for f given analytically: Richardson combination (4 P^{h/2} - P^h)/3
/// of this grid and the grid with 2N-1 nodes on the same extent.
std::vector<double> evolve_line(const LineModel& model, const std::function<double(double)>& f, double t);
/// The refined model with 2N-1 nodes on the same extent (built once).
const LineModel& refined(const LineModel& model);

/// Gaussian only: expand in probabilists' Hermite polynomials He_0..He_D
/// under the grid weights and decay He_k by e^{-kt}.
std::vector<double> hermite_evolve(const LineModel& model, std::span<const double> f, double t,
                                   std::size_t degree);

struct GridSet;

class ProductLine {
 public:
  ProductLine(LinePtr model, std::size_t n, std::size_t state_budget = std::size_t{1} << 18);

  const LineModel& model() const noexcept { return *model_; }
  const LinePtr& model_ptr() const noexcept { return model_; }
  std::size_t dimension() const noexcept { return n_; }
  std::size_t size() const noexcept { return w_.size(); }
  std::span<const std::size_t> shape() const noexcept { return shape_; }
  const std::vector<double>& weights() const noexcept { return w_; }

  std::vector<double> tabulate(const std::function<double(std::span<const double>)>& fn) const;
  /// Coordinates of node `index`.
  std::vector<double> point(std::size_t index) const;

  std::vector<double> evolve(std::span<const double> f, double t) const;
  /// Π_T: integrate out the coordinates in T.
  std::vector<double> average_out(std::span<const double> f, std::span<const std::size_t> T) const;
  /// (f(x + h e_i) - f(x))/h on axis-i edges.
  std::vector<double> partial(std::span<const double> f, std::size_t i) const;
  /// π on axis i times w on the other axes.
  std::vector<double> edge_weights(std::size_t i) const;
  /// e^{tQ} along axis i and e^{tL} along the other axes, on axis-i edge functions.
  std::vector<double> evolve_edges(std::span<const double> g, std::size_t i, double t) const;

  double l1(std::span<const double> f) const;
  double l2_squared(std::span<const double> f) const;
  double mean(std::span<const double> f) const;
  /// ‖∂_i f‖₁ under the edge weights.
  double partial_l1(std::span<const double> f, std::size_t i) const;
  /// Σ_i Γ_i(f) at every node, Γ_i(g)_j = ½(a_j Δ₊² + b_j Δ₋²) along axis i.
  std::vector<double> gradient_squared(std::span<const double> f) const;

 private:
  LinePtr model_;
  std::size_t n_;
  std::vector<std::size_t> shape_;
  std::vector<double> w_;
};

/// ∫ |∂_i f| dμ from an analytic partial derivative evaluated at the nodes.
double geometric_influence_analytic(const ProductLine& product,
                                    const std::function<double(std::span<const double>)>& dfi);
/// Grid version: ‖∂_i f‖₁ with forward differences.
double geometric_influence_fn(const ProductLine& product, std::span<const double> f, std::size_t i);

enum class Monotonicity { Increasing, Decreasing, None };

struct GridSet {
  std::vector<char> members;
  Monotonicity monotonicity = Monotonicity::None;
};

/// Exact check of the declared monotonicity through axis neighbours.
bool verify_monotone(const ProductLine& product, const GridSet& set);
GridSet make_grid_set(const ProductLine& product,
                      const std::function<bool(std::span<const double>)>& inside,
                      Monotonicity declared);
double set_measure(const ProductLine& product, const GridSet& set);

/// E over the other coordinates of the density at the fiber's boundary points;
/// node j owns the cell [x_j - h/2, x_j + h/2].
double geometric_influence_set(const ProductLine& product, const GridSet& set, std::size_t i);

struct BoundaryEstimate {
  double d_h = 0.0;    // (μ(A + [-h,h]^n) - μ(A))/h
  double d_2h = 0.0;
  double value = 0.0;  // 2 d_h - d_2h
};
BoundaryEstimate uniform_enlargement_boundary(const ProductLine& product, const GridSet& set);

struct CommutationReport {
  CheckReport strict;        // |∂_i P_t f| ≤ P_t|∂_i f|, worst edge
  double slack_plus = 0.0;   // worst slack with factor e^{+κt}
  double slack_minus = 0.0;  // worst slack with factor e^{-κt}
};
CommutationReport commutation_check(const ProductLine& product, std::span<const double> f, double t,
                                    double tol = 1e-6);

struct ReversePoincareReport {
  CheckReport global;     // Σ_i ‖∂_i P_t f‖₂² ≤ ‖f‖₂²/(2t)
  CheckReport pointwise;  // 2t |∇P_t f|² ≤ P_t f² - (P_t f)², worst interior node
};
ReversePoincareReport reverse_poincare_check(const ProductLine& product, std::span<const double> f,
                                             double t, double tol = 1e-6);

/// ‖∇P_t f‖_∞ ≤ ‖f‖_∞ / √(2t).
CheckReport sup_gradient_check(const ProductLine& product, std::span<const double> f, double t,
                               double tol = 1e-6);

/// ‖f - P_t f‖₁ ≤ 2√t Σ_i ‖∂_i f‖₁.
CheckReport ledoux_l1_check(const ProductLine& product, std::span<const double> f, double t,
                            double tol = 1e-6);

/// ‖P_t f - Π_T P_t f‖₂² ≤ (1/ρ)(Σ_{i∈T}‖∂_i f‖₁²)^{α(t/2)} (‖f‖₂²/t)^{1-α(t/2)}.
CheckReport averaging_error_check(const ProductLine& product, double rho, std::span<const double> f,
                          double t, std::span<const std::size_t> T, double tol = 1e-6);

/// ‖∂_i P_{t/2} f‖₁ ≤ ‖∂_i f‖₁, worst coordinate.
CheckReport gradient_l1_decay_check(const ProductLine& product, std::span<const double> f, double t,
                       double tol = 1e-6);

/// ρ used for scheduling: κ when κ > 0, else the supplied value.
double effective_rho(const LineModel& model, double rho, std::string* source = nullptr);

std::pair<std::vector<double>, JuntaCertificate> continuous_extract_junta(
    const ProductLine& product, double rho, std::span<const double> f, double epsilon,
    const ExtractOptions& options = {});

struct MonotoneJunta {
  GridSet set;
  JuntaCertificate certificate;
  double symmetric_difference = 0.0;
  double mollification = 1.0;  // weight of the smoothing kernel that succeeded
};

/// rho ≤ 0 takes ρ from the model's convexity bound.
MonotoneJunta monotone_set_junta(const ProductLine& product, const GridSet& set, double epsilon,
                                 double rho = 0.0, std::size_t mollification_budget = 8);

/// Triangular smoothing (0.2, 0.6, 0.2) along every axis, renormalized at the
/// ends, mixed with the identity by weight s.
std::vector<double> mollify(const ProductLine& product, std::span<const double> f, double s);

}  // namespace juntakit
