#pragma once

// Markov generators L = scale * (K - Id), the heat semigroup P_t = e^{tL},
// spectra of -L, log-Sobolev constants and hypercontractivity checks.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "juntakit/spaces.hpp"

namespace juntakit {

/// Eigenvalues of -L in ascending order and μ-orthonormal eigenvectors (columns).
struct SpectralData {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd vectors;
};

/// A generator acting on one coordinate of a factorized space, together with
/// the coordinate measure and its own spectral data.
struct FactorGenerator {
  Eigen::MatrixXd matrix;
  std::vector<double> measure;
  SpectralData spectrum;
  bool projection = false;  // matrix == 1 μᵀ - Id
};

class Generator {
 public:
  enum class Representation { Factorized, Matrix };

  /// dense_cap bounds the number of states for which dense matrices and full
  /// eigendecompositions may be formed.
  explicit Generator(SpacePtr space, std::size_t dense_cap = 2048);

  const MarkovSpace& space() const noexcept { return *space_; }
  const SpacePtr& space_ptr() const noexcept { return space_; }
  Representation representation() const noexcept { return rep_; }
  double scale() const noexcept { return scale_; }
  std::size_t dense_cap() const noexcept { return dense_cap_; }

  /// Per-coordinate generators when factorized; L = Σ_i Id ⊗ G_i ⊗ Id.
  const std::vector<FactorGenerator>& factors() const noexcept { return factors_; }

  FunctionTable apply(const FunctionTable& f) const;
  FunctionTable evolve(const FunctionTable& f, double t) const;

  /// Full spectral data (cached). Throws CapacityError beyond dense_cap.
  const SpectralData& spectrum() const;
  /// Dense matrix of L (row x, column y). Throws CapacityError beyond dense_cap.
  Eigen::MatrixXd assemble() const;

 private:
  struct Cache;
  SpacePtr space_;
  Representation rep_;
  double scale_;
  std::size_t dense_cap_;
  std::vector<FactorGenerator> factors_;
  std::shared_ptr<Cache> cache_;
};

Generator generator(SpacePtr space);

/// e^{tL} f. Throws DomainError for t < 0.
FunctionTable evolve(const Generator& gen, const FunctionTable& f, double t);

/// Smallest nonzero eigenvalue of -L. Throws StructureError when 0 is a
/// multiple eigenvalue (disconnected space).
double spectral_gap(const Generator& gen);

/// Symmetric eigendecomposition of a μ-reversible generator matrix.
SpectralData reversible_spectrum(const Eigen::MatrixXd& generator, std::span<const double> measure);

enum class LogSobolevMethod { ExactTwoPoint, NumericSearch };

struct LogSobolevOptions {
  std::size_t starts = 32;
  std::size_t iterations = 4000;
  std::uint64_t seed = 1;
};

/// Ent_μ(f²) = E f² log f² - E f² log E f², evaluated stably near constants.
double entropy_of_square(std::span<const double> f, std::span<const double> measure);

/// Two-point value s/atanh(s) with s = 2p - 1, equal to 2(2p-1)/(log p - log(1-p)).
double two_point_log_sobolev(double p);

/// Best constant ρ with ρ Ent(f²) ≤ 2 E(f,f). NumericSearch reports the best
/// value found over the starts (an estimate, never a certificate); for
/// factorized spaces it searches each factor and takes the minimum.
double log_sobolev_constant(const Generator& gen, LogSobolevMethod method,
                            const LogSobolevOptions& options = {});

/// NumericSearch on a dense μ-reversible generator.
double log_sobolev_search(const Eigen::MatrixXd& generator, std::span<const double> measure,
                          const LogSobolevOptions& options = {});

struct HyperReport {
  double t = 0.0;
  double p = 0.0;
  double q = 0.0;
  double lhs = 0.0;  // ‖P_t f‖_q
  double rhs = 0.0;  // ‖f‖_p
  double slack = 0.0;
  bool violated = false;
};

HyperReport hypercontractivity_check(const Generator& gen, double rho, const FunctionTable& f,
                                     double t, double q);

double lp_norm(const MarkovSpace& space, const FunctionTable& f, double p);
double lp_norm(std::span<const double> values, std::span<const double> measure, double p);

}  // namespace juntakit
