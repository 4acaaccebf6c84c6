#pragma once

// Harmonic analysis on the slice {x ∈ {0,1}^n : |x| = k}: an orthogonal
// eigenbasis indexed by top sets, spectral identities for prefix influences,
// the rescaled semigroup H_t and junta extraction.

#include <cstddef>
#include <string>
#include <vector>

#include "juntakit/junta.hpp"
#include "juntakit/semigroup.hpp"
#include "juntakit/spaces.hpp"

namespace juntakit {

/// b₁ < … < b_d, 1-based.
struct TopSet {
  std::vector<std::size_t> elements;
  std::size_t degree() const noexcept { return elements.size(); }
  std::string label() const;
};

bool operator==(const TopSet& a, const TopSet& b);

/// b_i ≥ 2i for every i and d ≤ min(k, n-k).
bool is_top_set(const TopSet& b, std::size_t n, std::size_t k);
/// All top sets, ordered by degree then lexicographically.
std::vector<TopSet> top_sets(std::size_t n, std::size_t k);

/// 2|B|(n+1-|B|)/(n(n-1)), the eigenvalue of -L on χ_B.
double eigenvalue_of(const TopSet& b, std::size_t n);
double eigenvalue_of_degree(std::size_t d, std::size_t n);

/// Spectrum of -L predicted by the degree formula, with multiplicities
/// C(n,r) - C(n,r-1), sorted ascending.
std::vector<double> predicted_slice_spectrum(std::size_t n, std::size_t k);

struct BasisElement {
  TopSet top;
  FunctionTable vector;
  double squared_norm = 0.0;
  double eigenvalue = 0.0;
};

enum class BasisMethod { Auto, Explicit, JointDiagonalization };

struct SliceBasis {
  SpacePtr space;
  std::vector<BasisElement> elements;
  std::string path;  // "explicit" or "joint-diagonalization"
};

/// Builds and validates the basis; throws BasisConstructionError naming the
/// first violated invariant when no method passes.
SliceBasis build_basis(SpacePtr slice, BasisMethod method = BasisMethod::Auto);
SliceBasis build_basis(std::size_t n, std::size_t k, BasisMethod method = BasisMethod::Auto);

/// Validation used at build time; returns an empty string when all invariants hold.
std::string validate_basis(const SliceBasis& basis);

/// f̂(B) = E[f χ_B] / ‖χ_B‖₂², in basis order.
std::vector<double> fourier_expand(const SliceBasis& basis, const FunctionTable& f);
FunctionTable fourier_synthesize(const SliceBasis& basis, std::span<const double> coefficients);

struct IdentityReport {
  double combinatorial = 0.0;
  double spectral = 0.0;
  double error = 0.0;
};

/// Prefix influence (1/k)Σ_{i<j≤k} ½‖D_τij f‖₂² against
/// Σ_B r(k+1-r)/k · f̂(B)² ‖χ_B‖₂² with r = |B ∩ [k]|.
IdentityReport influence_identity_check(const SliceBasis& basis, const FunctionTable& f,
                                        std::size_t k_prefix);

/// H_t f = P_{(n-1)t/2} f.
FunctionTable rescaled_evolve(const Generator& gen, const FunctionTable& f, double t);

struct LowDegreeDecayReport {
  double lhs_basis = 0.0;   // Σ_{B∩[n-m]≠∅} e^{-2t c_B} f̂(B)² ‖χ_B‖₂²
  double lhs_direct = 0.0;  // ‖H_t f - Π_T H_t f‖₂² from the averaging projection
  double rhs = 0.0;         // quadratic prefix influence of H_t f on [n-m]
  double slack = 0.0;
  bool pass = true;
};

LowDegreeDecayReport low_degree_decay_check(const SliceBasis& basis, const Generator& gen,
                                      const FunctionTable& f, double t, std::size_t m,
                                      double tol = 1e-9);

/// Hypercontractive step ‖D_τ H_t f‖₂² ≤ ‖D_τ f‖²_{1+e^{-ρ_H t}} for every τ,
/// with ρ_H = (n-1)ρ/2. Returns the worst slack.
CheckReport slice_hyper_step_check(const Generator& gen, double rho, const FunctionTable& f,
                                   double t, double tol = 1e-9);

struct SliceExtraction {
  FunctionTable g;
  JuntaCertificate certificate;
  double normalized_sq_error = 0.0;  // ‖f̃ - Π_T f̃‖₂² for the normalized f̃
  double proven_bound = 0.0;         // (t + (n/(n-m))η^α)·Inf(f̃)
  bool bound_holds = true;
};

SliceExtraction slice_extract_junta(const Generator& gen, double rho, const FunctionTable& f,
                                    double epsilon, const ExtractOptions& options = {},
                                    const std::string& basis_path = {});

struct LeeYauReport {
  double omega = 0.0;  // n² / (k(n-k))
  double ratio = 0.0;  // ρ · n · log ω
};
LeeYauReport lee_yau_report(std::size_t n, std::size_t k, double rho);

/// Rows: top set, eigenvalue, squared norm, values in state-rank order.
std::string export_basis(const SliceBasis& basis);

}  // namespace juntakit
