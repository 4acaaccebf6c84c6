#pragma once

// Averaging projections Π_T, the two lemmas behind junta extraction, the
// extraction loop itself and Boolean rounding.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "juntakit/influence.hpp"
#include "juntakit/semigroup.hpp"
#include "juntakit/spaces.hpp"

namespace juntakit {

/// Π_T f. On coordinate spaces (products, tori) T lists coordinates to
/// integrate out; on other Schreier spaces T lists moves and f is averaged
/// over the orbits of the subgroup they generate.
FunctionTable average_out(const FunctionTable& f, std::span<const std::size_t> T);

/// Generic two-sided check result: pass iff slack = rhs - lhs ≥ -tol.
struct CheckReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = true;
};

CheckReport make_report(std::string name, double lhs, double rhs, double tol);

struct MartingaleReport {
  double lhs = 0.0;                 // ‖g - Π_T g‖₂²
  std::vector<double> increments;   // ‖g_{i-1} - g_i‖₂² in the order of T
  double rhs = 0.0;                 // Σ increments
  double error = 0.0;               // |lhs - rhs|
};

MartingaleReport reverse_martingale_check(const FunctionTable& g, std::span<const std::size_t> T);

/// Directions in T together with what is kept.
struct Selection {
  std::vector<std::size_t> T;     // directions averaged out (coordinates or moves)
  std::vector<std::size_t> kept;  // kept coordinates, or the vertex set S on slices
};

/// Products and tori: T = {i : I_i ≤ η}. Slices: greedy vertex cover S of the
/// pairs with I_τ ≥ η, and T = pairs avoiding S. Other spaces: per-move threshold.
Selection select_low_influence(const InfluenceProfile& profile, double eta);
/// Same rule with the threshold given as log η (η may underflow).
Selection select_low_influence_log(const InfluenceProfile& profile, double log_eta);

/// (1 - e^{-2ρt}) / (1 + e^{-2ρt}).
double hyper_alpha(double rho, double t);

/// ‖P_t f - Π_T P_t f‖₂² against I(f)·η^{α(t)}, T from f's profile. Requires
/// a product space, max ‖L_i f‖_∞ = 1 and I(f) ≥ 1.
CheckReport lemma_la_check(const Generator& gen, double rho, const FunctionTable& f, double eta,
                           double t, double tol = 1e-9);

/// ‖f - P_t f‖₂² against t·E(f,f).
CheckReport bakry_check(const Generator& gen, const FunctionTable& f, double t, double tol = 1e-9);

/// The triangle chain behind extraction: each of the three L² terms
/// ‖f - P_t f‖, ‖P_t f - Π_T P_t f‖, ‖Π_T P_t f - Π_T f‖ against its bound.
struct ChainReport {
  double total = 0.0;            // ‖f - Π_T f‖₂
  double terms[3] = {0, 0, 0};
  double bounds[3] = {0, 0, 0};  // √(tE), √(I η^α), √(tE)
  bool pass = true;
};
ChainReport theorem_chain_check(const Generator& gen, double rho, const FunctionTable& f,
                                double eta, double t, double tol = 1e-9);

/// Σ a_i^{2α} b_i^{2-2α} against (Σ a_i²)^α (Σ b_i²)^{1-α}.
CheckReport holder_check(std::span<const double> a, std::span<const double> b, double alpha,
                         double tol = 1e-12);

enum class ErrorNorm { L2, L1 };

struct JuntaCertificate {
  std::vector<std::size_t> kept_set;  // 0-based; serialized 1-based
  double eta = 0.0;
  double log_eta = 0.0;
  double t = 0.0;
  double alpha = 0.0;
  double bound_la = 0.0;
  double bound_bakry = 0.0;
  double measured_error = 0.0;
  double epsilon = 0.0;
  std::size_t retries = 0;
  // Extras.
  ErrorNorm norm = ErrorNorm::L2;
  double scale = 1.0;            // f was divided by this before scheduling
  double total_influence = 0.0;  // of the normalized f
  double rho = 0.0;
  std::string kept_kind = "coordinates";
  std::string basis_path;        // slices: which construction produced the basis
  double c = 0.0;                // slices: α(t)/(2ε)
  std::string rho_source;
  bool success = true;
};

std::string serialize(const JuntaCertificate& cert);

struct ExtractOptions {
  std::size_t retry_budget = 4096;
};

/// Schedule t = ε²/(16 I), η^{α(t)} I = ε/2 with I = max(I(f), 1) for the
/// normalized f, then halve η until the measured error is at most ε.
std::pair<FunctionTable, JuntaCertificate> extract_junta(const Generator& gen, double rho,
                                                         const FunctionTable& f, double epsilon,
                                                         ErrorNorm norm = ErrorNorm::L2,
                                                         const ExtractOptions& options = {});

/// (sgn g + 1)/2 with sgn 0 = 1.
FunctionTable boolean_round(const FunctionTable& g);

struct DecayEntry {
  double lhs = 0.0;  // ‖L_i P_t f‖₂²
  double rhs = 0.0;  // I_i(f)^{β(t)}
  double slack = 0.0;
};
struct DecayReport {
  double beta = 1.0;
  std::vector<DecayEntry> entries;
  bool pass = true;
};

/// β(t) = 2/(1 + e^{-ρt}); requires every L_i f to take values in {-1, 0, 1}.
DecayReport boolean_decay_check(const Generator& gen, double rho, const FunctionTable& f, double t,
                                double tol = 1e-9);

/// ‖f - g‖ in the chosen norm under the space's measure.
double distance(const FunctionTable& f, const FunctionTable& g, ErrorNorm norm);

}  // namespace juntakit
