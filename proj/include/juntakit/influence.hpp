#pragma once

// Influences of coordinates and generators.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "juntakit/spaces.hpp"

namespace juntakit {

/// Influences at or below this value count as "f does not depend on it".
inline constexpr double kZeroInfluence = 1e-13;

/// How the directions of a profile are indexed.
enum class DirectionKind {
  Coordinate,     // products (‖L_i f‖₁) and tori (‖D_{+e_i} f‖₁)
  Generator,      // generic Schreier spaces: one entry per move
  Transposition,  // slices: one entry per pair i < j, in move order
};

struct InfluenceProfile {
  DirectionKind kind = DirectionKind::Coordinate;
  Normalization normalization = Normalization::GraphForm;
  std::vector<std::string> labels;
  std::vector<double> entries;    // L¹ influences
  std::vector<double> sup_norms;  // sup-norm of each direction derivative
  double total = 0.0;             // plain sum, or (1/n)·Σ for slices
  std::size_t dimension = 0;      // n

  double max_sup_norm() const;
};

/// ‖L_i f‖₁ on a product space.
double coordinate_influence(const MarkovSpace& space, const FunctionTable& f, std::size_t i);
/// ‖D_s f‖₁ = ‖f(x^s) - f(x)‖₁ on a Schreier space.
double generator_influence(const MarkovSpace& space, const FunctionTable& f, std::size_t s);
/// ‖f(x) - f(τ_i x)‖₁ on a cube (product of two-point factors).
double flip_influence(const MarkovSpace& space, const FunctionTable& f, std::size_t i);

/// (1/k)·Σ_{i<j≤k} ‖D_{τ_ij} f‖₁ for a given prefix k, else (1/n)·Σ over all pairs.
double slice_total_influence(const MarkovSpace& space, const FunctionTable& f,
                             std::optional<std::size_t> k = std::nullopt);
/// Quadratic companion (1/k)·Σ_{i<j≤k} ½‖D_{τ_ij} f‖₂² (the form the slice
/// spectral identity is exact for).
double slice_quadratic_influence(const MarkovSpace& space, const FunctionTable& f,
                                 std::optional<std::size_t> k = std::nullopt);

/// Index of the move τ_ij (0-based i < j) on a slice or symmetric group.
std::size_t transposition_index(std::size_t n, std::size_t i, std::size_t j);

InfluenceProfile influence_profile(const MarkovSpace& space, const FunctionTable& f);

}  // namespace juntakit
