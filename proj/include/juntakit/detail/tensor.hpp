#pragma once

// Mixed-radix tensors stored flat with axis 0 varying fastest.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace juntakit::detail {

std::vector<std::size_t> strides_of(std::span<const std::size_t> shape);
std::size_t volume(std::span<const std::size_t> shape);

/// values <- (I ⊗ ... ⊗ M ⊗ ... ⊗ I) values, with M acting on `axis`.
void apply_along_axis(std::span<double> values, std::span<const std::size_t> shape,
                      std::size_t axis, const Eigen::MatrixXd& matrix);

/// Replaces every fiber along `axis` by its weighted mean.
void integrate_axis(std::span<double> values, std::span<const std::size_t> shape,
                    std::size_t axis, std::span<const double> weights);

/// Forward differences along `axis`: output shape has shape[axis]-1 on that axis.
std::vector<double> forward_difference(std::span<const double> values,
                                       std::span<const std::size_t> shape, std::size_t axis);

/// Product weights w_0(x_0) * w_1(x_1) * ... for every multi-index.
std::vector<double> product_weights(std::span<const std::size_t> shape,
                                    const std::vector<std::span<const double>>& factor_weights);

}  // namespace juntakit::detail
