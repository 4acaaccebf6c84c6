#include "juntakit/detail/tensor.hpp"

#include <cassert>

namespace juntakit::detail {

std::vector<std::size_t> strides_of(std::span<const std::size_t> shape) {
  std::vector<std::size_t> strides(shape.size());
  std::size_t s = 1;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    strides[a] = s;
    s *= shape[a];
  }
  return strides;
}

std::size_t volume(std::span<const std::size_t> shape) {
  std::size_t v = 1;
  for (auto m : shape) v *= m;
  return v;
}

void apply_along_axis(std::span<double> values, std::span<const std::size_t> shape,
                      std::size_t axis, const Eigen::MatrixXd& matrix) {
  const std::size_t m = shape[axis];
  assert(static_cast<std::size_t>(matrix.rows()) == m);
  const auto strides = strides_of(shape);
  const std::size_t stride = strides[axis];
  const std::size_t block = stride * m;
  const std::size_t total = values.size();
  Eigen::VectorXd fiber(m);
  Eigen::VectorXd out(m);
  for (std::size_t base = 0; base < total; base += block) {
    for (std::size_t inner = 0; inner < stride; ++inner) {
      const std::size_t start = base + inner;
      for (std::size_t j = 0; j < m; ++j) fiber[j] = values[start + j * stride];
      out.noalias() = matrix * fiber;
      for (std::size_t j = 0; j < m; ++j) values[start + j * stride] = out[j];
    }
  }
}

void integrate_axis(std::span<double> values, std::span<const std::size_t> shape,
                    std::size_t axis, std::span<const double> weights) {
  const std::size_t m = shape[axis];
  const auto strides = strides_of(shape);
  const std::size_t stride = strides[axis];
  const std::size_t block = stride * m;
  for (std::size_t base = 0; base < values.size(); base += block) {
    for (std::size_t inner = 0; inner < stride; ++inner) {
      const std::size_t start = base + inner;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += weights[j] * values[start + j * stride];
      for (std::size_t j = 0; j < m; ++j) values[start + j * stride] = acc;
    }
  }
}

std::vector<double> forward_difference(std::span<const double> values,
                                       std::span<const std::size_t> shape, std::size_t axis) {
  std::vector<std::size_t> out_shape(shape.begin(), shape.end());
  out_shape[axis] -= 1;
  const auto in_strides = strides_of(shape);
  std::vector<double> out(volume(out_shape));
  const std::size_t n = shape.size();
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t o = 0; o < out.size(); ++o) {
    std::size_t in = 0;
    for (std::size_t a = 0; a < n; ++a) in += idx[a] * in_strides[a];
    out[o] = values[in + in_strides[axis]] - values[in];
    for (std::size_t a = 0; a < n; ++a) {
      if (++idx[a] < out_shape[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

std::vector<double> product_weights(std::span<const std::size_t> shape,
                                    const std::vector<std::span<const double>>& factor_weights) {
  std::vector<double> w(volume(shape), 1.0);
  const auto strides = strides_of(shape);
  for (std::size_t a = 0; a < shape.size(); ++a) {
    const std::size_t m = shape[a];
    for (std::size_t x = 0; x < w.size(); ++x) w[x] *= factor_weights[a][(x / strides[a]) % m];
  }
  return w;
}

}  // namespace juntakit::detail
