#include "roadrisk/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace roadrisk {

namespace {
std::size_t checked_numel(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must not be empty");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0f) {}

Tensor Tensor::full(std::vector<std::size_t> shape, float value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::of(std::vector<std::size_t> shape, std::vector<float> values) {
  Tensor t(std::move(shape));
  if (values.size() != t.numel()) {
    throw std::invalid_argument("value count does not match tensor shape");
  }
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
  Tensor t;
  t.shape_ = std::move(new_shape);
  if (checked_numel(t.shape_) != numel()) {
    throw std::invalid_argument("reshape must preserve element count");
  }
  t.data_ = data_;
  return t;
}

void Tensor::fill(float value) {
  for (float& v : data_) v = value;
}

bool Tensor::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void fill_uniform(Tensor& t, Rng& rng, float lo, float hi) {
  for (float& v : t.values()) v = rng.uniformf(lo, hi);
}

}  // namespace roadrisk
