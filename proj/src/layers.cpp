#include "roadrisk/layers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace roadrisk {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2x2: return "maxpool2x2";
    case LayerKind::relu: return "relu";
    case LayerKind::flatten: return "flatten";
    case LayerKind::softmax: return "softmax";
  }
  return "relu";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  if (name == "dense") return LayerKind::dense;
  if (name == "conv2d") return LayerKind::conv2d;
  if (name == "maxpool2x2") return LayerKind::maxpool2x2;
  if (name == "relu") return LayerKind::relu;
  if (name == "flatten") return LayerKind::flatten;
  if (name == "softmax") return LayerKind::softmax;
  return std::nullopt;
}

// ---------------------------------------------------------------- dense

DenseLayer::DenseLayer(std::size_t in_features, std::size_t out_features)
    : weights_({out_features, in_features}),
      bias_({out_features}),
      grad_weights_({out_features, in_features}),
      grad_bias_({out_features}) {}

void DenseLayer::init_parameters(Rng& rng) {
  const std::size_t fan_in = weights_.dim(1), fan_out = weights_.dim(0);
  const float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
  fill_uniform(weights_, rng, -limit, limit);
  bias_.fill(0.0f);
}

Tensor DenseLayer::forward(const Tensor& input) const {
  return dense_forward(input, weights_, bias_);
}

Tensor DenseLayer::forward_cached(const Tensor& input) {
  cached_input_ = input;
  return dense_forward(input, weights_, bias_);
}

Tensor DenseLayer::backward(const Tensor& grad_output) {
  const std::size_t n_out = weights_.dim(0), n_in = weights_.dim(1);
  if (grad_output.rank() != 1 || grad_output.dim(0) != n_out) {
    throw std::invalid_argument("dense backward: gradient shape mismatch");
  }
  const float* x = cached_input_.data();
  const float* g = grad_output.data();

  for (std::size_t j = 0; j < n_out; ++j) {
    const float gj = g[j];
    float* gw = grad_weights_.data() + j * n_in;
    for (std::size_t k = 0; k < n_in; ++k) gw[k] += gj * x[k];
    grad_bias_[j] += gj;
  }

  Tensor grad_input({n_in});
  for (std::size_t k = 0; k < n_in; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n_out; ++j) {
      acc += static_cast<double>(g[j]) * weights_.data()[j * n_in + k];
    }
    grad_input[k] = static_cast<float>(acc);
  }
  return grad_input;
}

LayerSpec DenseLayer::spec() const {
  return LayerSpec::dense(weights_.dim(1), weights_.dim(0));
}

// ---------------------------------------------------------------- conv2d

Conv2dLayer::Conv2dLayer(std::size_t kernel, std::size_t in_channels,
                         std::size_t out_channels)
    : kernels_({kernel, kernel, in_channels, out_channels}),
      bias_({out_channels}),
      grad_kernels_({kernel, kernel, in_channels, out_channels}),
      grad_bias_({out_channels}) {}

void Conv2dLayer::init_parameters(Rng& rng) {
  const std::size_t k = kernels_.dim(0);
  const std::size_t fan_in = k * k * kernels_.dim(2);
  const std::size_t fan_out = k * k * kernels_.dim(3);
  const float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
  fill_uniform(kernels_, rng, -limit, limit);
  bias_.fill(0.0f);
}

Tensor Conv2dLayer::forward(const Tensor& input) const {
  return conv2d_forward(input, kernels_, bias_);
}

Tensor Conv2dLayer::forward_cached(const Tensor& input) {
  cached_input_ = input;
  return conv2d_forward(input, kernels_, bias_);
}

Tensor Conv2dLayer::backward(const Tensor& grad_output) {
  const std::size_t h = cached_input_.dim(0), w = cached_input_.dim(1);
  const std::size_t c_in = cached_input_.dim(2);
  const std::size_t k = kernels_.dim(0), c_out = kernels_.dim(3);
  const std::size_t out_h = h - k + 1, out_w = w - k + 1;
  if (grad_output.rank() != 3 || grad_output.dim(0) != out_h ||
      grad_output.dim(1) != out_w || grad_output.dim(2) != c_out) {
    throw std::invalid_argument("conv2d backward: gradient shape mismatch");
  }

  Tensor grad_input({h, w, c_in});
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      const float* g_px = grad_output.data() + (y * out_w + x) * c_out;
      for (std::size_t co = 0; co < c_out; ++co) grad_bias_[co] += g_px[co];
      for (std::size_t dy = 0; dy < k; ++dy) {
        for (std::size_t dx = 0; dx < k; ++dx) {
          const float* in_px = cached_input_.data() + ((y + dy) * w + (x + dx)) * c_in;
          float* gi_px = grad_input.data() + ((y + dy) * w + (x + dx)) * c_in;
          for (std::size_t ci = 0; ci < c_in; ++ci) {
            const std::size_t base = ((dy * k + dx) * c_in + ci) * c_out;
            const float* kc = kernels_.data() + base;
            float* gk = grad_kernels_.data() + base;
            double gi_acc = 0.0;
            const float in_v = in_px[ci];
            for (std::size_t co = 0; co < c_out; ++co) {
              gi_acc += static_cast<double>(g_px[co]) * kc[co];
              gk[co] += g_px[co] * in_v;
            }
            gi_px[ci] += static_cast<float>(gi_acc);
          }
        }
      }
    }
  }
  return grad_input;
}

LayerSpec Conv2dLayer::spec() const {
  return LayerSpec::conv2d(kernels_.dim(0), kernels_.dim(2), kernels_.dim(3));
}

// ---------------------------------------------------------------- maxpool

Tensor MaxPool2x2Layer::forward(const Tensor& input) const {
  return maxpool2x2_forward(input);
}

Tensor MaxPool2x2Layer::forward_cached(const Tensor& input) {
  Tensor out = maxpool2x2_forward(input);
  const std::size_t w = input.dim(1), c = input.dim(2);
  cached_input_shape_.assign(input.shape().begin(), input.shape().end());
  argmax_.assign(out.numel(), 0);
  // Re-derive the winning position per window; first maximum wins on ties.
  const std::size_t out_h = out.dim(0), out_w = out.dim(1);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        float best = -std::numeric_limits<float>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = ((2 * y + dy) * w + (2 * x + dx)) * c + ch;
            if (input.values()[idx] > best) {
              best = input.values()[idx];
              best_idx = idx;
            }
          }
        }
        argmax_[(y * out_w + x) * c + ch] = best_idx;
      }
    }
  }
  return out;
}

Tensor MaxPool2x2Layer::backward(const Tensor& grad_output) {
  if (grad_output.numel() != argmax_.size()) {
    throw std::invalid_argument("maxpool backward: gradient shape mismatch");
  }
  Tensor grad_input(cached_input_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) {
    grad_input[argmax_[i]] += grad_output[i];
  }
  return grad_input;
}

// ---------------------------------------------------------------- relu

Tensor ReluLayer::forward(const Tensor& input) const { return relu_forward(input); }

Tensor ReluLayer::forward_cached(const Tensor& input) {
  cached_input_ = input;
  return relu_forward(input);
}

Tensor ReluLayer::backward(const Tensor& grad_output) {
  if (!grad_output.same_shape(cached_input_)) {
    throw std::invalid_argument("relu backward: gradient shape mismatch");
  }
  Tensor grad_input = grad_output;
  for (std::size_t i = 0; i < grad_input.numel(); ++i) {
    if (cached_input_[i] <= 0.0f) grad_input[i] = 0.0f;
  }
  return grad_input;
}

// ---------------------------------------------------------------- flatten

Tensor FlattenLayer::forward(const Tensor& input) const {
  return input.reshaped({input.numel()});
}

Tensor FlattenLayer::forward_cached(const Tensor& input) {
  cached_input_shape_.assign(input.shape().begin(), input.shape().end());
  return input.reshaped({input.numel()});
}

Tensor FlattenLayer::backward(const Tensor& grad_output) {
  return grad_output.reshaped(cached_input_shape_);
}

// ---------------------------------------------------------------- softmax

Tensor SoftmaxLayer::forward(const Tensor& input) const { return softmax(input); }

Tensor SoftmaxLayer::forward_cached(const Tensor& input) {
  cached_probs_ = softmax(input);
  return cached_probs_;
}

Tensor SoftmaxLayer::backward(const Tensor& grad_output) {
  if (!grad_output.same_shape(cached_probs_)) {
    throw std::invalid_argument("softmax backward: gradient shape mismatch");
  }
  // dL/dx_i = p_i * (g_i - sum_j g_j p_j)
  double dot = 0.0;
  for (std::size_t i = 0; i < cached_probs_.numel(); ++i) {
    dot += static_cast<double>(grad_output[i]) * cached_probs_[i];
  }
  Tensor grad_input({cached_probs_.numel()});
  for (std::size_t i = 0; i < cached_probs_.numel(); ++i) {
    grad_input[i] = static_cast<float>(
        cached_probs_[i] * (static_cast<double>(grad_output[i]) - dot));
  }
  return grad_input;
}

// ---------------------------------------------------------------- factory

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::dense:
      if (spec.in_features == 0 || spec.out_features == 0) {
        throw std::invalid_argument("dense layer spec needs in/out features");
      }
      return std::make_unique<DenseLayer>(spec.in_features, spec.out_features);
    case LayerKind::conv2d:
      if (spec.kernel == 0 || spec.in_channels == 0 || spec.out_channels == 0) {
        throw std::invalid_argument("conv2d layer spec needs kernel and channels");
      }
      return std::make_unique<Conv2dLayer>(spec.kernel, spec.in_channels,
                                           spec.out_channels);
    case LayerKind::maxpool2x2: return std::make_unique<MaxPool2x2Layer>();
    case LayerKind::relu: return std::make_unique<ReluLayer>();
    case LayerKind::flatten: return std::make_unique<FlattenLayer>();
    case LayerKind::softmax: return std::make_unique<SoftmaxLayer>();
  }
  throw std::invalid_argument("unknown layer kind");
}

// ---------------------------------------------------------------- sequential

Tensor Sequential::forward(const Tensor& input) const {
  Tensor t = input;
  for (const auto& layer : layers_) t = layer->forward(t);
  return t;
}

Tensor Sequential::forward_cached(const Tensor& input) {
  Tensor t = input;
  for (auto& layer : layers_) t = layer->forward_cached(t);
  return t;
}

Tensor Sequential::backward(const Tensor& grad_output) {
  Tensor g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    g = (*it)->backward(g);
  }
  return g;
}

std::vector<Tensor*> Sequential::parameters() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_) {
    for (Tensor* p : layer->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<const Tensor*> Sequential::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& layer : layers_) {
    for (const Tensor* p : std::as_const(*layer).parameters()) out.push_back(p);
  }
  return out;
}

std::vector<Tensor*> Sequential::gradients() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_) {
    for (Tensor* g : layer->gradients()) out.push_back(g);
  }
  return out;
}

void Sequential::zero_gradients() {
  for (Tensor* g : gradients()) g->fill(0.0f);
}

void Sequential::init_parameters(Rng& rng) {
  for (auto& layer : layers_) layer->init_parameters(rng);
}

std::vector<LayerSpec> Sequential::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers_.size());
  for (const auto& layer : layers_) out.push_back(layer->spec());
  return out;
}

}  // namespace roadrisk
