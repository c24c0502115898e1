#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roadrisk/kernels.hpp"
#include "roadrisk/rng.hpp"
#include "roadrisk/tensor.hpp"

namespace roadrisk {

enum class LayerKind { dense, conv2d, maxpool2x2, relu, flatten, softmax };

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view name);

/// Declarative layer description; the parameter fields used depend on kind.
/// conv2d is valid-padding stride 1; maxpool2x2 is stride 2 with floor
/// semantics.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in_features = 0;   // dense
  std::size_t out_features = 0;  // dense
  std::size_t kernel = 0;        // conv2d
  std::size_t in_channels = 0;   // conv2d
  std::size_t out_channels = 0;  // conv2d

  bool operator==(const LayerSpec&) const = default;

  static LayerSpec dense(std::size_t in, std::size_t out) {
    return {LayerKind::dense, in, out, 0, 0, 0};
  }
  static LayerSpec conv2d(std::size_t kernel, std::size_t c_in, std::size_t c_out) {
    return {LayerKind::conv2d, 0, 0, kernel, c_in, c_out};
  }
  static LayerSpec maxpool2x2() { return {LayerKind::maxpool2x2, 0, 0, 0, 0, 0}; }
  static LayerSpec relu() { return {LayerKind::relu, 0, 0, 0, 0, 0}; }
  static LayerSpec flatten() { return {LayerKind::flatten, 0, 0, 0, 0, 0}; }
  static LayerSpec softmax() { return {LayerKind::softmax, 0, 0, 0, 0, 0}; }
};

/// A differentiable layer. forward() is pure and safe for concurrent use on
/// a frozen model. Training uses forward_cached()/backward(), which keep
/// per-sample state inside the layer; a model being trained must be owned
/// exclusively.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& input) const = 0;
  virtual Tensor forward_cached(const Tensor& input) = 0;
  /// Consumes dL/d(output), accumulates parameter gradients (+=), returns
  /// dL/d(input). Must follow a forward_cached() call for the same sample.
  virtual Tensor backward(const Tensor& grad_output) = 0;

  virtual std::vector<Tensor*> parameters() { return {}; }
  virtual std::vector<const Tensor*> parameters() const { return {}; }
  virtual std::vector<Tensor*> gradients() { return {}; }
  virtual void init_parameters(Rng&) {}
  virtual LayerSpec spec() const = 0;
};

class DenseLayer final : public Layer {
 public:
  DenseLayer(std::size_t in_features, std::size_t out_features);

  Tensor forward(const Tensor& input) const override;
  Tensor forward_cached(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::vector<Tensor*> parameters() override { return {&weights_, &bias_}; }
  std::vector<const Tensor*> parameters() const override { return {&weights_, &bias_}; }
  std::vector<Tensor*> gradients() override { return {&grad_weights_, &grad_bias_}; }
  void init_parameters(Rng& rng) override;
  LayerSpec spec() const override;

  Tensor& weights() { return weights_; }
  Tensor& bias() { return bias_; }

 private:
  Tensor weights_;  // (out, in)
  Tensor bias_;
  Tensor grad_weights_;
  Tensor grad_bias_;
  Tensor cached_input_;
};

class Conv2dLayer final : public Layer {
 public:
  Conv2dLayer(std::size_t kernel, std::size_t in_channels, std::size_t out_channels);

  Tensor forward(const Tensor& input) const override;
  Tensor forward_cached(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::vector<Tensor*> parameters() override { return {&kernels_, &bias_}; }
  std::vector<const Tensor*> parameters() const override { return {&kernels_, &bias_}; }
  std::vector<Tensor*> gradients() override { return {&grad_kernels_, &grad_bias_}; }
  void init_parameters(Rng& rng) override;
  LayerSpec spec() const override;

 private:
  Tensor kernels_;  // k x k x Cin x Cout
  Tensor bias_;
  Tensor grad_kernels_;
  Tensor grad_bias_;
  Tensor cached_input_;
};

class MaxPool2x2Layer final : public Layer {
 public:
  Tensor forward(const Tensor& input) const override;
  Tensor forward_cached(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  LayerSpec spec() const override { return LayerSpec::maxpool2x2(); }

 private:
  std::vector<std::size_t> argmax_;  // flat input index per output element
  std::vector<std::size_t> cached_input_shape_;
};

class ReluLayer final : public Layer {
 public:
  Tensor forward(const Tensor& input) const override;
  Tensor forward_cached(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  LayerSpec spec() const override { return LayerSpec::relu(); }

 private:
  Tensor cached_input_;
};

class FlattenLayer final : public Layer {
 public:
  Tensor forward(const Tensor& input) const override;
  Tensor forward_cached(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  LayerSpec spec() const override { return LayerSpec::flatten(); }

 private:
  std::vector<std::size_t> cached_input_shape_;
};

class SoftmaxLayer final : public Layer {
 public:
  Tensor forward(const Tensor& input) const override;
  Tensor forward_cached(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  LayerSpec spec() const override { return LayerSpec::softmax(); }

 private:
  Tensor cached_probs_;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

/// Plain layer chain.
class Sequential {
 public:
  Sequential() = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  Tensor forward(const Tensor& input) const;
  Tensor forward_cached(const Tensor& input);
  Tensor backward(const Tensor& grad_output);

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<Tensor*> gradients();
  void zero_gradients();
  void init_parameters(Rng& rng);

  std::vector<LayerSpec> specs() const;
  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace roadrisk
