#pragma once

#include <cstddef>

#include "roadrisk/tensor.hpp"

namespace roadrisk {

// Forward kernels. All of them are pure; reductions accumulate in double to
// keep float32 drift down. Layouts: images are H x W x C, dense weights are
// (out, in), convolution kernels are k x k x Cin x Cout.

/// output[j] = bias[j] + sum_k weights[j,k] * input[k]
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

/// Valid cross-correlation with stride 1; output is (H-k+1) x (W-k+1) x Cout.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias);

/// Non-overlapping 2x2 max windows, stride 2, floor semantics (odd trailing
/// row/column dropped). Input must be at least 2x2.
Tensor maxpool2x2_forward(const Tensor& input);

Tensor relu_forward(const Tensor& input);

/// Softmax with max-subtraction stabilization.
Tensor softmax(const Tensor& logits);

struct SoftmaxLoss {
  double loss = 0.0;
  Tensor probabilities;
};

/// Categorical cross-entropy on raw logits: loss = -ln p[target]. The
/// gradient of the loss w.r.t. the logits is probabilities - one_hot(target).
SoftmaxLoss softmax_cross_entropy(const Tensor& logits, std::size_t target_class);

/// In-place SGD update: param <- param - learning_rate * grad.
void sgd_step(Tensor& param, const Tensor& grad, double learning_rate);

/// Bilinear resize of an H x W x C image with corner-aligned sampling.
/// Output values never leave the input's [min, max] range; resizing to the
/// same size is an exact copy.
Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w);

}  // namespace roadrisk
