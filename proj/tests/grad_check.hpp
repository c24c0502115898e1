#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "roadrisk/layers.hpp"
#include "roadrisk/rng.hpp"
#include "roadrisk/tensor.hpp"

namespace gradcheck {

// Central-difference gradient verification for a single layer. The scalar
// loss is L = sum(upstream * output), whose analytic input/parameter
// gradients come from backward(upstream). Inputs are kept O(1) and, for
// layers that sum many products (dense, conv), strictly positive so the
// finite differences do not lose precision to cancellation.

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t checks = 0;
};

inline double loss_of(const roadrisk::Layer& layer, const roadrisk::Tensor& input,
                      const roadrisk::Tensor& upstream) {
  const roadrisk::Tensor output = layer.forward(input);
  double loss = 0.0;
  for (std::size_t i = 0; i < output.numel(); ++i) {
    loss += static_cast<double>(upstream[i]) * static_cast<double>(output[i]);
  }
  return loss;
}

inline double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1.0});
  return std::fabs(analytic - numeric) / denom;
}

/// Checks dL/d(input) and dL/d(parameters) of `layer` against central
/// differences with the given step. Coordinates of `input` and every
/// parameter tensor are perturbed one at a time.
inline GradCheckResult check_layer(roadrisk::Layer& layer, roadrisk::Tensor input,
                                   const roadrisk::Tensor& upstream,
                                   double step = 1e-3) {
  GradCheckResult result;

  for (roadrisk::Tensor* grad : layer.gradients()) grad->fill(0.0f);
  const roadrisk::Tensor output = layer.forward_cached(input);
  (void)output;
  const roadrisk::Tensor input_grad = layer.backward(upstream);

  auto probe = [&](roadrisk::Tensor& subject, const roadrisk::Tensor& analytic) {
    for (std::size_t i = 0; i < subject.numel(); ++i) {
      const float saved = subject[i];
      subject[i] = static_cast<float>(saved + step);
      const double up = loss_of(layer, input, upstream);
      subject[i] = static_cast<float>(saved - step);
      const double down = loss_of(layer, input, upstream);
      subject[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      result.max_rel_err =
          std::max(result.max_rel_err, rel_err(analytic[i], numeric));
      ++result.checks;
    }
  };

  probe(input, input_grad);
  const std::vector<roadrisk::Tensor*> params = layer.parameters();
  const std::vector<roadrisk::Tensor*> grads = layer.gradients();
  for (std::size_t p = 0; p < params.size(); ++p) {
    probe(*params[p], *grads[p]);
  }
  return result;
}

/// Fills a tensor with values whose magnitude stays in [lo, hi]; when
/// `signed_values` both signs appear, otherwise everything is positive.
inline void fill_bounded(roadrisk::Tensor& t, roadrisk::Rng& rng, float lo, float hi,
                         bool signed_values) {
  for (std::size_t i = 0; i < t.numel(); ++i) {
    float v = rng.uniformf(lo, hi);
    if (signed_values && rng.uniform01f() < 0.5f) v = -v;
    t[i] = v;
  }
}

/// Runs the finite-difference check for every layer kind with one seed.
/// Returns the worst relative error across all layers and coordinates.
inline double check_all_layers(std::uint32_t seed, double step = 1e-3) {
  using namespace roadrisk;
  double worst = 0.0;
  Rng rng(seed);

  auto upstream_for = [&](const Tensor& output_like) {
    Tensor up(std::vector<std::size_t>(output_like.shape().begin(),
                                       output_like.shape().end()));
    fill_bounded(up, rng, 0.5f, 1.5f, /*signed_values=*/false);
    return up;
  };

  // Dense and conv sum many float32 products per output. Positive values in
  // a narrow band keep each output near 1.0, so its rounding error (half an
  // ulp, ~6e-8) stays two orders of magnitude under step * tolerance and the
  // central difference is dominated by signal, not float32 noise.
  {
    DenseLayer dense(6, 4);
    for (Tensor* param : dense.parameters()) {
      fill_bounded(*param, rng, 0.25f, 0.35f, false);
    }
    Tensor input({6});
    fill_bounded(input, rng, 0.25f, 0.35f, false);
    Tensor up = upstream_for(dense.forward(input));
    worst = std::max(worst, check_layer(dense, input, up, step).max_rel_err);
  }
  {
    Conv2dLayer conv(3, 1, 2);
    for (Tensor* param : conv.parameters()) {
      fill_bounded(*param, rng, 0.25f, 0.35f, false);
    }
    Tensor input({4, 4, 1});
    fill_bounded(input, rng, 0.25f, 0.35f, false);
    Tensor up = upstream_for(conv.forward(input));
    worst = std::max(worst, check_layer(conv, input, up, step).max_rel_err);
  }
  {
    MaxPool2x2Layer pool;
    Tensor input({6, 6, 2});
    // Magnitudes >= 0.25 with unique values so +-step never flips a window's
    // argmax, where the true gradient is discontinuous.
    std::vector<std::size_t> order(input.numel());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < input.numel(); ++i) {
      const float magnitude = 0.25f + 0.02f * static_cast<float>(order[i]);
      input[i] = rng.uniform01f() < 0.5f ? -magnitude : magnitude;
    }
    Tensor up = upstream_for(pool.forward(input));
    worst = std::max(worst, check_layer(pool, input, up, step).max_rel_err);
  }
  {
    ReluLayer relu;
    Tensor input({10});
    // Keep every coordinate at least `step` away from the kink at zero.
    fill_bounded(input, rng, 0.25f, 1.0f, true);
    Tensor up = upstream_for(relu.forward(input));
    worst = std::max(worst, check_layer(relu, input, up, step).max_rel_err);
  }
  {
    FlattenLayer flatten;
    Tensor input({3, 2, 2});
    fill_bounded(input, rng, 0.25f, 1.0f, true);
    Tensor up = upstream_for(flatten.forward(input));
    worst = std::max(worst, check_layer(flatten, input, up, step).max_rel_err);
  }
  {
    SoftmaxLayer softmax_layer;
    Tensor input({5});
    fill_bounded(input, rng, 0.25f, 1.0f, true);
    Tensor up = upstream_for(softmax_layer.forward(input));
    worst = std::max(worst, check_layer(softmax_layer, input, up, step).max_rel_err);
  }
  return worst;
}

}  // namespace gradcheck
