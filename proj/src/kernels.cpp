#include "roadrisk/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace roadrisk {

namespace {
void require(bool cond, const char* message) {
  if (!cond) throw std::invalid_argument(message);
}
}  // namespace

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require(input.rank() == 1, "dense: input must be rank-1");
  require(weights.rank() == 2, "dense: weights must be rank-2 (out, in)");
  require(bias.rank() == 1, "dense: bias must be rank-1");
  const std::size_t n_out = weights.dim(0);
  const std::size_t n_in = weights.dim(1);
  require(input.dim(0) == n_in, "dense: input length does not match weight columns");
  require(bias.dim(0) == n_out, "dense: bias length does not match weight rows");

  Tensor out({n_out});
  const float* x = input.data();
  for (std::size_t j = 0; j < n_out; ++j) {
    const float* w = weights.data() + j * n_in;
    double acc = bias[j];
    for (std::size_t k = 0; k < n_in; ++k) acc += static_cast<double>(w[k]) * x[k];
    out[j] = static_cast<float>(acc);
  }
  return out;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  require(input.rank() == 3, "conv2d: input must be H x W x C");
  require(kernels.rank() == 4, "conv2d: kernels must be k x k x Cin x Cout");
  require(bias.rank() == 1, "conv2d: bias must be rank-1");
  const std::size_t h = input.dim(0), w = input.dim(1), c_in = input.dim(2);
  const std::size_t k = kernels.dim(0);
  require(kernels.dim(1) == k, "conv2d: kernel must be square");
  require(kernels.dim(2) == c_in, "conv2d: kernel input channels mismatch");
  const std::size_t c_out = kernels.dim(3);
  require(bias.dim(0) == c_out, "conv2d: bias length mismatch");
  require(k <= h && k <= w, "conv2d: kernel larger than input");

  const std::size_t out_h = h - k + 1, out_w = w - k + 1;
  Tensor out({out_h, out_w, c_out});
  std::vector<double> acc(c_out);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t co = 0; co < c_out; ++co) acc[co] = bias[co];
      for (std::size_t dy = 0; dy < k; ++dy) {
        const float* in_row = input.data() + ((y + dy) * w + x) * c_in;
        const float* k_row = kernels.data() + dy * k * c_in * c_out;
        for (std::size_t dx = 0; dx < k; ++dx) {
          for (std::size_t ci = 0; ci < c_in; ++ci) {
            const double v = in_row[dx * c_in + ci];
            const float* kc = k_row + (dx * c_in + ci) * c_out;
            for (std::size_t co = 0; co < c_out; ++co) acc[co] += v * kc[co];
          }
        }
      }
      float* out_px = out.data() + (y * out_w + x) * c_out;
      for (std::size_t co = 0; co < c_out; ++co) out_px[co] = static_cast<float>(acc[co]);
    }
  }
  return out;
}

Tensor maxpool2x2_forward(const Tensor& input) {
  require(input.rank() == 3, "maxpool2x2: input must be H x W x C");
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  require(h >= 2 && w >= 2, "maxpool2x2: input smaller than 2x2");

  const std::size_t out_h = h / 2, out_w = w / 2;
  Tensor out({out_h, out_w, c});
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        float m = input.at(2 * y, 2 * x, ch);
        m = std::max(m, input.at(2 * y, 2 * x + 1, ch));
        m = std::max(m, input.at(2 * y + 1, 2 * x, ch));
        m = std::max(m, input.at(2 * y + 1, 2 * x + 1, ch));
        out.at(y, x, ch) = m;
      }
    }
  }
  return out;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (float& v : out.values()) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor softmax(const Tensor& logits) {
  require(logits.rank() == 1, "softmax: logits must be rank-1");
  require(logits.all_finite(), "softmax: logits must be finite");
  const std::size_t k = logits.dim(0);
  float max_logit = logits[0];
  for (std::size_t i = 1; i < k; ++i) max_logit = std::max(max_logit, logits[i]);

  Tensor probs({k});
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double e = std::exp(static_cast<double>(logits[i]) - max_logit);
    probs[i] = static_cast<float>(e);
    z += e;
  }
  for (std::size_t i = 0; i < k; ++i) {
    probs[i] = static_cast<float>(static_cast<double>(probs[i]) / z);
  }
  return probs;
}

SoftmaxLoss softmax_cross_entropy(const Tensor& logits, std::size_t target_class) {
  require(logits.rank() == 1, "softmax_cross_entropy: logits must be rank-1");
  const std::size_t k = logits.dim(0);
  require(k >= 2, "softmax_cross_entropy: need at least 2 classes");
  require(target_class < k, "softmax_cross_entropy: target class out of range");
  require(logits.all_finite(), "softmax_cross_entropy: logits must be finite");

  float max_logit = logits[0];
  for (std::size_t i = 1; i < k; ++i) max_logit = std::max(max_logit, logits[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    z += std::exp(static_cast<double>(logits[i]) - max_logit);
  }

  SoftmaxLoss result;
  result.probabilities = Tensor({k});
  for (std::size_t i = 0; i < k; ++i) {
    result.probabilities[i] = static_cast<float>(
        std::exp(static_cast<double>(logits[i]) - max_logit) / z);
  }
  // -ln p[target] evaluated on logits directly for accuracy.
  result.loss = std::log(z) - (static_cast<double>(logits[target_class]) - max_logit);
  return result;
}

void sgd_step(Tensor& param, const Tensor& grad, double learning_rate) {
  if (!param.same_shape(grad)) {
    throw std::invalid_argument("sgd_step: parameter and gradient shapes differ");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("sgd_step: learning rate must be positive");
  }
  const float* g = grad.data();
  float* p = param.data();
  for (std::size_t i = 0; i < param.numel(); ++i) {
    p[i] = static_cast<float>(p[i] - learning_rate * g[i]);
  }
}

Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w) {
  require(image.rank() == 3, "resize: image must be H x W x C");
  require(out_h > 0 && out_w > 0, "resize: target dimensions must be positive");
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);

  Tensor out({out_h, out_w, c});
  // Corner-aligned source coordinates; a single output row/column samples the
  // input's center line.
  const double sy = out_h > 1 ? static_cast<double>(h - 1) / static_cast<double>(out_h - 1) : 0.0;
  const double sx = out_w > 1 ? static_cast<double>(w - 1) / static_cast<double>(out_w - 1) : 0.0;
  const double oy = out_h > 1 ? 0.0 : static_cast<double>(h - 1) / 2.0;
  const double ox = out_w > 1 ? 0.0 : static_cast<double>(w - 1) / 2.0;

  for (std::size_t y = 0; y < out_h; ++y) {
    const double src_y = oy + sy * static_cast<double>(y);
    const std::size_t y0 = static_cast<std::size_t>(src_y);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const float fy = static_cast<float>(src_y - static_cast<double>(y0));
    for (std::size_t x = 0; x < out_w; ++x) {
      const double src_x = ox + sx * static_cast<double>(x);
      const std::size_t x0 = static_cast<std::size_t>(src_x);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const float fx = static_cast<float>(src_x - static_cast<double>(x0));
      for (std::size_t ch = 0; ch < c; ++ch) {
        const float v00 = image.at(y0, x0, ch), v01 = image.at(y0, x1, ch);
        const float v10 = image.at(y1, x0, ch), v11 = image.at(y1, x1, ch);
        // Nested lerps keep constants exact and results inside [min, max].
        const float top = v00 + fx * (v01 - v00);
        const float bot = v10 + fx * (v11 - v10);
        out.at(y, x, ch) = top + fy * (bot - top);
      }
    }
  }
  return out;
}

}  // namespace roadrisk
