#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "grad_check.hpp"
#include "roadrisk/kernels.hpp"
#include "roadrisk/layers.hpp"
#include "roadrisk/rng.hpp"
#include "roadrisk/tensor.hpp"

using namespace roadrisk;

TEST_CASE("rng streams are deterministic and well-ranged") {
  Rng a(1234);
  Rng b(1234);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u32() == b.next_u32());

  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const float f = c.uniform01f();
    CHECK(f >= 0.0f);
    CHECK(f < 1.0f);
    const int k = c.int_range(-3, 3);
    CHECK(k >= -3);
    CHECK(k <= 3);
    CHECK(c.index(17) < 17);
  }

  SUBCASE("ranged draws cover both endpoints") {
    Rng r(11);
    bool saw_lo = false, saw_hi = false;
    for (int i = 0; i < 2000; ++i) {
      const int k = r.int_range(0, 1);
      saw_lo = saw_lo || k == 0;
      saw_hi = saw_hi || k == 1;
    }
    CHECK(saw_lo);
    CHECK(saw_hi);
  }
  SUBCASE("shuffle is a seeded permutation") {
    std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<int> v2 = v1;
    std::vector<int> sorted = v1;
    Rng r1(5), r2(5);
    r1.shuffle(v1);
    r2.shuffle(v2);
    CHECK(v1 == v2);
    std::vector<int> check = v1;
    std::sort(check.begin(), check.end());
    CHECK(check == sorted);
  }
  SUBCASE("derived streams differ from each other and the base") {
    const std::uint32_t base = 42;
    CHECK(Rng::derive(base, 1) != Rng::derive(base, 2));
    CHECK(Rng::derive(base, 1) == Rng::derive(base, 1));
    CHECK(Rng::derive(base, 1) != Rng::derive(base + 1, 1));
  }
}

TEST_CASE("tensor basics") {
  Tensor t({2, 3});
  CHECK(t.rank() == 2);
  CHECK(t.numel() == 6);
  for (std::size_t i = 0; i < t.numel(); ++i) CHECK(t[i] == 0.0f);

  t.at(1, 2) = 5.0f;
  CHECK(t[5] == 5.0f);  // row-major layout

  Tensor u = Tensor::of({2, 2}, {1, 2, 3, 4});
  CHECK(u.at(0, 1) == 2.0f);
  CHECK(u.at(1, 0) == 3.0f);

  SUBCASE("full and fill") {
    Tensor f = Tensor::full({3}, 2.5f);
    CHECK(f[0] == 2.5f);
    CHECK(f[2] == 2.5f);
    f.fill(-1.0f);
    CHECK(f[1] == -1.0f);
  }
  SUBCASE("reshape preserves data and rejects bad sizes") {
    Tensor r = u.reshaped({4});
    CHECK(r.rank() == 1);
    CHECK(r[3] == 4.0f);
    CHECK_THROWS_AS(u.reshaped({5}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor::of({2}, {1, 2, 3}), std::invalid_argument);
  }
  SUBCASE("finite check") {
    CHECK(u.all_finite());
    Tensor bad = Tensor::of({2}, {1.0f, std::numeric_limits<float>::quiet_NaN()});
    CHECK_FALSE(bad.all_finite());
    Tensor inf = Tensor::of({2}, {1.0f, std::numeric_limits<float>::infinity()});
    CHECK_FALSE(inf.all_finite());
  }
  SUBCASE("fill_uniform stays in range and is seeded") {
    Tensor x({100});
    Tensor y({100});
    Rng r1(3), r2(3);
    fill_uniform(x, r1, -0.5f, 0.5f);
    fill_uniform(y, r2, -0.5f, 0.5f);
    CHECK(x == y);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      CHECK(x[i] >= -0.5f);
      CHECK(x[i] < 0.5f);
    }
  }
}

TEST_CASE("dense forward computes weights * input + bias") {
  Tensor weights = Tensor::of({2, 2}, {1, 2, 3, 4});
  Tensor bias = Tensor::of({2}, {0, 0});
  Tensor input = Tensor::of({2}, {1, 1});
  Tensor out = dense_forward(input, weights, bias);
  REQUIRE(out.numel() == 2);
  CHECK(out[0] == doctest::Approx(3.0f));
  CHECK(out[1] == doctest::Approx(7.0f));

  SUBCASE("bias shifts the output") {
    Tensor shifted = dense_forward(input, weights, Tensor::of({2}, {10, -10}));
    CHECK(shifted[0] == doctest::Approx(13.0f));
    CHECK(shifted[1] == doctest::Approx(-3.0f));
  }
  SUBCASE("shape mismatches are rejected") {
    CHECK_THROWS_AS(dense_forward(Tensor::of({3}, {1, 2, 3}), weights, bias),
                    std::invalid_argument);
    CHECK_THROWS_AS(dense_forward(input, weights, Tensor::of({3}, {0, 0, 0})),
                    std::invalid_argument);
  }
}

TEST_CASE("convolution is valid cross-correlation with stride 1") {
  SUBCASE("1x1 identity kernel copies the image") {
    Tensor image({3, 3, 1});
    for (std::size_t i = 0; i < 9; ++i) image[i] = static_cast<float>(i) * 0.5f;
    Tensor kernel = Tensor::of({1, 1, 1, 1}, {1.0f});
    Tensor bias = Tensor::of({1}, {0.0f});
    Tensor out = conv2d_forward(image, kernel, bias);
    REQUIRE(out.shape().size() == 3);
    CHECK(out.dim(0) == 3);
    CHECK(out.dim(1) == 3);
    CHECK(out.dim(2) == 1);
    for (std::size_t i = 0; i < 9; ++i) CHECK(out[i] == doctest::Approx(image[i]));
  }
  SUBCASE("3x3 ones kernel on a constant image sums the window") {
    const float v = 0.75f;
    Tensor image = Tensor::full({5, 5, 1}, v);
    Tensor kernel = Tensor::full({3, 3, 1, 1}, 1.0f);
    Tensor bias = Tensor::of({1}, {0.0f});
    Tensor out = conv2d_forward(image, kernel, bias);
    CHECK(out.dim(0) == 3);
    CHECK(out.dim(1) == 3);
    for (std::size_t i = 0; i < out.numel(); ++i) {
      CHECK(out[i] == doctest::Approx(9.0f * v));
    }
  }
  SUBCASE("7x7 kernels over a 128x128x3 image give 122x122 maps") {
    Tensor image({128, 128, 3});
    Tensor kernels({7, 7, 3, 32});
    Tensor bias({32});
    Tensor out = conv2d_forward(image, kernels, bias);
    CHECK(out.dim(0) == 122);
    CHECK(out.dim(1) == 122);
    CHECK(out.dim(2) == 32);
  }
  SUBCASE("bias is per output channel") {
    Tensor image = Tensor::full({2, 2, 1}, 0.0f);
    Tensor kernel = Tensor::full({1, 1, 1, 2}, 1.0f);
    Tensor bias = Tensor::of({2}, {0.5f, -0.25f});
    Tensor out = conv2d_forward(image, kernel, bias);
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.5f));
    CHECK(out.at(0, 0, 1) == doctest::Approx(-0.25f));
  }
  SUBCASE("kernel larger than the image is rejected") {
    Tensor image({3, 3, 1});
    Tensor kernel({5, 5, 1, 1});
    Tensor bias({1});
    CHECK_THROWS_AS(conv2d_forward(image, kernel, bias), std::invalid_argument);
  }
  SUBCASE("channel mismatch is rejected") {
    Tensor image({4, 4, 2});
    Tensor kernel({3, 3, 1, 1});
    Tensor bias({1});
    CHECK_THROWS_AS(conv2d_forward(image, kernel, bias), std::invalid_argument);
  }
}

TEST_CASE("max pooling halves spatial size with floor semantics") {
  Tensor image = Tensor::of({2, 2, 1}, {1, 2, 3, 4});
  Tensor out = maxpool2x2_forward(image);
  REQUIRE(out.numel() == 1);
  CHECK(out[0] == doctest::Approx(4.0f));

  SUBCASE("odd trailing row and column are dropped") {
    Tensor odd({5, 5, 1});
    for (std::size_t i = 0; i < odd.numel(); ++i) odd[i] = static_cast<float>(i);
    Tensor pooled = maxpool2x2_forward(odd);
    CHECK(pooled.dim(0) == 2);
    CHECK(pooled.dim(1) == 2);
    CHECK(pooled.at(0, 0, 0) == doctest::Approx(6.0f));  // max of rows 0-1, cols 0-1
  }
  SUBCASE("21x21x128 pools to 10x10x128") {
    Tensor big({21, 21, 128});
    Tensor pooled = maxpool2x2_forward(big);
    CHECK(pooled.dim(0) == 10);
    CHECK(pooled.dim(1) == 10);
    CHECK(pooled.dim(2) == 128);
  }
  SUBCASE("channels pool independently") {
    Tensor two({2, 2, 2});
    two.at(0, 0, 0) = 9.0f;
    two.at(1, 1, 1) = 7.0f;
    Tensor pooled = maxpool2x2_forward(two);
    CHECK(pooled.at(0, 0, 0) == doctest::Approx(9.0f));
    CHECK(pooled.at(0, 0, 1) == doctest::Approx(7.0f));
  }
  SUBCASE("inputs smaller than a window are rejected") {
    Tensor tiny({1, 4, 1});
    CHECK_THROWS_AS(maxpool2x2_forward(tiny), std::invalid_argument);
  }
}

TEST_CASE("relu clamps negatives") {
  Tensor x = Tensor::of({4}, {-2.0f, -0.0f, 0.5f, 3.0f});
  Tensor y = relu_forward(x);
  CHECK(y[0] == 0.0f);
  CHECK(y[1] == 0.0f);
  CHECK(y[2] == 0.5f);
  CHECK(y[3] == 3.0f);
}

TEST_CASE("softmax produces a probability vector") {
  Tensor logits = Tensor::of({3}, {0.2f, 0.2f, 0.2f});
  Tensor p = softmax(logits);
  for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(1.0f / 3.0f));

  SUBCASE("sums to one within 1e-6 for random logits") {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
      Tensor z({7});
      fill_uniform(z, rng, -8.0f, 8.0f);
      Tensor probs = softmax(z);
      double sum = 0.0;
      for (std::size_t i = 0; i < probs.numel(); ++i) {
        CHECK(probs[i] >= 0.0f);
        sum += probs[i];
      }
      CHECK(std::fabs(sum - 1.0) < 1e-6);
    }
  }
  SUBCASE("invariant to a constant shift of the logits") {
    Tensor z = Tensor::of({3}, {1.0f, 2.0f, 3.0f});
    Tensor shifted = Tensor::of({3}, {101.0f, 102.0f, 103.0f});
    Tensor pz = softmax(z);
    Tensor ps = softmax(shifted);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(pz[i] == doctest::Approx(ps[i]).epsilon(1e-6));
    }
  }
  SUBCASE("stable for large magnitudes") {
    Tensor z = Tensor::of({2}, {1000.0f, 999.0f});
    Tensor p2 = softmax(z);
    CHECK(p2.all_finite());
    CHECK(p2[0] > p2[1]);
  }
}

TEST_CASE("softmax cross-entropy") {
  SUBCASE("equal logits over three classes") {
    Tensor logits = Tensor::of({3}, {0.0f, 0.0f, 0.0f});
    SoftmaxLoss result = softmax_cross_entropy(logits, 1);
    CHECK(result.loss == doctest::Approx(std::log(3.0)).epsilon(1e-6));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(result.probabilities[i] == doctest::Approx(1.0f / 3.0f));
    }
  }
  SUBCASE("a dominant target logit drives the loss to zero") {
    Tensor logits = Tensor::of({3}, {50.0f, 0.0f, 0.0f});
    SoftmaxLoss result = softmax_cross_entropy(logits, 0);
    CHECK(result.loss < 1e-6);
  }
  SUBCASE("loss gradient equals probabilities minus one-hot") {
    // Checked against central differences of the loss itself.
    Rng rng(13);
    Tensor logits({4});
    fill_uniform(logits, rng, -1.0f, 1.0f);
    const std::size_t target = 2;
    SoftmaxLoss base = softmax_cross_entropy(logits, target);
    const double h = 1e-3;
    for (std::size_t i = 0; i < logits.numel(); ++i) {
      const float saved = logits[i];
      logits[i] = static_cast<float>(saved + h);
      const double up = softmax_cross_entropy(logits, target).loss;
      logits[i] = static_cast<float>(saved - h);
      const double down = softmax_cross_entropy(logits, target).loss;
      logits[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic =
          static_cast<double>(base.probabilities[i]) - (i == target ? 1.0 : 0.0);
      CHECK(analytic == doctest::Approx(numeric).epsilon(1e-3));
    }
  }
  SUBCASE("target index must be in range") {
    Tensor logits({3});
    CHECK_THROWS_AS(softmax_cross_entropy(logits, 3), std::invalid_argument);
  }
}

TEST_CASE("sgd updates parameters in place") {
  Tensor param = Tensor::of({1}, {1.0f});
  Tensor grad = Tensor::of({1}, {0.5f});
  sgd_step(param, grad, 0.01);
  CHECK(param[0] == doctest::Approx(0.995f).epsilon(1e-9));

  SUBCASE("two steps move twice as far") {
    Tensor p = Tensor::of({1}, {1.0f});
    sgd_step(p, grad, 0.01);
    sgd_step(p, grad, 0.01);
    CHECK(p[0] == doctest::Approx(1.0f - 2.0f * 0.01f * 0.5f).epsilon(1e-9));
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    Tensor p = Tensor::of({2}, {0.25f, -0.75f});
    Tensor zero({2});
    sgd_step(p, zero, 0.5);
    CHECK(p[0] == 0.25f);
    CHECK(p[1] == -0.75f);
  }
  SUBCASE("contract violations") {
    Tensor p({2});
    CHECK_THROWS_AS(sgd_step(p, Tensor({3}), 0.1), std::invalid_argument);
    CHECK_THROWS_AS(sgd_step(p, Tensor({2}), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(sgd_step(p, Tensor({2}), -0.1), std::invalid_argument);
  }
}

TEST_CASE("bilinear resize") {
  SUBCASE("same-size resize is an exact copy") {
    Rng rng(31);
    Tensor image({8, 6, 3});
    fill_uniform(image, rng, 0.0f, 1.0f);
    Tensor out = resize_bilinear(image, 8, 6);
    CHECK(out == image);
  }
  SUBCASE("constant image stays constant at any size") {
    Tensor image = Tensor::full({5, 7, 3}, 0.6f);
    Tensor out = resize_bilinear(image, 11, 3);
    for (std::size_t i = 0; i < out.numel(); ++i) {
      CHECK(out[i] == doctest::Approx(0.6f));
    }
  }
  SUBCASE("2x2 checker upsamples with 0.5 center") {
    Tensor image({2, 2, 1});
    image.at(0, 1, 0) = 1.0f;
    image.at(1, 0, 0) = 1.0f;
    Tensor out = resize_bilinear(image, 3, 3);
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.0f));
    CHECK(out.at(0, 2, 0) == doctest::Approx(1.0f));
    CHECK(out.at(2, 0, 0) == doctest::Approx(1.0f));
    CHECK(out.at(2, 2, 0) == doctest::Approx(0.0f));
    CHECK(out.at(1, 1, 0) == doctest::Approx(0.5f));
  }
  SUBCASE("values never leave the input range") {
    Rng rng(77);
    Tensor image({9, 13, 3});
    fill_uniform(image, rng, -2.0f, 3.0f);
    float lo = image[0], hi = image[0];
    for (std::size_t i = 0; i < image.numel(); ++i) {
      lo = std::min(lo, image[i]);
      hi = std::max(hi, image[i]);
    }
    Tensor out = resize_bilinear(image, 32, 32);
    for (std::size_t i = 0; i < out.numel(); ++i) {
      CHECK(out[i] >= lo);
      CHECK(out[i] <= hi);
    }
  }
  SUBCASE("degenerate targets are rejected") {
    Tensor image({4, 4, 3});
    CHECK_THROWS_AS(resize_bilinear(image, 0, 4), std::invalid_argument);
  }
}

TEST_CASE("layer kinds round-trip through names") {
  for (LayerKind kind : {LayerKind::dense, LayerKind::conv2d, LayerKind::maxpool2x2,
                         LayerKind::relu, LayerKind::flatten, LayerKind::softmax}) {
    CHECK(parse_layer_kind(to_string(kind)) == kind);
  }
  CHECK_FALSE(parse_layer_kind("avgpool").has_value());
}

TEST_CASE("analytic gradients match central finite differences") {
  // Every layer kind, 20 random seeds, step 1e-3, max relative error < 1e-3.
  double worst = 0.0;
  for (std::uint32_t seed = 1; seed <= 20; ++seed) {
    worst = std::max(worst, gradcheck::check_all_layers(seed));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("all-zero upstream gradient produces all-zero parameter gradients") {
  Rng rng(17);

  DenseLayer dense(5, 3);
  dense.init_parameters(rng);
  Tensor input({5});
  fill_uniform(input, rng, -1.0f, 1.0f);
  dense.forward_cached(input);
  Tensor zero_up({3});
  Tensor input_grad = dense.backward(zero_up);
  for (Tensor* grad : dense.gradients()) {
    for (std::size_t i = 0; i < grad->numel(); ++i) CHECK((*grad)[i] == 0.0f);
  }
  for (std::size_t i = 0; i < input_grad.numel(); ++i) CHECK(input_grad[i] == 0.0f);

  Conv2dLayer conv(3, 2, 4);
  conv.init_parameters(rng);
  Tensor image({6, 6, 2});
  fill_uniform(image, rng, -1.0f, 1.0f);
  Tensor out = conv.forward_cached(image);
  Tensor zero_out(std::vector<std::size_t>(out.shape().begin(), out.shape().end()));
  conv.backward(zero_out);
  for (Tensor* grad : conv.gradients()) {
    for (std::size_t i = 0; i < grad->numel(); ++i) CHECK((*grad)[i] == 0.0f);
  }
}

TEST_CASE("parameter initialization is seeded and bounded") {
  DenseLayer a(64, 32);
  DenseLayer b(64, 32);
  Rng r1(9), r2(9);
  a.init_parameters(r1);
  b.init_parameters(r2);

  const Tensor& wa = *a.parameters()[0];
  const Tensor& wb = *b.parameters()[0];
  CHECK(wa == wb);

  // Uniform fan-based bound: sqrt(6 / (64 + 32)) = 0.25.
  const float bound = std::sqrt(6.0f / (64.0f + 32.0f));
  bool nonzero = false;
  for (std::size_t i = 0; i < wa.numel(); ++i) {
    CHECK(std::fabs(wa[i]) <= bound);
    nonzero = nonzero || wa[i] != 0.0f;
  }
  CHECK(nonzero);

  // Biases start at zero.
  const Tensor& bias = *a.parameters()[1];
  for (std::size_t i = 0; i < bias.numel(); ++i) CHECK(bias[i] == 0.0f);
}

TEST_CASE("sequential chains layers and exposes parameters") {
  Sequential net;
  net.add(std::make_unique<DenseLayer>(4, 8));
  net.add(std::make_unique<ReluLayer>());
  net.add(std::make_unique<DenseLayer>(8, 2));

  Rng rng(3);
  net.init_parameters(rng);
  CHECK(net.parameters().size() == 4);  // two weight/bias pairs
  CHECK(net.gradients().size() == 4);
  CHECK(net.size() == 3);

  Tensor input({4});
  fill_uniform(input, rng, -1.0f, 1.0f);
  Tensor out = net.forward(input);
  CHECK(out.numel() == 2);

  SUBCASE("forward is repeatable and matches forward_cached") {
    Tensor again = net.forward(input);
    CHECK(out == again);
    Tensor cached = net.forward_cached(input);
    CHECK(out == cached);
  }
  SUBCASE("specs reflect construction") {
    auto specs = net.specs();
    REQUIRE(specs.size() == 3);
    CHECK(specs[0] == LayerSpec::dense(4, 8));
    CHECK(specs[1] == LayerSpec::relu());
    CHECK(specs[2] == LayerSpec::dense(8, 2));
  }
  SUBCASE("zero_gradients clears accumulation") {
    net.forward_cached(input);
    Tensor up = Tensor::full({2}, 1.0f);
    net.backward(up);
    bool any_nonzero = false;
    for (Tensor* grad : net.gradients()) {
      for (std::size_t i = 0; i < grad->numel(); ++i) {
        any_nonzero = any_nonzero || (*grad)[i] != 0.0f;
      }
    }
    CHECK(any_nonzero);
    net.zero_gradients();
    for (Tensor* grad : net.gradients()) {
      for (std::size_t i = 0; i < grad->numel(); ++i) CHECK((*grad)[i] == 0.0f);
    }
  }
  SUBCASE("make_layer builds every kind") {
    for (LayerSpec spec : {LayerSpec::dense(3, 2), LayerSpec::conv2d(3, 1, 2),
                           LayerSpec::maxpool2x2(), LayerSpec::relu(),
                           LayerSpec::flatten(), LayerSpec::softmax()}) {
      auto layer = make_layer(spec);
      REQUIRE(layer != nullptr);
      CHECK(layer->spec() == spec);
    }
  }
}

TEST_CASE("flatten keeps row-major order") {
  FlattenLayer flatten;
  Tensor image({2, 2, 2});
  for (std::size_t i = 0; i < image.numel(); ++i) image[i] = static_cast<float>(i);
  Tensor flat = flatten.forward(image);
  CHECK(flat.rank() == 1);
  CHECK(flat.numel() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(flat[i] == static_cast<float>(i));

  Tensor cached = flatten.forward_cached(image);
  Tensor back = flatten.backward(cached);
  CHECK(back.rank() == 3);
  CHECK(back == image);
}
