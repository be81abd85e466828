#include <catch2/catch_amalgamated.hpp>

#include "gestalt/nn/layers.hpp"
#include "test_support.hpp"

using namespace gestalt;
using gestalt_test::random_tensor;

TEST_CASE("conv2d 1x1 identity kernel reproduces the input") {
  Tensor4<double> x(1, 1, 3, 3);
  for (int i = 0; i < 9; ++i) x.v[i] = i + 1;
  Tensor4<double> w(1, 1, 1, 1);
  w.v[0] = 1.0;
  auto b = Tensor4<double>::vec(1);
  auto y = conv2d_forward(x, w, b, 1, 0);
  REQUIRE(y.same_shape(x));
  for (int i = 0; i < 9; ++i) REQUIRE(y.v[i] == x.v[i]);
}

TEST_CASE("conv2d zero weights and bias give zero output") {
  auto x = random_tensor<float>(2, 3, 8, 8, 42);
  Tensor4<float> w(4, 3, 3, 3);
  auto b = Tensor4<float>::vec(4);
  auto y = conv2d_forward(x, w, b, 1, 1);
  for (float v : y.v) REQUIRE(v == 0.0f);
}

TEST_CASE("conv2d rejects channel mismatch") {
  Tensor4<float> x(1, 2, 4, 4);
  Tensor4<float> w(1, 3, 3, 3);
  auto b = Tensor4<float>::vec(1);
  REQUIRE_THROWS_AS(conv2d_forward(x, w, b, 1, 1), ShapeMismatch);
}

TEST_CASE("batchnorm constant channel collapses to beta in train mode") {
  Tensor4<double> x(4, 2, 3, 3);
  x.fill(7.5);
  BatchNormParams<double> p(2);
  p.beta.v[0] = -1.25;
  p.beta.v[1] = 0.5;
  auto y = batchnorm_forward(x, p, Mode::train);
  for (int i = 0; i < x.n; ++i)
    for (int c = 0; c < 2; ++c)
      for (int k = 0; k < 9; ++k)
        REQUIRE(y.at(i, c, k / 3, k % 3) == Catch::Approx(p.beta.v[c]).margin(1e-12));
}

TEST_CASE("batchnorm on a standardized batch is near identity") {
  // construct an exactly zero-mean, unit-variance channel
  Tensor4<double> x(2, 1, 1, 2);
  x.v = {1.0, -1.0, -1.0, 1.0};
  BatchNormParams<double> p(1);
  auto y = batchnorm_forward(x, p, Mode::train);
  for (std::size_t i = 0; i < x.v.size(); ++i)
    REQUIRE(y.v[i] == Catch::Approx(x.v[i]).margin(1e-4));  // eps shrinks slightly
}

TEST_CASE("batchnorm train mode requires batch of at least 2") {
  Tensor4<double> x(1, 1, 2, 2);
  BatchNormParams<double> p(1);
  REQUIRE_THROWS_AS(batchnorm_forward(x, p, Mode::train), DegenerateBatch);
  REQUIRE_NOTHROW(batchnorm_forward(x, p, Mode::infer));
}

TEST_CASE("batchnorm inference is an affine function of the input") {
  BatchNormParams<float> p(3);
  Rng rng(9);
  for (int c = 0; c < 3; ++c) {
    p.gamma.v[c] = 0.5f + static_cast<float>(rng.uniform());
    p.beta.v[c] = static_cast<float>(rng.normal());
    p.running_mean.v[c] = static_cast<float>(rng.normal());
    p.running_var.v[c] = 0.3f + static_cast<float>(rng.uniform());
  }
  auto x1 = random_tensor<float>(2, 3, 4, 4, 11);
  auto x2 = random_tensor<float>(2, 3, 4, 4, 12);
  auto zero = Tensor4<float>(2, 3, 4, 4);
  auto y1 = batchnorm_forward(x1, p, Mode::infer);
  auto y2 = batchnorm_forward(x2, p, Mode::infer);
  auto y0 = batchnorm_forward(zero, p, Mode::infer);
  Tensor4<float> sum(2, 3, 4, 4);
  for (std::size_t i = 0; i < sum.v.size(); ++i) sum.v[i] = x1.v[i] + x2.v[i];
  auto ysum = batchnorm_forward(sum, p, Mode::infer);
  // affine: f(a+b) = f(a) + f(b) - f(0)
  for (std::size_t i = 0; i < sum.v.size(); ++i)
    REQUIRE(ysum.v[i] == Catch::Approx(y1.v[i] + y2.v[i] - y0.v[i]).margin(1e-4));
}

TEST_CASE("max and avg pooling on the 2x2 example") {
  Tensor4<double> x(1, 1, 2, 2);
  x.v = {1, 2, 3, 4};
  auto ymax = pool2d_forward(x, PoolKind::max, 2, 2);
  auto yavg = pool2d_forward(x, PoolKind::avg, 2, 2);
  REQUIRE(ymax.v[0] == 4.0);
  REQUIRE(yavg.v[0] == 2.5);
}

TEST_CASE("max pooling ties route gradient to the first row-major index") {
  Tensor4<double> x(1, 1, 2, 2);
  x.fill(3.0);
  PoolCache cache;
  auto y = pool2d_forward(x, PoolKind::max, 2, 2, &cache);
  REQUIRE(y.v[0] == 3.0);
  Tensor4<double> dy(1, 1, 1, 1);
  dy.v[0] = 1.0;
  auto dx = pool2d_backward(dy, x, PoolKind::max, 2, 2, &cache);
  REQUIRE(dx.v[0] == 1.0);
  REQUIRE(dx.v[1] == 0.0);
  REQUIRE(dx.v[2] == 0.0);
  REQUIRE(dx.v[3] == 0.0);
}

TEST_CASE("relu clamps negatives") {
  Tensor4<double> x(1, 3, 1, 1);
  x.v = {-1.0, 0.0, 2.0};
  auto y = relu_forward(x);
  REQUIRE(y.v[0] == 0.0);
  REQUIRE(y.v[1] == 0.0);
  REQUIRE(y.v[2] == 2.0);
}

TEST_CASE("dropout rate 0 is the identity in both modes") {
  auto x = random_tensor<float>(2, 5, 3, 3, 21);
  for (Mode m : {Mode::train, Mode::infer}) {
    auto y = dropout_forward(x, 0.0, m, 99);
    REQUIRE(std::equal(x.v.begin(), x.v.end(), y.v.begin()));
  }
}

TEST_CASE("dropout keeps expectation and survivor fraction") {
  const int units = 100000;
  Tensor4<double> x(1, units, 1, 1);
  x.fill(1.0);
  auto y = dropout_forward(x, 0.5, Mode::train, 4242);
  int survivors = 0;
  double mean = 0.0;
  for (double v : y.v) {
    if (v != 0.0) ++survivors;
    mean += v;
  }
  mean /= units;
  // survivor count ~ Binomial(n, 0.5): 3 sigma around n/2
  const double sigma_frac = std::sqrt(0.25 / units);
  REQUIRE(std::abs(survivors / static_cast<double>(units) - 0.5) <
          3 * sigma_frac);
  // E[output] = input; each kept unit contributes 2, sd of mean = 2*sigma_frac
  REQUIRE(std::abs(mean - 1.0) < 3 * 2 * sigma_frac);
}

TEST_CASE("dropout is deterministic given the seed") {
  auto x = random_tensor<float>(1, 1000, 1, 1, 5);
  auto a = dropout_forward(x, 0.5, Mode::train, 777);
  auto b = dropout_forward(x, 0.5, Mode::train, 777);
  REQUIRE(std::equal(a.v.begin(), a.v.end(), b.v.begin()));
  auto c = dropout_forward(x, 0.5, Mode::train, 778);
  REQUIRE(!std::equal(a.v.begin(), a.v.end(), c.v.begin()));
}

TEST_CASE("softmax cross-entropy on uniform logits equals ln C") {
  for (int classes : {2, 5, 17}) {
    Tensor4<double> logits(1, classes, 1, 1);
    logits.fill(0.37);
    std::vector<int> labels = {classes - 1};
    auto out = softmax_cross_entropy<double>(logits, labels);
    REQUIRE(out.loss == Catch::Approx(std::log(static_cast<double>(classes)))
                            .epsilon(1e-12));
  }
}

TEST_CASE("softmax cross-entropy saturates towards zero loss") {
  Tensor4<double> logits(1, 4, 1, 1);
  logits.v = {0.0, 0.0, 50.0, 0.0};
  std::vector<int> labels = {2};
  auto out = softmax_cross_entropy<double>(logits, labels);
  REQUIRE(out.loss >= 0.0);
  REQUIRE(out.loss < 1e-20);
}

TEST_CASE("softmax cross-entropy rejects bad labels") {
  Tensor4<double> logits(1, 3, 1, 1);
  std::vector<int> labels = {3};
  REQUIRE_THROWS_AS(softmax_cross_entropy<double>(logits, labels), InvalidLabel);
  std::vector<int> two = {0, 1};
  REQUIRE_THROWS_AS(softmax_cross_entropy<double>(logits, two), LengthMismatch);
}

TEST_CASE("softmax rows are normalized and nonnegative") {
  for (int case_no = 0; case_no < 25; ++case_no) {
    auto logits = random_tensor<float>(3, 11, 1, 1, 900 + case_no, 5.0);
    auto p = softmax(logits);  // internal 1e-9 row-sum check would throw
    for (int i = 0; i < p.n; ++i) {
      double sum = 0.0;
      for (int j = 0; j < 11; ++j) {
        REQUIRE(p.at(i, j, 0, 0) >= 0.0f);
        sum += p.at(i, j, 0, 0);
      }
      REQUIRE(sum == Catch::Approx(1.0).margin(1e-5));
    }
  }
}
