#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "surformer/core/rng.hpp"
#include "surformer/nn/layers.hpp"
#include "surformer/nn/loss.hpp"

using namespace surformer;
using Catch::Approx;

namespace {

Tensor make2(std::size_t r, std::size_t c, std::vector<double> v) {
  return Tensor::from({r, c}, std::move(v));
}

}  // namespace

TEST_CASE("dense identity weights pass input through", "[nn]") {
  Rng rng(1);
  nn::Dense d(2, 2, nn::Activation::None, rng);
  d.weight.value = make2(2, 2, {1, 0, 0, 1});
  d.bias.value.fill(0.0);
  const Tensor y = d.forward(make2(1, 2, {1, 2}), false);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 2.0);
}

TEST_CASE("dense relu clamps negative pre-activations", "[nn]") {
  Rng rng(1);
  nn::Dense d(2, 2, nn::Activation::Relu, rng);
  d.weight.value = make2(2, 2, {1, 0, 0, 1});
  d.bias.value.fill(0.0);
  const Tensor y = d.forward(make2(1, 2, {1, -2}), false);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 0.0);
}

TEST_CASE("dense rejects mismatched shapes naming both", "[nn]") {
  Rng rng(1);
  nn::Dense d(4, 3, nn::Activation::None, rng);
  CHECK_THROWS_MATCHES(d.forward(Tensor({2, 5}), false), DimensionError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("[2,5]") &&
                           Catch::Matchers::ContainsSubstring("[4,3]")));
}

TEST_CASE("layer_norm normalizes a two-point row", "[nn]") {
  nn::LayerNorm ln(2, 1e-12);
  const Tensor y = ln.forward(make2(1, 2, {1, 3}), false);
  CHECK(y[0] == Approx(-1.0).margin(1e-6));
  CHECK(y[1] == Approx(1.0).margin(1e-6));
}

TEST_CASE("layer_norm maps constant rows to beta", "[nn]") {
  nn::LayerNorm ln(2);
  ln.beta.value = Tensor::from({2}, {5, 5});
  const Tensor y = ln.forward(make2(1, 2, {3, 3}), false);
  CHECK(y[0] == 5.0);
  CHECK(y[1] == 5.0);
}

TEST_CASE("layer_norm row statistics are zero-mean unit-variance", "[nn]") {
  Rng rng(7);
  Tensor x({4, 8});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0.3, 2.0);
  nn::LayerNorm ln(8, 1e-12);
  const Tensor y = ln.forward(x, false);
  for (std::size_t r = 0; r < 4; ++r) {
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < 8; ++j) mean += y.at(r, j);
    mean /= 8.0;
    for (std::size_t j = 0; j < 8; ++j) var += (y.at(r, j) - mean) * (y.at(r, j) - mean);
    var /= 8.0;
    CHECK(std::fabs(mean) < 1e-9);
    CHECK(var == Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("layer_norm rejects zero width and bad eps", "[nn]") {
  CHECK_THROWS_AS(nn::LayerNorm(0), ValueError);
  CHECK_THROWS_AS(nn::LayerNorm(4, 0.0), ValueError);
}

TEST_CASE("batch_norm normalizes a two-sample batch", "[nn]") {
  nn::BatchNorm bn(1, 0.9, 1e-12);
  const Tensor y = bn.forward(make2(2, 1, {0, 2}), true);
  CHECK(y[0] == Approx(-1.0).margin(1e-6));
  CHECK(y[1] == Approx(1.0).margin(1e-6));
}

TEST_CASE("batch_norm inference with unit running stats is identity pre-affine", "[nn]") {
  nn::BatchNorm bn(2, 0.9, 1e-12);
  const Tensor x = make2(2, 2, {0.3, -1.2, 0.9, 2.0});
  const Tensor y = bn.forward(x, false);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == Approx(x[i]).margin(1e-9));
}

TEST_CASE("batch_norm running mean converges to the data mean", "[nn]") {
  nn::BatchNorm bn(1, 0.9, 1e-5);
  Rng rng(3);
  const double true_mean = 1.7;
  for (int step = 0; step < 100; ++step) {
    Tensor batch({32, 1});
    for (std::size_t i = 0; i < 32; ++i) batch[i] = rng.normal(true_mean, 0.5);
    bn.forward(batch, true);
  }
  CHECK(bn.running_mean.value[0] == Approx(true_mean).epsilon(0.05));
}

TEST_CASE("batch_norm rejects training batches below two samples", "[nn]") {
  nn::BatchNorm bn(3);
  CHECK_THROWS_AS(bn.forward(Tensor({1, 3}), true), ValueError);
}

TEST_CASE("dropout rate zero and inference mode are exact identities", "[nn]") {
  Rng rng(11);
  Tensor x({5, 5});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();

  nn::Dropout zero(0.0, 1);
  const Tensor y0 = zero.forward(x, true);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y0[i] == x[i]);

  nn::Dropout active(0.4, 2);
  const Tensor y1 = active.forward(x, false);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y1[i] == x[i]);
}

TEST_CASE("dropout survivor fraction and mean match the rate", "[nn]") {
  const std::size_t n = 1'000'000;
  Tensor x({n}, 1.0);
  // Rank-1 tensors are not accepted by layers, but dropout is elementwise;
  // reshape keeps the contract.
  Tensor x2 = x.reshaped({1000, 1000});
  nn::Dropout drop(0.1, 99);
  const Tensor y = drop.forward(x2, true);
  std::size_t survivors = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0) ++survivors;
    sum += y[i];
  }
  const double fraction = static_cast<double>(survivors) / static_cast<double>(n);
  CHECK(fraction == Approx(0.9).margin(0.002));
  CHECK(sum / static_cast<double>(n) == Approx(1.0).epsilon(0.005));
}

TEST_CASE("dropout rejects rates outside [0,1)", "[nn]") {
  CHECK_THROWS_AS(nn::Dropout(1.0, 1), ValueError);
  CHECK_THROWS_AS(nn::Dropout(-0.1, 1), ValueError);
}

TEST_CASE("softmax cross entropy on uniform logits", "[nn]") {
  const Tensor logits({3, 5}, 0.7);
  const auto res = nn::softmax_cross_entropy(logits, {0, 3, 4});
  CHECK(res.loss == Approx(std::log(5.0)).margin(1e-12));
  for (std::size_t i = 0; i < res.probs.size(); ++i) {
    CHECK(res.probs[i] == Approx(0.2).margin(1e-12));
  }
}

TEST_CASE("softmax cross entropy confident-correct loss is tiny", "[nn]") {
  const Tensor logits = make2(1, 5, {10, -10, -10, -10, -10});
  const auto res = nn::softmax_cross_entropy(logits, {0});
  CHECK(res.loss < 1e-4);
}

TEST_CASE("softmax cross entropy is stable under extreme logits", "[nn]") {
  const Tensor logits = make2(1, 3, {1e4, -1e4, 0.0});
  const auto res = nn::softmax_cross_entropy(logits, {0});
  CHECK(std::isfinite(res.loss));
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) sum += res.probs[i];
  CHECK(sum == Approx(1.0).margin(1e-9));
}

TEST_CASE("softmax cross entropy rejects out-of-range labels", "[nn]") {
  const Tensor logits({2, 3}, 0.0);
  CHECK_THROWS_MATCHES(nn::softmax_cross_entropy(logits, {0, 3}), ValueError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("3")));
}

TEST_CASE("probability rows sum to one and loss is non-negative", "[nn]") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor logits({4, 6});
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = rng.normal(0.0, 3.0);
    std::vector<int> labels;
    for (std::size_t i = 0; i < 4; ++i) labels.push_back(static_cast<int>(rng.uniform_index(6)));
    const auto res = nn::softmax_cross_entropy(logits, labels);
    CHECK(res.loss >= 0.0);
    for (std::size_t r = 0; r < 4; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < 6; ++c) sum += res.probs.at(r, c);
      CHECK(sum == Approx(1.0).margin(1e-9));
    }
  }
}
