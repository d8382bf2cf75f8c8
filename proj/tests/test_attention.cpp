#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "surformer/nn/attention.hpp"

using namespace surformer;
using Catch::Approx;

namespace {

void set_identity(nn::Dense& d) {
  d.weight.value.fill(0.0);
  for (std::size_t i = 0; i < d.weight.value.dim(0); ++i) d.weight.value.at(i, i) = 1.0;
  d.bias.value.fill(0.0);
}

}  // namespace

TEST_CASE("single key attends with weight one and returns V", "[attention]") {
  const Tensor q = Tensor::from({1, 3}, {0.2, -1.0, 0.4});
  const Tensor k = Tensor::from({1, 3}, {2.0, 0.0, 1.0});
  const Tensor v = Tensor::from({1, 2}, {0.7, -0.3});
  const auto [out, weights] = nn::scaled_dot_product_attention(q, k, v);
  CHECK(weights[0] == 1.0);
  CHECK(out[0] == v[0]);
  CHECK(out[1] == v[1]);
}

TEST_CASE("identical keys yield uniform weights and the value mean", "[attention]") {
  const Tensor q = Tensor::from({1, 2}, {0.9, -0.4});
  const Tensor k = Tensor::from({4, 2}, {1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0});
  Tensor v({4, 3});
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto [out, weights] = nn::scaled_dot_product_attention(q, k, v);
  for (std::size_t i = 0; i < 4; ++i) CHECK(weights[i] == Approx(0.25).margin(1e-12));
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 4; ++i) mean += v.at(i, j);
    mean /= 4.0;
    CHECK(out[j] == Approx(mean).margin(1e-12));
  }
}

TEST_CASE("two-key case matches the scalar softmax hand evaluation", "[attention]") {
  const Tensor q = Tensor::from({1, 2}, {1.0, 0.0});
  const Tensor k = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
  const Tensor v = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
  const auto [out, weights] = nn::scaled_dot_product_attention(q, k, v);

  // Scores are (1/sqrt(2), 0); evaluate the softmax with scalar ops.
  const double s = 1.0 / std::sqrt(2.0);
  const double w0 = std::exp(s) / (std::exp(s) + 1.0);
  CHECK(weights[0] == Approx(w0).margin(1e-12));
  CHECK(weights[1] == Approx(1.0 - w0).margin(1e-12));
  CHECK(weights[0] == Approx(0.6698).margin(5e-5));
  CHECK(weights[1] == Approx(0.3302).margin(5e-5));
  CHECK(out[0] == Approx(w0).margin(1e-12));
  CHECK(out[1] == Approx(1.0 - w0).margin(1e-12));
}

TEST_CASE("attention weight rows sum to one and are non-negative", "[attention]") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor q({2, 5, 8}), k({2, 6, 8}), v({2, 6, 4});
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = rng.normal(0.0, 2.0);
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = rng.normal(0.0, 2.0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal();
    const auto [out, weights] = nn::scaled_dot_product_attention(q, k, v);
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t r = 0; r < 5; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 6; ++c) {
          CHECK(weights.at(b, r, c) >= 0.0);
          sum += weights.at(b, r, c);
        }
        CHECK(sum == Approx(1.0).margin(1e-9));
      }
    }
  }
}

TEST_CASE("attention rejects mismatched query/key depths", "[attention]") {
  CHECK_THROWS_AS(
      nn::scaled_dot_product_attention(Tensor({1, 3}), Tensor({2, 4}), Tensor({2, 4})),
      DimensionError);
}

TEST_CASE("one identity head reduces to scaled dot-product attention", "[attention]") {
  Rng rng(23);
  nn::AttentionConfig cfg{4, 1, 4};
  nn::MultiHeadAttention mha(cfg, rng);
  set_identity(mha.wq);
  set_identity(mha.wk);
  set_identity(mha.wv);
  set_identity(mha.wo);

  Tensor x({1, 3, 4});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
  const Tensor got = mha.forward(x, x, false);
  const auto [expected, weights] = nn::scaled_dot_product_attention(x, x, x);
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i] == Approx(expected[i]).margin(1e-12));
  }
}

TEST_CASE("multi-head output keeps the (B, Lq, D) shape", "[attention]") {
  Rng rng(31);
  nn::AttentionConfig cfg{128, 2, 64};
  nn::MultiHeadAttention mha(cfg, rng);
  Tensor q({2, 4, 128}), kv({2, 4, 128});
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = rng.normal();
  for (std::size_t i = 0; i < kv.size(); ++i) kv[i] = rng.normal();
  const Tensor y = mha.forward(q, kv, false);
  CHECK(y.shape() == std::vector<std::size_t>{2, 4, 128});
}

TEST_CASE("head geometry must tile the model dimension", "[attention]") {
  Rng rng(1);
  CHECK_THROWS_AS(nn::MultiHeadAttention(nn::AttentionConfig{128, 3, 64}, rng), ValueError);
}
