#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "surformer/nn/layers.hpp"
#include "surformer/nn/optim.hpp"

using namespace surformer;
using Catch::Approx;

TEST_CASE("adam with zero gradient and zero decay is a fixed point", "[optim]") {
  nn::Parameter p(Tensor({3}, 1.5));
  nn::Adam opt({&p}, {});
  for (int i = 0; i < 10; ++i) {
    p.zero_grad();
    opt.step();
  }
  for (std::size_t i = 0; i < 3; ++i) CHECK(p.value[i] == 1.5);
}

TEST_CASE("first adam step moves by about lr in the gradient direction", "[optim]") {
  nn::Parameter p(Tensor({1}, 1.0));
  nn::AdamConfig cfg;
  cfg.lr = 1e-3;
  nn::Adam opt({&p}, cfg);
  p.grad[0] = 0.5;
  opt.step();
  // Bias correction makes mhat = g and vhat = g^2 at t=1, so the step is
  // lr * g / (|g| + eps) = lr to first order.
  CHECK(p.value[0] == Approx(0.999).margin(1e-6));
}

TEST_CASE("decoupled weight decay shrinks the value with zero gradient", "[optim]") {
  nn::Parameter p(Tensor({1}, 1.0));
  nn::AdamConfig cfg;
  cfg.lr = 1e-3;
  cfg.weight_decay = 0.01;
  cfg.decoupled = true;
  nn::Adam opt({&p}, cfg);
  p.zero_grad();
  opt.step();
  CHECK(p.value[0] == Approx(0.99999).margin(1e-12));
}

TEST_CASE("adam aborts on non-finite gradients", "[optim]") {
  nn::Parameter p(Tensor({1}, 1.0));
  nn::Adam opt({&p}, {});
  p.grad[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(opt.step(), Error);
}

TEST_CASE("plateau halves the rate after the patience window", "[optim]") {
  nn::PlateauSchedule sched(8, 0.5, 1e-7, nn::PlateauSchedule::Mode::MinLoss);
  double lr = 5e-6;
  lr = sched.update(1.0, lr);  // first value becomes the best
  CHECK(lr == 5e-6);
  for (int i = 0; i < 7; ++i) {
    lr = sched.update(1.0, lr);  // ties count as non-improvement
    CHECK(lr == 5e-6);
  }
  lr = sched.update(1.0, lr);  // 8th consecutive non-improving epoch
  CHECK(lr == Approx(2.5e-6));
}

TEST_CASE("plateau never goes below the minimum rate", "[optim]") {
  nn::PlateauSchedule sched(1, 0.5, 1e-7, nn::PlateauSchedule::Mode::MinLoss);
  double lr = 2e-7;
  sched.update(1.0, lr);
  lr = sched.update(1.0, lr);
  CHECK(lr == 1e-7);
  lr = sched.update(1.0, lr);
  CHECK(lr == 1e-7);
}

TEST_CASE("improvement inside the window resets the wait counter", "[optim]") {
  nn::PlateauSchedule sched(8, 0.5, 1e-7, nn::PlateauSchedule::Mode::MinLoss);
  double lr = 1e-3;
  lr = sched.update(1.0, lr);
  for (int i = 0; i < 6; ++i) lr = sched.update(1.0, lr);  // wait = 6
  lr = sched.update(0.5, lr);                              // improvement at epoch 7
  CHECK(lr == 1e-3);
  CHECK(sched.wait() == 0);
  for (int i = 0; i < 7; ++i) lr = sched.update(0.5, lr);
  CHECK(lr == 1e-3);  // only 7 non-improving epochs since the reset
  lr = sched.update(0.5, lr);
  CHECK(lr == Approx(5e-4));
}

TEST_CASE("plateau never increases the learning rate", "[optim]") {
  Rng rng(41);
  nn::PlateauSchedule sched(3, 0.5, 1e-6, nn::PlateauSchedule::Mode::MaxAccuracy);
  double lr = 1e-2;
  for (int i = 0; i < 200; ++i) {
    const double next = sched.update(rng.uniform(), lr);
    CHECK(next <= lr);
    CHECK(next >= 1e-6);
    lr = next;
  }
}

TEST_CASE("early stopping never triggers while the metric improves", "[optim]") {
  nn::Parameter p(Tensor({2}, 0.0));
  nn::EarlyStopping early(15);
  for (int epoch = 1; epoch <= 100; ++epoch) {
    CHECK_FALSE(early.update(static_cast<double>(epoch), {&p}));
  }
}

TEST_CASE("early stopping fires after patience and restores the peak", "[optim]") {
  nn::Parameter p(Tensor({2}, 0.0));
  nn::EarlyStopping early(15);
  const std::vector<double> accuracy = {0.5, 0.6, 0.9};  // peak at epoch 3
  int epoch = 0;
  bool stopped = false;
  for (; epoch < 100 && !stopped; ) {
    ++epoch;
    const double acc = epoch <= 3 ? accuracy[epoch - 1] : 0.7;
    p.value[0] = static_cast<double>(epoch);  // marker for the snapshot check
    p.value[1] = 10.0 * epoch;
    stopped = early.update(acc, {&p});
  }
  CHECK(stopped);
  CHECK(epoch == 18);
  CHECK(early.best_epoch() == 3);
  early.restore({&p});
  CHECK(p.value[0] == 3.0);
  CHECK(p.value[1] == 30.0);
}

TEST_CASE("ties count as non-improvement for early stopping", "[optim]") {
  // State machine: feeding the same value repeatedly must walk wait up to
  // patience without ever refreshing the snapshot.
  nn::Parameter p(Tensor({1}, 0.0));
  nn::EarlyStopping early(4);
  p.value[0] = 1.0;
  CHECK_FALSE(early.update(0.8, {&p}));  // improvement, snapshot at 1.0
  bool stopped = false;
  for (int i = 2; i <= 5; ++i) {
    p.value[0] = static_cast<double>(i);
    stopped = early.update(0.8, {&p});
  }
  CHECK(stopped);
  CHECK(early.wait() == 4);
  early.restore({&p});
  CHECK(p.value[0] == 1.0);
}

TEST_CASE("counting covers dense and layer-norm parameters", "[optim]") {
  Rng rng(1);
  nn::Dense d(7, 128, nn::Activation::None, rng);
  nn::ParamRegistry reg;
  d.register_params(reg, "d");
  CHECK(nn::count_parameters(reg) == 1024);

  nn::LayerNorm ln(128);
  nn::ParamRegistry reg2;
  ln.register_params(reg2, "ln");
  CHECK(nn::count_parameters(reg2) == 256);
}

TEST_CASE("batch-norm running statistics are excluded from the count", "[optim]") {
  nn::BatchNorm bn(16);
  nn::ParamRegistry reg;
  bn.register_params(reg, "bn");
  CHECK(nn::count_parameters(reg) == 32);
}

TEST_CASE("identical seeds give bit-identical parameters after training steps", "[optim]") {
  auto run = [] {
    Rng rng(77);
    nn::Dense d(6, 4, nn::Activation::Relu, rng);
    nn::AdamConfig cfg;
    cfg.lr = 1e-2;
    nn::ParamRegistry reg;
    d.register_params(reg, "d");
    nn::Adam opt(reg.parameters(), cfg);
    Rng data_rng(123);
    for (int step = 0; step < 25; ++step) {
      Tensor x({3, 6});
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = data_rng.normal();
      reg.zero_grad();
      const Tensor y = d.forward(x, true);
      Tensor g(y.shape(), 1.0 / static_cast<double>(y.size()));
      d.backward(g);
      opt.step();
    }
    return std::make_pair(d.weight.value, d.bias.value);
  };
  const auto [w1, b1] = run();
  const auto [w2, b2] = run();
  for (std::size_t i = 0; i < w1.size(); ++i) CHECK(w1[i] == w2[i]);
  for (std::size_t i = 0; i < b1.size(); ++i) CHECK(b1[i] == b2[i]);
}
