#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sot3d/nn/adam.hpp"
#include "sot3d/nn/ops.hpp"
#include "sot3d/nn/params.hpp"

using namespace sot3d;
using namespace sot3d::nn;

namespace {

constexpr std::size_t kSamples = 16;

Parameters make_mlp(std::uint64_t seed) {
  Parameters p(seed);
  p.add("w1", 2, 8, 2);
  p.add_constant("b1", 1, 8, 0.0);
  p.add("w2", 8, 1, 8);
  p.add_constant("b2", 1, 1, 0.0);
  return p;
}

Tensor forward(Tape* tape, Parameters& p, const Tensor& x) {
  Tensor h = relu(tape, linear(tape, x, p.at("w1"), p.at("b1")));
  return linear(tape, h, p.at("w2"), p.at("b2"));
}

Tensor mse(Tape* tape, const Tensor& pred, const Tensor& target) {
  return weighted_sq_sum(tape, sub(tape, pred, target),
                         std::vector<double>(pred.rows(), 1.0),
                         static_cast<double>(pred.rows()));
}

std::pair<Tensor, Tensor> make_data() {
  Rng rng(2024);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < kSamples; ++i) {
    const double a = rng.uniform(-1.0, 1.0);
    const double b = rng.uniform(-1.0, 1.0);
    xs.insert(xs.end(), {a, b});
    ys.push_back(a * a + 0.5 * b);
  }
  return {Tensor::from_values(kSamples, 2, std::move(xs)),
          Tensor::from_values(kSamples, 1, std::move(ys))};
}

double train(Parameters& p, const Tensor& x, const Tensor& y, int steps,
             double* first_loss = nullptr) {
  Adam opt(p, 0.02);
  double loss_val = 0.0;
  for (int s = 0; s < steps; ++s) {
    Tape tape;
    opt.zero_grad();
    Tensor loss = mse(&tape, forward(&tape, p, x), y);
    loss_val = loss.item();
    if (s == 0 && first_loss) *first_loss = loss_val;
    tape.backward(loss);
    opt.step();
  }
  return loss_val;
}

}  // namespace

TEST_CASE("a small mlp overfits a fixed batch") {
  auto [x, y] = make_data();
  Parameters p = make_mlp(7);
  double first = 0.0;
  const double last = train(p, x, y, 400, &first);
  INFO("first " << first << " last " << last);
  CHECK(first > 0.0);
  CHECK(last < 0.05 * first);
}

TEST_CASE("training is bitwise deterministic") {
  auto [x, y] = make_data();
  Parameters a = make_mlp(7);
  Parameters b = make_mlp(7);
  train(a, x, y, 50);
  train(b, x, y, 50);
  for (const std::string& n : a.names()) {
    CHECK(a.at(n).values() == b.at(n).values());
  }
}

TEST_CASE("accumulated per-sample gradients match one batch pass") {
  auto [x, y] = make_data();
  Parameters p = make_mlp(11);

  // One pass over the whole batch.
  p.zero_grad();
  {
    Tape tape;
    Tensor loss = mse(&tape, forward(&tape, p, x), y);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> batch_grads;
  for (const std::string& n : p.names()) batch_grads.push_back(p.at(n).grad());

  // Per-sample passes, accumulated then averaged.
  p.zero_grad();
  for (std::size_t i = 0; i < kSamples; ++i) {
    Tape tape;
    Tensor xi = Tensor::from_values(1, 2, {x.at(i, 0), x.at(i, 1)});
    Tensor yi = Tensor::from_values(1, 1, {y.at(i, 0)});
    Tensor loss = mse(&tape, forward(&tape, p, xi), yi);
    tape.backward(loss);
  }
  p.scale_grads(1.0 / static_cast<double>(kSamples));

  std::size_t idx = 0;
  for (const std::string& n : p.names()) {
    const auto& got = p.at(n).grad();
    const auto& want = batch_grads[idx++];
    REQUIRE(got.size() == want.size());
    for (std::size_t j = 0; j < got.size(); ++j) {
      CHECK(got[j] == Catch::Approx(want[j]).margin(1e-10));
    }
  }
}

TEST_CASE("gradients shrink near the optimum of a convex problem") {
  // Pure linear least squares: Adam should drive the gradient toward zero.
  Parameters p(3);
  p.add("w", 1, 1, 1);
  Adam opt(p, 0.1);
  for (int s = 0; s < 300; ++s) {
    Tape tape;
    opt.zero_grad();
    Tensor pred = scale(&tape, p.at("w"), 2.0);
    Tensor loss = mse(&tape, pred, Tensor::from_values(1, 1, {3.0}));
    tape.backward(loss);
    opt.step();
  }
  CHECK(p.at("w").values()[0] == Catch::Approx(1.5).margin(1e-3));
}
