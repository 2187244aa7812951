#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qgan/errors.hpp"
#include "qgan/mlp.hpp"
#include "qgan/rng.hpp"

using namespace qgan;

namespace {

Mlp single_identity_layer() {
  Mlp mlp;
  Layer layer;
  layer.weight = Tensor::matrix("w", 2, 2, {1, 0, 0, 1});
  layer.bias = Tensor::vector("b", {0, 0});
  layer.activation = Activation::Identity;
  mlp.layers.push_back(layer);
  return mlp;
}

}  // namespace

TEST_CASE("forward: identity layer passes input through") {
  Tensor in = Tensor::matrix("x", 1, 2, {1.0, 2.0});
  Tensor out = forward(single_identity_layer(), in);
  CHECK(out.data() == std::vector<double>{1.0, 2.0});
}

TEST_CASE("forward: zero weights with sigmoid output give 0.5") {
  Mlp mlp;
  Layer layer;
  layer.weight = Tensor::matrix("w", 3, 2, std::vector<double>(6, 0.0));
  layer.bias = Tensor::vector("b", {0, 0, 0});
  layer.activation = Activation::Sigmoid;
  mlp.layers.push_back(layer);
  Tensor out = forward(mlp, Tensor::matrix("x", 2, 2, {1, -7, 3, 9}));
  for (double v : out.data()) CHECK(v == 0.5);
}

TEST_CASE("forward: shape mismatches are rejected") {
  CHECK_THROWS_AS(forward(single_identity_layer(), Tensor::matrix("x", 1, 3, {1, 2, 3})),
                  ShapeMismatch);
}

TEST_CASE("forward matches the straight-line reference implementation") {
  Rng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    Mlp mlp = make_mlp({3, 8, 5, 2}, Activation::LeakyRelu, Activation::Tanh, rng);
    std::size_t batch = 4;
    std::vector<double> in(batch * 3);
    for (double& v : in) v = rng.normal(0.0, 1.0);

    Tensor out = forward(mlp, Tensor::matrix("x", batch, 3, in));
    std::vector<double> expected = oracle::mlp_forward_reference(mlp, in, batch);
    REQUIRE(out.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(out.data()[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    }
  }
}

namespace {

// Scalar loss used for gradient checking: mean of squared activations.
double toy_loss(const Mlp& mlp, const Tensor& input) {
  Tensor out = forward(mlp, input);
  double loss = 0.0;
  for (double v : out.data()) loss += v * v;
  return loss / static_cast<double>(out.rows());
}

Tensor toy_loss_grad(const Tensor& out) {
  std::vector<double> g(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    g[i] = 2.0 * out.data()[i] / static_cast<double>(out.rows());
  }
  return Tensor::matrix("g", out.rows(), out.cols(), std::move(g));
}

// Any ReLU-family preactivation within `margin` of its kink makes finite
// differences unreliable; resample in that case.
bool near_kink(const Mlp& mlp, const ForwardCache& cache, double margin) {
  for (std::size_t li = 0; li < mlp.layers.size(); ++li) {
    Activation act = mlp.layers[li].activation;
    if (act != Activation::Relu && act != Activation::LeakyRelu) continue;
    for (double z : cache.preacts[li].data()) {
      if (std::abs(z) < margin) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("backward matches central finite differences on random MLPs") {
  Rng rng(77);
  int tested = 0;
  while (tested < 8) {
    Mlp mlp = make_mlp({2, 6, 4, 1}, tested % 2 ? Activation::LeakyRelu : Activation::Tanh,
                       Activation::Sigmoid, rng);
    std::size_t batch = 3;
    std::vector<double> in(batch * 2);
    for (double& v : in) v = rng.normal(0.0, 1.0);
    Tensor input = Tensor::matrix("x", batch, 2, in);

    ForwardCache cache;
    Tensor out = forward(mlp, input, cache);
    if (near_kink(mlp, cache, 1e-4)) continue;
    ++tested;

    Gradients grads = backward(mlp, cache, toy_loss_grad(out));

    const double h = 1e-5;
    for (std::size_t li = 0; li < mlp.layers.size(); ++li) {
      auto check_param = [&](Tensor& param, const Tensor& grad) {
        for (std::size_t i = 0; i < param.size(); ++i) {
          double saved = param[i];
          param[i] = saved + h;
          double up = toy_loss(mlp, input);
          param[i] = saved - h;
          double down = toy_loss(mlp, input);
          param[i] = saved;
          double fd = (up - down) / (2.0 * h);
          CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
        }
      };
      check_param(mlp.layers[li].weight, grads.weight_grads[li]);
      check_param(mlp.layers[li].bias, grads.bias_grads[li]);
    }
  }
}

TEST_CASE("adam with zero learning rate leaves parameters untouched") {
  Rng rng(5);
  Mlp mlp = make_mlp({2, 4, 1}, Activation::LeakyRelu, Activation::Sigmoid, rng);
  Mlp before = mlp;
  AdamState state = AdamState::like(mlp);

  ForwardCache cache;
  Tensor input = Tensor::matrix("x", 2, 2, {0.1, -0.3, 0.7, 0.2});
  Tensor out = forward(mlp, input, cache);
  Gradients grads = backward(mlp, cache, toy_loss_grad(out));

  AdamParams params;
  params.learning_rate = 0.0;
  adam_update(mlp, state, grads, params);
  for (std::size_t li = 0; li < mlp.layers.size(); ++li) {
    CHECK(mlp.layers[li].weight.data() == before.layers[li].weight.data());
    CHECK(mlp.layers[li].bias.data() == before.layers[li].bias.data());
  }
}

TEST_CASE("adam moves parameters against the gradient") {
  Rng rng(6);
  Mlp mlp = make_mlp({2, 3, 1}, Activation::Tanh, Activation::Identity, rng);
  AdamState state = AdamState::like(mlp);
  Tensor input = Tensor::matrix("x", 4, 2, {0.5, 1.0, -0.5, 0.3, 0.9, -0.2, -1.0, 0.4});

  double initial = toy_loss(mlp, input);
  AdamParams params;
  params.learning_rate = 1e-2;
  for (int step = 0; step < 200; ++step) {
    ForwardCache cache;
    Tensor out = forward(mlp, input, cache);
    Gradients grads = backward(mlp, cache, toy_loss_grad(out));
    adam_update(mlp, state, grads, params);
  }
  CHECK(toy_loss(mlp, input) < initial * 0.5);
}
