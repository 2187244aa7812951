#include "qgan/mlp.hpp"

#include <cmath>
#include <string>

#include "qgan/errors.hpp"

namespace qgan {

namespace {

double activate(Activation act, double z) {
  switch (act) {
    case Activation::LeakyRelu: return z > 0.0 ? z : kLeakyReluSlope * z;
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Identity: return z;
  }
  return z;
}

// Derivative w.r.t. the preactivation, given both z and y = act(z).
double activate_grad(Activation act, double z, double y) {
  switch (act) {
    case Activation::LeakyRelu: return z > 0.0 ? 1.0 : kLeakyReluSlope;
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Sigmoid: return y * (1.0 - y);
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

bool relu_family(Activation act) {
  return act == Activation::LeakyRelu || act == Activation::Relu;
}

}  // namespace

Mlp make_mlp(const std::vector<std::size_t>& dims, Activation hidden, Activation output, Rng& rng) {
  if (dims.size() < 2) throw InvalidParams("an MLP needs at least one layer (two dims)");
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    std::size_t in = dims[l];
    std::size_t out = dims[l + 1];
    Activation act = (l + 2 == dims.size()) ? output : hidden;
    double stddev = relu_family(act) ? std::sqrt(2.0 / static_cast<double>(in))
                                     : std::sqrt(2.0 / static_cast<double>(in + out));
    std::vector<double> w(in * out);
    for (double& v : w) v = rng.normal(0.0, stddev);  // EXPERIMENT6 normal init
    Layer layer;
    layer.weight = Tensor::matrix("w" + std::to_string(l), out, in, std::move(w));
    layer.bias = Tensor::vector("b" + std::to_string(l), std::vector<double>(out, 0.0));
    layer.activation = act;
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

namespace {

Tensor layer_forward(const Layer& layer, const Tensor& x, Tensor* preact_out) {
  const std::size_t batch = x.rows();
  const std::size_t in = layer.in_dim();
  const std::size_t out = layer.out_dim();
  std::vector<double> pre(batch * out);
  const auto& w = layer.weight.data();
  const auto& b = layer.bias.data();
  const auto& xd = x.data();
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xrow = xd.data() + r * in;
    double* prow = pre.data() + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wrow = w.data() + o * in;
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += wrow[i] * xrow[i];
      prow[o] = acc;
    }
  }
  std::vector<double> post(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) post[i] = activate(layer.activation, pre[i]);
  if (preact_out) *preact_out = Tensor::matrix("z", batch, out, std::move(pre));
  return Tensor::matrix("y", batch, out, std::move(post));
}

void check_batch(const Mlp& mlp, const Tensor& batch) {
  if (mlp.layers.empty()) throw InvalidParams("empty MLP");
  if (batch.rank() != 2) throw ShapeMismatch("batch must be rank 2");
  if (batch.cols() != mlp.input_dim()) {
    throw ShapeMismatch("batch width " + std::to_string(batch.cols()) +
                        " != input dim " + std::to_string(mlp.input_dim()));
  }
}

}  // namespace

Tensor forward(const Mlp& mlp, const Tensor& batch) {
  check_batch(mlp, batch);
  Tensor x = batch;
  for (const Layer& layer : mlp.layers) x = layer_forward(layer, x, nullptr);
  return x;
}

Tensor forward(const Mlp& mlp, const Tensor& batch, ForwardCache& cache) {
  check_batch(mlp, batch);
  cache.inputs.clear();
  cache.preacts.clear();
  Tensor x = batch;
  for (const Layer& layer : mlp.layers) {
    cache.inputs.push_back(x);
    Tensor preact;
    x = layer_forward(layer, x, &preact);
    cache.preacts.push_back(std::move(preact));
  }
  cache.output = x;
  return x;
}

Gradients backward(const Mlp& mlp, const ForwardCache& cache, const Tensor& grad_output) {
  const std::size_t n_layers = mlp.layers.size();
  if (cache.inputs.size() != n_layers) throw ShapeMismatch("cache does not match the MLP");
  if (grad_output.rows() != cache.output.rows() || grad_output.cols() != cache.output.cols()) {
    throw ShapeMismatch("grad_output shape does not match the forward output");
  }

  Gradients grads;
  grads.weight_grads.resize(n_layers);
  grads.bias_grads.resize(n_layers);

  Tensor upstream = grad_output;  // dL/dy of the current layer
  for (std::size_t li = n_layers; li-- > 0;) {
    const Layer& layer = mlp.layers[li];
    const Tensor& x = cache.inputs[li];
    const Tensor& z = cache.preacts[li];
    const std::size_t batch = x.rows();
    const std::size_t in = layer.in_dim();
    const std::size_t out = layer.out_dim();

    // dL/dz = dL/dy * act'(z); y is recovered from the next layer's input or
    // the cached final output.
    const Tensor& y = (li + 1 < n_layers) ? cache.inputs[li + 1] : cache.output;
    std::vector<double> dz(batch * out);
    for (std::size_t i = 0; i < dz.size(); ++i) {
      dz[i] = upstream.data()[i] * activate_grad(layer.activation, z.data()[i], y.data()[i]);
    }

    std::vector<double> dw(out * in, 0.0);
    std::vector<double> db(out, 0.0);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* xrow = x.data().data() + r * in;
      const double* dzrow = dz.data() + r * out;
      for (std::size_t o = 0; o < out; ++o) {
        double g = dzrow[o];
        db[o] += g;
        double* dwrow = dw.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) dwrow[i] += g * xrow[i];
      }
    }

    std::vector<double> dx(batch * in, 0.0);
    const auto& w = layer.weight.data();
    for (std::size_t r = 0; r < batch; ++r) {
      const double* dzrow = dz.data() + r * out;
      double* dxrow = dx.data() + r * in;
      for (std::size_t o = 0; o < out; ++o) {
        double g = dzrow[o];
        const double* wrow = w.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) dxrow[i] += g * wrow[i];
      }
    }

    grads.weight_grads[li] = Tensor::matrix("dw", out, in, std::move(dw));
    grads.bias_grads[li] = Tensor::vector("db", std::move(db));
    upstream = Tensor::matrix("dx", batch, in, std::move(dx));
  }
  grads.input_grad = std::move(upstream);
  return grads;
}

AdamState AdamState::like(const Mlp& mlp) {
  AdamState st;
  for (const Layer& layer : mlp.layers) {
    st.weight_m.push_back(Tensor::zeros("m", layer.weight.shape()));
    st.weight_v.push_back(Tensor::zeros("v", layer.weight.shape()));
    st.bias_m.push_back(Tensor::zeros("m", layer.bias.shape()));
    st.bias_v.push_back(Tensor::zeros("v", layer.bias.shape()));
  }
  return st;
}

namespace {

void adam_apply(std::vector<double>& param, std::vector<double>& m, std::vector<double>& v,
                const std::vector<double>& grad, const AdamParams& p, double bc1, double bc2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * grad[i];
    v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * grad[i] * grad[i];
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    param[i] -= p.learning_rate * mhat / (std::sqrt(vhat) + p.epsilon);
  }
}

}  // namespace

void adam_update(Mlp& mlp, AdamState& state, const Gradients& grads, const AdamParams& params) {
  if (grads.weight_grads.size() != mlp.layers.size()) {
    throw ShapeMismatch("gradients do not match the MLP layer count");
  }
  state.step += 1;
  double bc1 = 1.0 - std::pow(params.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(params.beta2, static_cast<double>(state.step));
  for (std::size_t li = 0; li < mlp.layers.size(); ++li) {
    adam_apply(mlp.layers[li].weight.data(), state.weight_m[li].data(), state.weight_v[li].data(),
               grads.weight_grads[li].data(), params, bc1, bc2);
    adam_apply(mlp.layers[li].bias.data(), state.bias_m[li].data(), state.bias_v[li].data(),
               grads.bias_grads[li].data(), params, bc1, bc2);
  }
}

}  // namespace qgan
