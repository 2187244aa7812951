#pragma once

// Test-only oracles, kept independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "qgan/mlp.hpp"
#include "qgan/tensor.hpp"

namespace oracle {

// ----------------------------------------------------------------------------
// Exhaustive 1-bit quantizer optimum: every 2-level quantizer induces a
// contiguous split of the sorted data with the cluster means as the levels,
// so scanning all splits yields the global L2 optimum.
// ----------------------------------------------------------------------------

struct TwoClusterSplit {
  double sse = 0.0;
  std::size_t split = 0;  // first `split` sorted elements form the low cluster
};

inline double cluster_sse(const std::vector<double>& sorted, std::size_t begin, std::size_t end) {
  double mean = 0.0;
  for (std::size_t i = begin; i < end; ++i) mean += sorted[i];
  mean /= static_cast<double>(end - begin);
  double sse = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    double d = sorted[i] - mean;
    sse += d * d;
  }
  return sse;
}

inline TwoClusterSplit best_two_cluster_split(std::vector<double> data) {
  std::sort(data.begin(), data.end());
  TwoClusterSplit best;
  best.sse = cluster_sse(data, 0, data.size());  // single-cluster fallback
  best.split = data.size();
  for (std::size_t s = 1; s < data.size(); ++s) {
    double sse = cluster_sse(data, 0, s) + cluster_sse(data, s, data.size());
    if (sse < best.sse) {
      best.sse = sse;
      best.split = s;
    }
  }
  return best;
}

// SSE of a fixed binary assignment with the optimal (cluster-mean) levels.
// Returns the single-cluster SSE when one side is empty.
inline double assignment_sse(const std::vector<double>& data, const std::vector<int>& codes) {
  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    sum[codes[i]] += data[i];
    count[codes[i]] += 1;
  }
  double mean[2] = {count[0] ? sum[0] / count[0] : 0.0, count[1] ? sum[1] / count[1] : 0.0};
  double sse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double d = data[i] - mean[codes[i]];
    sse += d * d;
  }
  return sse;
}

// ----------------------------------------------------------------------------
// Straight-line MLP forward, written with none of the library's abstractions.
// ----------------------------------------------------------------------------

inline std::vector<double> apply_activation(qgan::Activation act, std::vector<double> v) {
  for (double& x : v) {
    switch (act) {
      case qgan::Activation::LeakyRelu: x = x > 0.0 ? x : 0.2 * x; break;
      case qgan::Activation::Relu: x = x > 0.0 ? x : 0.0; break;
      case qgan::Activation::Tanh: x = std::tanh(x); break;
      case qgan::Activation::Sigmoid: x = 1.0 / (1.0 + std::exp(-x)); break;
      case qgan::Activation::Identity: break;
    }
  }
  return v;
}

inline std::vector<double> mlp_forward_reference(const qgan::Mlp& mlp,
                                                 const std::vector<double>& input,
                                                 std::size_t batch) {
  std::size_t width = mlp.layers.front().weight.shape()[1];
  std::vector<double> x = input;
  for (const qgan::Layer& layer : mlp.layers) {
    std::size_t out = layer.weight.shape()[0];
    std::size_t in = layer.weight.shape()[1];
    std::vector<double> y(batch * out, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t o = 0; o < out; ++o) {
        double acc = layer.bias[o];
        for (std::size_t i = 0; i < in; ++i) acc += layer.weight[o * in + i] * x[b * width + i];
        y[b * out + o] = acc;
      }
    }
    y = apply_activation(layer.activation, std::move(y));
    x = std::move(y);
    width = out;
  }
  return x;
}

}  // namespace oracle
