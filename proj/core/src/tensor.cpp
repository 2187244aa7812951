#include "qgan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qgan/errors.hpp"

namespace qgan {

Tensor::Tensor(std::string name, std::vector<std::size_t> shape, std::vector<double> data)
    : name_(std::move(name)), shape_(std::move(shape)), data_(std::move(data)) {
  std::size_t expected = 1;
  for (std::size_t dim : shape_) {
    if (dim == 0) throw InvalidParams("tensor '" + name_ + "': zero dimension in shape");
    expected *= dim;
  }
  if (shape_.empty()) expected = 0;
  if (expected != data_.size()) {
    throw ShapeMismatch("tensor '" + name_ + "': shape product " + std::to_string(expected) +
                        " != data length " + std::to_string(data_.size()));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw InvalidParams("tensor '" + name_ + "': non-finite entry");
  }
}

Tensor Tensor::vector(std::string name, std::vector<double> data) {
  std::size_t n = data.size();
  return Tensor(std::move(name), {n}, std::move(data));
}

Tensor Tensor::matrix(std::string name, std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor(std::move(name), {rows, cols}, std::move(data));
}

Tensor Tensor::zeros(std::string name, std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t dim : shape) n *= dim;
  if (shape.empty()) n = 0;
  return Tensor(std::move(name), std::move(shape), std::vector<double>(n, 0.0));
}

bool is_constant(const Tensor& t) {
  if (t.empty()) return true;
  const auto& d = t.data();
  return std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); });
}

double min_value(const Tensor& t) { return *std::min_element(t.data().begin(), t.data().end()); }

double max_value(const Tensor& t) { return *std::max_element(t.data().begin(), t.data().end()); }

double mean_value(const Tensor& t) {
  return std::accumulate(t.data().begin(), t.data().end(), 0.0) / static_cast<double>(t.size());
}

}  // namespace qgan
