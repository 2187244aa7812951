#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace qgan {

/// Named, shaped, flat array of 64-bit reals. Data is row-major and its
/// length always equals the product of the dims; construction rejects
/// non-finite entries.
class Tensor {
public:
  Tensor() = default;
  Tensor(std::string name, std::vector<std::size_t> shape, std::vector<double> data);

  // shape [n]
  static Tensor vector(std::string name, std::vector<double> data);
  // shape [rows, cols], row-major
  static Tensor matrix(std::string name, std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor zeros(std::string name, std::vector<std::size_t> shape);

  const std::string& name() const { return name_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t rank() const { return shape_.size(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  // Row-major element access for rank-2 tensors.
  double at(std::size_t row, std::size_t col) const { return data_[row * shape_[1] + col]; }
  double& at(std::size_t row, std::size_t col) { return data_[row * shape_[1] + col]; }

  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? (shape_.empty() ? 0 : 1) : shape_[1]; }

  void rename(std::string name) { name_ = std::move(name); }

  bool operator==(const Tensor& other) const = default;

private:
  std::string name_;
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// True when every element equals the first (also true for single-element
// tensors). Callers use this to route the zero-range degenerate case.
bool is_constant(const Tensor& t);

double min_value(const Tensor& t);
double max_value(const Tensor& t);
double mean_value(const Tensor& t);

}  // namespace qgan
