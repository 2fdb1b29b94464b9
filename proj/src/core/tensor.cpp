#include "core/tensor.hpp"

#include <cstring>

#include "core/error.hpp"

namespace vtp {

namespace {
std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}
}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  if (shape.empty() || shape.size() > 2)
    throw DimensionError("tensor rank must be 1 or 2, got rank " + std::to_string(shape.size()));
  Tensor t;
  t.shape = std::move(shape);
  t.data.assign(shape_numel(t.shape), 0.0);
  return t;
}

Tensor Tensor::filled(std::vector<std::size_t> shape, double v) {
  Tensor t = zeros(std::move(shape));
  t.fill(v);
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t = zeros({1, 1});
  t.data[0] = v;
  return t;
}

Tensor Tensor::column(std::vector<double> v) {
  Tensor t;
  t.shape = {v.size(), 1};
  t.data = std::move(v);
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  if (v.size() != rows * cols)
    throw DimensionError("matrix data has " + std::to_string(v.size()) + " entries, expected " +
                         std::to_string(rows * cols) + " for (" + std::to_string(rows) + "x" +
                         std::to_string(cols) + ")");
  Tensor t;
  t.shape = {rows, cols};
  t.data = std::move(v);
  return t;
}

std::size_t Tensor::numel() const { return shape_numel(shape); }

std::size_t Tensor::rows() const { return shape.empty() ? 0 : shape[0]; }

std::size_t Tensor::cols() const { return shape.size() < 2 ? 1 : shape[1]; }

double& Tensor::at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }

double Tensor::at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

std::string Tensor::shape_str() const {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

void Tensor::fill(double v) {
  for (double& x : data) x = v;
}

void Tensor::add_in_place(const Tensor& other) {
  if (!same_shape(other))
    throw DimensionError("add_in_place shape mismatch: " + shape_str() + " vs " + other.shape_str());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return false;
  return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

}  // namespace vtp
