#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace vtp {

// Dense row-major float64 tensor, rank 1 or 2. Model code uses rank-2
// throughout (column vectors are n-by-1); rank-1 exists for convenience
// in elementwise work and tests. No broadcasting beyond scalar cases
// handled explicitly by tape ops.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor zeros_like(const Tensor& other) { return zeros(other.shape); }
  static Tensor filled(std::vector<std::size_t> shape, double v);
  static Tensor scalar(double v);                        // 1x1
  static Tensor column(std::vector<double> v);           // nx1
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

  std::size_t rank() const { return shape.size(); }
  std::size_t numel() const;
  bool is_scalar() const { return numel() == 1; }

  // Rank-2 accessors; a rank-1 tensor behaves as a single column.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  std::string shape_str() const;  // e.g. "(4x3)" for diagnostics

  void fill(double v);
  void add_in_place(const Tensor& other);  // shapes must match
};

bool bit_equal(const Tensor& a, const Tensor& b);

}  // namespace vtp
