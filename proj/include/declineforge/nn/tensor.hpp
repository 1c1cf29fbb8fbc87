#pragma once

#include <string>
#include <vector>

namespace df::nn {

// Dense row-major tensor of doubles. All training-path math runs at 64-bit;
// volumes are promoted on ingest.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  Tensor(std::vector<int> s, std::vector<double> d);

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, double v);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  size_t size() const { return data.size(); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[i]; }
  int rows() const { return shape[0]; }
  int cols() const { return shape[1]; }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const {
    return data[static_cast<size_t>(r) * cols() + c];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  std::string shape_str() const;
};

size_t shape_product(const std::vector<int>& shape);

// C = A * B (2D), Eigen-backed.
void matmul_into(const Tensor& a, const Tensor& b, Tensor& c);
// C += A^T * B and C += A * B^T variants used by backward passes.
void matmul_at_b_accum(const Tensor& a, const Tensor& b, Tensor& c);
void matmul_a_bt_accum(const Tensor& a, const Tensor& b, Tensor& c);

}  // namespace df::nn
