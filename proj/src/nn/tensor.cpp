#include "declineforge/nn/tensor.hpp"

#include <Eigen/Dense>
#include <sstream>

#include "declineforge/error.hpp"

namespace df::nn {

size_t shape_product(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  return n;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  for (int d : shape)
    if (d <= 0) throw ShapeError("Tensor: non-positive dimension");
  data.assign(shape_product(shape), 0.0);
}

Tensor::Tensor(std::vector<int> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != shape_product(shape))
    throw ShapeError("Tensor: data length does not match shape");
}

Tensor Tensor::full(std::vector<int> s, double v) {
  Tensor t(std::move(s));
  std::fill(t.data.begin(), t.data.end(), v);
  return t;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i)
    os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

using MatMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using CMatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                               Eigen::Dynamic, Eigen::RowMajor>>;

void matmul_into(const Tensor& a, const Tensor& b, Tensor& c) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows())
    throw ShapeError("matmul: incompatible shapes " + a.shape_str() + " and " +
                     b.shape_str());
  c = Tensor({a.rows(), b.cols()});
  MatMap(c.data.data(), a.rows(), b.cols()) =
      CMatMap(a.data.data(), a.rows(), a.cols()) *
      CMatMap(b.data.data(), b.rows(), b.cols());
}

void matmul_at_b_accum(const Tensor& a, const Tensor& b, Tensor& c) {
  MatMap(c.data.data(), c.rows(), c.cols()) +=
      CMatMap(a.data.data(), a.rows(), a.cols()).transpose() *
      CMatMap(b.data.data(), b.rows(), b.cols());
}

void matmul_a_bt_accum(const Tensor& a, const Tensor& b, Tensor& c) {
  MatMap(c.data.data(), c.rows(), c.cols()) +=
      CMatMap(a.data.data(), a.rows(), a.cols()) *
      CMatMap(b.data.data(), b.rows(), b.cols()).transpose();
}

}  // namespace df::nn
