#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gaga {

// Dense row-major tensor. Rank is dynamic; most of the library uses
// rank-4 (N,C,H,W) for feature maps and rank-2 (N,D) for latent codes.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> dims, T fill = T(0))
      : dims_(std::move(dims)), data_(checked_numel(dims_), fill) {}

  Tensor(std::initializer_list<int64_t> dims, T fill = T(0))
      : Tensor(std::vector<int64_t>(dims), fill) {}

  static Tensor zeros(std::vector<int64_t> dims) { return Tensor(std::move(dims)); }

  static Tensor full(std::vector<int64_t> dims, T v) { return Tensor(std::move(dims), v); }

  static Tensor scalar(T v) { return Tensor({1}, v); }

  static Tensor from_vector(std::vector<int64_t> dims, std::vector<T> values) {
    Tensor t;
    t.dims_ = std::move(dims);
    if (checked_numel(t.dims_) != static_cast<int64_t>(values.size()))
      throw std::invalid_argument("Tensor::from_vector: size mismatch");
    t.data_ = std::move(values);
    return t;
  }

  const std::vector<int64_t>& dims() const { return dims_; }
  int64_t rank() const { return static_cast<int64_t>(dims_.size()); }
  int64_t dim(int i) const { return dims_.at(static_cast<size_t>(i)); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // rank-4 accessor
  T& at(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w)];
  }
  const T& at(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w)];
  }

  // rank-2 accessor
  T& at(int64_t n, int64_t d) { return data_[static_cast<size_t>(n * dims_[1] + d)]; }
  const T& at(int64_t n, int64_t d) const { return data_[static_cast<size_t>(n * dims_[1] + d)]; }

  bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor reshaped(std::vector<int64_t> dims) const {
    if (checked_numel(dims) != numel())
      throw std::invalid_argument("Tensor::reshaped: element count mismatch");
    Tensor t = *this;
    t.dims_ = std::move(dims);
    return t;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> t;
    t = Tensor<U>(dims_);
    for (int64_t i = 0; i < numel(); ++i) t[i] = static_cast<U>(data_[static_cast<size_t>(i)]);
    return t;
  }

  std::string shape_string() const {
    std::string s = "(";
    for (size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(dims_[i]);
    }
    return s + ")";
  }

 private:
  static int64_t checked_numel(const std::vector<int64_t>& dims) {
    int64_t n = 1;
    for (int64_t d : dims) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  std::vector<int64_t> dims_;
  std::vector<T> data_;
};

}  // namespace gaga
