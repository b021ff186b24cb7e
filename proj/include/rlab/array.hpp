#pragma once

#include <cassert>
#include <string>
#include <vector>

namespace rlab::num {

// Dense real array, rank 1 or 2. The rank matters for op shape checks, so a
// length-n vector and a 1 x n matrix are distinct shapes.
class Array {
 public:
  Array() = default;

  static Array vec(int n, double fill = 0.0) {
    Array a;
    a.rows_ = n;
    a.cols_ = 1;
    a.matrix_ = false;
    a.v_.assign(static_cast<size_t>(n), fill);
    return a;
  }

  static Array mat(int rows, int cols, double fill = 0.0) {
    Array a;
    a.rows_ = rows;
    a.cols_ = cols;
    a.matrix_ = true;
    a.v_.assign(static_cast<size_t>(rows) * static_cast<size_t>(cols), fill);
    return a;
  }

  static Array from(std::vector<double> values) {
    Array a;
    a.rows_ = static_cast<int>(values.size());
    a.cols_ = 1;
    a.matrix_ = false;
    a.v_ = std::move(values);
    return a;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool is_matrix() const { return matrix_; }
  int size() const { return static_cast<int>(v_.size()); }

  double operator[](int i) const { return v_[static_cast<size_t>(i)]; }
  double& operator[](int i) { return v_[static_cast<size_t>(i)]; }

  double at(int r, int c) const { return v_[static_cast<size_t>(r) * cols_ + c]; }
  double& at(int r, int c) { return v_[static_cast<size_t>(r) * cols_ + c]; }

  const std::vector<double>& raw() const { return v_; }
  std::vector<double>& raw() { return v_; }

  bool same_shape(const Array& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && matrix_ == o.matrix_;
  }

  Array zeros_like() const {
    Array a = *this;
    std::fill(a.v_.begin(), a.v_.end(), 0.0);
    return a;
  }

  std::string shape_str() const {
    if (matrix_) return "[" + std::to_string(rows_) + " x " + std::to_string(cols_) + "]";
    return "[" + std::to_string(rows_) + "]";
  }

 private:
  std::vector<double> v_;
  int rows_ = 0;
  int cols_ = 1;
  bool matrix_ = false;
};

}  // namespace rlab::num
