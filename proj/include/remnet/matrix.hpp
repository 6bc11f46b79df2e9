#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace remnet {

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense row-major double matrix. Values are plain data; the autodiff tape
// owns differentiability, not this type.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  Matrix(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != static_cast<size_t>(r) * c)
      throw ShapeError("Matrix: data length " + std::to_string(data.size()) +
                       " != " + std::to_string(r) + "x" + std::to_string(c));
  }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

struct Vector {
  std::vector<double> data;

  Vector() = default;
  explicit Vector(int n) : data(n, 0.0) {}
  explicit Vector(std::vector<double> d) : data(std::move(d)) {}

  int len() const { return static_cast<int>(data.size()); }
  double& operator[](int i) { return data[i]; }
  double operator[](int i) const { return data[i]; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Matrix as_row() const { return Matrix(1, len(), data); }
  static Vector from_row(const Matrix& m) {
    if (m.rows != 1) throw ShapeError("expected row vector, got " + m.shape_str());
    return Vector(m.data);
  }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

// xW + b for a row vector x.
Vector affine(const Vector& x, const Matrix& w, const Vector& b);

// Softmax over alive positions only; masked positions are exactly zero.
// Max-subtraction for stability. Throws if no position is alive.
Vector masked_softmax(const Vector& logits, const std::vector<char>& alive);

}  // namespace remnet
