#include "remnet/matrix.hpp"

#include <algorithm>
#include <limits>

namespace remnet {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw ShapeError("matmul: " + a.shape_str() + " x " + b.shape_str());
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) {
      double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

Vector affine(const Vector& x, const Matrix& w, const Vector& b) {
  if (x.len() != w.rows)
    throw ShapeError("affine: x has len " + std::to_string(x.len()) +
                     ", W is " + w.shape_str());
  if (b.len() != w.cols)
    throw ShapeError("affine: b has len " + std::to_string(b.len()) +
                     ", W is " + w.shape_str());
  Vector out(w.cols);
  for (int j = 0; j < w.cols; ++j) {
    double acc = b[j];
    for (int i = 0; i < w.rows; ++i) acc += x[i] * w.at(i, j);
    out[j] = acc;
  }
  return out;
}

Vector masked_softmax(const Vector& logits, const std::vector<char>& alive) {
  int n = logits.len();
  if (static_cast<int>(alive.size()) != n)
    throw ShapeError("masked_softmax: mask length " + std::to_string(alive.size()) +
                     " != logits length " + std::to_string(n));
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    if (alive[i]) mx = std::max(mx, logits[i]);
  if (!std::isfinite(mx)) throw std::runtime_error("no surviving evidence");
  Vector out(n);
  double z = 0.0;
  for (int i = 0; i < n; ++i)
    if (alive[i]) {
      out[i] = std::exp(logits[i] - mx);
      z += out[i];
    }
  for (int i = 0; i < n; ++i)
    if (alive[i]) out[i] /= z;
  return out;
}

}  // namespace remnet
