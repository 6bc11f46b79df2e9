#include "remnet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace remnet {

Tape::Id Tape::push(Matrix v, std::function<void(Tape&)> back) {
  Node n;
  n.grad = Matrix(v.rows, v.cols);
  n.val = std::move(v);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::leaf(Matrix v) { return push(std::move(v), nullptr); }

void Tape::backward(Id scalar) {
  const Matrix& s = nodes_[scalar].val;
  if (s.rows != 1 || s.cols != 1)
    throw ShapeError("backward: node is " + s.shape_str() + ", expected 1x1");
  if (!std::isfinite(s.data[0]))
    throw std::runtime_error("backward: non-finite scalar value");
  for (auto& n : nodes_) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
  nodes_[scalar].grad.data[0] = 1.0;
  for (Id i = scalar; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back(*this);
}

Tape::Id Tape::matmul(Id a, Id b) {
  Matrix out = remnet::matmul(nodes_[a].val, nodes_[b].val);
  Id id = push(std::move(out), nullptr);
  nodes_[id].back = [a, b, id](Tape& t) {
    const Matrix& g = t.nodes_[id].grad;
    const Matrix& va = t.nodes_[a].val;
    const Matrix& vb = t.nodes_[b].val;
    Matrix& ga = t.nodes_[a].grad;
    Matrix& gb = t.nodes_[b].grad;
    // dA += G B^T
    for (int i = 0; i < ga.rows; ++i)
      for (int k = 0; k < ga.cols; ++k) {
        double acc = 0.0;
        for (int j = 0; j < g.cols; ++j) acc += g.at(i, j) * vb.at(k, j);
        ga.at(i, k) += acc;
      }
    // dB += A^T G
    for (int k = 0; k < gb.rows; ++k)
      for (int j = 0; j < gb.cols; ++j) {
        double acc = 0.0;
        for (int i = 0; i < g.rows; ++i) acc += va.at(i, k) * g.at(i, j);
        gb.at(k, j) += acc;
      }
  };
  return id;
}

Tape::Id Tape::transpose(Id a) {
  Matrix out = remnet::transpose(nodes_[a].val);
  Id id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    const Matrix& g = t.nodes_[id].grad;
    Matrix& ga = t.nodes_[a].grad;
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) ga.at(j, i) += g.at(i, j);
  };
  return id;
}

Tape::Id Tape::add(Id a, Id b) {
  const Matrix& va = nodes_[a].val;
  const Matrix& vb = nodes_[b].val;
  if (!va.same_shape(vb))
    throw ShapeError("add: " + va.shape_str() + " vs " + vb.shape_str());
  Matrix out = va;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += vb.data[i];
  Id id = push(std::move(out), nullptr);
  nodes_[id].back = [a, b, id](Tape& t) {
    const Matrix& g = t.nodes_[id].grad;
    Matrix& ga = t.nodes_[a].grad;
    Matrix& gb = t.nodes_[b].grad;
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] += g.data[i];
    }
  };
  return id;
}

Tape::Id Tape::scale(Id a, double c) {
  Matrix out = nodes_[a].val;
  for (double& v : out.data) v *= c;
  Id id = push(std::move(out), nullptr);
  nodes_[id].back = [a, c, id](Tape& t) {
    const Matrix& g = t.nodes_[id].grad;
    Matrix& ga = t.nodes_[a].grad;
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += c * g.data[i];
  };
  return id;
}

Tape::Id Tape::concat_cols(const std::vector<Id>& parts) {
  int total = 0;
  for (Id p : parts) {
    if (nodes_[p].val.rows != 1)
      throw ShapeError("concat_cols: part is " + nodes_[p].val.shape_str());
    total += nodes_[p].val.cols;
  }
  Matrix out(1, total);
  int off = 0;
  for (Id p : parts) {
    const Matrix& v = nodes_[p].val;
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + off);
    off += v.cols;
  }
  Id id = push(std::move(out), nullptr);
  std::vector<Id> ps = parts;
  nodes_[id].back = [ps, id](Tape& t) {
    const Matrix& g = t.nodes_[id].grad;
    int off2 = 0;
    for (Id p : ps) {
      Matrix& gp = t.nodes_[p].grad;
      for (int j = 0; j < gp.cols; ++j) gp.data[j] += g.data[off2 + j];
      off2 += gp.cols;
    }
  };
  return id;
}

Tape::Id Tape::stack_rows(const std::vector<Id>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows: empty row list");
  int cols = nodes_[rows[0]].val.cols;
  Matrix out(static_cast<int>(rows.size()), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    const Matrix& v = nodes_[rows[i]].val;
    if (v.rows != 1 || v.cols != cols)
      throw ShapeError("stack_rows: row " + std::to_string(i) + " is " + v.shape_str());
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + i * cols);
  }
  Id id = push(std::move(out), nullptr);
  std::vector<Id> rs = rows;
  nodes_[id].back = [rs, cols, id](Tape& t) {
    const Matrix& g = t.nodes_[id].grad;
    for (size_t i = 0; i < rs.size(); ++i) {
      Matrix& gr = t.nodes_[rs[i]].grad;
      for (int j = 0; j < cols; ++j) gr.data[j] += g.data[i * cols + j];
    }
  };
  return id;
}

Tape::Id Tape::rows_mean(Id table, std::vector<int> row_ids) {
  if (row_ids.empty()) throw ShapeError("rows_mean: empty id list");
  const Matrix& tab = nodes_[table].val;
  Matrix out(1, tab.cols);
  for (int r : row_ids) {
    if (r < 0 || r >= tab.rows)
      throw ShapeError("rows_mean: row " + std::to_string(r) + " out of " +
                       std::to_string(tab.rows));
    for (int j = 0; j < tab.cols; ++j) out.data[j] += tab.at(r, j);
  }
  double inv = 1.0 / static_cast<double>(row_ids.size());
  for (double& v : out.data) v *= inv;
  Id id = push(std::move(out), nullptr);
  nodes_[id].back = [table, ids = std::move(row_ids), inv, id](Tape& t) {
    const Matrix& g = t.nodes_[id].grad;
    Matrix& gt = t.nodes_[table].grad;
    for (int r : ids)
      for (int j = 0; j < g.cols; ++j) gt.at(r, j) += inv * g.data[j];
  };
  return id;
}

Tape::Id Tape::mask_rows(Id m, std::vector<char> alive) {
  const Matrix& v = nodes_[m].val;
  if (static_cast<int>(alive.size()) != v.rows)
    throw ShapeError("mask_rows: mask length " + std::to_string(alive.size()) +
                     " != rows " + std::to_string(v.rows));
  Matrix out = v;
  for (int i = 0; i < out.rows; ++i)
    if (!alive[i])
      for (int j = 0; j < out.cols; ++j) out.at(i, j) = 0.0;
  Id id = push(std::move(out), nullptr);
  nodes_[id].back = [m, a = std::move(alive), id](Tape& t) {
    const Matrix& g = t.nodes_[id].grad;
    Matrix& gm = t.nodes_[m].grad;
    for (int i = 0; i < g.rows; ++i)
      if (a[i])
        for (int j = 0; j < g.cols; ++j) gm.at(i, j) += g.at(i, j);
  };
  return id;
}

Tape::Id Tape::masked_softmax_row(Id logits, std::vector<char> alive) {
  const Matrix& v = nodes_[logits].val;
  if (v.rows != 1)
    throw ShapeError("masked_softmax_row: logits are " + v.shape_str());
  Vector y = remnet::masked_softmax(Vector(v.data), alive);
  Id id = push(y.as_row(), nullptr);
  nodes_[id].back = [logits, a = std::move(alive), id](Tape& t) {
    const Matrix& g = t.nodes_[id].grad;
    const Matrix& yv = t.nodes_[id].val;
    Matrix& gl = t.nodes_[logits].grad;
    double gy = 0.0;
    for (int i = 0; i < g.cols; ++i)
      if (a[i]) gy += g.data[i] * yv.data[i];
    for (int i = 0; i < g.cols; ++i)
      if (a[i]) gl.data[i] += yv.data[i] * (g.data[i] - gy);
  };
  return id;
}

Tape::Id Tape::affine_row(Id x, Id w, Id b) {
  const Matrix& vx = nodes_[x].val;
  const Matrix& vw = nodes_[w].val;
  const Matrix& vb = nodes_[b].val;
  if (vx.rows != 1 || vx.cols != vw.rows || vb.rows != 1 || vb.cols != vw.cols)
    throw ShapeError("affine_row: x " + vx.shape_str() + ", W " + vw.shape_str() +
                     ", b " + vb.shape_str());
  return add(matmul(x, w), b);
}

Tape::Id Tape::sum(Id a) {
  const Matrix& v = nodes_[a].val;
  Matrix out(1, 1);
  out.data[0] = std::accumulate(v.data.begin(), v.data.end(), 0.0);
  Id id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    double g = t.nodes_[id].grad.data[0];
    Matrix& ga = t.nodes_[a].grad;
    for (double& v2 : ga.data) v2 += g;
  };
  return id;
}

Tape::Id Tape::softmax_xent(Id scores, int label) {
  const Matrix& v = nodes_[scores].val;
  if (v.rows != 1) throw ShapeError("softmax_xent: scores are " + v.shape_str());
  if (label < 0 || label >= v.cols)
    throw std::runtime_error("softmax_xent: label out of range");
  double mx = *std::max_element(v.data.begin(), v.data.end());
  double z = 0.0;
  for (double s : v.data) z += std::exp(s - mx);
  double loss = std::log(z) - (v.data[label] - mx);
  Matrix out(1, 1);
  out.data[0] = loss;
  Id id = push(std::move(out), nullptr);
  nodes_[id].back = [scores, label, mx, z, id](Tape& t) {
    double g = t.nodes_[id].grad.data[0];
    const Matrix& sv = t.nodes_[scores].val;
    Matrix& gs = t.nodes_[scores].grad;
    for (int c = 0; c < sv.cols; ++c) {
      double p = std::exp(sv.data[c] - mx) / z;
      gs.data[c] += g * (p - (c == label ? 1.0 : 0.0));
    }
  };
  return id;
}

}  // namespace remnet
