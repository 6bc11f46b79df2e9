#pragma once

#include <functional>
#include <vector>

#include "remnet/matrix.hpp"

namespace remnet {

// Reverse-mode autodiff over a tape of matrix-granular operations.
// Nodes are created in topological order; backward() sweeps in reverse.
// A tape belongs to a single forward/backward pass of one example.
class Tape {
 public:
  using Id = int;

  Id leaf(Matrix v);

  const Matrix& val(Id id) const { return nodes_[id].val; }
  const Matrix& grad(Id id) const { return nodes_[id].grad; }
  size_t size() const { return nodes_.size(); }

  // Seeds d(scalar)/d(scalar)=1 and accumulates gradients into every node.
  // `scalar` must be 1x1 and finite.
  void backward(Id scalar);

  Id matmul(Id a, Id b);
  Id transpose(Id a);
  Id add(Id a, Id b);
  Id scale(Id a, double c);

  // Row-vector (1xN) helpers.
  Id concat_cols(const std::vector<Id>& parts);
  Id stack_rows(const std::vector<Id>& rows);
  Id rows_mean(Id table, std::vector<int> row_ids);
  Id mask_rows(Id m, std::vector<char> alive);
  Id masked_softmax_row(Id logits, std::vector<char> alive);
  Id affine_row(Id x, Id w, Id b);

  // Sum of all entries, as a 1x1 node.
  Id sum(Id a);

  // Cross-entropy of softmax(scores) against `label`; scores is 1xC.
  Id softmax_xent(Id scores, int label);

 private:
  struct Node {
    Matrix val;
    Matrix grad;
    std::function<void(Tape&)> back;
  };

  Id push(Matrix v, std::function<void(Tape&)> back);
  Matrix& grad_mut(Id id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

}  // namespace remnet
