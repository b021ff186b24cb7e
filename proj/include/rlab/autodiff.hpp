#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "rlab/array.hpp"

namespace rlab::num {

// Reverse-mode computation graph node. `backprop` reads this node's grad and
// accumulates into the parents' grads; the traversal order is handled by
// backward() below.
struct Node {
  Array data;
  Array grad;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;
};

// Cheap handle to a graph node. Copying a Value shares the node.
class Value {
 public:
  Value() = default;
  explicit Value(Array data) : node_(std::make_shared<Node>()) {
    node_->grad = data.zeros_like();
    node_->data = std::move(data);
  }

  static Value scalar(double x) { return Value(Array::vec(1, x)); }
  static Value vector(std::vector<double> v) { return Value(Array::from(std::move(v))); }

  bool defined() const { return node_ != nullptr; }
  const Array& data() const { return node_->data; }
  Array& data() { return node_->data; }
  const Array& grad() const { return node_->grad; }
  Array& grad() { return node_->grad; }
  int size() const { return node_->data.size(); }

  void zero_grad() { node_->grad = node_->data.zeros_like(); }

  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Seeds the (scalar) root with gradient 1 and propagates through the graph in
// reverse topological order, visiting each node exactly once.
void backward(const Value& root);

// Elementwise. Shapes must match, or one operand may be a 1-element scalar,
// which broadcasts.
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);

// matmul covers (mat, mat), (mat, vec) and (vec, mat); (vec, vec) is a dot
// product yielding a scalar.
Value matmul(const Value& a, const Value& b);

Value mean(const Value& a);
Value sum(const Value& a);
Value concat(const std::vector<Value>& parts);
Value sigmoid(const Value& a);

// Cross entropy of a one-hot target against softmax(logits). Stable via
// log-sum-exp.
Value softmax_cross_entropy(const Value& logits, int target);

// Sum over units of weight_t * BCE(sigmoid(logit_t), target_t), computed from
// logits for stability. targets/weights are constants.
Value weighted_bce_with_logits(const Value& logits, const std::vector<double>& targets,
                               const std::vector<double>& weights);
Value binary_cross_entropy(const Value& logits, const std::vector<double>& targets);

// Mean of the given rows of a 2-D table; the gradient scatters 1/n back into
// each selected row. Rows may repeat.
Value rows_mean(const Value& table, const std::vector<int>& row_indices);

// Stack equal-length vectors into a matrix, one per row.
Value stack_rows(const std::vector<Value>& rows);

// y = 1 / max(x, eps) for scalar x; gradient is zero in the clamped regime.
Value recip_clamped(const Value& x, double eps);

}  // namespace rlab::num
