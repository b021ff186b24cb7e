#include "rlab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace rlab::num {

namespace {

[[noreturn]] void shape_error(const char* op, const Array& a, const Array& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                              " vs " + b.shape_str());
}

Value make_node(Array data, std::vector<Value> parents,
                std::function<void(Node&)> backprop) {
  Value out(std::move(data));
  auto node = out.node();
  node->parents.reserve(parents.size());
  for (auto& p : parents) node->parents.push_back(p.node());
  node->backprop = std::move(backprop);
  return out;
}

bool is_scalar(const Array& a) { return a.size() == 1 && !a.is_matrix(); }

}  // namespace

void backward(const Value& root) {
  if (!root.defined()) throw std::invalid_argument("backward: undefined value");
  if (root.size() != 1) {
    throw std::invalid_argument("backward: root must be a scalar, got " +
                                root.data().shape_str());
  }
  // Iterative post-order DFS; `order` ends up topologically sorted.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Node* child = node->parents[next_child].get();
      ++next_child;
      if (visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

Value add(const Value& a, const Value& b) {
  const Array& da = a.data();
  const Array& db = b.data();
  if (da.same_shape(db)) {
    Array out = da;
    for (int i = 0; i < out.size(); ++i) out[i] += db[i];
    return make_node(std::move(out), {a, b}, [pa = a.node(), pb = b.node()](Node& self) {
      for (int i = 0; i < self.grad.size(); ++i) {
        pa->grad[i] += self.grad[i];
        pb->grad[i] += self.grad[i];
      }
    });
  }
  if (is_scalar(db)) {
    Array out = da;
    for (int i = 0; i < out.size(); ++i) out[i] += db[0];
    return make_node(std::move(out), {a, b}, [pa = a.node(), pb = b.node()](Node& self) {
      for (int i = 0; i < self.grad.size(); ++i) {
        pa->grad[i] += self.grad[i];
        pb->grad[0] += self.grad[i];
      }
    });
  }
  if (is_scalar(da)) return add(b, a);
  shape_error("add", da, db);
}

Value sub(const Value& a, const Value& b) {
  return add(a, mul(b, Value::scalar(-1.0)));
}

Value mul(const Value& a, const Value& b) {
  const Array& da = a.data();
  const Array& db = b.data();
  if (da.same_shape(db)) {
    Array out = da;
    for (int i = 0; i < out.size(); ++i) out[i] *= db[i];
    return make_node(std::move(out), {a, b},
                     [pa = a.node(), pb = b.node()](Node& self) {
                       for (int i = 0; i < self.grad.size(); ++i) {
                         pa->grad[i] += self.grad[i] * pb->data[i];
                         pb->grad[i] += self.grad[i] * pa->data[i];
                       }
                     });
  }
  if (is_scalar(db)) {
    Array out = da;
    for (int i = 0; i < out.size(); ++i) out[i] *= db[0];
    return make_node(std::move(out), {a, b},
                     [pa = a.node(), pb = b.node()](Node& self) {
                       for (int i = 0; i < self.grad.size(); ++i) {
                         pa->grad[i] += self.grad[i] * pb->data[0];
                         pb->grad[0] += self.grad[i] * pa->data[i];
                       }
                     });
  }
  if (is_scalar(da)) return mul(b, a);
  shape_error("mul", da, db);
}

Value matmul(const Value& a, const Value& b) {
  const Array& da = a.data();
  const Array& db = b.data();
  if (da.is_matrix() && db.is_matrix()) {
    if (da.cols() != db.rows()) shape_error("matmul", da, db);
    Array out = Array::mat(da.rows(), db.cols());
    for (int i = 0; i < da.rows(); ++i)
      for (int k = 0; k < da.cols(); ++k) {
        double aik = da.at(i, k);
        if (aik == 0.0) continue;
        for (int j = 0; j < db.cols(); ++j) out.at(i, j) += aik * db.at(k, j);
      }
    return make_node(std::move(out), {a, b},
                     [pa = a.node(), pb = b.node()](Node& self) {
                       const Array& g = self.grad;
                       const Array& A = pa->data;
                       const Array& B = pb->data;
                       for (int i = 0; i < A.rows(); ++i)
                         for (int k = 0; k < A.cols(); ++k) {
                           double acc = 0.0;
                           for (int j = 0; j < B.cols(); ++j)
                             acc += g.at(i, j) * B.at(k, j);
                           pa->grad.at(i, k) += acc;
                         }
                       for (int k = 0; k < B.rows(); ++k)
                         for (int j = 0; j < B.cols(); ++j) {
                           double acc = 0.0;
                           for (int i = 0; i < A.rows(); ++i)
                             acc += A.at(i, k) * g.at(i, j);
                           pb->grad.at(k, j) += acc;
                         }
                     });
  }
  if (da.is_matrix() && !db.is_matrix()) {
    if (da.cols() != db.rows()) shape_error("matmul", da, db);
    Array out = Array::vec(da.rows());
    for (int i = 0; i < da.rows(); ++i) {
      double acc = 0.0;
      for (int k = 0; k < da.cols(); ++k) acc += da.at(i, k) * db[k];
      out[i] = acc;
    }
    return make_node(std::move(out), {a, b},
                     [pa = a.node(), pb = b.node()](Node& self) {
                       const Array& A = pa->data;
                       const Array& x = pb->data;
                       for (int i = 0; i < A.rows(); ++i) {
                         double gi = self.grad[i];
                         if (gi == 0.0) continue;
                         for (int k = 0; k < A.cols(); ++k) {
                           pa->grad.at(i, k) += gi * x[k];
                           pb->grad[k] += gi * A.at(i, k);
                         }
                       }
                     });
  }
  if (!da.is_matrix() && db.is_matrix()) {
    if (da.rows() != db.rows()) shape_error("matmul", da, db);
    Array out = Array::vec(db.cols());
    for (int k = 0; k < db.rows(); ++k) {
      double xk = da[k];
      if (xk == 0.0) continue;
      for (int j = 0; j < db.cols(); ++j) out[j] += xk * db.at(k, j);
    }
    return make_node(std::move(out), {a, b},
                     [pa = a.node(), pb = b.node()](Node& self) {
                       const Array& x = pa->data;
                       const Array& B = pb->data;
                       for (int k = 0; k < B.rows(); ++k) {
                         double acc = 0.0;
                         for (int j = 0; j < B.cols(); ++j)
                           acc += self.grad[j] * B.at(k, j);
                         pa->grad[k] += acc;
                         for (int j = 0; j < B.cols(); ++j)
                           pb->grad.at(k, j) += x[k] * self.grad[j];
                       }
                     });
  }
  // vec . vec -> scalar
  if (da.rows() != db.rows()) shape_error("matmul", da, db);
  double acc = 0.0;
  for (int i = 0; i < da.rows(); ++i) acc += da[i] * db[i];
  return make_node(Array::vec(1, acc), {a, b},
                   [pa = a.node(), pb = b.node()](Node& self) {
                     double g = self.grad[0];
                     for (int i = 0; i < pa->data.size(); ++i) {
                       pa->grad[i] += g * pb->data[i];
                       pb->grad[i] += g * pa->data[i];
                     }
                   });
}

Value mean(const Value& a) {
  const Array& da = a.data();
  if (da.size() == 0) throw std::invalid_argument("mean: empty input");
  double acc = 0.0;
  for (int i = 0; i < da.size(); ++i) acc += da[i];
  double n = static_cast<double>(da.size());
  return make_node(Array::vec(1, acc / n), {a}, [pa = a.node(), n](Node& self) {
    double g = self.grad[0] / n;
    for (int i = 0; i < pa->grad.size(); ++i) pa->grad[i] += g;
  });
}

Value sum(const Value& a) {
  const Array& da = a.data();
  double acc = 0.0;
  for (int i = 0; i < da.size(); ++i) acc += da[i];
  return make_node(Array::vec(1, acc), {a}, [pa = a.node()](Node& self) {
    double g = self.grad[0];
    for (int i = 0; i < pa->grad.size(); ++i) pa->grad[i] += g;
  });
}

Value concat(const std::vector<Value>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  int total = 0;
  for (const auto& p : parts) {
    if (p.data().is_matrix())
      throw std::invalid_argument("concat: expects vectors, got " + p.data().shape_str());
    total += p.size();
  }
  Array out = Array::vec(total);
  int off = 0;
  for (const auto& p : parts)
    for (int i = 0; i < p.size(); ++i) out[off++] = p.data()[i];
  std::vector<std::shared_ptr<Node>> pnodes;
  for (const auto& p : parts) pnodes.push_back(p.node());
  return make_node(std::move(out), parts, [pnodes](Node& self) {
    int off = 0;
    for (auto& pn : pnodes)
      for (int i = 0; i < pn->data.size(); ++i) pn->grad[i] += self.grad[off++];
  });
}

Value sigmoid(const Value& a) {
  Array out = a.data();
  for (int i = 0; i < out.size(); ++i) {
    double x = out[i];
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
  }
  return make_node(std::move(out), {a}, [pa = a.node()](Node& self) {
    for (int i = 0; i < self.data.size(); ++i) {
      double y = self.data[i];
      pa->grad[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Value softmax_cross_entropy(const Value& logits, int target) {
  const Array& z = logits.data();
  if (z.is_matrix()) throw std::invalid_argument("softmax_cross_entropy: expects a vector");
  if (target < 0 || target >= z.size())
    throw std::invalid_argument("softmax_cross_entropy: target out of range");
  double zmax = z[0];
  for (int i = 1; i < z.size(); ++i) zmax = std::max(zmax, z[i]);
  double lse = 0.0;
  for (int i = 0; i < z.size(); ++i) lse += std::exp(z[i] - zmax);
  lse = zmax + std::log(lse);
  double loss = lse - z[target];
  return make_node(Array::vec(1, loss), {logits},
                   [pa = logits.node(), target, lse](Node& self) {
                     double g = self.grad[0];
                     for (int i = 0; i < pa->data.size(); ++i) {
                       double p = std::exp(pa->data[i] - lse);
                       pa->grad[i] += g * (p - (i == target ? 1.0 : 0.0));
                     }
                   });
}

Value weighted_bce_with_logits(const Value& logits, const std::vector<double>& targets,
                               const std::vector<double>& weights) {
  const Array& z = logits.data();
  if (static_cast<int>(targets.size()) != z.size() ||
      static_cast<int>(weights.size()) != z.size())
    throw std::invalid_argument("weighted_bce_with_logits: length mismatch");
  double loss = 0.0;
  for (int i = 0; i < z.size(); ++i) {
    double x = z[i];
    // max(x,0) - x*t + log(1 + exp(-|x|))
    loss += weights[static_cast<size_t>(i)] *
            (std::max(x, 0.0) - x * targets[static_cast<size_t>(i)] +
             std::log1p(std::exp(-std::abs(x))));
  }
  return make_node(Array::vec(1, loss), {logits},
                   [pa = logits.node(), targets, weights](Node& self) {
                     double g = self.grad[0];
                     for (int i = 0; i < pa->data.size(); ++i) {
                       double x = pa->data[i];
                       double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                           : std::exp(x) / (1.0 + std::exp(x));
                       pa->grad[i] += g * weights[static_cast<size_t>(i)] *
                                      (s - targets[static_cast<size_t>(i)]);
                     }
                   });
}

Value binary_cross_entropy(const Value& logits, const std::vector<double>& targets) {
  return weighted_bce_with_logits(logits, targets,
                                  std::vector<double>(targets.size(), 1.0));
}

Value rows_mean(const Value& table, const std::vector<int>& row_indices) {
  const Array& t = table.data();
  if (!t.is_matrix()) throw std::invalid_argument("rows_mean: expects a matrix");
  if (row_indices.empty()) throw std::invalid_argument("rows_mean: no rows");
  for (int r : row_indices)
    if (r < 0 || r >= t.rows())
      throw std::invalid_argument("rows_mean: row index out of range");
  Array out = Array::vec(t.cols());
  for (int r : row_indices)
    for (int c = 0; c < t.cols(); ++c) out[c] += t.at(r, c);
  double inv = 1.0 / static_cast<double>(row_indices.size());
  for (int c = 0; c < t.cols(); ++c) out[c] *= inv;
  return make_node(std::move(out), {table},
                   [pa = table.node(), row_indices, inv](Node& self) {
                     for (int r : row_indices)
                       for (int c = 0; c < self.grad.size(); ++c)
                         pa->grad.at(r, c) += inv * self.grad[c];
                   });
}

Value stack_rows(const std::vector<Value>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no inputs");
  int cols = rows[0].size();
  for (const auto& r : rows) {
    if (r.data().is_matrix() || r.size() != cols)
      throw std::invalid_argument("stack_rows: rows must be equal-length vectors");
  }
  Array out = Array::mat(static_cast<int>(rows.size()), cols);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < cols; ++c) out.at(static_cast<int>(i), c) = rows[i].data()[c];
  std::vector<std::shared_ptr<Node>> pnodes;
  for (const auto& r : rows) pnodes.push_back(r.node());
  return make_node(std::move(out), rows, [pnodes, cols](Node& self) {
    for (size_t i = 0; i < pnodes.size(); ++i)
      for (int c = 0; c < cols; ++c)
        pnodes[i]->grad[c] += self.grad.at(static_cast<int>(i), c);
  });
}

Value recip_clamped(const Value& x, double eps) {
  if (x.size() != 1) throw std::invalid_argument("recip_clamped: expects a scalar");
  double v = x.data()[0];
  double clamped = std::max(v, eps);
  return make_node(Array::vec(1, 1.0 / clamped), {x},
                   [pa = x.node(), eps](Node& self) {
                     double v = pa->data[0];
                     if (v > eps) pa->grad[0] += self.grad[0] * (-1.0 / (v * v));
                   });
}

}  // namespace rlab::num
