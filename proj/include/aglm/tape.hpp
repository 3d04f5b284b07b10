#pragma once

#include <functional>
#include <vector>

#include "aglm/tensor.hpp"

namespace aglm {

using VarId = int;

// Reverse-mode autodiff over a flat operation tape. Values are recorded in
// execution order, which is already topological; backward walks it once in
// reverse and accumulates gradients additively across fan-out.
class Tape {
 public:
  VarId input(Tensor value, bool requires_grad);

  // a: [m,k] or [k]; b: [k,n]. Vector inputs behave as a single row.
  VarId matmul(VarId a, VarId b);
  // seq: [L,d], filters: [w,d,f], bias: [f] -> [L-w+1, f]
  VarId conv1d(VarId seq, VarId filters, VarId bias);
  // [T,f] -> [f]; ties send the gradient to the earliest row.
  VarId max_over_time(VarId x);
  VarId sigmoid(VarId x);
  VarId tanh(VarId x);
  VarId add(VarId a, VarId b);
  VarId sub(VarId a, VarId b);
  VarId mul(VarId a, VarId b);
  // Feature concatenation of rank-1 tensors.
  VarId concat(const std::vector<VarId>& parts);
  VarId slice(VarId x, int begin, int length);  // rank-1 subrange
  // Embedding lookup: gathers rows of a [V,d] table into [n,d].
  VarId rows(VarId table, std::vector<int> ids);
  // Same data, new shape; element count must match.
  VarId reshape(VarId x, std::vector<int> shape);
  VarId log_softmax(VarId logits);  // rank-1, numerically stable
  VarId nll(VarId log_probs, int target);  // -> scalar
  VarId add_scalars(const std::vector<VarId>& scalars);

  const Tensor& value(VarId id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& grad(VarId id) const { return nodes_[static_cast<size_t>(id)].grad; }

  // Seeds d(loss)/d(loss) = 1 and runs the tape backward. The loss must be a
  // scalar recorded on this tape.
  void backward(VarId loss);

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&, const Node&)> backward_fn;
  };

  VarId push(Tensor value, std::function<void(Tape&, const Node&)> backward_fn);
  Tensor& grad_buf(VarId id);
  void check_vector(VarId id, const char* op) const;

  std::vector<Node> nodes_;
};

}  // namespace aglm
