#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rapid/nn/kernels.hpp"
#include "rapid/nn/tensor.hpp"

namespace rapid::nn {

// Named trainable parameter. Gradients accumulate across backward passes
// until zero_grad(); a parameter may appear in several graphs per step
// (e.g. the shared encoder in the critic and autoencoder losses).
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor::zeros(value.shape);
  }
  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

using ValueId = int32_t;

// Reverse-mode tape. Nodes are appended in construction order, which is a
// valid topological order, and backward() replays them in exact reverse.
// Gradients are accumulated additively at fan-out nodes. A graph is built,
// run backward once, then discarded; single-owner, no locking.
class Graph {
 public:
  ValueId constant(Tensor t);
  ValueId param(Param* p);

  ValueId matmul(ValueId x, ValueId w);                 // [M,K]x[K,N]
  ValueId conv2d(ValueId x, ValueId w, ValueId bias, int64_t stride, int64_t pad);
  ValueId deconv2d(ValueId x, ValueId w, ValueId bias, int64_t stride, int64_t pad,
                   int64_t out_pad);

  ValueId add(ValueId a, ValueId b);
  ValueId sub(ValueId a, ValueId b);
  ValueId mul(ValueId a, ValueId b);
  ValueId add_rowvec(ValueId x, ValueId v);             // [M,N] + [1,N]
  ValueId mul_rowvec(ValueId x, ValueId v);             // [M,N] * [1,N]
  ValueId scale(ValueId a, double s);
  ValueId add_scalar(ValueId a, double s);
  ValueId square(ValueId a);
  ValueId tanh_op(ValueId a);
  ValueId sigmoid(ValueId a);
  ValueId exp_op(ValueId a);
  ValueId log_op(ValueId a);                            // input must stay > 0
  ValueId softplus(ValueId a);
  ValueId leaky_relu(ValueId a, double slope);

  ValueId reshape(ValueId a, std::vector<int64_t> shape);
  ValueId concat_cols(const std::vector<ValueId>& xs);  // along dim 1
  ValueId slice_cols(ValueId a, int64_t c0, int64_t c1);
  ValueId row_sum(ValueId a);                           // [M,N] -> [M,1]
  ValueId sum_all(ValueId a);                           // -> [1]
  ValueId mean_all(ValueId a);                          // -> [1]
  ValueId detach(ValueId a);                            // forward copy, no grad

  const Tensor& val(ValueId id) const { return nodes_[static_cast<size_t>(id)].val; }
  const Tensor& grad(ValueId id) const { return nodes_[static_cast<size_t>(id)].grad; }
  bool needs_grad(ValueId id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }

  // loss must be a scalar node produced through this tape.
  void backward(ValueId loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    bool needs_grad = false;
    std::function<void(Graph&)> back;
  };

  ValueId push(Tensor val, bool needs_grad, std::function<void(Graph&)> back);
  Tensor& grad_ref(ValueId id) { return nodes_[static_cast<size_t>(id)].grad; }

  std::vector<Node> nodes_;
};

}  // namespace rapid::nn
