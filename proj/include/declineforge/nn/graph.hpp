#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "declineforge/nn/tensor.hpp"
#include "declineforge/rng.hpp"

namespace df::nn {

// Reverse-mode tape node. Graphs are rebuilt per forward pass; backward()
// on the (scalar) output node fills every reachable node's grad.
struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated by backward()
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;  // accumulate into parents' grads

  explicit Node(Tensor v) : value(std::move(v)) {}
};

NodePtr constant(Tensor t);
NodePtr leaf(Tensor t);  // same as constant; named for parameter leaves

// Runs reverse-mode accumulation from a scalar output node.
void backward(const NodePtr& out);

// elementwise / structural
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);
NodePtr scale(const NodePtr& a, double s);
NodePtr add_rowvec(const NodePtr& a, const NodePtr& bias);  // bias over rows
NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr transpose(const NodePtr& a);
NodePtr slice_cols(const NodePtr& a, int start, int len);
NodePtr concat_cols(const std::vector<NodePtr>& parts);
NodePtr reshape(const NodePtr& a, std::vector<int> shape);
NodePtr mean_rows(const NodePtr& a);  // [n x d] -> [1 x d]

// activations / normalization
NodePtr relu(const NodePtr& a);
NodePtr gelu(const NodePtr& a);  // tanh approximation
NodePtr softmax_rows(const NodePtr& a);
NodePtr layer_norm(const NodePtr& x, const NodePtr& gain, const NodePtr& bias,
                   double eps = 1e-5);
// Inverted dropout; identity when train == false or rate == 0.
NodePtr dropout(const NodePtr& a, double rate, bool train, Rng& rng);

// xW + b with shape checking
NodePtr linear(const NodePtr& x, const NodePtr& w, const NodePtr& b);

// x: [C_in, D, H, W]; kernels: [C_out, C_in, k, k, k]; bias: [C_out]
NodePtr conv3d(const NodePtr& x, const NodePtr& kernels, const NodePtr& bias,
               int stride, int padding);

// Volume [D, H, W] -> tokens [n_tokens, p^3], cube patches in z,y,x order.
NodePtr patchify(const NodePtr& vol, int patch);
// tokens [n_tokens, p^3] -> volume [D, H, W]
NodePtr unpatchify(const NodePtr& tokens, int patch, std::vector<int> vol_shape);

// losses (scalar outputs)
NodePtr mse_loss(const NodePtr& pred, const NodePtr& target);
NodePtr softmax_cross_entropy(const NodePtr& logits,
                              const std::vector<int>& labels);

struct AttentionParams {
  NodePtr wq, wk, wv, wo;  // each [d x d]
  NodePtr bq, bk, bv, bo;  // each [d]
};

NodePtr multi_head_attention(const NodePtr& x, int heads,
                             const AttentionParams& p);

}  // namespace df::nn
