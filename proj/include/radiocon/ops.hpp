#pragma once

#include <span>
#include <string>
#include <vector>

#include "radiocon/tensor.hpp"

// Differentiable operations. Each op takes the tape it records on; results
// whose inputs are all constants are returned untracked.
namespace radiocon::ad {

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

/// Cross-correlation (no kernel flip) of a single c_in x h x w image.
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& kernels, int stride,
              int padding);

// Binary elementwise ops accept equal shapes or a one-element operand.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor relu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor exp(Tape& tape, const Tensor& x);
/// Throws DomainError on any non-positive entry.
Tensor log(Tape& tape, const Tensor& x);
Tensor scale(Tape& tape, const Tensor& x, float factor);
/// Gradient passes only where lo <= x <= hi.
Tensor clamp(Tape& tape, const Tensor& x, float lo, float hi);

Tensor log_softmax(Tape& tape, const Tensor& logits);

Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x);
/// c x h x w -> c
Tensor global_avg_pool(Tape& tape, const Tensor& x);
/// Non-overlapping window; the window must divide both spatial extents.
Tensor max_pool2d(Tape& tape, const Tensor& x, int window);

/// (sum |u_i - v_i|^p)^(1/p). The gradient at u == v is zero.
Tensor p_norm_distance(Tape& tape, const Tensor& u, const Tensor& v, float p);

// Structural helpers.
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);
/// Row `index` of a 2-D tensor as a 1-D tensor.
Tensor row(Tape& tape, const Tensor& x, std::size_t index);
/// Single element of a flat tensor as a one-element tensor.
Tensor pick(Tape& tape, const Tensor& x, std::size_t index);
/// Stacks same-shaped tensors along a new leading axis; one-element inputs
/// stack into a flat vector.
Tensor stack(Tape& tape, std::span<const Tensor> parts);
/// Nearest-neighbour upsampling of c x h x w by an integer factor.
Tensor upsample_nearest(Tape& tape, const Tensor& x, int factor);
/// x: c x h x w, bias: c
Tensor add_channel_bias(Tape& tape, const Tensor& x, const Tensor& bias);
/// x: m x n, bias: n
Tensor add_row_bias(Tape& tape, const Tensor& x, const Tensor& bias);

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// param <- param - lr * grad, then grads are zeroed. Every parameter must
/// carry a gradient.
void sgd_step(std::span<const NamedTensor> params, float lr);

}  // namespace radiocon::ad
