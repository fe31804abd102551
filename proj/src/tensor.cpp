#include "radiocon/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace radiocon::ad {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0f);
}

namespace {

std::shared_ptr<Node> make_node(Shape shape, std::vector<float> values,
                                bool requires_grad) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one axis");
  for (auto d : shape) {
    if (d == 0) throw DimensionError("zero-sized axis in shape " + shape_string(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

Tensor Tensor::constant(Shape shape, std::vector<float> values) {
  return Tensor(make_node(std::move(shape), std::move(values), false));
}

Tensor Tensor::constant_scalar(float value) { return constant({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<float> values) {
  return Tensor(make_node(std::move(shape), std::move(values), true));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = shape_numel(shape);
  return Tensor(make_node(std::move(shape), std::vector<float>(n, 0.0f), requires_grad));
}

float Tensor::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on non-scalar tensor " + shape_string(shape()));
  }
  return node_->value[0];
}

std::span<float> Tensor::mutable_grad() {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0f);
}

Tensor Tensor::clone() const {
  return Tensor(make_node(node_->shape, node_->value, node_->requires_grad));
}

Tensor Tape::record(std::string_view kind, Shape shape, std::vector<float> value,
                    std::span<const Tensor> inputs, BackwardFn backward) {
  bool needs_grad = std::any_of(inputs.begin(), inputs.end(),
                                [](const Tensor& t) { return t.requires_grad(); });
  Tensor out(make_node(std::move(shape), std::move(value), needs_grad));
  if (!needs_grad) return out;

  Entry entry;
  entry.kind = kind;
  for (const auto& in : inputs) {
    if (in.node().tape == this && in.node_id()) entry.input_ids.push_back(*in.node_id());
  }
  out.node_->tape = this;
  out.node_->node_id = entries_.size();
  entry.output = out.node_;
  entry.backward = std::move(backward);
  entries_.push_back(std::move(entry));
  return out;
}

void Tape::backward(const Tensor& root) {
  if (!root.defined() || root.numel() != 1) {
    throw ContractError("backward() requires a scalar root, got " +
                        (root.defined() ? shape_string(root.shape()) : std::string("undefined")));
  }
  const float one = 1.0f;
  backward(root, std::span<const float>(&one, 1));
}

void Tape::backward(const Tensor& root, std::span<const float> seed) {
  if (!root.defined() || root.node().tape != this || !root.node_id()) {
    throw ContractError("backward() root is not recorded on this tape");
  }
  if (seed.size() != root.numel()) {
    throw DimensionError("backward seed length " + std::to_string(seed.size()) +
                         " does not match root " + shape_string(root.shape()));
  }
  for (auto& e : entries_) e.output->grad.clear();

  auto& root_node = root.node();
  root_node.ensure_grad();
  std::copy(seed.begin(), seed.end(), root_node.grad.begin());

  for (std::size_t i = *root.node_id() + 1; i-- > 0;) {
    auto& e = entries_[i];
    if (e.output->grad.empty()) continue;
    e.backward(e.output->grad);
  }
}

}  // namespace radiocon::ad
