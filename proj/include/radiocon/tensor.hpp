#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace radiocon {

/// Raised when tensor shapes (or window/extent arguments) are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an op is evaluated outside its mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a caller breaks an API precondition (wrong tape, missing grad, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised for out-of-range scalar parameters (p < 1, tau <= 0, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace radiocon

namespace radiocon::ad {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

class Tape;

struct Node {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // empty until something flows into it
  bool requires_grad = false;
  const Tape* tape = nullptr;
  std::optional<std::size_t> node_id;

  void ensure_grad();
};

/// Handle to a dense row-major float tensor. Copies share storage; use
/// `clone()` for an independent leaf.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<float> values);
  static Tensor constant_scalar(float value);
  /// A leaf that accumulates gradient (model parameters, detached embeddings).
  static Tensor parameter(Shape shape, std::vector<float> values);
  static Tensor zeros(Shape shape, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const float> values() const { return node_->value; }
  std::span<float> mutable_values() { return node_->value; }
  float item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const float> grad() const { return node_->grad; }
  std::span<float> mutable_grad();
  void zero_grad();
  /// Drops the gradient buffer entirely, so `has_grad()` becomes false.
  void clear_grad() { node_->grad.clear(); }

  std::optional<std::size_t> node_id() const { return node_->node_id; }

  /// Deep copy as a fresh leaf; keeps `requires_grad`, drops grad and tape links.
  Tensor clone() const;

  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;

  friend class Tape;
};

/// Records operations in execution order and replays them backwards.
/// A tape and everything recorded on it belong to a single thread.
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const float> out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers an op output. If no input requires grad the result is a
  /// constant and nothing is recorded.
  Tensor record(std::string_view kind, Shape shape, std::vector<float> value,
                std::span<const Tensor> inputs, BackwardFn backward);

  /// Seeds d(root)/d(root) = 1 and propagates. Leaf gradients accumulate
  /// across calls; intermediate gradients are reset each call.
  void backward(const Tensor& root);

  /// Same as `backward` but for a non-scalar root with an explicit
  /// upstream gradient (used to chain separate tapes).
  void backward(const Tensor& root, std::span<const float> seed);

  std::size_t size() const { return entries_.size(); }
  std::string_view kind(std::size_t id) const { return entries_.at(id).kind; }
  std::span<const std::size_t> inputs_of(std::size_t id) const {
    return entries_.at(id).input_ids;
  }
  const Shape& shape_of(std::size_t id) const { return entries_.at(id).output->shape; }
  std::span<const float> value_of(std::size_t id) const { return entries_.at(id).output->value; }

 private:
  struct Entry {
    std::string_view kind;
    std::vector<std::size_t> input_ids;  // only inputs that live on this tape
    std::shared_ptr<Node> output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
};

}  // namespace radiocon::ad
