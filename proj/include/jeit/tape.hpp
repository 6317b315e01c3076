#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "jeit/tensor.hpp"

namespace jeit {

// Handle to a value recorded on a Tape. Only meaningful for the tape that
// produced it.
struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;
  bool valid() const { return id != kNone; }
};

// Reverse-mode gradient tape.
//
// Values are immutable once recorded. backward() walks the recorded
// operations in exact reverse order; an operation whose output carries no
// gradient is skipped, so parameters off every path to the loss keep an
// all-zero gradient.
class Tape {
 public:
  class Context {
   public:
    const Tensor& output() const;
    const Tensor& output_grad() const;
    const Tensor& input(std::size_t i) const;
    // Gradient accumulator for input i, or nullptr when that input does not
    // require a gradient.
    Tensor* grad(std::size_t i);

   private:
    friend class Tape;
    Context(Tape& tape, std::size_t node) : tape_(tape), node_(node) {}
    Tape& tape_;
    std::size_t node_;
  };

  using Backward = std::function<void(Context&)>;

  Var parameter(Tensor value) { return leaf(std::move(value), true); }
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Records an operation. `backward` receives the output gradient and must
  // accumulate into the gradients of every input that requires one.
  Var record(std::string op, std::vector<Var> inputs, Tensor output, Backward backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  // Gradient of the last backward() target with respect to v. Zero-filled
  // when v received no gradient.
  Tensor grad(Var v) const;

  void backward(Var loss);

  std::size_t op_count() const { return nodes_.size(); }
  const std::string& op_name(std::size_t node) const { return nodes_.at(node).op; }
  // Node indices in the order backward() visited them.
  const std::vector<std::size_t>& backward_trace() const { return trace_; }

 private:
  struct Slot {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
  };
  struct Node {
    std::string op;
    std::vector<Var> inputs;
    Var output;
    Backward backward;
  };

  Var leaf(Tensor value, bool requires_grad);
  Slot& slot(Var v);
  const Slot& slot(Var v) const;
  Tensor& grad_slot(Var v);

  std::vector<Slot> slots_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> trace_;
};

}  // namespace jeit
