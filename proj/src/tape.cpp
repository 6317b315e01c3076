#include "jeit/tape.hpp"

#include "jeit/errors.hpp"

namespace jeit {

const Tensor& Tape::Context::output() const {
  return tape_.slot(tape_.nodes_[node_].output).value;
}

const Tensor& Tape::Context::output_grad() const {
  return tape_.slot(tape_.nodes_[node_].output).grad;
}

const Tensor& Tape::Context::input(std::size_t i) const {
  return tape_.slot(tape_.nodes_[node_].inputs.at(i)).value;
}

Tensor* Tape::Context::grad(std::size_t i) {
  const Var v = tape_.nodes_[node_].inputs.at(i);
  if (!tape_.slot(v).requires_grad) return nullptr;
  return &tape_.grad_slot(v);
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Slot s;
  s.value = std::move(value);
  s.requires_grad = requires_grad;
  slots_.push_back(std::move(s));
  return Var{slots_.size() - 1};
}

Var Tape::record(std::string op, std::vector<Var> inputs, Tensor output,
                 Backward backward) {
  bool needs = false;
  for (Var v : inputs) needs = needs || slot(v).requires_grad;
  Var out = leaf(std::move(output), needs);
  nodes_.push_back(Node{std::move(op), std::move(inputs), out, std::move(backward)});
  return out;
}

Tape::Slot& Tape::slot(Var v) {
  if (v.id >= slots_.size()) throw ContractError("variable not recorded on this tape");
  return slots_[v.id];
}

const Tape::Slot& Tape::slot(Var v) const {
  if (v.id >= slots_.size()) throw ContractError("variable not recorded on this tape");
  return slots_[v.id];
}

Tensor& Tape::grad_slot(Var v) {
  Slot& s = slot(v);
  if (!s.has_grad) {
    s.grad = Tensor::zeros_like(s.value);
    s.has_grad = true;
  }
  return s.grad;
}

const Tensor& Tape::value(Var v) const { return slot(v).value; }

bool Tape::requires_grad(Var v) const { return slot(v).requires_grad; }

Tensor Tape::grad(Var v) const {
  const Slot& s = slot(v);
  return s.has_grad ? s.grad : Tensor::zeros_like(s.value);
}

void Tape::backward(Var loss) {
  if (value(loss).size() != 1) {
    throw DimensionError("backward target must be a scalar, got " +
                         value(loss).shape_str());
  }
  for (Slot& s : slots_) {
    s.has_grad = false;
    s.grad = Tensor();
  }
  trace_.clear();
  if (!slot(loss).requires_grad) return;
  grad_slot(loss).fill(1.0);

  for (std::size_t n = nodes_.size(); n-- > 0;) {
    trace_.push_back(n);
    const Slot& out = slots_[nodes_[n].output.id];
    if (!out.requires_grad || !out.has_grad) continue;
    Context ctx(*this, n);
    nodes_[n].backward(ctx);
  }
}

}  // namespace jeit
