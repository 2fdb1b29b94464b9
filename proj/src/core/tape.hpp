#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "core/tensor.hpp"

namespace vtp {

// Named trainable tensor. Gradients accumulate additively across
// backward() calls until zero_grad(); the optimizer owns that cycle.
// A frozen parameter still participates in forward passes but the
// optimizer leaves it untouched (no update, no decay).
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}

  void zero_grad() { grad.fill(0.0); }
};

// Handle into one tape's node list. Only valid with the tape that made it.
struct Var {
  int id = -1;
};

// Reverse-mode autodiff tape over float64 tensors. A tape is rebuilt for
// every forward pass (define-by-run): each op records its result plus a
// closure that routes the output adjoint to the inputs. backward() walks
// the record in exact reverse order, so gradients through fan-out sum
// additively and the float result is identical run to run.
class Tape {
public:
  // --- leaves ---
  Var input(Tensor value);      // constant w.r.t. differentiation
  Var param(Parameter& p);      // leaf whose adjoint lands in p.grad

  // --- binary ops (exact shape match for elementwise) ---
  Var matmul(Var a, Var b);     // rank-2 only, inner extents must agree
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var smul(Var s, Var a);       // scalar (1x1) times tensor

  // --- unary ops ---
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);               // domain error on any entry <= 0
  Var abs(Var a);               // subgradient 0 at 0
  Var scale(Var a, double c);   // multiply by a compile-time constant
  Var softmax(Var a);           // over all entries, max-subtracted

  // --- structural ops ---
  Var concat_rows(const std::vector<Var>& parts);       // stack along axis 0
  Var slice_rows(Var a, std::size_t r0, std::size_t r1);  // rows [r0, r1)
  Var sum(Var a);               // total reduction to 1x1

  // Identity forward, negated adjoint. Exists purely as a sabotage hook so
  // the gradient checker can prove it catches a wrong backward rule.
  Var flip_grad(Var a);

  void backward(Var root);      // root must be scalar (1x1 or length-1)

  const Tensor& value(Var v) const { return node(v.id).value; }
  const Tensor& grad(Var v) const { return node(v.id).grad; }
  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&, int)> back;  // (tape, own id); empty for leaves
    Parameter* bound = nullptr;
  };

  const Node& node(int id) const;
  Node& node(int id);
  int check(Var v) const;  // validates the handle, returns its id
  Var push(Tensor value, std::function<void(Tape&, int)> back);

  std::vector<Node> nodes_;
};

}  // namespace vtp
