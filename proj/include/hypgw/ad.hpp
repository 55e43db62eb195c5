#pragma once

// Reverse-mode differentiation over a scalar tape.
//
// The tape is built eagerly: every operation evaluates its value and local
// partials immediately and appends a node. Vector primitives (dot, norm, sum)
// and externally computed kernels (push_fused) are single nodes with one
// partial per operand, so tape size stays proportional to the number of
// scalar outputs rather than the number of flops.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hypgw/common.hpp"

namespace hypgw::ad {

enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Scale,
  Shift,
  Sqrt,
  Tanh,
  Artanh,
  Acosh,
  Log,
  Exp,
  Relu,
  Sigmoid,
  Max,
  Min,
  Dot,
  Norm,
  Sum,
  Fused,
};

const char* op_name(Op op);

/// Domain violation in a primitive, tagged with the offending node index.
class DomainError : public NumericalError {
 public:
  DomainError(Op op, std::size_t node, double arg);
  Op op() const { return op_; }
  std::size_t node() const { return node_; }

 private:
  Op op_;
  std::size_t node_;
};

class Tape;

/// Handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  double value() const;
  double grad() const;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var variable(double value);
  Var constant(double value) { return variable(value); }
  std::vector<Var> variables(std::span<const double> values);

  /// Appends a node with explicit partials d(node)/d(operand).
  Var push(Op op, double value, std::span<const std::uint32_t> operands,
           std::span<const double> partials);
  Var push_fused(double value, std::span<const Var> operands, std::span<const double> partials);

  /// Fills adjoints of every node reachable from `output`. Adjoints are reset
  /// first, so repeated calls give identical results.
  void backward(Var output);

  double value(Var v) const { return values_[v.id]; }
  double grad(Var v) const;
  std::vector<double> grads(std::span<const Var> vs) const;

  std::size_t size() const { return ops_.size(); }
  std::size_t operand_count() const { return operands_.size(); }
  void clear();

 private:
  friend struct Var;
  std::vector<Op> ops_;
  std::vector<std::uint32_t> begin_;
  std::vector<double> values_;
  std::vector<std::uint32_t> operands_;
  std::vector<double> partials_;
  std::vector<double> adjoints_;
  bool has_adjoints_ = false;
};

using VarVec = std::vector<Var>;

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);

Var sqrt(Var a);
Var tanh(Var a);
Var artanh(Var a);
Var acosh(Var a);
Var log(Var a);
Var exp(Var a);
Var relu(Var a);
Var sigmoid(Var a);
/// Ties route the gradient to the first argument.
Var max(Var a, Var b);
Var min(Var a, Var b);
/// Constant bounds; a clamped input receives zero gradient.
Var clamp(Var a, double lo, double hi);

Var dot(std::span<const Var> a, std::span<const Var> b);
/// Euclidean norm; the partials at the zero vector are zero.
Var norm(std::span<const Var> a);
Var sum(std::span<const Var> a);

/// f(tape, inputs) -> scalar output built on `tape`.
using Function = std::function<Var(Tape&, std::span<const Var>)>;

double evaluate(const Function& f, std::span<const double> point);

struct ValueAndGrad {
  double value = 0.0;
  std::vector<double> grad;
};
ValueAndGrad value_and_grad(const Function& f, std::span<const double> point);

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
double grad_check(const Function& f, std::span<const double> point, double step = 1e-6);

}  // namespace hypgw::ad
