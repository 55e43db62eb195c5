#include "hypgw/ad.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace hypgw::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Scale: return "scale";
    case Op::Shift: return "shift";
    case Op::Sqrt: return "sqrt";
    case Op::Tanh: return "tanh";
    case Op::Artanh: return "artanh";
    case Op::Acosh: return "acosh";
    case Op::Log: return "log";
    case Op::Exp: return "exp";
    case Op::Relu: return "relu";
    case Op::Sigmoid: return "sigmoid";
    case Op::Max: return "max";
    case Op::Min: return "min";
    case Op::Dot: return "dot";
    case Op::Norm: return "norm";
    case Op::Sum: return "sum";
    case Op::Fused: return "fused";
  }
  return "?";
}

namespace {

std::string domain_message(Op op, std::size_t node, double arg) {
  std::ostringstream os;
  os << "domain error in " << op_name(op) << " at tape node " << node << " (argument " << arg
     << ")";
  return os.str();
}

Tape& tape_of(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw InvalidInput("operands live on different tapes");
  return *a.tape;
}

Var unary(Op op, Var a, double value, double partial) {
  const std::array<std::uint32_t, 1> ops{a.id};
  const std::array<double, 1> parts{partial};
  return a.tape->push(op, value, ops, parts);
}

Var binary(Op op, Var a, Var b, double value, double pa, double pb) {
  Tape& t = tape_of(a, b);
  const std::array<std::uint32_t, 2> ops{a.id, b.id};
  const std::array<double, 2> parts{pa, pb};
  return t.push(op, value, ops, parts);
}

}  // namespace

DomainError::DomainError(Op op, std::size_t node, double arg)
    : NumericalError(domain_message(op, node, arg)), op_(op), node_(node) {}

double Var::value() const { return tape->value(*this); }
double Var::grad() const { return tape->grad(*this); }

Var Tape::variable(double value) {
  return push(Op::Leaf, value, {}, {});
}

std::vector<Var> Tape::variables(std::span<const double> values) {
  std::vector<Var> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(variable(v));
  return out;
}

Var Tape::push(Op op, double value, std::span<const std::uint32_t> operands,
               std::span<const double> partials) {
  const auto id = static_cast<std::uint32_t>(ops_.size());
  ops_.push_back(op);
  begin_.push_back(static_cast<std::uint32_t>(operands_.size()));
  values_.push_back(value);
  operands_.insert(operands_.end(), operands.begin(), operands.end());
  partials_.insert(partials_.end(), partials.begin(), partials.end());
  has_adjoints_ = false;
  return Var{this, id};
}

Var Tape::push_fused(double value, std::span<const Var> operands, std::span<const double> partials) {
  if (operands.size() != partials.size()) throw InvalidInput("fused node: operand/partial count mismatch");
  const auto id = static_cast<std::uint32_t>(ops_.size());
  ops_.push_back(Op::Fused);
  begin_.push_back(static_cast<std::uint32_t>(operands_.size()));
  values_.push_back(value);
  for (const Var& v : operands) {
    if (v.tape != this) throw InvalidInput("fused node: operand from another tape");
    operands_.push_back(v.id);
  }
  partials_.insert(partials_.end(), partials.begin(), partials.end());
  has_adjoints_ = false;
  return Var{this, id};
}

void Tape::backward(Var output) {
  if (ops_.empty() || output.tape != this || output.id >= ops_.size()) {
    throw std::logic_error("backward called before forward (output not on this tape)");
  }
  adjoints_.assign(ops_.size(), 0.0);
  adjoints_[output.id] = 1.0;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    const double a = adjoints_[i];
    if (a == 0.0) continue;
    const std::size_t b = begin_[i];
    const std::size_t e = i + 1 < begin_.size() ? begin_[i + 1] : operands_.size();
    for (std::size_t k = b; k < e; ++k) adjoints_[operands_[k]] += a * partials_[k];
  }
  has_adjoints_ = true;
}

double Tape::grad(Var v) const {
  if (!has_adjoints_) throw std::logic_error("gradient requested before backward");
  return adjoints_[v.id];
}

std::vector<double> Tape::grads(std::span<const Var> vs) const {
  std::vector<double> g;
  g.reserve(vs.size());
  for (const Var& v : vs) g.push_back(grad(v));
  return g;
}

void Tape::clear() {
  ops_.clear();
  begin_.clear();
  values_.clear();
  operands_.clear();
  partials_.clear();
  adjoints_.clear();
  has_adjoints_ = false;
}

Var operator+(Var a, Var b) { return binary(Op::Add, a, b, a.value() + b.value(), 1.0, 1.0); }
Var operator-(Var a, Var b) { return binary(Op::Sub, a, b, a.value() - b.value(), 1.0, -1.0); }
Var operator*(Var a, Var b) {
  const double x = a.value(), y = b.value();
  return binary(Op::Mul, a, b, x * y, y, x);
}
Var operator/(Var a, Var b) {
  const double x = a.value(), y = b.value();
  if (y == 0.0) throw DomainError(Op::Div, a.tape->size(), y);
  return binary(Op::Div, a, b, x / y, 1.0 / y, -x / (y * y));
}
Var operator-(Var a) { return unary(Op::Neg, a, -a.value(), -1.0); }
Var operator+(Var a, double b) { return unary(Op::Shift, a, a.value() + b, 1.0); }
Var operator+(double a, Var b) { return b + a; }
Var operator-(Var a, double b) { return unary(Op::Shift, a, a.value() - b, 1.0); }
Var operator-(double a, Var b) { return unary(Op::Shift, b, a - b.value(), -1.0); }
Var operator*(Var a, double b) { return unary(Op::Scale, a, a.value() * b, b); }
Var operator*(double a, Var b) { return b * a; }
Var operator/(Var a, double b) {
  if (b == 0.0) throw DomainError(Op::Div, a.tape->size(), b);
  return unary(Op::Scale, a, a.value() / b, 1.0 / b);
}
Var operator/(double a, Var b) {
  const double y = b.value();
  if (y == 0.0) throw DomainError(Op::Div, b.tape->size(), y);
  return unary(Op::Div, b, a / y, -a / (y * y));
}

Var sqrt(Var a) {
  const double x = a.value();
  if (x < 0.0) throw DomainError(Op::Sqrt, a.tape->size(), x);
  const double r = std::sqrt(x);
  return unary(Op::Sqrt, a, r, r > 0.0 ? 0.5 / r : 0.0);
}

Var tanh(Var a) {
  const double t = std::tanh(a.value());
  return unary(Op::Tanh, a, t, 1.0 - t * t);
}

Var artanh(Var a) {
  const double x = a.value();
  if (!(std::abs(x) < 1.0)) throw DomainError(Op::Artanh, a.tape->size(), x);
  return unary(Op::Artanh, a, std::atanh(x), 1.0 / (1.0 - x * x));
}

Var acosh(Var a) {
  const double x = a.value();
  if (!(x >= 1.0)) throw DomainError(Op::Acosh, a.tape->size(), x);
  // d/dx acosh is unbounded at 1; the clamp convention gives 0 there.
  const double p = x > 1.0 ? 1.0 / std::sqrt((x - 1.0) * (x + 1.0)) : 0.0;
  return unary(Op::Acosh, a, std::acosh(x), p);
}

Var log(Var a) {
  const double x = a.value();
  if (!(x > 0.0)) throw DomainError(Op::Log, a.tape->size(), x);
  return unary(Op::Log, a, std::log(x), 1.0 / x);
}

Var exp(Var a) {
  const double e = std::exp(a.value());
  return unary(Op::Exp, a, e, e);
}

Var relu(Var a) {
  const double x = a.value();
  return unary(Op::Relu, a, x > 0.0 ? x : 0.0, x > 0.0 ? 1.0 : 0.0);
}

Var sigmoid(Var a) {
  const double x = a.value();
  const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  return unary(Op::Sigmoid, a, s, s * (1.0 - s));
}

Var max(Var a, Var b) {
  const bool first = a.value() >= b.value();
  return binary(Op::Max, a, b, first ? a.value() : b.value(), first ? 1.0 : 0.0, first ? 0.0 : 1.0);
}

Var min(Var a, Var b) {
  const bool first = a.value() <= b.value();
  return binary(Op::Min, a, b, first ? a.value() : b.value(), first ? 1.0 : 0.0, first ? 0.0 : 1.0);
}

Var clamp(Var a, double lo, double hi) {
  const double x = a.value();
  if (x < lo) return unary(Op::Max, a, lo, 0.0);
  if (x > hi) return unary(Op::Min, a, hi, 0.0);
  return a;
}

Var dot(std::span<const Var> a, std::span<const Var> b) {
  if (a.size() != b.size()) throw InvalidInput("dot: dimension mismatch");
  if (a.empty()) throw InvalidInput("dot: empty operands");
  Tape& t = *a.front().tape;
  std::vector<std::uint32_t> ops;
  std::vector<double> parts;
  ops.reserve(2 * a.size());
  parts.reserve(2 * a.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i].value(), y = b[i].value();
    s += x * y;
    ops.push_back(a[i].id);
    parts.push_back(y);
    ops.push_back(b[i].id);
    parts.push_back(x);
  }
  return t.push(Op::Dot, s, ops, parts);
}

Var norm(std::span<const Var> a) {
  if (a.empty()) throw InvalidInput("norm: empty operand");
  Tape& t = *a.front().tape;
  double s = 0.0;
  for (const Var& v : a) s += v.value() * v.value();
  const double n = std::sqrt(s);
  std::vector<std::uint32_t> ops;
  std::vector<double> parts;
  ops.reserve(a.size());
  parts.reserve(a.size());
  for (const Var& v : a) {
    ops.push_back(v.id);
    parts.push_back(n > 0.0 ? v.value() / n : 0.0);
  }
  return t.push(Op::Norm, n, ops, parts);
}

Var sum(std::span<const Var> a) {
  if (a.empty()) throw InvalidInput("sum: empty operand");
  Tape& t = *a.front().tape;
  double s = 0.0;
  std::vector<std::uint32_t> ops;
  ops.reserve(a.size());
  for (const Var& v : a) {
    s += v.value();
    ops.push_back(v.id);
  }
  const std::vector<double> parts(a.size(), 1.0);
  return t.push(Op::Sum, s, ops, parts);
}

double evaluate(const Function& f, std::span<const double> point) {
  Tape tape;
  const auto inputs = tape.variables(point);
  return f(tape, inputs).value();
}

ValueAndGrad value_and_grad(const Function& f, std::span<const double> point) {
  Tape tape;
  const auto inputs = tape.variables(point);
  const Var out = f(tape, inputs);
  tape.backward(out);
  return {out.value(), tape.grads(inputs)};
}

double grad_check(const Function& f, std::span<const double> point, double step) {
  const auto analytic = value_and_grad(f, point).grad;
  std::vector<double> x(point.begin(), point.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double fp = evaluate(f, x);
    x[i] = orig - step;
    const double fm = evaluate(f, x);
    x[i] = orig;
    const double numeric = (fp - fm) / (2.0 * step);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace hypgw::ad
