#ifndef SYMCHOICE_EXPR_HPP
#define SYMCHOICE_EXPR_HPP

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace symchoice::expr {

// Symbolic utility DSL.
//
// Grammar (precedence low to high, all binary levels left-associative):
//   sum     := product (('+'|'-') product)*
//   product := power (('*'|'/') power)*
//   power   := unary (('^'|'**') unary)*
//   unary   := ('-'|'+') unary | primary
//   primary := NUMBER | PARAM | FUNC '(' sum ')' | IDENT | '(' sum ')' | '|' sum '|'
//
// PARAM is C_<n> or K_<n> (n >= 1); a bare C or K is auto-numbered with the
// next unused index of its class, left to right. `|x|` and `abs(x)` both parse
// to the abs node; `**` and `^` both parse to pow. Canonical output is fully
// parenthesized, uses `abs(...)` and `^`.
//
// The grammar accepts a superset of function names (sin, cos, tan, tanh, ln)
// so that off-library proposals still parse and can be reported as validation
// violations instead of syntax errors.

enum class UnaryOp { Neg, Abs, Sqrt, Log, Exp, Sin, Cos, Tan, Tanh };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class ParamClass { C, K };

std::string unary_op_name(UnaryOp op);
std::string binary_op_symbol(BinaryOp op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct FeatureRef {
  std::string name;
};
struct ParamRef {
  ParamClass cls;
  int index;  // >= 1
  std::string name() const;
};
struct Literal {
  double value;
};
struct UnaryNode {
  UnaryOp op;
  ExprPtr child;
};
struct BinaryNode {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

// Immutable after construction; safe to share across threads.
struct Expr {
  std::variant<FeatureRef, ParamRef, Literal, UnaryNode, BinaryNode> node;
};

ExprPtr feature(std::string name);
ExprPtr param(ParamClass cls, int index);
ExprPtr literal(double value);
// neg of a literal folds into a negative literal so that canonical
// rendering stays a parse fixpoint.
ExprPtr unary(UnaryOp op, ExprPtr child);
ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);

bool equal(const Expr& a, const Expr& b);
inline bool equal(const ExprPtr& a, const ExprPtr& b) { return equal(*a, *b); }

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position(position) {}
  std::size_t position;  // byte offset into the input
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ExprPtr parse_expression(const std::string& text);

// Canonical rendering; parse_expression(render_expression(e)) == e.
std::string render_expression(const Expr& e);
inline std::string render_expression(const ExprPtr& e) { return render_expression(*e); }

// Domain guards used by evaluate (fitting explores arbitrary theta, so the
// NLL has to stay finite):
//   log(x)   -> log(max(x, kGuardEpsilon))
//   sqrt(x)  -> sqrt(max(x, 0))
//   a / b    -> a / (sign(b) * max(|b|, kGuardEpsilon))
//   a ^ b    -> base clamped to >= kGuardEpsilon when b is non-integer
// and every node result is clamped into [-kValueCap, kValueCap].
inline constexpr double kGuardEpsilon = 1e-9;
inline constexpr double kValueCap = 1e30;

using Bindings = std::map<std::string, double>;

// Throws EvalError when a referenced feature or parameter is unbound.
double evaluate(const Expr& e, const Bindings& features, const Bindings& params);
inline double evaluate(const ExprPtr& e, const Bindings& features, const Bindings& params) {
  return evaluate(*e, features, params);
}

struct SymbolicLibrary {
  std::set<std::string> unary_ops;   // by name: neg, abs, sqrt, log, exp, ...
  std::set<std::string> binary_ops;  // by symbol: + - * / ^
  std::set<std::string> features;

  // The operator set observed in use: neg, abs, sqrt, log, exp, + - * / ^.
  static SymbolicLibrary standard_ops(std::set<std::string> features);
};

// Empty result means the expression stays inside the library. Violations are
// strings like "operator sin" or "feature velocity", first occurrence order.
std::vector<std::string> validate(const Expr& e, const SymbolicLibrary& lib);
inline std::vector<std::string> validate(const ExprPtr& e, const SymbolicLibrary& lib) {
  return validate(*e, lib);
}

// A fragment is the canonical rendering of a non-leaf subtree with parameter
// indices erased to the bare class symbol, e.g. "(K * train_time)".
using Fragment = std::string;

// Every subtree of depth >= 1 (the whole expression included when non-leaf);
// single features/parameters/literals are excluded.
std::set<Fragment> enumerate_fragments(const Expr& e);
inline std::set<Fragment> enumerate_fragments(const ExprPtr& e) {
  return enumerate_fragments(*e);
}

// Parameter names in first-appearance order (depth-first, lhs before rhs).
std::vector<std::string> collect_parameters(const Expr& e);
std::vector<std::string> collect_features(const Expr& e);

}  // namespace symchoice::expr

#endif  // SYMCHOICE_EXPR_HPP
