#include "symchoice/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace symchoice::expr {

std::string unary_op_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg: return "neg";
    case UnaryOp::Abs: return "abs";
    case UnaryOp::Sqrt: return "sqrt";
    case UnaryOp::Log: return "log";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Sin: return "sin";
    case UnaryOp::Cos: return "cos";
    case UnaryOp::Tan: return "tan";
    case UnaryOp::Tanh: return "tanh";
  }
  return "?";
}

std::string binary_op_symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Pow: return "^";
  }
  return "?";
}

std::string ParamRef::name() const {
  return (cls == ParamClass::C ? "C_" : "K_") + std::to_string(index);
}

ExprPtr feature(std::string name) {
  return std::make_shared<Expr>(Expr{FeatureRef{std::move(name)}});
}

ExprPtr param(ParamClass cls, int index) {
  return std::make_shared<Expr>(Expr{ParamRef{cls, index}});
}

ExprPtr literal(double value) {
  return std::make_shared<Expr>(Expr{Literal{value}});
}

ExprPtr unary(UnaryOp op, ExprPtr child) {
  if (op == UnaryOp::Neg) {
    if (const auto* lit = std::get_if<Literal>(&child->node)) {
      return literal(-lit->value);
    }
  }
  return std::make_shared<Expr>(Expr{UnaryNode{op, std::move(child)}});
}

ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<Expr>(Expr{BinaryNode{op, std::move(lhs), std::move(rhs)}});
}

bool equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (const auto* fa = std::get_if<FeatureRef>(&a.node)) {
    return fa->name == std::get<FeatureRef>(b.node).name;
  }
  if (const auto* pa = std::get_if<ParamRef>(&a.node)) {
    const auto& pb = std::get<ParamRef>(b.node);
    return pa->cls == pb.cls && pa->index == pb.index;
  }
  if (const auto* la = std::get_if<Literal>(&a.node)) {
    return la->value == std::get<Literal>(b.node).value;
  }
  if (const auto* ua = std::get_if<UnaryNode>(&a.node)) {
    const auto& ub = std::get<UnaryNode>(b.node);
    return ua->op == ub.op && equal(*ua->child, *ub.child);
  }
  const auto& ba = std::get<BinaryNode>(a.node);
  const auto& bb = std::get<BinaryNode>(b.node);
  return ba.op == bb.op && equal(*ba.lhs, *bb.lhs) && equal(*ba.rhs, *bb.rhs);
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Bar, End };

struct Token {
  Tok kind;
  std::size_t pos;
  std::string text;  // ident name
  double value = 0;  // number
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    current_.pos = pos_;
    if (pos_ >= text_.size()) {
      current_.kind = Tok::End;
      return;
    }
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < text_.size() &&
         std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      current_.kind = Tok::Ident;
      current_.text = text_.substr(start, pos_ - start);
      return;
    }
    switch (c) {
      case '+': current_.kind = Tok::Plus; ++pos_; return;
      case '-': current_.kind = Tok::Minus; ++pos_; return;
      case '*':
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
          current_.kind = Tok::Caret;
          pos_ += 2;
        } else {
          current_.kind = Tok::Star;
          ++pos_;
        }
        return;
      case '/': current_.kind = Tok::Slash; ++pos_; return;
      case '^': current_.kind = Tok::Caret; ++pos_; return;
      case '(': current_.kind = Tok::LParen; ++pos_; return;
      case ')': current_.kind = Tok::RParen; ++pos_; return;
      case '|': current_.kind = Tok::Bar; ++pos_; return;
      default:
        throw ParseError(std::string("unknown token '") + c + "' at position " +
                             std::to_string(pos_),
                         pos_);
    }
  }

  void lex_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // 'e' was the start of an identifier, not an exponent
      }
    }
    const std::string token = text_.substr(start, pos_ - start);
    double v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw ParseError("malformed number '" + token + "' at position " + std::to_string(start),
                       start);
    }
    current_.kind = Tok::Number;
    current_.value = v;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  Token current_;
};

const std::map<std::string, UnaryOp>& function_table() {
  static const std::map<std::string, UnaryOp> table = {
      {"abs", UnaryOp::Abs}, {"sqrt", UnaryOp::Sqrt}, {"log", UnaryOp::Log},
      {"ln", UnaryOp::Log},  {"exp", UnaryOp::Exp},   {"sin", UnaryOp::Sin},
      {"cos", UnaryOp::Cos}, {"tan", UnaryOp::Tan},   {"tanh", UnaryOp::Tanh},
  };
  return table;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : lexer_(text) {}

  ExprPtr parse() {
    ExprPtr e = parse_sum();
    const Token& t = lexer_.peek();
    if (t.kind != Tok::End) {
      throw ParseError("unexpected trailing input at position " + std::to_string(t.pos), t.pos);
    }
    return e;
  }

 private:
  ExprPtr parse_sum() {
    DepthGuard guard(this);
    ExprPtr lhs = parse_product();
    while (true) {
      const Tok k = lexer_.peek().kind;
      if (k == Tok::Plus || k == Tok::Minus) {
        lexer_.take();
        ExprPtr rhs = parse_product();
        lhs = binary(k == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_product() {
    DepthGuard guard(this);
    ExprPtr lhs = parse_power();
    while (true) {
      const Tok k = lexer_.peek().kind;
      if (k == Tok::Star || k == Tok::Slash) {
        lexer_.take();
        ExprPtr rhs = parse_power();
        lhs = binary(k == Tok::Star ? BinaryOp::Mul : BinaryOp::Div, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_power() {
    DepthGuard guard(this);
    ExprPtr lhs = parse_unary();
    while (lexer_.peek().kind == Tok::Caret) {
      lexer_.take();
      ExprPtr rhs = parse_unary();
      lhs = binary(BinaryOp::Pow, lhs, rhs);
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    DepthGuard guard(this);
    const Tok k = lexer_.peek().kind;
    if (k == Tok::Minus) {
      lexer_.take();
      return unary(UnaryOp::Neg, parse_unary());
    }
    if (k == Tok::Plus) {  // unary plus is a no-op
      lexer_.take();
      return parse_unary();
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    DepthGuard guard(this);
    Token t = lexer_.take();
    switch (t.kind) {
      case Tok::Number:
        return literal(t.value);
      case Tok::LParen: {
        ExprPtr inner = parse_sum();
        expect(Tok::RParen, ")");
        return inner;
      }
      case Tok::Bar: {
        ExprPtr inner = parse_sum();
        expect(Tok::Bar, "|");
        return unary(UnaryOp::Abs, inner);
      }
      case Tok::Ident:
        return parse_ident(std::move(t));
      default:
        throw ParseError("expected an operand at position " + std::to_string(t.pos), t.pos);
    }
  }

  ExprPtr parse_ident(Token t) {
    if (lexer_.peek().kind == Tok::LParen) {
      auto it = function_table().find(t.text);
      if (it == function_table().end()) {
        throw ParseError("unknown function '" + t.text + "' at position " + std::to_string(t.pos),
                         t.pos);
      }
      lexer_.take();
      ExprPtr inner = parse_sum();
      expect(Tok::RParen, ")");
      return unary(it->second, inner);
    }
    if (auto p = classify_param(t.text)) {
      if (p->index == 0) {  // bare C or K: auto-number
        int& next = (p->cls == ParamClass::C) ? next_c_ : next_k_;
        p->index = next++;
      } else {
        int& next = (p->cls == ParamClass::C) ? next_c_ : next_k_;
        next = std::max(next, p->index + 1);
      }
      return param(p->cls, p->index);
    }
    return feature(std::move(t.text));
  }

  static std::optional<ParamRef> classify_param(const std::string& name) {
    if (name == "C") return ParamRef{ParamClass::C, 0};
    if (name == "K") return ParamRef{ParamClass::K, 0};
    if (name.size() < 3 || (name[0] != 'C' && name[0] != 'K') || name[1] != '_') {
      return std::nullopt;
    }
    int index = 0;
    for (std::size_t i = 2; i < name.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(name[i]))) return std::nullopt;
      index = index * 10 + (name[i] - '0');
      if (index > 1'000'000) return std::nullopt;
    }
    if (index < 1) return std::nullopt;  // C_0 falls through as a feature name
    return ParamRef{name[0] == 'C' ? ParamClass::C : ParamClass::K, index};
  }

  void expect(Tok kind, const char* what) {
    const Token& t = lexer_.peek();
    if (t.kind != kind) {
      throw ParseError(std::string("expected '") + what + "' at position " + std::to_string(t.pos),
                       t.pos);
    }
    lexer_.take();
  }

  struct DepthGuard {
    explicit DepthGuard(Parser* p) : parser(p) {
      if (++parser->depth_ > kMaxDepth) {
        throw ParseError("expression too deeply nested", parser->lexer_.peek().pos);
      }
    }
    ~DepthGuard() { --parser->depth_; }
    Parser* parser;
  };
  static constexpr int kMaxDepth = 256;

  Lexer lexer_;
  int depth_ = 0;
  int next_c_ = 1;
  int next_k_ = 1;
};

}  // namespace

ExprPtr parse_expression(const std::string& text) {
  if (text.empty()) throw ParseError("empty expression", 0);
  return Parser(text).parse();
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void render_node(const Expr& e, std::string& out, bool erase_param_indices) {
  if (const auto* f = std::get_if<FeatureRef>(&e.node)) {
    out += f->name;
  } else if (const auto* p = std::get_if<ParamRef>(&e.node)) {
    if (erase_param_indices) {
      out += (p->cls == ParamClass::C) ? "C" : "K";
    } else {
      out += p->name();
    }
  } else if (const auto* l = std::get_if<Literal>(&e.node)) {
    out += format_double(l->value);
  } else if (const auto* u = std::get_if<UnaryNode>(&e.node)) {
    if (u->op == UnaryOp::Neg) {
      out += "(-";
      render_node(*u->child, out, erase_param_indices);
      out += ")";
    } else {
      out += unary_op_name(u->op);
      out += "(";
      render_node(*u->child, out, erase_param_indices);
      out += ")";
    }
  } else {
    const auto& b = std::get<BinaryNode>(e.node);
    out += "(";
    render_node(*b.lhs, out, erase_param_indices);
    out += " ";
    out += binary_op_symbol(b.op);
    out += " ";
    render_node(*b.rhs, out, erase_param_indices);
    out += ")";
  }
}

}  // namespace

std::string render_expression(const Expr& e) {
  std::string out;
  render_node(e, out, /*erase_param_indices=*/false);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

double sanitize(double v) {
  if (std::isfinite(v)) {
    if (v > kValueCap) return kValueCap;
    if (v < -kValueCap) return -kValueCap;
    return v;
  }
  if (v > 0) return kValueCap;
  if (v < 0) return -kValueCap;
  return 0.0;  // NaN
}

double apply_unary(UnaryOp op, double x) {
  switch (op) {
    case UnaryOp::Neg: return -x;
    case UnaryOp::Abs: return std::fabs(x);
    case UnaryOp::Sqrt: return std::sqrt(std::max(x, 0.0));
    case UnaryOp::Log: return std::log(std::max(x, kGuardEpsilon));
    case UnaryOp::Exp: return std::exp(x);
    case UnaryOp::Sin: return std::sin(x);
    case UnaryOp::Cos: return std::cos(x);
    case UnaryOp::Tan: return std::tan(x);
    case UnaryOp::Tanh: return std::tanh(x);
  }
  return 0.0;
}

double apply_binary(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::Div: {
      const double sign = (b < 0) ? -1.0 : 1.0;
      return a / (sign * std::max(std::fabs(b), kGuardEpsilon));
    }
    case BinaryOp::Pow: {
      const bool integer_exponent = (b == std::nearbyint(b)) && std::fabs(b) < 1e15;
      const double base = integer_exponent ? a : std::max(a, kGuardEpsilon);
      return std::pow(base, b);
    }
  }
  return 0.0;
}

}  // namespace

double evaluate(const Expr& e, const Bindings& features, const Bindings& params) {
  if (const auto* f = std::get_if<FeatureRef>(&e.node)) {
    auto it = features.find(f->name);
    if (it == features.end()) throw EvalError("unbound feature '" + f->name + "'");
    return sanitize(it->second);
  }
  if (const auto* p = std::get_if<ParamRef>(&e.node)) {
    auto it = params.find(p->name());
    if (it == params.end()) throw EvalError("unbound parameter '" + p->name() + "'");
    return sanitize(it->second);
  }
  if (const auto* l = std::get_if<Literal>(&e.node)) {
    return sanitize(l->value);
  }
  if (const auto* u = std::get_if<UnaryNode>(&e.node)) {
    return sanitize(apply_unary(u->op, evaluate(*u->child, features, params)));
  }
  const auto& b = std::get<BinaryNode>(e.node);
  return sanitize(apply_binary(b.op, evaluate(*b.lhs, features, params),
                               evaluate(*b.rhs, features, params)));
}

// ---------------------------------------------------------------------------
// Library validation
// ---------------------------------------------------------------------------

SymbolicLibrary SymbolicLibrary::standard_ops(std::set<std::string> features) {
  SymbolicLibrary lib;
  lib.unary_ops = {"neg", "abs", "sqrt", "log", "exp"};
  lib.binary_ops = {"+", "-", "*", "/", "^"};
  lib.features = std::move(features);
  return lib;
}

namespace {

void validate_node(const Expr& e, const SymbolicLibrary& lib, std::vector<std::string>& out,
                   std::set<std::string>& seen) {
  auto report = [&](const std::string& v) {
    if (seen.insert(v).second) out.push_back(v);
  };
  if (const auto* f = std::get_if<FeatureRef>(&e.node)) {
    if (!lib.features.count(f->name)) report("feature " + f->name);
  } else if (const auto* u = std::get_if<UnaryNode>(&e.node)) {
    if (!lib.unary_ops.count(unary_op_name(u->op))) report("operator " + unary_op_name(u->op));
    validate_node(*u->child, lib, out, seen);
  } else if (const auto* b = std::get_if<BinaryNode>(&e.node)) {
    if (!lib.binary_ops.count(binary_op_symbol(b->op))) {
      report("operator " + binary_op_symbol(b->op));
    }
    validate_node(*b->lhs, lib, out, seen);
    validate_node(*b->rhs, lib, out, seen);
  }
}

}  // namespace

std::vector<std::string> validate(const Expr& e, const SymbolicLibrary& lib) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  validate_node(e, lib, out, seen);
  return out;
}

// ---------------------------------------------------------------------------
// Fragments and symbol collection
// ---------------------------------------------------------------------------

namespace {

void collect_fragments(const Expr& e, std::set<Fragment>& out) {
  const bool leaf = !std::holds_alternative<UnaryNode>(e.node) &&
                    !std::holds_alternative<BinaryNode>(e.node);
  if (leaf) return;
  std::string r;
  render_node(e, r, /*erase_param_indices=*/true);
  out.insert(std::move(r));
  if (const auto* u = std::get_if<UnaryNode>(&e.node)) {
    collect_fragments(*u->child, out);
  } else {
    const auto& b = std::get<BinaryNode>(e.node);
    collect_fragments(*b.lhs, out);
    collect_fragments(*b.rhs, out);
  }
}

template <typename Node, typename Get>
void collect_names(const Expr& e, std::vector<std::string>& out, std::set<std::string>& seen,
                   Get get) {
  if (const auto* n = std::get_if<Node>(&e.node)) {
    std::string name = get(*n);
    if (seen.insert(name).second) out.push_back(std::move(name));
    return;
  }
  if (const auto* u = std::get_if<UnaryNode>(&e.node)) {
    collect_names<Node>(*u->child, out, seen, get);
  } else if (const auto* b = std::get_if<BinaryNode>(&e.node)) {
    collect_names<Node>(*b->lhs, out, seen, get);
    collect_names<Node>(*b->rhs, out, seen, get);
  }
}

}  // namespace

std::set<Fragment> enumerate_fragments(const Expr& e) {
  std::set<Fragment> out;
  collect_fragments(e, out);
  return out;
}

std::vector<std::string> collect_parameters(const Expr& e) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  collect_names<ParamRef>(e, out, seen, [](const ParamRef& p) { return p.name(); });
  return out;
}

std::vector<std::string> collect_features(const Expr& e) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  collect_names<FeatureRef>(e, out, seen, [](const FeatureRef& f) { return f.name; });
  return out;
}

}  // namespace symchoice::expr
