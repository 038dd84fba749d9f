#include "vsrd/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <vector>

namespace vsrd {

ExpressionError::ExpressionError(const std::string& message, std::size_t position)
    : std::invalid_argument(message + " at position " + std::to_string(position)), position_(position) {}

namespace {

struct Node {
  enum Kind { constant, x, y, add, sub, mul, div, pow, neg, sin, cos, exp, sqrt } kind = constant;
  double value = 0.0;
  std::unique_ptr<Node> a, b;

  double eval(double px, double py) const {
    switch (kind) {
      case constant: return value;
      case x: return px;
      case y: return py;
      case add: return a->eval(px, py) + b->eval(px, py);
      case sub: return a->eval(px, py) - b->eval(px, py);
      case mul: return a->eval(px, py) * b->eval(px, py);
      case div: return a->eval(px, py) / b->eval(px, py);
      case pow: return std::pow(a->eval(px, py), b->eval(px, py));
      case neg: return -a->eval(px, py);
      case sin: return std::sin(a->eval(px, py));
      case cos: return std::cos(a->eval(px, py));
      case exp: return std::exp(a->eval(px, py));
      case sqrt: return std::sqrt(a->eval(px, py));
    }
    return 0.0;
  }
};

using NodePtr = std::unique_ptr<Node>;

NodePtr leaf(Node::Kind kind, double value = 0.0) {
  auto n = std::make_unique<Node>();
  n->kind = kind;
  n->value = value;
  return n;
}

NodePtr combine(Node::Kind kind, NodePtr a, NodePtr b = nullptr) {
  auto n = leaf(kind);
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

// Recursive descent; precedence: + - < * / < unary - < ^ (right associative).
class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  NodePtr parse() {
    skip();
    if (pos_ == s_.size()) throw ExpressionError("empty expression", pos_);
    NodePtr n = sum();
    skip();
    if (pos_ != s_.size()) throw ExpressionError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
    return n;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  void skip() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool accept(const char* token) {
    skip();
    const std::string t(token);
    if (s_.compare(pos_, t.size(), t) == 0) {
      pos_ += t.size();
      return true;
    }
    return false;
  }
  bool accept_minus() { return accept("-") || accept("\xE2\x88\x92"); }
  bool accept_times() { return accept("*") || accept("\xC2\xB7"); }

  NodePtr sum() {
    NodePtr n = product();
    for (;;) {
      if (accept("+")) n = combine(Node::add, std::move(n), product());
      else if (accept_minus()) n = combine(Node::sub, std::move(n), product());
      else return n;
    }
  }

  NodePtr product() {
    NodePtr n = unary();
    for (;;) {
      if (accept_times()) n = combine(Node::mul, std::move(n), unary());
      else if (accept("/")) n = combine(Node::div, std::move(n), unary());
      else return n;
    }
  }

  NodePtr unary() {
    if (accept_minus()) return combine(Node::neg, unary());
    if (accept("+")) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept("^")) return combine(Node::pow, std::move(base), unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ == s_.size()) throw ExpressionError("unexpected end of expression", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = sum();
      if (!accept(")")) throw ExpressionError("expected ')'", pos_);
      return n;
    }
    if ((c >= '0' && c <= '9') || c == '.') {
      const std::size_t start = pos_;
      const auto digits = [&] {
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      };
      digits();
      if (pos_ < s_.size() && s_[pos_] == '.') {
        ++pos_;
        digits();
      }
      if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
        std::size_t p = pos_ + 1;
        if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
        if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
          pos_ = p;
          digits();
        }
      }
      const std::string token = s_.substr(start, pos_ - start);
      if (token == ".") throw ExpressionError("malformed number", start);
      return leaf(Node::constant, std::strtod(token.c_str(), nullptr));
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "x") return leaf(Node::x);
      if (name == "y") return leaf(Node::y);
      if (name == "pi") return leaf(Node::constant, std::numbers::pi);
      Node::Kind kind;
      if (name == "sin") kind = Node::sin;
      else if (name == "cos") kind = Node::cos;
      else if (name == "exp") kind = Node::exp;
      else if (name == "sqrt") kind = Node::sqrt;
      else throw ExpressionError("unknown identifier '" + name + "'", start);
      if (!accept("(")) throw ExpressionError("expected '(' after " + name, pos_);
      NodePtr arg = sum();
      if (!accept(")")) throw ExpressionError("expected ')'", pos_);
      return combine(kind, std::move(arg));
    }
    throw ExpressionError("unexpected '" + std::string(1, c) + "'", pos_);
  }
};

}  // namespace

ScalarField parse_expression(const std::string& text) {
  std::shared_ptr<const Node> root = Parser(text).parse();
  return [root](double x, double y) { return root->eval(x, y); };
}

}  // namespace vsrd
