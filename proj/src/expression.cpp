#include "dmpcut/expression.hpp"
#include "dmpcut/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

namespace dmpcut {

struct Expression::Node {
  enum Kind { number, var_x, var_y, add, sub, mul, div, pow, neg, call } kind;
  double value = 0.0;
  double (*fn1)(double) = nullptr;
  double (*fn2)(double, double) = nullptr;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(const Eigen::Vector2d& x) const {
    switch (kind) {
    case number: return value;
    case var_x: return x.x();
    case var_y: return x.y();
    case add: return args[0]->eval(x) + args[1]->eval(x);
    case sub: return args[0]->eval(x) - args[1]->eval(x);
    case mul: return args[0]->eval(x) * args[1]->eval(x);
    case div: return args[0]->eval(x) / args[1]->eval(x);
    case pow: return std::pow(args[0]->eval(x), args[1]->eval(x));
    case neg: return -args[0]->eval(x);
    case call: return fn1 ? fn1(args[0]->eval(x)) : fn2(args[0]->eval(x), args[1]->eval(x));
    }
    return 0.0;
  }

  bool constant() const {
    if (kind == var_x || kind == var_y)
      return false;
    for (const auto& a : args)
      if (!a->constant())
        return false;
    return true;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

NodePtr make(Node::Kind kind, std::vector<NodePtr> args = {}, double value = 0.0) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->args = std::move(args);
  n->value = value;
  return n;
}

double fmin2(double a, double b) { return std::fmin(a, b); }
double fmax2(double a, double b) { return std::fmax(a, b); }

// expr   := term (('+' | '-') term)*
// term   := unary (('*' | '/') unary)*
// unary  := '-' unary | '+' unary | power
// power  := atom ('^' unary)?
// atom   := number | name | name '(' args ')' | '(' expr ')'
class Parser {
public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size())
      fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + s_ + "' column " + std::to_string(pos_ + 1) + ": " + what);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = make(Node::add, {lhs, term()});
      else if (accept('-'))
        lhs = make(Node::sub, {lhs, term()});
      else
        return lhs;
    }
  }
  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = make(Node::mul, {lhs, unary()});
      else if (accept('/'))
        lhs = make(Node::div, {lhs, unary()});
      else
        return lhs;
    }
  }
  NodePtr unary() {
    if (accept('-'))
      return make(Node::neg, {unary()});
    if (accept('+'))
      return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    if (accept('^'))
      return make(Node::pow, {base, unary()});
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size())
      fail("unexpected end of expression");
    if (accept('(')) {
      NodePtr e = expr();
      if (!accept(')'))
        fail("expected ')'");
      return e;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin)
        fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make(Node::number, {}, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "x")
        return make(Node::var_x);
      if (name == "y")
        return make(Node::var_y);
      if (name == "pi")
        return make(Node::number, {}, std::numbers::pi);
      return function(name);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
  NodePtr function(const std::string& name) {
    static const std::pair<const char*, double (*)(double)> unary_fns[] = {
        {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
        {"tan", [](double v) { return std::tan(v); }},   {"exp", [](double v) { return std::exp(v); }},
        {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
        {"abs", [](double v) { return std::abs(v); }}};
    auto n = std::make_shared<Node>();
    n->kind = Node::call;
    for (const auto& [fname, fn] : unary_fns)
      if (name == fname)
        n->fn1 = fn;
    if (name == "min")
      n->fn2 = fmin2;
    if (name == "max")
      n->fn2 = fmax2;
    if (!n->fn1 && !n->fn2)
      fail("unknown name '" + name + "'");
    if (!accept('('))
      fail("expected '(' after " + name);
    n->args.push_back(expr());
    if (n->fn2) {
      if (!accept(','))
        fail(name + " takes two arguments");
      n->args.push_back(expr());
    }
    if (!accept(')'))
      fail("expected ')'");
    return n;
  }
};

} // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.root_ = Parser(text).parse();
  e.text_ = text;
  return e;
}

double Expression::operator()(const Eigen::Vector2d& x) const { return root_->eval(x); }

bool Expression::is_constant() const { return root_->constant(); }

} // namespace dmpcut
