#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "levi/core.hpp"

namespace levi {

//! Arithmetic expressions in the variables x and z.
//!
//!   expr   := term (('+' | '-') term)*
//!   term   := unary (('*' | '/') unary)*
//!   unary  := ('+' | '-') unary | power
//!   power  := atom ('^' unary)?
//!   atom   := number | 'x' | 'z' | 'pi' | func '(' expr ')' | '(' expr ')'
//!   func   := sin | cos | exp | abs | sqrt | log | min2 | max2 (two arguments for min2 / max2)
class Expression {
 public:
  Expression() = default;

  static Expression parse(const std::string& text) {
    Parser p{text, 0};
    Expression e;
    e.text_ = text;
    e.root_ = p.expr();
    p.skip();
    if (p.pos != text.size()) p.error("unexpected '" + std::string(1, text[p.pos]) + "'");
    return e;
  }

  double operator()(double x, double z = 0.0) const { return root_->eval(x, z); }
  const std::string& text() const { return text_; }
  bool uses(char var) const { return root_->uses(var); }

 private:
  struct Node {
    virtual ~Node() = default;
    virtual double eval(double x, double z) const = 0;
    virtual bool uses(char v) const = 0;
  };
  using Ptr = std::shared_ptr<const Node>;

  struct Constant : Node {
    double v;
    explicit Constant(double v) : v(v) {}
    double eval(double, double) const override { return v; }
    bool uses(char) const override { return false; }
  };
  struct Variable : Node {
    char name;
    explicit Variable(char n) : name(n) {}
    double eval(double x, double z) const override { return name == 'x' ? x : z; }
    bool uses(char v) const override { return v == name; }
  };
  struct Unary : Node {
    std::function<double(double)> f;
    Ptr a;
    Unary(std::function<double(double)> f, Ptr a) : f(std::move(f)), a(std::move(a)) {}
    double eval(double x, double z) const override { return f(a->eval(x, z)); }
    bool uses(char v) const override { return a->uses(v); }
  };
  struct Binary : Node {
    std::function<double(double, double)> f;
    Ptr a, b;
    Binary(std::function<double(double, double)> f, Ptr a, Ptr b) : f(std::move(f)), a(std::move(a)), b(std::move(b)) {}
    double eval(double x, double z) const override { return f(a->eval(x, z), b->eval(x, z)); }
    bool uses(char v) const override { return a->uses(v) || b->uses(v); }
  };

  struct Parser {
    const std::string& s;
    std::size_t pos;

    [[noreturn]] void error(const std::string& what) const {
      fail(ErrorKind::validation, "expression '" + s + "' at column " + std::to_string(pos + 1) + ": " + what);
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    void expect(char c) {
      if (!eat(c)) error(std::string("expected '") + c + "'");
    }

    Ptr expr() {
      Ptr a = term();
      for (;;) {
        if (eat('+'))
          a = std::make_shared<Binary>(std::plus<>(), a, term());
        else if (eat('-'))
          a = std::make_shared<Binary>(std::minus<>(), a, term());
        else
          return a;
      }
    }
    Ptr term() {
      Ptr a = unary();
      for (;;) {
        if (eat('*'))
          a = std::make_shared<Binary>(std::multiplies<>(), a, unary());
        else if (eat('/'))
          a = std::make_shared<Binary>(std::divides<>(), a, unary());
        else
          return a;
      }
    }
    Ptr unary() {
      if (eat('-')) return std::make_shared<Unary>(std::negate<>(), unary());
      if (eat('+')) return unary();
      return power();
    }
    Ptr power() {
      Ptr a = atom();
      if (eat('^')) return std::make_shared<Binary>([](double u, double v) { return std::pow(u, v); }, a, unary());
      return a;
    }
    Ptr atom() {
      skip();
      if (pos >= s.size()) error("unexpected end of input");
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        const double v = std::stod(s.substr(pos), &used);
        pos += used;
        return std::make_shared<Constant>(v);
      }
      if (eat('(')) {
        Ptr a = expr();
        expect(')');
        return a;
      }
      if (!std::isalpha(static_cast<unsigned char>(c))) error(std::string("unexpected '") + c + "'");
      std::size_t end = pos;
      while (end < s.size() && (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '_')) ++end;
      const std::string name = s.substr(pos, end - pos);
      pos = end;
      if (name == "x" || name == "z") return std::make_shared<Variable>(name[0]);
      if (name == "pi") return std::make_shared<Constant>(pi);
      expect('(');
      Ptr a = expr();
      if (name == "min2" || name == "max2") {
        expect(',');
        Ptr b = expr();
        expect(')');
        if (name == "min2") return std::make_shared<Binary>([](double u, double v) { return std::min(u, v); }, a, b);
        return std::make_shared<Binary>([](double u, double v) { return std::max(u, v); }, a, b);
      }
      expect(')');
      if (name == "sin") return std::make_shared<Unary>([](double u) { return std::sin(u); }, a);
      if (name == "cos") return std::make_shared<Unary>([](double u) { return std::cos(u); }, a);
      if (name == "exp") return std::make_shared<Unary>([](double u) { return std::exp(u); }, a);
      if (name == "abs") return std::make_shared<Unary>([](double u) { return std::abs(u); }, a);
      if (name == "sqrt") return std::make_shared<Unary>([](double u) { return std::sqrt(u); }, a);
      if (name == "log") return std::make_shared<Unary>([](double u) { return std::log(u); }, a);
      error("unknown function '" + name + "'");
    }
  };

  std::string text_;
  Ptr root_;
};

}  // namespace levi
