#pragma once

// Expression language for user-written contrast functions F(x, y).
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' ['-'] integer)*
//   primary := number | variable | func '(' expr ')' | '(' expr ')'
//
// Variables x1..xn address the first slot, y1..yn the second.  Functions:
// exp, log, sin, cos, sqrt.  No implicit multiplication.

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "contrastgeo/jet.hpp"

namespace contrastgeo::expr {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset, int line, int column);
  std::size_t offset() const { return offset_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  std::size_t offset_;
  int line_;
  int column_;
};

enum class Op { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sin, Cos, Sqrt };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Constant;
  double value = 0.0;  // Constant
  int index = 0;       // Variable: 0..2n-1, x's first then y's
  int exponent = 0;    // Pow
  NodePtr lhs;         // unary operand or left operand
  NodePtr rhs;
};

/// Immutable parsed expression over 2*dim variables.
class Ast {
 public:
  Ast(NodePtr root, int dim) : root_(std::move(root)), dim_(dim) {}

  const Node& root() const { return *root_; }
  NodePtr root_ptr() const { return root_; }
  int dim() const { return dim_; }

  friend bool operator==(const Ast& a, const Ast& b);

 private:
  NodePtr root_;
  int dim_;
};

bool same_tree(const Node& a, const Node& b);

Ast parse(std::string_view src, int dim);

/// Fully parenthesized canonical form; parse(print(a)) == a.
std::string print(const Ast& ast);

Jet3 eval_jet(const Ast& ast, std::span<const Jet3> inputs);
double eval(const Ast& ast, std::span<const double> inputs);

/// Wraps the expression as a SmoothFn of arity 2*dim.
SmoothFn to_smooth_fn(const Ast& ast);

}  // namespace contrastgeo::expr
